#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace steerhier {

// A Bob-with-Input EPR scenario: N black-box parties with |A| outcomes and
// |X| measurement choices each, |Y| inputs on Bob's side, and a d-dimensional
// quantum system held by Bob. Outcomes are labelled 0..|A|-1 (0 is the outcome
// omitted from the word alphabet), inputs x and y are labelled 1..|X| / 1..|Y|.
struct ScenarioSpec {
    int n_alices = 1;
    int n_outcomes = 2;
    int n_inputs = 1;
    int n_bob_inputs = 1;
    int bob_dim = 1;

    void check() const {
        if (n_alices < 1) throw std::invalid_argument("scenario: n_alices must be >= 1");
        if (n_outcomes < 2) throw std::invalid_argument("scenario: n_outcomes must be >= 2");
        if (n_inputs < 1) throw std::invalid_argument("scenario: n_inputs must be >= 1");
        if (n_bob_inputs < 1) throw std::invalid_argument("scenario: n_bob_inputs must be >= 1");
        if (bob_dim < 1) throw std::invalid_argument("scenario: bob_dim must be >= 1");
    }

    // Letters per party (outcome 0 excluded from the alphabet).
    int meas_letters_per_party() const { return (n_outcomes - 1) * n_inputs; }
    // Alphabet size without the empty word.
    int alphabet_size() const { return n_alices * meas_letters_per_party() + n_bob_inputs; }

    int outcome_tuples() const {
        int t = 1;
        for (int k = 0; k < n_alices; ++k) t *= n_outcomes;
        return t;
    }
    int input_tuples() const {
        int t = 1;
        for (int k = 0; k < n_alices; ++k) t *= n_inputs;
        return t;
    }

    bool operator==(const ScenarioSpec&) const = default;

    std::string describe() const {
        return "N=" + std::to_string(n_alices) + " |A|=" + std::to_string(n_outcomes) +
               " |X|=" + std::to_string(n_inputs) + " |Y|=" + std::to_string(n_bob_inputs) +
               " d=" + std::to_string(bob_dim);
    }
};

// Mixed-radix helpers for outcome/input tuples (component values 0-based).
inline std::vector<int> unflatten_tuple(int flat, int radix, int length) {
    std::vector<int> t(length);
    for (int k = length - 1; k >= 0; --k) {
        t[k] = flat % radix;
        flat /= radix;
    }
    return t;
}

inline int flatten_tuple(const std::vector<int>& t, int radix) {
    int flat = 0;
    for (int v : t) flat = flat * radix + v;
    return flat;
}

}  // namespace steerhier
