#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "steerhier/scenario.hpp"

namespace steerhier {

// Letters of the word alphabet: the empty letter, a measurement letter
// "a|x" owned by one party (outcome a in 1..|A|-1, outcome 0 is excluded
// from the alphabet), or one of Bob's inputs y in 1..|Y|.
struct Letter {
    enum class Kind : uint8_t { empty, meas, bob_input };
    Kind kind = Kind::empty;
    int party = 0;    // meas: 1..N
    int outcome = 0;  // meas: 1..|A|-1
    int input = 0;    // meas: 1..|X|
    int y = 0;        // bob_input: 1..|Y|

    static Letter empty() { return Letter{}; }
    static Letter meas(int party, int outcome, int input) {
        return Letter{Kind::meas, party, outcome, input, 0};
    }
    static Letter bob_input(int y) { return Letter{Kind::bob_input, 0, 0, 0, y}; }

    bool operator==(const Letter&) const = default;

    void check(const ScenarioSpec& s) const {
        switch (kind) {
            case Kind::empty:
                return;
            case Kind::meas:
                if (party < 1 || party > s.n_alices) throw std::invalid_argument("letter: party out of range");
                if (outcome < 1 || outcome >= s.n_outcomes) throw std::invalid_argument("letter: outcome out of range");
                if (input < 1 || input > s.n_inputs) throw std::invalid_argument("letter: input out of range");
                return;
            case Kind::bob_input:
                if (y < 1 || y > s.n_bob_inputs) throw std::invalid_argument("letter: bob input out of range");
                return;
        }
    }
};

// Dense letter id used for hashing and the deterministic word order:
// party-1 meas letters first (input-major, then outcome), then party 2, ...,
// then the y letters. The empty letter never appears in canonical words.
inline int letter_id(const Letter& l, const ScenarioSpec& s) {
    switch (l.kind) {
        case Letter::Kind::meas:
            return (l.party - 1) * s.meas_letters_per_party() + (l.input - 1) * (s.n_outcomes - 1) +
                   (l.outcome - 1);
        case Letter::Kind::bob_input:
            return s.n_alices * s.meas_letters_per_party() + (l.y - 1);
        case Letter::Kind::empty:
            throw std::invalid_argument("letter_id: empty letter has no id");
    }
    return -1;
}

inline Letter letter_from_id(int id, const ScenarioSpec& s) {
    const int per_party = s.meas_letters_per_party();
    if (id < s.n_alices * per_party) {
        int party = id / per_party, rest = id % per_party;
        return Letter::meas(party + 1, rest % (s.n_outcomes - 1) + 1, rest / (s.n_outcomes - 1) + 1);
    }
    int y = id - s.n_alices * per_party;
    if (y >= s.n_bob_inputs) throw std::invalid_argument("letter_from_id: id out of range");
    return Letter::bob_input(y + 1);
}

struct Word {
    std::vector<Letter> letters;

    Word() = default;
    explicit Word(std::vector<Letter> ls) : letters(std::move(ls)) {}

    bool empty() const { return letters.empty(); }
    size_t size() const { return letters.size(); }
    bool operator==(const Word&) const = default;
};

inline Word dagger(const Word& w) {
    Word r = w;
    std::reverse(r.letters.begin(), r.letters.end());
    return r;
}

inline Word concat(const Word& v, const Word& w) {
    Word r = v;
    r.letters.insert(r.letters.end(), w.letters.begin(), w.letters.end());
    return r;
}

// Fixed integer encoding of a word; the induced (length, lexicographic)
// order makes WordSet enumeration reproducible bit-for-bit.
inline std::vector<int> encode(const Word& w, const ScenarioSpec& s) {
    std::vector<int> ids;
    ids.reserve(w.size());
    for (const auto& l : w.letters) ids.push_back(letter_id(l, s));
    return ids;
}

inline bool encoding_less(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

// Canonical form of a word under the symmetry operations, or nullopt when
// the word is null. The normal form stably partitions letters into buckets
// (party-1 meas letters, ..., party-N meas letters, then y letters) -- the
// commutation rules exchange letters of different buckets only, so the
// bucket subsequences are a complete invariant -- and then repeats, to a
// fixed point: drop empty letters, collapse adjacent equal letters, and flag
// adjacent same-party same-input different-outcome pairs as null.
inline std::optional<Word> canonicalize(const Word& w, const ScenarioSpec& s) {
    for (const auto& l : w.letters) l.check(s);

    std::vector<Letter> ls;
    ls.reserve(w.size());
    for (int bucket = 1; bucket <= s.n_alices; ++bucket)
        for (const auto& l : w.letters)
            if (l.kind == Letter::Kind::meas && l.party == bucket) ls.push_back(l);
    for (const auto& l : w.letters)
        if (l.kind == Letter::Kind::bob_input) ls.push_back(l);

    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i + 1 < ls.size(); ++i) {
            if (ls[i] == ls[i + 1]) {
                ls.erase(ls.begin() + i);
                changed = true;
                break;
            }
            if (ls[i].kind == Letter::Kind::meas && ls[i + 1].kind == Letter::Kind::meas &&
                ls[i].party == ls[i + 1].party && ls[i].input == ls[i + 1].input &&
                ls[i].outcome != ls[i + 1].outcome)
                return std::nullopt;
        }
    }
    return Word(std::move(ls));
}

// Which letters an enumeration draws on: the full alphabet of the scenario,
// or only the measurement letters (the y-free alphabet used by the NPA and
// JMRW reductions).
enum class AlphabetMode { full, measurement_only };

inline std::vector<Letter> alphabet(const ScenarioSpec& s, AlphabetMode mode = AlphabetMode::full) {
    std::vector<Letter> ls;
    for (int id = 0; id < s.alphabet_size(); ++id) {
        Letter l = letter_from_id(id, s);
        if (mode == AlphabetMode::measurement_only && l.kind == Letter::Kind::bob_input) continue;
        ls.push_back(l);
    }
    return ls;
}

// The word set S_n: one canonical representative per non-null equivalence
// class reachable by concatenating at most n letters. Index 0 is the empty
// word; order is by length, then lexicographic on the integer encoding.
struct WordSet {
    ScenarioSpec scenario;
    int level = 0;
    AlphabetMode mode = AlphabetMode::full;
    std::vector<Word> words;
    std::map<std::vector<int>, int> lookup;

    int index_of(const Word& canonical) const {
        auto it = lookup.find(encode(canonical, scenario));
        return it == lookup.end() ? -1 : it->second;
    }
    int size() const { return static_cast<int>(words.size()); }
};

inline constexpr int kDefaultWordCap = 20000;

inline WordSet enumerate_words(const ScenarioSpec& s, int level, AlphabetMode mode = AlphabetMode::full,
                               int cap = kDefaultWordCap) {
    s.check();
    if (level < 1) throw std::invalid_argument("enumerate_words: level must be >= 1");
    WordSet out;
    out.scenario = s;
    out.level = level;
    out.mode = mode;
    out.words.push_back(Word{});
    out.lookup[{}] = 0;

    const auto letters = alphabet(s, mode);
    // Every canonical word of length k+1 is canonicalize(u . c) for a
    // canonical u of length k (prefixes of canonical words are canonical),
    // so breadth-first extension by one letter reaches everything.
    size_t layer_begin = 0;
    for (int len = 1; len <= level; ++len) {
        size_t layer_end = out.words.size();
        std::vector<std::vector<int>> fresh;
        for (size_t i = layer_begin; i < layer_end; ++i) {
            for (const auto& c : letters) {
                Word ext = out.words[i];
                ext.letters.push_back(c);
                auto canon = canonicalize(ext, s);
                if (!canon) continue;
                if (canon->size() != static_cast<size_t>(len)) continue;  // shorter form already seen
                auto enc = encode(*canon, s);
                if (out.lookup.count(enc)) continue;
                out.lookup[enc] = -1;  // placeholder; final index assigned after sorting
                fresh.push_back(std::move(enc));
            }
        }
        std::sort(fresh.begin(), fresh.end());
        for (auto& enc : fresh) {
            if (static_cast<int>(out.words.size()) >= cap)
                throw std::runtime_error("enumerate_words: word cap exceeded (" + std::to_string(cap) + ")");
            std::vector<Letter> ls;
            ls.reserve(enc.size());
            for (int id : enc) ls.push_back(letter_from_id(id, s));
            out.lookup[enc] = static_cast<int>(out.words.size());
            out.words.push_back(Word(std::move(ls)));
        }
        layer_begin = layer_end;
    }
    return out;
}

// The equivalence class of v†w: the unordered pair {u, u†} of canonical
// forms, identified by the lexicographically smaller member. `daggered`
// says whether v†w canonicalizes to the representative's adjoint.
struct PairClass {
    bool null = false;
    Word representative;
    bool daggered = false;
    bool self_adjoint = false;
};

inline PairClass word_class(const Word& canonical_word, const ScenarioSpec& s) {
    PairClass out;
    auto u = canonicalize(canonical_word, s);
    if (!u) {
        out.null = true;
        return out;
    }
    auto udag = canonicalize(dagger(*u), s);
    if (!udag) throw std::logic_error("word_class: dagger of non-null word cannot be null");
    out.self_adjoint = (*u == *udag);
    if (out.self_adjoint || encoding_less(encode(*u, s), encode(*udag, s))) {
        out.representative = *u;
        out.daggered = false;
    } else {
        out.representative = *udag;
        out.daggered = true;
    }
    return out;
}

// class_of(v, w): the class of v†w. Entries (v,w) and (w,v) always land in
// the same class with opposite daggered flags unless the class is
// self-adjoint.
inline PairClass pair_class(const Word& v, const Word& w, const ScenarioSpec& s) {
    return word_class(concat(dagger(v), w), s);
}

// ---- canonical word strings ----
//
// Grammar:  word      = "" | measpart | ypart | measpart ypart
//           measpart  = meas ("." meas)*
//           meas      = [party ":"] outcome "|" input      (party only when N > 1)
//           ypart     = (";" y)+
// Letters appear in canonical order, e.g. "1|2.3|1;2" or "1:1|1.2:1|2;1;2".
inline std::string to_string(const Word& w, const ScenarioSpec& s) {
    std::string out;
    bool first_meas = true;
    for (const auto& l : w.letters) {
        if (l.kind == Letter::Kind::meas) {
            if (!first_meas) out += ".";
            if (s.n_alices > 1) out += std::to_string(l.party) + ":";
            out += std::to_string(l.outcome) + "|" + std::to_string(l.input);
            first_meas = false;
        } else if (l.kind == Letter::Kind::bob_input) {
            out += ";" + std::to_string(l.y);
        }
    }
    return out;
}

inline Word parse_word(const std::string& str, const ScenarioSpec& s) {
    Word w;
    size_t pos = 0;
    auto read_int = [&](const char* what) {
        size_t start = pos;
        while (pos < str.size() && std::isdigit(static_cast<unsigned char>(str[pos]))) ++pos;
        if (pos == start) throw std::invalid_argument(std::string("parse_word: expected ") + what + " in '" + str + "'");
        return std::stoi(str.substr(start, pos - start));
    };
    while (pos < str.size() && str[pos] != ';') {
        int first = read_int("outcome");
        int party = 1, outcome;
        if (pos < str.size() && str[pos] == ':') {
            ++pos;
            party = first;
            outcome = read_int("outcome");
        } else {
            outcome = first;
        }
        if (pos >= str.size() || str[pos] != '|') throw std::invalid_argument("parse_word: expected '|' in '" + str + "'");
        ++pos;
        int input = read_int("input");
        Letter l = Letter::meas(party, outcome, input);
        l.check(s);
        w.letters.push_back(l);
        if (pos < str.size() && str[pos] == '.') ++pos;
    }
    while (pos < str.size()) {
        if (str[pos] != ';') throw std::invalid_argument("parse_word: expected ';' in '" + str + "'");
        ++pos;
        Letter l = Letter::bob_input(read_int("bob input"));
        l.check(s);
        w.letters.push_back(l);
    }
    return w;
}

}  // namespace steerhier
