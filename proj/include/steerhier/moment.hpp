#pragma once

#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "steerhier/assemblage.hpp"
#include "steerhier/linalg.hpp"
#include "steerhier/report.hpp"
#include "steerhier/words.hpp"

namespace steerhier {

// Level-n moment-matrix skeleton: rows and columns indexed by the words of
// S_n, every entry (v, w) mapped to the equivalence class of v†w (an
// unordered pair {u, u†} of canonical words) or flagged null. Entries (v, w)
// and (w, v) share a class with opposite dagger flags unless u ≡ u†.
struct MomentIndex {
    ScenarioSpec scenario;
    int level = 0;
    AlphabetMode mode = AlphabetMode::full;
    WordSet words;

    std::vector<Word> class_reps;
    std::vector<bool> self_adjoint;
    std::vector<bool> scalar_class;  // classes pinned ∝ identity by the single-meas-letter rule
    std::map<std::vector<int>, int> class_lookup;

    // per entry (row-major over word pairs): class id or -1 for null
    std::vector<int32_t> entry_class;
    std::vector<uint8_t> entry_dagger;
    // upper-triangle entries (i <= j) per class, with the entry's dagger flag
    std::vector<std::vector<std::tuple<int, int, bool>>> class_entries;

    int word_count() const { return words.size(); }
    int class_count() const { return static_cast<int>(class_reps.size()); }
    int block_dim() const { return scenario.bob_dim; }
    int matrix_dim() const { return word_count() * scenario.bob_dim; }

    int32_t entry(int i, int j) const { return entry_class[static_cast<size_t>(i) * word_count() + j]; }
    bool entry_daggered(int i, int j) const {
        return entry_dagger[static_cast<size_t>(i) * word_count() + j] != 0;
    }

    // Class of an arbitrary word, resolved through canonicalization.
    // Returns {class id, daggered}; id -1 when the class does not occur in
    // this index, id -2 when the word is null.
    std::pair<int, bool> class_of_word(const Word& w) const {
        PairClass pc = word_class(w, scenario);
        if (pc.null) return {-2, false};
        auto it = class_lookup.find(encode(pc.representative, scenario));
        if (it == class_lookup.end()) return {-1, false};
        return {it->second, pc.daggered};
    }
};

inline MomentIndex build_index(const ScenarioSpec& s, int level, AlphabetMode mode = AlphabetMode::full,
                               int cap = kDefaultWordCap) {
    MomentIndex idx;
    idx.scenario = s;
    idx.level = level;
    idx.mode = mode;
    idx.words = enumerate_words(s, level, mode, cap);
    const int w = idx.words.size();
    idx.entry_class.assign(static_cast<size_t>(w) * w, -1);
    idx.entry_dagger.assign(static_cast<size_t>(w) * w, 0);

    auto intern = [&](const PairClass& pc) {
        auto enc = encode(pc.representative, s);
        auto it = idx.class_lookup.find(enc);
        if (it != idx.class_lookup.end()) return it->second;
        int id = idx.class_count();
        idx.class_lookup.emplace(std::move(enc), id);
        idx.class_reps.push_back(pc.representative);
        idx.self_adjoint.push_back(pc.self_adjoint);
        idx.scalar_class.push_back(false);
        idx.class_entries.emplace_back();
        return id;
    };

    auto is_single_meas = [](const Word& word) {
        return word.size() == 1 && word.letters[0].kind == Letter::Kind::meas;
    };

    for (int i = 0; i < w; ++i) {
        for (int j = i; j < w; ++j) {
            PairClass pc = pair_class(idx.words.words[i], idx.words.words[j], s);
            if (pc.null) continue;  // entry stays -1: the zero block
            int id = intern(pc);
            idx.entry_class[static_cast<size_t>(i) * w + j] = id;
            idx.entry_dagger[static_cast<size_t>(i) * w + j] = pc.daggered ? 1 : 0;
            idx.entry_class[static_cast<size_t>(j) * w + i] = id;
            idx.entry_dagger[static_cast<size_t>(j) * w + i] = (pc.self_adjoint || i == j) ? pc.daggered : !pc.daggered;
            idx.class_entries[id].emplace_back(i, j, pc.daggered);
            if (is_single_meas(idx.words.words[i]) && is_single_meas(idx.words.words[j]))
                idx.scalar_class[id] = true;
        }
    }
    return idx;
}

// Certificate constraints tying moment entries to assemblage data. For every
// party subset Ω and nonzero-outcome word a_Ω|x_Ω present in S_n the class
// carries the scalar target Tr σ_{a_Ω|x_Ω,1} · I; the word followed by y
// carries the block target (1/d) σ_{a_Ω|x_Ω y}^T (Ω = ∅ gives the Bob
// marginals). Transposition is in the fixed computational basis.
struct DataTarget {
    int class_id = -1;
    Word word;
    bool scalar = false;
    double scalar_value = 0.0;
    MatrixXcd block;
};

struct ConstraintSet {
    ScenarioSpec scenario;
    int level = 0;
    std::vector<DataTarget> data;
};

namespace detail {

// Visits every word a_Ω|x_Ω (one nonzero-outcome meas letter per party of Ω,
// parties ascending) together with its Ω/outcome/input description.
template <typename F>
void for_each_marginal_word(const ScenarioSpec& s, F&& visit) {
    const int n = s.n_alices;
    for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<int> omega;
        for (int k = 0; k < n; ++k)
            if (mask & (1 << k)) omega.push_back(k);
        const int parties = static_cast<int>(omega.size());
        int outcome_combos = 1, input_combos = 1;
        for (int i = 0; i < parties; ++i) {
            outcome_combos *= s.n_outcomes - 1;
            input_combos *= s.n_inputs;
        }
        for (int oc = 0; oc < outcome_combos; ++oc) {
            auto a = unflatten_tuple(oc, s.n_outcomes - 1, parties);
            for (auto& v : a) ++v;  // outcomes 1..|A|-1
            for (int ic = 0; ic < input_combos; ++ic) {
                auto x = unflatten_tuple(ic, s.n_inputs, parties);
                for (auto& v : x) ++v;  // inputs 1..|X|
                Word word;
                for (int i = 0; i < parties; ++i)
                    word.letters.push_back(Letter::meas(omega[i] + 1, a[i], x[i]));
                visit(omega, a, x, word);
            }
        }
    }
}

}  // namespace detail

inline ConstraintSet certificate_constraints(const MomentIndex& idx, const Assemblage& asm_) {
    if (!(asm_.scenario == idx.scenario))
        throw std::invalid_argument("certificate_constraints: scenario mismatch");
    if (idx.mode != AlphabetMode::full)
        throw std::invalid_argument("certificate_constraints: requires a full-alphabet index");
    const auto& s = idx.scenario;
    const int d = s.bob_dim;
    ConstraintSet out;
    out.scenario = s;
    out.level = idx.level;

    std::map<int, size_t> seen;
    auto push = [&](const Word& word, bool scalar, double sv, const MatrixXcd& block) {
        int wi = idx.words.index_of(word);
        if (wi < 0) return;  // word not in S_n: constraint absent at this level
        auto [cid, daggered] = idx.class_of_word(word);
        if (cid < 0) throw std::logic_error("certificate_constraints: class lookup failed");
        DataTarget t;
        t.class_id = cid;
        t.word = word;
        t.scalar = scalar;
        t.scalar_value = sv;
        t.block = daggered ? MatrixXcd(block.adjoint()) : block;
        auto it = seen.find(cid);
        if (it != seen.end()) {
            const auto& prev = out.data[it->second];
            double diff = scalar ? std::abs(prev.scalar_value - sv) : (prev.block - t.block).cwiseAbs().maxCoeff();
            if (prev.scalar != scalar || diff > 1e-9)
                throw std::runtime_error("certificate_constraints: conflicting targets for class " +
                                         to_string(idx.class_reps[cid], s));
            return;
        }
        seen[cid] = out.data.size();
        out.data.push_back(std::move(t));
    };

    detail::for_each_marginal_word(s, [&](const std::vector<int>& omega, const std::vector<int>& a,
                                          const std::vector<int>& x, const Word& word) {
        // letter outcomes 1..|A|-1 are storage labels already; inputs go 0-based
        std::vector<int> a0 = a, x0 = x;
        for (auto& v : x0) --v;
        if (!word.empty()) {
            double tr = marginal(asm_, omega, a0, x0, 0).trace().real();
            push(word, true, tr, MatrixXcd());
        }
        for (int y = 0; y < s.n_bob_inputs; ++y) {
            Word wy = word;
            wy.letters.push_back(Letter::bob_input(y + 1));
            MatrixXcd target = marginal(asm_, omega, a0, x0, y).transpose() / double(d);
            push(wy, false, 0.0, target);
        }
    });
    return out;
}

// A numeric moment matrix: one d x d block per equivalence class; entries
// read through the index with the adjoint applied when the dagger flag is
// set, null entries read as zero.
struct NumericMomentMatrix {
    MomentIndex index;
    std::vector<MatrixXcd> class_blocks;

    NumericMomentMatrix() = default;
    explicit NumericMomentMatrix(MomentIndex idx)
        : index(std::move(idx)),
          class_blocks(index.class_count(), MatrixXcd::Zero(index.block_dim(), index.block_dim())) {}

    MatrixXcd entry_block(int i, int j) const {
        int32_t c = index.entry(i, j);
        if (c < 0) return MatrixXcd::Zero(index.block_dim(), index.block_dim());
        return index.entry_daggered(i, j) ? MatrixXcd(class_blocks[c].adjoint()) : class_blocks[c];
    }

    MatrixXcd assemble() const {
        const int w = index.word_count(), d = index.block_dim();
        MatrixXcd m = MatrixXcd::Zero(w * d, w * d);
        for (int i = 0; i < w; ++i)
            for (int j = 0; j < w; ++j) m.block(i * d, j * d, d, d) = entry_block(i, j);
        return m;
    }
};

// Residuals of the moment-matrix and certificate conditions, by family:
// psd, identity, null zeros, scalar-class proportionality, data targets and
// Hermitian pairing, plus the diagonal/operator-norm bounds that every true
// certificate obeys.
inline ValidationReport validate_moment_matrix(const NumericMomentMatrix& m, const ConstraintSet& constraints,
                                               double /*tol*/ = 1e-8) {
    const auto& idx = m.index;
    const int d = idx.block_dim();
    if (static_cast<int>(m.class_blocks.size()) != idx.class_count())
        throw std::invalid_argument("validate_moment_matrix: block count mismatch");
    ValidationReport rep;

    double herm = 0;
    for (int c = 0; c < idx.class_count(); ++c)
        if (idx.self_adjoint[c]) herm = std::max(herm, hermiticity_residual(m.class_blocks[c]));
    rep.add("hermitian_pairing", herm);

    auto [empty_class, empty_dag] = idx.class_of_word(Word{});
    double identity = (m.class_blocks[empty_class] - MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff();
    rep.add("identity", identity);

    MatrixXcd big = m.assemble();
    rep.add("psd", std::max(0.0, -min_eigenvalue(big)));
    rep.add("null_zeros", 0.0);  // null entries are zero by construction

    double scalar = 0;
    for (int c = 0; c < idx.class_count(); ++c) {
        if (!idx.scalar_class[c]) continue;
        const auto& b = m.class_blocks[c];
        scalar = std::max(scalar, (b - (b.trace() / double(d)) * MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff());
    }
    rep.add("scalar_classes", scalar);

    double data = 0;
    for (const auto& t : constraints.data) {
        const auto& b = m.class_blocks.at(t.class_id);
        if (t.scalar)
            data = std::max(data, (b - t.scalar_value * MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff());
        else
            data = std::max(data, (b - t.block).cwiseAbs().maxCoeff());
    }
    rep.add("data_constraints", data);

    double diag = 0, norm = 0;
    for (int i = 0; i < idx.word_count(); ++i) {
        diag = std::max(diag, max_eigenvalue(m.entry_block(i, i)) - 1.0);
        for (int j = 0; j < idx.word_count(); ++j) norm = std::max(norm, operator_norm(m.entry_block(i, j)) - 1.0);
    }
    rep.add("lemma_diagonal", std::max(0.0, diag));
    rep.add("lemma_block_norm", std::max(0.0, norm));
    return rep;
}

// Restriction to level n-1: keep the rows and columns labelled by the words
// of S_{n-1} (a prefix of the level-n word list under the deterministic
// ordering).
inline NumericMomentMatrix restrict_to_lower(const NumericMomentMatrix& m) {
    const auto& idx = m.index;
    if (idx.level < 2) throw std::invalid_argument("restrict_to_lower: level must be >= 2");
    MomentIndex lower = build_index(idx.scenario, idx.level - 1, idx.mode);
    for (int i = 0; i < lower.word_count(); ++i)
        if (!(lower.words.words[i] == idx.words.words[i]))
            throw std::logic_error("restrict_to_lower: word ordering not prefix-closed");
    NumericMomentMatrix out(std::move(lower));
    std::vector<bool> set(out.index.class_count(), false);
    for (int i = 0; i < out.index.word_count(); ++i)
        for (int j = i; j < out.index.word_count(); ++j) {
            int32_t c = out.index.entry(i, j);
            if (c < 0 || set[c]) continue;
            MatrixXcd value = m.entry_block(i, j);
            out.class_blocks[c] = out.index.entry_daggered(i, j) ? MatrixXcd(value.adjoint()) : value;
            set[c] = true;
        }
    return out;
}

}  // namespace steerhier
