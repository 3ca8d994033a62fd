#pragma once

#include <stdexcept>
#include <vector>

#include "steerhier/moment.hpp"

namespace steerhier {

// ---- NPA projection ----
//
// Scalarizing a certificate onto the y-free words recovers an NPA-style
// moment matrix for the Alices' correlations: entries (1/d) Tr Γ(v,w) over
// v, w drawn from the measurement-only word set.

struct NpaMatrix {
    WordSet words;  // measurement-only alphabet
    MatrixXcd entries;
};

inline NpaMatrix npa_project(const NumericMomentMatrix& gamma) {
    const auto& idx = gamma.index;
    if (idx.mode != AlphabetMode::full) throw std::invalid_argument("npa_project: expects a full-alphabet certificate");
    const int d = idx.block_dim();
    NpaMatrix out;
    out.words = enumerate_words(idx.scenario, idx.level, AlphabetMode::measurement_only);
    // y-free words are a sublist of the full word list in matching order
    std::vector<int> pos;
    for (int i = 0; i < idx.word_count(); ++i) {
        bool y_free = true;
        for (const auto& l : idx.words.words[i].letters)
            if (l.kind == Letter::Kind::bob_input) y_free = false;
        if (y_free) pos.push_back(i);
    }
    if (static_cast<int>(pos.size()) != out.words.size())
        throw std::logic_error("npa_project: measurement-only word count mismatch");
    const int n = static_cast<int>(pos.size());
    out.entries = MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.entries(i, j) = gamma.entry_block(pos[i], pos[j]).trace() / double(d);
    return out;
}

inline ValidationReport validate_npa(const NpaMatrix& npa) {
    const auto& sc = npa.words.scenario;
    ValidationReport rep;
    rep.add("hermitian", (npa.entries - npa.entries.adjoint()).cwiseAbs().maxCoeff());
    rep.add("psd", std::max(0.0, -min_eigenvalue(npa.entries)));
    rep.add("identity", std::abs(npa.entries(0, 0) - 1.0));
    // equivalence ties and null zeros over the y-free word algebra
    double ties = 0, nulls = 0;
    std::map<std::vector<int>, complexd> seen;
    for (int i = 0; i < npa.words.size(); ++i)
        for (int j = 0; j < npa.words.size(); ++j) {
            auto pc = pair_class(npa.words.words[i], npa.words.words[j], sc);
            if (pc.null) {
                nulls = std::max(nulls, std::abs(npa.entries(i, j)));
                continue;
            }
            complexd value = pc.daggered ? std::conj(npa.entries(i, j)) : npa.entries(i, j);
            auto enc = encode(pc.representative, sc);
            auto it = seen.find(enc);
            if (it == seen.end())
                seen.emplace(enc, value);
            else
                ties = std::max(ties, std::abs(value - it->second));
        }
    rep.add("equivalence_ties", ties);
    rep.add("null_zeros", nulls);
    return rep;
}

// ---- POVM-extended correlations ----
//
// Letting Bob measure a POVM {N_k} on his system turns a certificate into a
// joint correlation table for the N+1 parties. The (a, k | x, y) entry reads
// d * Tr[ Gamma(y, a_Omega|x_Omega) N_k ], with zero-outcome entries
// reconstructed from the marginal blocks by inclusion-exclusion; summing k
// against a complete POVM recovers the y-conditioned Alice correlations.

struct CorrelationTable {
    ScenarioSpec scenario;
    int n_povm = 0;
    std::vector<double> p;  // index = ((a_flat*X + x_flat)*Y + y)*K + k

    double at(int a_flat, int x_flat, int y, int k) const {
        return p[(static_cast<size_t>(a_flat) * scenario.input_tuples() + x_flat) * scenario.n_bob_inputs * n_povm +
                 static_cast<size_t>(y) * n_povm + k];
    }
};

inline CorrelationTable extended_correlations(const NumericMomentMatrix& gamma,
                                              const std::vector<MatrixXcd>& povm) {
    const auto& idx = gamma.index;
    const auto& sc = idx.scenario;
    const int d = sc.bob_dim;
    if (povm.empty()) throw std::invalid_argument("extended_correlations: empty POVM");
    MatrixXcd total = MatrixXcd::Zero(d, d);
    for (const auto& n : povm) {
        if (n.rows() != d || n.cols() != d) throw std::invalid_argument("extended_correlations: POVM dimension mismatch");
        if (hermiticity_residual(n) > 1e-10 || min_eigenvalue(n) < -1e-10)
            throw std::invalid_argument("extended_correlations: POVM effects must be Hermitian PSD");
        total += n;
    }
    if ((total - MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("extended_correlations: POVM does not sum to identity");

    // class block of the word a_Omega|x_Omega . y, i.e. Gamma(y, a_Omega|x_Omega)
    auto marginal_block = [&](const std::vector<int>& parties, const std::vector<int>& outs,
                              const std::vector<int>& ins, int y) {
        Word w;
        for (size_t i = 0; i < parties.size(); ++i)
            w.letters.push_back(Letter::meas(parties[i] + 1, outs[i], ins[i] + 1));
        w.letters.push_back(Letter::bob_input(y + 1));
        auto [cid, dag] = idx.class_of_word(w);
        if (cid < 0)
            throw std::invalid_argument("extended_correlations: level too low to reconstruct the full table");
        return dag ? MatrixXcd(gamma.class_blocks[cid].adjoint()) : gamma.class_blocks[cid];
    };

    CorrelationTable out;
    out.scenario = sc;
    out.n_povm = static_cast<int>(povm.size());
    out.p.assign(static_cast<size_t>(sc.outcome_tuples()) * sc.input_tuples() * sc.n_bob_inputs * povm.size(), 0.0);

    for (int a = 0; a < sc.outcome_tuples(); ++a) {
        auto at = unflatten_tuple(a, sc.n_outcomes, sc.n_alices);
        std::vector<int> zero_set, omega;
        for (int k = 0; k < sc.n_alices; ++k) (at[k] == 0 ? zero_set : omega).push_back(k);
        for (int x = 0; x < sc.input_tuples(); ++x) {
            auto xt = unflatten_tuple(x, sc.n_inputs, sc.n_alices);
            for (int y = 0; y < sc.n_bob_inputs; ++y) {
                // inclusion-exclusion over the zero-outcome parties
                MatrixXcd block = MatrixXcd::Zero(d, d);
                for (int mask = 0; mask < (1 << zero_set.size()); ++mask) {
                    std::vector<int> extra;
                    for (size_t i = 0; i < zero_set.size(); ++i)
                        if (mask & (1 << i)) extra.push_back(zero_set[i]);
                    double sign = extra.size() % 2 ? -1.0 : 1.0;
                    std::vector<int> parties = omega, outs, ins;
                    for (int k : omega) outs.push_back(at[k]);
                    parties.insert(parties.end(), extra.begin(), extra.end());
                    int combos = 1;
                    for (size_t i = 0; i < extra.size(); ++i) combos *= sc.n_outcomes - 1;
                    for (int c = 0; c < combos; ++c) {
                        auto bt = unflatten_tuple(c, sc.n_outcomes - 1, static_cast<int>(extra.size()));
                        std::vector<int> outs_full = outs;
                        for (int v : bt) outs_full.push_back(v + 1);
                        std::vector<int> ins_full;
                        for (int k : parties) ins_full.push_back(xt[k]);
                        // canonical party order
                        std::vector<std::pair<int, std::pair<int, int>>> items;
                        for (size_t i = 0; i < parties.size(); ++i)
                            items.push_back({parties[i], {outs_full[i], ins_full[i]}});
                        std::sort(items.begin(), items.end());
                        std::vector<int> ps, os, is;
                        for (auto& [pk, oi] : items) {
                            ps.push_back(pk);
                            os.push_back(oi.first);
                            is.push_back(oi.second);
                        }
                        block += sign * marginal_block(ps, os, is, y);
                    }
                }
                for (size_t k = 0; k < povm.size(); ++k)
                    out.p[(static_cast<size_t>(a) * sc.input_tuples() + x) * sc.n_bob_inputs * povm.size() +
                          static_cast<size_t>(y) * povm.size() + k] =
                        double(d) * (block * povm[k]).trace().real();
            }
        }
    }
    return out;
}

// ---- JMRW conversions (traditional EPR scenarios, |Y| = 1) ----
//
// The JMRW moment matrix Delta lives on the y-free words with
// Delta(v, w) = d * Gamma(v, w y)^T; its certificate data reads
// Delta(∅,∅) = rho_B and Delta(∅, a_Omega|x_Omega) = sigma_{a_Omega|x_Omega}.
// Since Gamma_n only holds entries (v, w y) with |w| <= n-1, the conversion
// from a level-n certificate produces a level-(n-1) Delta.

struct JmrwMatrix {
    NumericMomentMatrix blocks;  // index over the measurement-only alphabet
};

inline JmrwMatrix jmrw_from_gamma(const NumericMomentMatrix& gamma) {
    const auto& idx = gamma.index;
    if (idx.scenario.n_bob_inputs != 1) throw std::invalid_argument("jmrw_from_gamma: requires |Y| = 1");
    if (idx.level < 2) throw std::invalid_argument("jmrw_from_gamma: requires level >= 2");
    const int d = idx.block_dim();
    JmrwMatrix out;
    out.blocks = NumericMomentMatrix(build_index(idx.scenario, idx.level - 1, AlphabetMode::measurement_only));
    for (int c = 0; c < out.blocks.index.class_count(); ++c) {
        Word wy = out.blocks.index.class_reps[c];
        wy.letters.push_back(Letter::bob_input(1));
        auto [cid, dag] = idx.class_of_word(wy);
        if (cid < 0) throw std::logic_error("jmrw_from_gamma: class lookup failed for " + to_string(wy, idx.scenario));
        MatrixXcd value = dag ? MatrixXcd(gamma.class_blocks[cid].adjoint()) : gamma.class_blocks[cid];
        out.blocks.class_blocks[c] = double(d) * value.transpose();
    }
    return out;
}

inline NumericMomentMatrix gamma_from_jmrw(const JmrwMatrix& delta) {
    const auto& jidx = delta.blocks.index;
    if (jidx.mode != AlphabetMode::measurement_only)
        throw std::invalid_argument("gamma_from_jmrw: expects a measurement-only moment matrix");
    if (jidx.scenario.n_bob_inputs != 1) throw std::invalid_argument("gamma_from_jmrw: requires |Y| = 1");
    const int d = jidx.block_dim();
    NumericMomentMatrix out(build_index(jidx.scenario, jidx.level, AlphabetMode::full));
    for (int c = 0; c < out.index.class_count(); ++c) {
        const Word& rep = out.index.class_reps[c];
        Word stripped;
        bool had_y = false;
        for (const auto& l : rep.letters) {
            if (l.kind == Letter::Kind::bob_input)
                had_y = true;
            else
                stripped.letters.push_back(l);
        }
        auto [cid, dag] = jidx.class_of_word(stripped);
        if (cid < 0)
            throw std::logic_error("gamma_from_jmrw: class lookup failed for " + to_string(stripped, jidx.scenario));
        MatrixXcd value = dag ? MatrixXcd(delta.blocks.class_blocks[cid].adjoint()) : delta.blocks.class_blocks[cid];
        out.class_blocks[c] = had_y ? MatrixXcd(value.transpose() / double(d))
                                    : MatrixXcd(value.trace() * MatrixXcd::Identity(d, d));
    }
    return out;
}

// Assembled matrix with every block transposed. Delta's blocks carry the
// untransposed assemblage data, and the positive-semidefinite object is the
// blockwise-transposed assembly -- the same matrix the gamma<->Delta
// positivity argument manipulates as (1/d) Delta(a,b)^T.
inline MatrixXcd jmrw_psd_form(const JmrwMatrix& delta) {
    const int w = delta.blocks.index.word_count(), d = delta.blocks.index.block_dim();
    MatrixXcd m(w * d, w * d);
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) m.block(i * d, j * d, d, d) = delta.blocks.entry_block(i, j).transpose();
    return m;
}

// Residuals of the traditional-EPR certificate conditions against a
// |Y| = 1 assemblage.
inline ValidationReport validate_jmrw(const JmrwMatrix& delta, const Assemblage& asm_) {
    const auto& idx = delta.blocks.index;
    const auto& sc = idx.scenario;
    if (sc.n_bob_inputs != 1 || !(asm_.scenario == sc))
        throw std::invalid_argument("validate_jmrw: scenario mismatch or |Y| != 1");
    ValidationReport rep;
    double herm = 0;
    for (int c = 0; c < idx.class_count(); ++c)
        if (idx.self_adjoint[c]) herm = std::max(herm, hermiticity_residual(delta.blocks.class_blocks[c]));
    rep.add("hermitian_pairing", herm);
    rep.add("psd", std::max(0.0, -min_eigenvalue(jmrw_psd_form(delta))));
    rep.add("null_zeros", 0.0);

    double data = 0;
    auto [c0, d0] = idx.class_of_word(Word{});
    data = std::max(data, (delta.blocks.class_blocks[c0] - asm_.bob_marginal(0)).cwiseAbs().maxCoeff());
    detail::for_each_marginal_word(sc, [&](const std::vector<int>& omega, const std::vector<int>& a,
                                           const std::vector<int>& x, const Word& word) {
        if (word.empty() || idx.words.index_of(word) < 0) return;
        std::vector<int> a0 = a, x0 = x;
        for (auto& v : x0) --v;
        auto [cid, dag] = idx.class_of_word(word);
        MatrixXcd value = dag ? MatrixXcd(delta.blocks.class_blocks[cid].adjoint()) : delta.blocks.class_blocks[cid];
        data = std::max(data, (value - marginal(asm_, omega, a0, x0, 0)).cwiseAbs().maxCoeff());
    });
    rep.add("data_constraints", data);
    return rep;
}

// The positive map behind the JMRW positivity argument.
inline MatrixXcd xi_map(const MatrixXcd& x) {
    const int d = static_cast<int>(x.rows());
    return double(d) * x.trace() * MatrixXcd::Identity(d, d) - x;
}

}  // namespace steerhier
