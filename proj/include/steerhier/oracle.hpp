#pragma once

#include <stdexcept>
#include <vector>

#include "steerhier/assemblage.hpp"
#include "steerhier/linalg.hpp"
#include "steerhier/moment.hpp"
#include "steerhier/words.hpp"

namespace steerhier {

// Explicit certificate construction behind "quantum assemblages admit a
// level-n certificate": word operators O_v on
// H = A_1 ⊗ ... ⊗ A_N ⊗ B_aux ⊗ B_(i) ⊗ B' and the state
// ρ̃ = |ψ><ψ| ⊗ I_B' give Γ_n(v,w) = Tr_{A..B_(i)}[O_v† O_w ρ̃]. This is a
// test fixture; dimensions are capped and everything is dense.

// Two-outcome joint projector on B ⊗ B': Φ_1 projects onto the maximally
// entangled state (1/√d) Σ_j |j>|j> in the computational basis.
struct MaxEntProjector {
    int dim;
    MatrixXcd phi1, phi2;

    explicit MaxEntProjector(int d) : dim(d) {
        VectorXcd v = VectorXcd::Zero(d * d);
        for (int j = 0; j < d; ++j) v(j * d + j) = 1.0 / std::sqrt(double(d));
        phi1 = v * v.adjoint();
        phi2 = MatrixXcd::Identity(d * d, d * d) - phi1;
    }
};

// Bob's projective measurement Ψ_{b|y} = (U_y† ⊗ I_B')(I_aux ⊗ Φ_b)(U_y ⊗ I_B')
// on B_aux ⊗ B_(i) ⊗ B'.
inline std::pair<MatrixXcd, MatrixXcd> build_bob_measurement(const QuantumRealization& qr, int y) {
    const int d = qr.scenario.bob_dim;
    if (y < 0 || y >= qr.scenario.n_bob_inputs) throw std::invalid_argument("build_bob_measurement: y out of range");
    if (qr.unitaries[y].rows() != qr.aux_dim * d)
        throw std::invalid_argument("build_bob_measurement: unitary dimension mismatch");
    MaxEntProjector phi(d);
    MatrixXcd uy = kron(qr.unitaries[y], MatrixXcd::Identity(d, d));
    MatrixXcd aux_id = MatrixXcd::Identity(qr.aux_dim, qr.aux_dim);
    MatrixXcd p1 = uy.adjoint() * kron(aux_id, phi.phi1) * uy;
    MatrixXcd p2 = uy.adjoint() * kron(aux_id, phi.phi2) * uy;
    return {p1, p2};
}

inline constexpr int kDefaultOracleDimCap = 64;

// Cached single-letter operators for one realization.
struct OperatorRep {
    ScenarioSpec scenario;
    QuantumRealization qr;
    std::vector<int> dims;  // A_1..A_N, B_aux, B_(i), B'
    int total_dim = 0;
    std::vector<MatrixXcd> letter_ops;  // by dense letter id
    MatrixXcd identity;

    OperatorRep(const QuantumRealization& realization, int dim_cap = kDefaultOracleDimCap) : qr(realization) {
        scenario = qr.scenario;
        const int d = scenario.bob_dim;
        dims = qr.alice_dims;
        dims.push_back(qr.aux_dim);
        dims.push_back(d);
        dims.push_back(d);
        total_dim = 1;
        for (int dd : dims) total_dim *= dd;
        if (total_dim > dim_cap)
            throw std::invalid_argument("OperatorRep: total dimension " + std::to_string(total_dim) +
                                        " exceeds cap " + std::to_string(dim_cap));
        identity = MatrixXcd::Identity(total_dim, total_dim);
        const int n_letters = scenario.alphabet_size();
        letter_ops.resize(n_letters);
        for (int id = 0; id < n_letters; ++id) {
            Letter l = letter_from_id(id, scenario);
            if (l.kind == Letter::Kind::meas) {
                letter_ops[id] = embed_at(qr.measurements[l.party - 1][l.input - 1][l.outcome], dims, l.party - 1);
            } else {
                auto [p1, p2] = build_bob_measurement(qr, l.y - 1);
                MatrixXcd alice_id = MatrixXcd::Identity(total_dim / p1.rows(), total_dim / p1.rows());
                letter_ops[id] = kron(alice_id, p1);
            }
        }
    }
};

// O_v = O_{v_1} ... O_{v_k}; empty letters act as the identity.
inline MatrixXcd operator_for_word(const OperatorRep& rep, const Word& v) {
    MatrixXcd out = rep.identity;
    for (const auto& l : v.letters) {
        if (l.kind == Letter::Kind::empty) continue;
        l.check(rep.scenario);
        out = out * rep.letter_ops[letter_id(l, rep.scenario)];
    }
    return out;
}

// Γ_n(v,w) = Tr_{A.. B_(i)}[O_{v†w} ρ̃], evaluated per equivalence class on
// the class representative. With ρ̃ = |ψ><ψ| ⊗ I_B' the block reads
// Γ(v,w)[i,j] = <ψ,i| O_{v†w} |ψ,j> on the enlarged space.
inline NumericMomentMatrix reference_moment_matrix(const QuantumRealization& qr, int level,
                                                   int dim_cap = kDefaultOracleDimCap) {
    OperatorRep rep(qr, dim_cap);
    const int d = qr.scenario.bob_dim;
    NumericMomentMatrix out(build_index(qr.scenario, level));
    // |ψ,j> = |ψ> ⊗ |j>_B'
    const int base = rep.total_dim / d;
    MatrixXcd psi = MatrixXcd::Zero(rep.total_dim, d);
    for (int j = 0; j < d; ++j)
        for (int r = 0; r < base; ++r) psi(r * d + j, j) = qr.state(r);
    for (int c = 0; c < out.index.class_count(); ++c) {
        MatrixXcd op = operator_for_word(rep, out.index.class_reps[c]);
        out.class_blocks[c] = psi.adjoint() * op * psi;
    }
    return out;
}

}  // namespace steerhier
