#pragma once

#include <random>
#include <stdexcept>
#include <vector>

#include "steerhier/linalg.hpp"
#include "steerhier/report.hpp"
#include "steerhier/scenario.hpp"

namespace steerhier {

// Non-signalling assemblage in a (multipartite) Bob-with-Input scenario:
// one d x d block per outcome tuple, input tuple and Bob input. Outcome and
// input tuples are stored 0-based; Bob's input y is 0-based in storage (the
// external label is y+1).
struct Assemblage {
    ScenarioSpec scenario;
    std::vector<MatrixXcd> blocks;

    Assemblage() = default;
    explicit Assemblage(const ScenarioSpec& s) : scenario(s) {
        s.check();
        blocks.assign(static_cast<size_t>(s.outcome_tuples()) * s.input_tuples() * s.n_bob_inputs,
                      MatrixXcd::Zero(s.bob_dim, s.bob_dim));
    }

    size_t flat(int a_flat, int x_flat, int y) const {
        return (static_cast<size_t>(a_flat) * scenario.input_tuples() + x_flat) * scenario.n_bob_inputs + y;
    }
    MatrixXcd& block(int a_flat, int x_flat, int y) { return blocks[flat(a_flat, x_flat, y)]; }
    const MatrixXcd& block(int a_flat, int x_flat, int y) const { return blocks[flat(a_flat, x_flat, y)]; }

    MatrixXcd& block(const std::vector<int>& a, const std::vector<int>& x, int y) {
        return block(flatten_tuple(a, scenario.n_outcomes), flatten_tuple(x, scenario.n_inputs), y);
    }
    const MatrixXcd& block(const std::vector<int>& a, const std::vector<int>& x, int y) const {
        return block(flatten_tuple(a, scenario.n_outcomes), flatten_tuple(x, scenario.n_inputs), y);
    }

    // Bob's marginal σ_y = Σ_a σ_{a|x y}; any input tuple works for valid
    // assemblages, x_flat selects which one is summed.
    MatrixXcd bob_marginal(int y, int x_flat = 0) const {
        MatrixXcd out = MatrixXcd::Zero(scenario.bob_dim, scenario.bob_dim);
        for (int a = 0; a < scenario.outcome_tuples(); ++a) out += block(a, x_flat, y);
        return out;
    }
};

// Marginal over the party subset Ω: outcomes of parties not in
// Ω are summed at an arbitrary fixed input (0 here); no-signalling makes the
// choice immaterial.
inline MatrixXcd marginal(const Assemblage& asm_, const std::vector<int>& omega, const std::vector<int>& a_omega,
                          const std::vector<int>& x_omega, int y, int outside_input = 0) {
    const auto& s = asm_.scenario;
    std::vector<bool> in_omega(s.n_alices, false);
    for (size_t i = 0; i < omega.size(); ++i) {
        if (omega[i] < 0 || omega[i] >= s.n_alices) throw std::invalid_argument("marginal: party out of range");
        in_omega[omega[i]] = true;
    }
    std::vector<int> a(s.n_alices, 0), x(s.n_alices, outside_input);
    for (size_t i = 0; i < omega.size(); ++i) {
        a[omega[i]] = a_omega[i];
        x[omega[i]] = x_omega[i];
    }
    std::vector<int> outside;
    for (int k = 0; k < s.n_alices; ++k)
        if (!in_omega[k]) outside.push_back(k);

    MatrixXcd out = MatrixXcd::Zero(s.bob_dim, s.bob_dim);
    int combos = 1;
    for (size_t i = 0; i < outside.size(); ++i) combos *= s.n_outcomes;
    for (int c = 0; c < combos; ++c) {
        int rest = c;
        for (int k : outside) {
            a[k] = rest % s.n_outcomes;
            rest /= s.n_outcomes;
        }
        out += asm_.block(a, x, y);
    }
    return out;
}

// The Alices' correlations p(a|x) = Tr σ_{a|x y}; y-independent for valid
// assemblages (computed at y = 0).
inline std::vector<double> correlations(const Assemblage& asm_) {
    const auto& s = asm_.scenario;
    std::vector<double> p(static_cast<size_t>(s.outcome_tuples()) * s.input_tuples());
    for (int a = 0; a < s.outcome_tuples(); ++a)
        for (int x = 0; x < s.input_tuples(); ++x)
            p[a * s.input_tuples() + x] = asm_.block(a, x, 0).trace().real();
    return p;
}

inline ValidationReport validate(const Assemblage& asm_, double /*tol*/ = 1e-8) {
    const auto& s = asm_.scenario;
    ValidationReport rep;
    double herm = 0, psd = 0, alice_ns = 0, bob_ns = 0, norm = 0;
    for (const auto& b : asm_.blocks) {
        if (b.rows() != s.bob_dim || b.cols() != s.bob_dim)
            throw std::invalid_argument("validate: block dimension mismatch");
        herm = std::max(herm, hermiticity_residual(b));
        psd = std::max(psd, -min_eigenvalue(b));
    }
    // no Alice can signal: Σ_{a_k} σ is independent of x_k
    for (int k = 0; k < s.n_alices; ++k) {
        for (int a = 0; a < s.outcome_tuples(); ++a) {
            auto at = unflatten_tuple(a, s.n_outcomes, s.n_alices);
            if (at[k] != 0) continue;  // sum over party k's outcome once
            for (int x = 0; x < s.input_tuples(); ++x) {
                auto xt = unflatten_tuple(x, s.n_inputs, s.n_alices);
                if (xt[k] != 0) continue;
                for (int y = 0; y < s.n_bob_inputs; ++y) {
                    MatrixXcd ref = MatrixXcd::Zero(s.bob_dim, s.bob_dim);
                    for (int xi = 0; xi < s.n_inputs; ++xi) {
                        auto xs = xt;
                        xs[k] = xi;
                        MatrixXcd sum = MatrixXcd::Zero(s.bob_dim, s.bob_dim);
                        for (int ai = 0; ai < s.n_outcomes; ++ai) {
                            auto as = at;
                            as[k] = ai;
                            sum += asm_.block(as, xs, y);
                        }
                        if (xi == 0)
                            ref = sum;
                        else
                            alice_ns = std::max(alice_ns, (sum - ref).cwiseAbs().maxCoeff());
                    }
                }
            }
        }
    }
    // Bob cannot signal: Tr σ_{a|x y} is independent of y
    for (int a = 0; a < s.outcome_tuples(); ++a)
        for (int x = 0; x < s.input_tuples(); ++x) {
            double t0 = asm_.block(a, x, 0).trace().real();
            for (int y = 1; y < s.n_bob_inputs; ++y)
                bob_ns = std::max(bob_ns, std::abs(asm_.block(a, x, y).trace().real() - t0));
        }
    // normalization Σ_a Tr σ_{a|x y} = 1
    for (int x = 0; x < s.input_tuples(); ++x)
        for (int y = 0; y < s.n_bob_inputs; ++y)
            norm = std::max(norm, std::abs(asm_.bob_marginal(y, x).trace().real() - 1.0));

    rep.add("hermitian", herm);
    rep.add("psd", psd);
    rep.add("alice_no_signalling", alice_ns);
    rep.add("bob_no_signalling", bob_ns);
    rep.add("normalization", norm);
    return rep;
}

// Quantum realization of a Bob-with-Input assemblage: pure state on
// (⊗_k A_k) ⊗ B_aux ⊗ B_(i), projective measurements per party, and a
// unitary U_y on B_aux ⊗ B_(i) per Bob input. B_(i) has dimension d, so U_y
// maps B_aux ⊗ B_(i) onto B_aux ⊗ B.
struct QuantumRealization {
    ScenarioSpec scenario;
    std::vector<int> alice_dims;
    int aux_dim = 1;
    VectorXcd state;
    std::vector<std::vector<std::vector<MatrixXcd>>> measurements;  // [party][input][outcome]
    std::vector<MatrixXcd> unitaries;                               // [y], dim aux*d

    int alice_dim_product() const {
        int p = 1;
        for (int d : alice_dims) p *= d;
        return p;
    }
    int state_dim() const { return alice_dim_product() * aux_dim * scenario.bob_dim; }

    ValidationReport check() const {
        const auto& s = scenario;
        ValidationReport rep;
        double proj = 0, complete = 0, unitary = 0;
        for (int k = 0; k < s.n_alices; ++k)
            for (int x = 0; x < s.n_inputs; ++x) {
                MatrixXcd sum = MatrixXcd::Zero(alice_dims[k], alice_dims[k]);
                for (int a = 0; a < s.n_outcomes; ++a) {
                    const auto& p = measurements[k][x][a];
                    proj = std::max(proj, (p * p - p).cwiseAbs().maxCoeff());
                    proj = std::max(proj, hermiticity_residual(p));
                    sum += p;
                }
                complete = std::max(
                    complete, (sum - MatrixXcd::Identity(alice_dims[k], alice_dims[k])).cwiseAbs().maxCoeff());
            }
        for (const auto& u : unitaries)
            unitary = std::max(
                unitary, (u.adjoint() * u - MatrixXcd::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff());
        rep.add("projective", proj);
        rep.add("complete", complete);
        rep.add("unitary", unitary);
        rep.add("state_norm", std::abs(state.norm() - 1.0));
        return rep;
    }
};

// σ_{a|x y} = Tr_{A_1..A_N, B_aux}[ (Π_{a_1|x_1} ⊗ ... ⊗ Π_{a_N|x_N} ⊗ U_y) ρ' (·)† ].
inline Assemblage assemblage_from_quantum(const QuantumRealization& qr) {
    const auto& s = qr.scenario;
    const int d = s.bob_dim;
    const int rest = qr.alice_dim_product() * qr.aux_dim;
    if (qr.state.size() != qr.state_dim()) throw std::invalid_argument("assemblage_from_quantum: state dimension mismatch");
    Assemblage out(s);
    std::vector<int> dims;
    for (int dk : qr.alice_dims) dims.push_back(dk);
    dims.push_back(qr.aux_dim * d);  // B_aux ⊗ B_(i), acted on by U_y
    for (int a = 0; a < s.outcome_tuples(); ++a) {
        auto at = unflatten_tuple(a, s.n_outcomes, s.n_alices);
        for (int x = 0; x < s.input_tuples(); ++x) {
            auto xt = unflatten_tuple(x, s.n_inputs, s.n_alices);
            std::vector<MatrixXcd> factors;
            for (int k = 0; k < s.n_alices; ++k) factors.push_back(qr.measurements[k][xt[k]][at[k]]);
            for (int y = 0; y < s.n_bob_inputs; ++y) {
                auto fy = factors;
                fy.push_back(qr.unitaries[y]);
                VectorXcd phi = kron_chain(fy) * qr.state;
                // reduce onto the last d-dimensional factor
                MatrixXcd sigma = MatrixXcd::Zero(d, d);
                for (int r = 0; r < rest; ++r)
                    for (int i = 0; i < d; ++i)
                        for (int j = 0; j < d; ++j) sigma(i, j) += phi(r * d + i) * std::conj(phi(r * d + j));
                out.block(a, x, y) = sigma;
            }
        }
    }
    return out;
}

// Deterministic random quantum realization: Haar-style state, random
// projective measurements, random unitaries.
inline QuantumRealization gen_random_quantum(uint64_t seed, const ScenarioSpec& s, std::vector<int> alice_dims,
                                             int aux_dim) {
    s.check();
    if (static_cast<int>(alice_dims.size()) != s.n_alices)
        throw std::invalid_argument("gen_random_quantum: need one Alice dimension per party");
    for (int dk : alice_dims)
        if (dk < s.n_outcomes)
            throw std::invalid_argument("gen_random_quantum: Alice dimension below outcome count");
    std::mt19937_64 rng(seed);
    QuantumRealization qr;
    qr.scenario = s;
    qr.alice_dims = std::move(alice_dims);
    qr.aux_dim = aux_dim;
    qr.state = random_pure_state(qr.state_dim(), rng);
    qr.measurements.resize(s.n_alices);
    for (int k = 0; k < s.n_alices; ++k) {
        qr.measurements[k].resize(s.n_inputs);
        for (int x = 0; x < s.n_inputs; ++x)
            qr.measurements[k][x] = random_projective_measurement(qr.alice_dims[k], s.n_outcomes, rng);
    }
    for (int y = 0; y < s.n_bob_inputs; ++y) qr.unitaries.push_back(random_unitary(aux_dim * s.bob_dim, rng));
    return qr;
}

// Random non-signalling assemblage for one Alice and |Y| = 1: a random
// state ρ_B split per input into |A| PSD parts by conjugating a random POVM,
// σ_{a|x} = ρ^{1/2} E^x_a ρ^{1/2}. The parts sum to ρ_B exactly.
inline Assemblage gen_nonsignalling(uint64_t seed, const ScenarioSpec& s) {
    s.check();
    if (s.n_alices != 1 || s.n_bob_inputs != 1)
        throw std::invalid_argument("gen_nonsignalling: requires N=1 and |Y|=1");
    std::mt19937_64 rng(seed);
    MatrixXcd rho = random_density_matrix(s.bob_dim, rng);
    MatrixXcd root = matrix_sqrt(rho);
    Assemblage out(s);
    for (int x = 0; x < s.n_inputs; ++x) {
        auto povm = random_povm(s.bob_dim, s.n_outcomes, rng);
        for (int a = 0; a < s.n_outcomes; ++a) out.block(a, x, 0) = root * povm[a] * root;
    }
    return out;
}

// Post-quantum candidate: a maximally entangled qubit assemblage with two
// mutually unbiased measurements, where the y = 2 slice is the entrywise
// transpose of the y = 1 slice. Transposition preserves positivity and
// traces, so the result is a valid non-signalling assemblage. The seed picks
// a random basis rotation for Alice's measurements.
inline Assemblage gen_transpose_twist(uint64_t seed, const ScenarioSpec& s) {
    s.check();
    if (s.n_alices != 1 || s.n_outcomes != 2 || s.n_inputs != 2 || s.n_bob_inputs != 2 || s.bob_dim != 2)
        throw std::invalid_argument("gen_transpose_twist: requires N=1, |A|=|X|=|Y|=2, d=2");
    std::mt19937_64 rng(seed);
    MatrixXcd u = random_unitary(2, rng);
    MatrixXcd z0 = (MatrixXcd(2, 2) << 1, 0, 0, 0).finished();
    MatrixXcd z1 = (MatrixXcd(2, 2) << 0, 0, 0, 1).finished();
    MatrixXcd h0 = (MatrixXcd(2, 2) << 0.5, 0.5, 0.5, 0.5).finished();
    MatrixXcd h1 = (MatrixXcd(2, 2) << 0.5, -0.5, -0.5, 0.5).finished();
    std::vector<std::vector<MatrixXcd>> pis = {{u * z0 * u.adjoint(), u * z1 * u.adjoint()},
                                               {u * h0 * u.adjoint(), u * h1 * u.adjoint()}};
    Assemblage out(s);
    for (int x = 0; x < 2; ++x)
        for (int a = 0; a < 2; ++a) {
            // τ_{a|x} = Tr_A[(Π_{a|x} ⊗ I)|φ+><φ+|] = (1/2) Π_{a|x}^T
            MatrixXcd tau = pis[x][a].transpose() / 2.0;
            out.block(a, x, 0) = tau;
            out.block(a, x, 1) = tau.transpose();
        }
    return out;
}

// Instrumental assemblage (one Alice): Bob's input equals Alice's outcome,
// modeled by post-selecting a Bob-with-Input assemblage with |Y| = |A| on
// the slices y = a (0-based outcome a is pinned at stored input y = a).
struct InstrumentalAssemblage {
    ScenarioSpec scenario;  // n_bob_inputs == n_outcomes
    std::vector<MatrixXcd> blocks;  // (a, x) -> d x d

    InstrumentalAssemblage() = default;
    explicit InstrumentalAssemblage(const ScenarioSpec& s) : scenario(s) {
        s.check();
        if (s.n_alices != 1) throw std::invalid_argument("instrumental: one Alice supported");
        if (s.n_bob_inputs != s.n_outcomes)
            throw std::invalid_argument("instrumental: requires |Y| = |A|");
        blocks.assign(static_cast<size_t>(s.n_outcomes) * s.n_inputs, MatrixXcd::Zero(s.bob_dim, s.bob_dim));
    }

    MatrixXcd& block(int a, int x) { return blocks[static_cast<size_t>(a) * scenario.n_inputs + x]; }
    const MatrixXcd& block(int a, int x) const { return blocks[static_cast<size_t>(a) * scenario.n_inputs + x]; }

    ValidationReport check() const {
        ValidationReport rep;
        double herm = 0, psd = 0, norm = 0;
        for (const auto& b : blocks) {
            herm = std::max(herm, hermiticity_residual(b));
            psd = std::max(psd, -min_eigenvalue(b));
        }
        for (int x = 0; x < scenario.n_inputs; ++x) {
            double t = 0;
            for (int a = 0; a < scenario.n_outcomes; ++a) t += block(a, x).trace().real();
            norm = std::max(norm, std::abs(t - 1.0));
        }
        rep.add("hermitian", herm);
        rep.add("psd", psd);
        rep.add("normalization", norm);
        return rep;
    }
};

// Post-selection σ_{a|x} = σ_{a|x,y=a} of a Bob-with-Input assemblage.
inline InstrumentalAssemblage instrumental_from_assemblage(const Assemblage& asm_) {
    const auto& s = asm_.scenario;
    if (s.n_alices != 1 || s.n_bob_inputs != s.n_outcomes)
        throw std::invalid_argument("instrumental_from_assemblage: requires N=1 and |Y| = |A|");
    InstrumentalAssemblage ia(s);
    for (int a = 0; a < s.n_outcomes; ++a)
        for (int x = 0; x < s.n_inputs; ++x) ia.block(a, x) = asm_.block(a, x, a);
    return ia;
}

// Equality pins handed to the membership solver: the diagonal slices y = a
// of an otherwise-free Bob-with-Input assemblage are fixed to the
// instrumental blocks; all other slices remain free.
struct InstrumentalPin {
    int a = 0, x = 0, y = 0;  // 0-based
    MatrixXcd block;
};

inline std::vector<InstrumentalPin> instrumental_embed(const InstrumentalAssemblage& ia) {
    std::vector<InstrumentalPin> pins;
    for (int a = 0; a < ia.scenario.n_outcomes; ++a)
        for (int x = 0; x < ia.scenario.n_inputs; ++x) pins.push_back({a, x, a, ia.block(a, x)});
    return pins;
}

// Linear functional Σ Tr[F_{a|x y} σ_{a|x y}] on assemblages.
struct SteeringFunctional {
    ScenarioSpec scenario;
    std::vector<MatrixXcd> coefficients;  // same flat layout as Assemblage

    SteeringFunctional() = default;
    explicit SteeringFunctional(const ScenarioSpec& s) : scenario(s) {
        s.check();
        coefficients.assign(static_cast<size_t>(s.outcome_tuples()) * s.input_tuples() * s.n_bob_inputs,
                            MatrixXcd::Zero(s.bob_dim, s.bob_dim));
    }

    MatrixXcd& coeff(int a_flat, int x_flat, int y) {
        return coefficients[(static_cast<size_t>(a_flat) * scenario.input_tuples() + x_flat) * scenario.n_bob_inputs + y];
    }
    const MatrixXcd& coeff(int a_flat, int x_flat, int y) const {
        return coefficients[(static_cast<size_t>(a_flat) * scenario.input_tuples() + x_flat) * scenario.n_bob_inputs + y];
    }

    double check_hermitian() const {
        double h = 0;
        for (const auto& c : coefficients) h = std::max(h, hermiticity_residual(c));
        return h;
    }

    double value(const Assemblage& asm_) const {
        if (!(asm_.scenario == scenario)) throw std::invalid_argument("functional: scenario mismatch");
        double v = 0;
        for (size_t i = 0; i < coefficients.size(); ++i)
            v += (coefficients[i] * asm_.blocks[i]).trace().real();
        return v;
    }
};

// The normalization functional: value 1 on every valid assemblage.
inline SteeringFunctional normalization_functional(const ScenarioSpec& s) {
    SteeringFunctional f(s);
    double w = 1.0 / (s.input_tuples() * s.n_bob_inputs);
    for (auto& c : f.coefficients) c = w * MatrixXcd::Identity(s.bob_dim, s.bob_dim);
    return f;
}

inline SteeringFunctional gen_random_functional(uint64_t seed, const ScenarioSpec& s) {
    std::mt19937_64 rng(seed);
    SteeringFunctional f(s);
    for (auto& c : f.coefficients) c = random_hermitian(s.bob_dim, rng);
    return f;
}

}  // namespace steerhier
