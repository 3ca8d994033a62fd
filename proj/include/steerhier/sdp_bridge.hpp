#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steerhier/assemblage.hpp"
#include "steerhier/conic.hpp"
#include "steerhier/moment.hpp"

namespace steerhier {

// ---- complex <-> real embedding ----
//
// realify maps a Hermitian X to [[Re X, -Im X], [Im X, Re X]]; X is PSD iff
// the image is, each eigenvalue of X appearing twice. The embedding is an
// algebra homomorphism, so solver iterates stay inside the structured
// subalgebra and derealify recovers the Hermitian matrix.

inline MatrixXd realify(const MatrixXcd& x) {
    const int d = static_cast<int>(x.rows());
    MatrixXd out(2 * d, 2 * d);
    out.topLeftCorner(d, d) = x.real();
    out.bottomRightCorner(d, d) = x.real();
    out.topRightCorner(d, d) = -x.imag();
    out.bottomLeftCorner(d, d) = x.imag();
    return out;
}

inline MatrixXcd derealify(const MatrixXd& m) {
    const int d = static_cast<int>(m.rows()) / 2;
    MatrixXcd out(d, d);
    out.real() = (m.topLeftCorner(d, d) + m.bottomRightCorner(d, d)) / 2.0;
    out.imag() = (m.bottomLeftCorner(d, d) - m.topRightCorner(d, d)) / 2.0;
    return out;
}

// ---- bridge-level conic problem ----
//
// Variables are ordered [theta (free moment-class parameters), s (assemblage
// block parameters in the Hermitian-basis coordinates), lambda (the
// feasibility shift, when present)]. Cones are stated over these variables
// as sparse symmetric triplets; linear equalities tie the s coordinates
// (no-signalling, trace y-independence, normalization). solve_conic
// eliminates the equalities onto an affine parameterization s = s0 + W eta
// and hands the reduced LMI to the interior-point backend.

struct LinearEquality {
    std::vector<std::pair<int, double>> coeffs;  // indices into the s coordinates
    double rhs = 0.0;
};

struct ConicProblem {
    conic::Problem cones;  // over [theta, s, lambda]
    int n_theta = 0;
    int n_s = 0;
    bool has_lambda = false;
    std::vector<LinearEquality> equalities;
    std::vector<double> objective;  // over [theta, s, lambda]
    double objective_offset = 0.0;

    int variables() const { return n_theta + n_s + (has_lambda ? 1 : 0); }
};

struct ConicSolveResult {
    conic::Solution solution;        // in the reduced coordinates
    std::vector<double> y_full;      // [theta, s, lambda] recovered
    Eigen::VectorXd s_particular;
    Eigen::MatrixXd null_basis;      // s = s_particular + null_basis * eta
    conic::Problem reduced;          // the problem the backend actually saw
    double objective_offset = 0.0;
};

namespace bridge_detail {

inline void merge_into(std::map<std::pair<int, int>, double>& acc, const conic::SparseSym& a, double scale) {
    for (const auto& t : a.entries) acc[{t.row, t.col}] += scale * t.value;
}

inline conic::SparseSym from_map(const std::map<std::pair<int, int>, double>& acc) {
    conic::SparseSym out;
    for (const auto& [rc, v] : acc)
        if (v != 0.0) out.entries.push_back({rc.first, rc.second, v});
    return out;
}

}  // namespace bridge_detail

inline ConicSolveResult solve_conic(const ConicProblem& prob, const conic::Settings& settings,
                                    const std::vector<double>* warm_full = nullptr) {
    const int nt = prob.n_theta, ns = prob.n_s;
    const int lam = prob.has_lambda ? 1 : 0;
    if (prob.cones.variables() != prob.variables())
        throw std::invalid_argument("solve_conic: cone variable count mismatch");

    ConicSolveResult res;
    res.objective_offset = prob.objective_offset;

    // equality elimination on the s coordinates
    int n_eta = 0;
    if (ns > 0) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(prob.equalities.size(), ns);
        Eigen::VectorXd f = Eigen::VectorXd::Zero(prob.equalities.size());
        for (size_t r = 0; r < prob.equalities.size(); ++r) {
            for (const auto& [i, v] : prob.equalities[r].coeffs) e(r, i) += v;
            f(r) = prob.equalities[r].rhs;
        }
        if (prob.equalities.empty()) {
            res.s_particular = Eigen::VectorXd::Zero(ns);
            res.null_basis = Eigen::MatrixXd::Identity(ns, ns);
        } else {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(e, Eigen::ComputeThinU | Eigen::ComputeFullV);
            double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
            double thresh = std::max(1e-12, 1e-12 * smax);
            int rank = 0;
            for (int i = 0; i < svd.singularValues().size(); ++i)
                if (svd.singularValues()(i) > thresh) ++rank;
            const int nsv = static_cast<int>(svd.singularValues().size());
            Eigen::VectorXd inv = Eigen::VectorXd::Zero(nsv);
            for (int i = 0; i < rank; ++i) inv(i) = 1.0 / svd.singularValues()(i);
            res.s_particular = svd.matrixV().leftCols(nsv) * (inv.asDiagonal() * (svd.matrixU().transpose() * f));
            if ((e * res.s_particular - f).cwiseAbs().maxCoeff() > 1e-9)
                throw std::invalid_argument("solve_conic: inconsistent equality constraints");
            res.null_basis = svd.matrixV().rightCols(ns - rank);
        }
        n_eta = static_cast<int>(res.null_basis.cols());
    } else {
        res.s_particular = Eigen::VectorXd::Zero(0);
        res.null_basis = Eigen::MatrixXd::Zero(0, 0);
    }

    // reduce cones to [theta, eta, lambda]
    conic::Problem red;
    red.block_dims = prob.cones.block_dims;
    red.complex_structured = prob.cones.complex_structured;
    red.constant = prob.cones.constant;
    red.basis.resize(nt + n_eta + lam);
    for (int t = 0; t < nt; ++t) red.basis[t] = prob.cones.basis[t];
    if (ns > 0) {
        // constants pick up the particular solution, eta directions mix the
        // s basis through the null-space columns
        std::vector<std::map<int, std::map<std::pair<int, int>, double>>> eta_acc(n_eta);
        for (int i = 0; i < ns; ++i) {
            for (const auto& [j, a] : prob.cones.basis[nt + i]) {
                double sp = res.s_particular(i);
                if (sp != 0.0) {
                    MatrixXd dense = MatrixXd::Zero(red.block_dims[j], red.block_dims[j]);
                    a.add_scaled_to(dense, sp);
                    for (int r = 0; r < dense.rows(); ++r)
                        for (int c = r; c < dense.cols(); ++c)
                            if (dense(r, c) != 0.0) red.constant[j].entries.push_back({r, c, dense(r, c)});
                }
                for (int q = 0; q < n_eta; ++q) {
                    double w = res.null_basis(i, q);
                    if (w != 0.0) bridge_detail::merge_into(eta_acc[q][j], a, w);
                }
            }
        }
        for (int q = 0; q < n_eta; ++q)
            for (const auto& [j, acc] : eta_acc[q]) red.basis[nt + q].push_back({j, bridge_detail::from_map(acc)});
    }
    if (lam) red.basis[nt + n_eta] = prob.cones.basis[nt + ns];

    red.objective.assign(nt + n_eta + lam, 0.0);
    for (int t = 0; t < nt; ++t) red.objective[t] = prob.objective[t];
    for (int q = 0; q < n_eta; ++q) {
        double acc = 0;
        for (int i = 0; i < ns; ++i) acc += res.null_basis(i, q) * prob.objective[nt + i];
        red.objective[nt + q] = acc;
    }
    for (int i = 0; i < ns; ++i) res.objective_offset += res.s_particular(i) * prob.objective[nt + i];
    if (lam) red.objective[nt + n_eta] = prob.objective[nt + ns];

    std::vector<double> warm_reduced;
    const std::vector<double>* warm_ptr = nullptr;
    if (warm_full) {
        warm_reduced.assign(nt + n_eta + lam, 0.0);
        for (int t = 0; t < nt; ++t) warm_reduced[t] = (*warm_full)[t];
        if (ns > 0) {
            Eigen::VectorXd s(ns);
            for (int i = 0; i < ns; ++i) s(i) = (*warm_full)[nt + i];
            Eigen::VectorXd eta = res.null_basis.transpose() * (s - res.s_particular);
            for (int q = 0; q < n_eta; ++q) warm_reduced[nt + q] = eta(q);
        }
        if (lam) warm_reduced[nt + n_eta] = (*warm_full)[nt + ns];
        warm_ptr = &warm_reduced;
    }

    res.solution = conic::solve(red, settings, warm_ptr);
    res.reduced = std::move(red);

    res.y_full.assign(prob.variables(), 0.0);
    for (int t = 0; t < nt; ++t) res.y_full[t] = res.solution.y[t];
    if (ns > 0) {
        Eigen::VectorXd eta(n_eta);
        for (int q = 0; q < n_eta; ++q) eta(q) = res.solution.y[nt + q];
        Eigen::VectorXd s = res.s_particular + res.null_basis * eta;
        for (int i = 0; i < ns; ++i) res.y_full[nt + i] = s(i);
    }
    if (lam) res.y_full[nt + ns] = res.solution.y[nt + n_eta];
    return res;
}

// ---- Hermitian-basis coordinates for d x d blocks ----

inline int hermitian_param_count(int d) { return d * d; }

inline MatrixXcd hermitian_basis_element(int d, int t) {
    MatrixXcd h = MatrixXcd::Zero(d, d);
    if (t < d) {
        h(t, t) = 1.0;
        return h;
    }
    int pair = (t - d) / 2, kind = (t - d) % 2;
    for (int p = 0; p < d; ++p)
        for (int q = p + 1; q < d; ++q)
            if (pair-- == 0) {
                if (kind == 0) {
                    h(p, q) = 1.0;
                    h(q, p) = 1.0;
                } else {
                    h(p, q) = complexd(0, 1);
                    h(q, p) = complexd(0, -1);
                }
                return h;
            }
    throw std::invalid_argument("hermitian_basis_element: index out of range");
}

inline Eigen::VectorXd hermitian_coords(const MatrixXcd& x) {
    const int d = static_cast<int>(x.rows());
    Eigen::VectorXd s(d * d);
    for (int p = 0; p < d; ++p) s(p) = x(p, p).real();
    int idx = d;
    for (int p = 0; p < d; ++p)
        for (int q = p + 1; q < d; ++q) {
            s(idx++) = x(p, q).real();
            s(idx++) = x(p, q).imag();
        }
    return s;
}

inline MatrixXcd hermitian_from_coords(const Eigen::VectorXd& s, int d) {
    MatrixXcd x = MatrixXcd::Zero(d, d);
    for (int p = 0; p < d; ++p) x(p, p) = s(p);
    int idx = d;
    for (int p = 0; p < d; ++p)
        for (int q = p + 1; q < d; ++q) {
            x(p, q) = complexd(s(idx), s(idx + 1));
            x(q, p) = std::conj(x(p, q));
            idx += 2;
        }
    return x;
}

// ---- problem assembly ----

namespace bridge_detail {

// Accumulates a Hermitian matrix in upper-triangle complex form and emits
// realified symmetric triplets.
struct HermitianAccumulator {
    int dim = 0;  // complex dimension
    std::map<std::pair<int, int>, complexd> upper;

    explicit HermitianAccumulator(int d) : dim(d) {}

    void add(int p, int q, complexd v) {
        if (p <= q)
            upper[{p, q}] += v;
        else
            upper[{q, p}] += std::conj(v);
    }

    // place block g at block position (i, j) of a matrix of d x d blocks
    void place_block(int i, int j, const MatrixXcd& g, int d) {
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) {
                complexd v = g(r, c);
                if (v == complexd(0, 0)) continue;
                int p = i * d + r, q = j * d + c;
                if (i == j && r > c) continue;  // diagonal blocks: keep upper, Hermiticity implied
                add(p, q, v);
            }
    }

    conic::SparseSym realified() const {
        conic::SparseSym out;
        const int D = dim;
        for (const auto& [pq, v] : upper) {
            auto [p, q] = pq;
            double a = v.real(), b = v.imag();
            if (p == q) {
                if (a != 0.0) {
                    out.entries.push_back({p, p, a});
                    out.entries.push_back({p + D, p + D, a});
                }
            } else {
                if (a != 0.0) {
                    out.entries.push_back({p, q, a});
                    out.entries.push_back({p + D, q + D, a});
                }
                if (b != 0.0) {
                    out.entries.push_back({p, q + D, -b});
                    out.entries.push_back({q, p + D, b});
                }
            }
        }
        return out;
    }
};

// Linear expression for one moment class: constant + sum_k param_k * coeff_k
// over the global [theta, s] parameters.
struct ClassExpr {
    MatrixXcd constant;
    std::vector<std::pair<int, MatrixXcd>> terms;

    MatrixXcd eval(const std::vector<double>& params) const {
        MatrixXcd out = constant;
        for (const auto& [k, coeff] : terms) out += params[k] * coeff;
        return out;
    }
};

struct SigmaLayout {
    // one entry per (a_flat, x_flat, y); pinned blocks carry their value,
    // free blocks the offset of their d^2 coordinates in s and their cone id
    struct Block {
        bool pinned = false;
        MatrixXcd value;   // pinned only
        int s_offset = -1;  // free only
        int cone = -1;      // free only
    };
    std::vector<Block> blocks;
    int n_s = 0;

    size_t flat(const ScenarioSpec& sc, int a, int x, int y) const {
        return (static_cast<size_t>(a) * sc.input_tuples() + x) * sc.n_bob_inputs + y;
    }
};

enum class Mode { membership, bound, instrumental };

struct Assembly {
    Mode mode = Mode::membership;
    ScenarioSpec scenario;
    MomentIndex index;
    ConstraintSet constraints;  // membership only: frozen targets
    SigmaLayout sigma;
    std::vector<ClassExpr> exprs;
    ConicProblem problem;
    std::vector<std::string> warnings;
};

inline Assembly assemble(Mode mode, const ScenarioSpec& scenario, int level,
                         const Assemblage* data_assemblage, const std::vector<InstrumentalPin>* pins,
                         const SteeringFunctional* functional, int word_cap = kDefaultWordCap) {
    Assembly out;
    out.mode = mode;
    out.scenario = scenario;
    out.index = build_index(scenario, level, AlphabetMode::full, word_cap);
    const auto& idx = out.index;
    const int d = scenario.bob_dim;
    const bool with_sigma = mode != Mode::membership;
    const bool with_lambda = mode != Mode::bound;

    if (level < scenario.n_alices + 1)
        out.warnings.push_back("level " + std::to_string(level) + " is below the recommended minimum " +
                               std::to_string(scenario.n_alices + 1) +
                               "; some marginal constraints are absent at this level");

    // ---- sigma layout ----
    if (with_sigma) {
        out.sigma.blocks.resize(static_cast<size_t>(scenario.outcome_tuples()) * scenario.input_tuples() *
                                scenario.n_bob_inputs);
        std::map<size_t, MatrixXcd> pinned;
        if (pins)
            for (const auto& p : *pins)
                pinned[out.sigma.flat(scenario, p.a, p.x, p.y)] = p.block;
        int cone = 1;  // cone 0 is the moment block
        for (size_t b = 0; b < out.sigma.blocks.size(); ++b) {
            auto it = pinned.find(b);
            if (it != pinned.end()) {
                out.sigma.blocks[b].pinned = true;
                out.sigma.blocks[b].value = it->second;
            } else {
                out.sigma.blocks[b].s_offset = out.sigma.n_s;
                out.sigma.blocks[b].cone = cone++;
                out.sigma.n_s += hermitian_param_count(d);
            }
        }
    }
    const int n_s = out.sigma.n_s;

    // ---- class expressions ----
    out.exprs.assign(idx.class_count(), ClassExpr{MatrixXcd::Zero(d, d), {}});
    std::vector<bool> handled(idx.class_count(), false);

    auto [empty_class, empty_dag] = idx.class_of_word(Word{});
    out.exprs[empty_class].constant = MatrixXcd::Identity(d, d);
    handled[empty_class] = true;

    if (mode == Mode::membership) {
        out.constraints = certificate_constraints(idx, *data_assemblage);
        for (const auto& t : out.constraints.data) {
            out.exprs[t.class_id].constant =
                t.scalar ? MatrixXcd(t.scalar_value * MatrixXcd::Identity(d, d)) : t.block;
            handled[t.class_id] = true;
        }
    } else {
        // data constraints become linear expressions in the sigma coordinates
        detail::for_each_marginal_word(scenario, [&](const std::vector<int>& omega, const std::vector<int>& a,
                                                     const std::vector<int>& x, const Word& word) {
            std::vector<int> a0 = a, x0 = x;
            for (auto& v : x0) --v;
            // blocks contributing to the marginal at fixed outside input 0
            auto contributors = [&](int y) {
                std::vector<size_t> list;
                std::vector<bool> in_omega(scenario.n_alices, false);
                for (int k : omega) in_omega[k] = true;
                std::vector<int> at(scenario.n_alices, 0), xt(scenario.n_alices, 0);
                for (size_t i = 0; i < omega.size(); ++i) {
                    at[omega[i]] = a0[i];
                    xt[omega[i]] = x0[i];
                }
                std::vector<int> outside;
                for (int k = 0; k < scenario.n_alices; ++k)
                    if (!in_omega[k]) outside.push_back(k);
                int combos = 1;
                for (size_t i = 0; i < outside.size(); ++i) combos *= scenario.n_outcomes;
                for (int cidx = 0; cidx < combos; ++cidx) {
                    int rest = cidx;
                    for (int k : outside) {
                        at[k] = rest % scenario.n_outcomes;
                        rest /= scenario.n_outcomes;
                    }
                    list.push_back(out.sigma.flat(scenario, flatten_tuple(at, scenario.n_outcomes),
                                                  flatten_tuple(xt, scenario.n_inputs), y));
                }
                return list;
            };

            auto bind = [&](const Word& target_word, bool scalar, int y) {
                if (idx.words.index_of(target_word) < 0) return;
                auto [cid, dag] = idx.class_of_word(target_word);
                if (cid < 0 || handled[cid]) return;
                handled[cid] = true;
                auto& expr = out.exprs[cid];
                for (size_t b : contributors(y)) {
                    const auto& blk = out.sigma.blocks[b];
                    if (blk.pinned) {
                        MatrixXcd k = scalar ? MatrixXcd(blk.value.trace() * MatrixXcd::Identity(d, d))
                                             : MatrixXcd(blk.value.transpose() / double(d));
                        expr.constant += dag ? MatrixXcd(k.adjoint()) : k;
                    } else {
                        for (int t = 0; t < hermitian_param_count(d); ++t) {
                            MatrixXcd h = hermitian_basis_element(d, t);
                            MatrixXcd k = scalar ? MatrixXcd(h.trace() * MatrixXcd::Identity(d, d))
                                                 : MatrixXcd(h.transpose() / double(d));
                            if (k.cwiseAbs().maxCoeff() == 0.0) continue;
                            expr.terms.push_back({blk.s_offset + t, dag ? MatrixXcd(k.adjoint()) : k});
                        }
                    }
                }
            };

            if (!word.empty()) bind(word, true, 0);
            for (int y = 0; y < scenario.n_bob_inputs; ++y) {
                Word wy = word;
                wy.letters.push_back(Letter::bob_input(y + 1));
                bind(wy, false, y);
            }
        });
    }

    // remaining classes are free: scalar classes get c*I, the rest a full
    // (Hermitian or general) block basis. Theta parameters are indexed after
    // the expression pass so sigma terms above could use global s indices.
    int n_theta = 0;
    std::vector<std::vector<std::pair<int, MatrixXcd>>> theta_terms(idx.class_count());
    for (int c = 0; c < idx.class_count(); ++c) {
        if (handled[c]) continue;
        auto add_term = [&](const MatrixXcd& coeff) { theta_terms[c].push_back({n_theta++, coeff}); };
        if (idx.scalar_class[c]) {
            add_term(MatrixXcd::Identity(d, d));
            if (!idx.self_adjoint[c]) add_term(complexd(0, 1) * MatrixXcd::Identity(d, d));
        } else if (idx.self_adjoint[c]) {
            for (int t = 0; t < hermitian_param_count(d); ++t) add_term(hermitian_basis_element(d, t));
        } else {
            for (int p = 0; p < d; ++p)
                for (int q = 0; q < d; ++q) {
                    MatrixXcd e = MatrixXcd::Zero(d, d);
                    e(p, q) = 1.0;
                    add_term(e);
                    e(p, q) = complexd(0, 1);
                    add_term(e);
                }
        }
    }
    // shift sigma term indices behind the theta block
    for (int c = 0; c < idx.class_count(); ++c) {
        for (auto& [k, coeff] : out.exprs[c].terms) k += n_theta;
        for (auto& [k, coeff] : theta_terms[c]) out.exprs[c].terms.push_back({k, coeff});
    }

    // ---- cones ----
    auto& cp = out.problem;
    cp.n_theta = n_theta;
    cp.n_s = n_s;
    cp.has_lambda = with_lambda;
    const int n_vars = cp.variables();
    const int big_dim = idx.matrix_dim();

    cp.cones.block_dims.push_back(2 * big_dim);
    cp.cones.complex_structured.push_back(true);
    if (with_sigma)
        for (const auto& blk : out.sigma.blocks)
            if (!blk.pinned) {
                cp.cones.block_dims.push_back(2 * d);
                cp.cones.complex_structured.push_back(true);
            }
    cp.cones.constant.resize(cp.cones.block_dims.size());
    cp.cones.basis.resize(n_vars);

    // moment block: constants and per-parameter placements
    {
        HermitianAccumulator const_acc(big_dim);
        std::map<int, HermitianAccumulator> var_acc;
        for (int c = 0; c < idx.class_count(); ++c) {
            const auto& expr = out.exprs[c];
            for (const auto& [i, j, dag] : idx.class_entries[c]) {
                if (expr.constant.cwiseAbs().maxCoeff() != 0.0)
                    const_acc.place_block(i, j, dag ? MatrixXcd(expr.constant.adjoint()) : expr.constant, d);
                for (const auto& [k, coeff] : expr.terms) {
                    auto it = var_acc.find(k);
                    if (it == var_acc.end()) it = var_acc.emplace(k, HermitianAccumulator(big_dim)).first;
                    it->second.place_block(i, j, dag ? MatrixXcd(coeff.adjoint()) : coeff, d);
                }
            }
        }
        cp.cones.constant[0] = const_acc.realified();
        for (const auto& [k, acc] : var_acc) {
            auto sym = acc.realified();
            if (!sym.entries.empty()) cp.cones.basis[k].push_back({0, std::move(sym)});
        }
    }

    // sigma cones
    if (with_sigma) {
        for (const auto& blk : out.sigma.blocks) {
            if (blk.pinned) continue;
            for (int t = 0; t < hermitian_param_count(d); ++t) {
                HermitianAccumulator acc(d);
                acc.place_block(0, 0, hermitian_basis_element(d, t), d);
                cp.cones.basis[n_theta + blk.s_offset + t].push_back({blk.cone, acc.realified()});
            }
        }
    }

    // lambda: shifts every cone
    if (with_lambda) {
        for (size_t j = 0; j < cp.cones.block_dims.size(); ++j) {
            conic::SparseSym shift;
            for (int t = 0; t < cp.cones.block_dims[j]; ++t) shift.entries.push_back({t, t, -1.0});
            cp.cones.basis[n_vars - 1].push_back({static_cast<int>(j), std::move(shift)});
        }
    }

    // ---- equalities over s: no-signalling, trace y-independence,
    // normalization ----
    if (with_sigma) {
        const auto& sc = scenario;
        auto block_of = [&](const std::vector<int>& at, const std::vector<int>& xt, int y) {
            return out.sigma.flat(sc, flatten_tuple(at, sc.n_outcomes), flatten_tuple(xt, sc.n_inputs), y);
        };
        auto add_entrywise = [&](const std::vector<std::pair<size_t, double>>& combo) {
            // one equality per Hermitian coordinate of the (matrix) combination
            for (int t = 0; t < hermitian_param_count(d); ++t) {
                LinearEquality eq;
                double rhs = 0.0;
                for (const auto& [b, w] : combo) {
                    const auto& blk = out.sigma.blocks[b];
                    if (blk.pinned)
                        rhs -= w * hermitian_coords(blk.value)(t);
                    else
                        eq.coeffs.push_back({blk.s_offset + t, w});
                }
                eq.rhs = rhs;
                if (!eq.coeffs.empty() || eq.rhs != 0.0) cp.equalities.push_back(std::move(eq));
            }
        };

        // Alice no-signalling per party
        for (int k = 0; k < sc.n_alices; ++k)
            for (int a = 0; a < sc.outcome_tuples(); ++a) {
                auto at = unflatten_tuple(a, sc.n_outcomes, sc.n_alices);
                if (at[k] != 0) continue;
                for (int x = 0; x < sc.input_tuples(); ++x) {
                    auto xt = unflatten_tuple(x, sc.n_inputs, sc.n_alices);
                    if (xt[k] != 0) continue;
                    for (int y = 0; y < sc.n_bob_inputs; ++y)
                        for (int xi = 1; xi < sc.n_inputs; ++xi) {
                            std::vector<std::pair<size_t, double>> combo;
                            for (int ai = 0; ai < sc.n_outcomes; ++ai) {
                                auto as = at;
                                as[k] = ai;
                                auto x0 = xt, x1 = xt;
                                x1[k] = xi;
                                combo.push_back({block_of(as, x1, y), 1.0});
                                combo.push_back({block_of(as, x0, y), -1.0});
                            }
                            add_entrywise(combo);
                        }
                }
            }
        // Bob no-signalling: traces independent of y
        for (int a = 0; a < sc.outcome_tuples(); ++a)
            for (int x = 0; x < sc.input_tuples(); ++x)
                for (int y = 1; y < sc.n_bob_inputs; ++y) {
                    LinearEquality eq;
                    double rhs = 0.0;
                    for (auto [b, w] : std::vector<std::pair<size_t, double>>{
                             {out.sigma.flat(sc, a, x, y), 1.0}, {out.sigma.flat(sc, a, x, 0), -1.0}}) {
                        const auto& blk = out.sigma.blocks[b];
                        if (blk.pinned)
                            rhs -= w * blk.value.trace().real();
                        else
                            for (int p = 0; p < d; ++p) eq.coeffs.push_back({blk.s_offset + p, w});
                    }
                    eq.rhs = rhs;
                    cp.equalities.push_back(std::move(eq));
                }
        // normalization per (x, y)
        for (int x = 0; x < sc.input_tuples(); ++x)
            for (int y = 0; y < sc.n_bob_inputs; ++y) {
                LinearEquality eq;
                eq.rhs = 1.0;
                for (int a = 0; a < sc.outcome_tuples(); ++a) {
                    const auto& blk = out.sigma.blocks[out.sigma.flat(sc, a, x, y)];
                    if (blk.pinned)
                        eq.rhs -= blk.value.trace().real();
                    else
                        for (int p = 0; p < d; ++p) eq.coeffs.push_back({blk.s_offset + p, 1.0});
                }
                cp.equalities.push_back(std::move(eq));
            }
    }

    // ---- objective ----
    cp.objective.assign(n_vars, 0.0);
    if (mode == Mode::bound) {
        for (int a = 0; a < scenario.outcome_tuples(); ++a)
            for (int x = 0; x < scenario.input_tuples(); ++x)
                for (int y = 0; y < scenario.n_bob_inputs; ++y) {
                    const MatrixXcd& f = functional->coeff(a, x, y);
                    const auto& blk = out.sigma.blocks[out.sigma.flat(scenario, a, x, y)];
                    if (blk.pinned) {
                        cp.objective_offset += (f * blk.value).trace().real();
                    } else {
                        // Tr[F sigma] in Hermitian coordinates
                        for (int t = 0; t < hermitian_param_count(d); ++t)
                            cp.objective[n_theta + blk.s_offset + t] +=
                                (f * hermitian_basis_element(d, t)).trace().real();
                    }
                }
    } else {
        cp.objective[n_vars - 1] = 1.0;  // maximize the feasibility shift
    }
    return out;
}

// evaluate the moment matrix and assemblage described by y_full
inline NumericMomentMatrix certificate_from(const Assembly& asmb, const std::vector<double>& y_full) {
    std::vector<double> params(y_full.begin(), y_full.begin() + asmb.problem.n_theta + asmb.problem.n_s);
    NumericMomentMatrix out(asmb.index);
    for (int c = 0; c < asmb.index.class_count(); ++c) out.class_blocks[c] = asmb.exprs[c].eval(params);
    return out;
}

inline Assemblage assemblage_from(const Assembly& asmb, const std::vector<double>& y_full) {
    Assemblage out(asmb.scenario);
    const int d = asmb.scenario.bob_dim;
    for (size_t b = 0; b < asmb.sigma.blocks.size(); ++b) {
        const auto& blk = asmb.sigma.blocks[b];
        if (blk.pinned) {
            out.blocks[b] = blk.value;
        } else {
            Eigen::VectorXd s(hermitian_param_count(d));
            for (int t = 0; t < hermitian_param_count(d); ++t)
                s(t) = y_full[asmb.problem.n_theta + blk.s_offset + t];
            out.blocks[b] = hermitian_from_coords(s, d);
        }
    }
    return out;
}

}  // namespace bridge_detail

// ---- verdicts ----

struct SdpOptions {
    // A problem is declared infeasible only when the independently rechecked
    // dual certificate clears this margin, and feasible only when the primal
    // certificate revalidates at it.
    double verdict_tol = 1e-7;
    double input_tol = 1e-8;
    int word_cap = kDefaultWordCap;
    conic::Settings solver;
};

struct SolveOutcome {
    enum class Verdict { feasible, infeasible, unknown };
    Verdict verdict = Verdict::unknown;

    std::optional<NumericMomentMatrix> certificate;
    ValidationReport certificate_report;
    std::optional<Assemblage> recovered_assemblage;  // instrumental/bound modes

    std::vector<MatrixXcd> dual_blocks;  // de-embedded multiplier blocks, trace-normalized
    double dual_margin = 0.0;
    double dual_eig_residual = 0.0;
    double dual_orth_residual = 0.0;

    double shift = 0.0;  // optimal feasibility shift lambda*
    std::string solver_status;
    int iterations = 0;
    double gap = 0.0;
    double solve_seconds = 0.0;
    std::vector<std::string> warnings;

    bool feasible() const { return verdict == Verdict::feasible; }
    bool infeasible() const { return verdict == Verdict::infeasible; }
};

inline const char* to_string(SolveOutcome::Verdict v) {
    switch (v) {
        case SolveOutcome::Verdict::feasible: return "feasible";
        case SolveOutcome::Verdict::infeasible: return "infeasible";
        case SolveOutcome::Verdict::unknown: return "unknown";
    }
    return "unknown";
}

namespace bridge_detail {

inline SolveOutcome run_feasibility(const Assembly& asmb, const SdpOptions& opts) {
    auto t0 = std::chrono::steady_clock::now();
    conic::Settings settings = opts.solver;

    // strictly feasible start: lambda below the least eigenvalue of the
    // constant blocks
    std::vector<double> warm(asmb.problem.variables(), 0.0);
    double lmin = 0;
    for (size_t j = 0; j < asmb.problem.cones.block_dims.size(); ++j) {
        MatrixXd c = MatrixXd::Zero(asmb.problem.cones.block_dims[j], asmb.problem.cones.block_dims[j]);
        asmb.problem.cones.constant[j].add_scaled_to(c, 1.0);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(c, Eigen::EigenvaluesOnly);
        lmin = std::min(lmin, es.eigenvalues().minCoeff());
    }
    warm.back() = lmin - 1.0;

    auto res = solve_conic(asmb.problem, settings, &warm);
    SolveOutcome out;
    out.warnings = asmb.warnings;
    out.solver_status = conic::to_string(res.solution.status);
    out.iterations = res.solution.iterations;
    out.gap = res.solution.gap;
    out.shift = res.solution.lmi_objective;

    const double vtol = opts.verdict_tol;

    // feasible? revalidate the reconstructed certificate (and assemblage)
    NumericMomentMatrix cert = certificate_from(asmb, res.y_full);
    ValidationReport rep;
    if (asmb.mode == Mode::membership) {
        rep = validate_moment_matrix(cert, asmb.constraints);
    } else {
        Assemblage rec = assemblage_from(asmb, res.y_full);
        auto asm_rep = validate(rec);
        rep = validate_moment_matrix(cert, certificate_constraints(asmb.index, rec));
        for (const auto& e : asm_rep.entries) rep.add("assemblage_" + e.family, e.residual);
        out.recovered_assemblage = std::move(rec);
    }
    out.certificate_report = rep;
    if (rep.pass(vtol)) {
        out.verdict = SolveOutcome::Verdict::feasible;
        out.certificate = std::move(cert);
        out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }

    // infeasible? recheck the multiplier as a Farkas certificate against
    // freshly assembled data: Z >= 0, orthogonal to every variable
    // direction, total trace 1, and <C, Z> <= -margin.
    const auto& red = res.reduced;
    double total_trace = 0;
    for (const auto& z : res.solution.multiplier) total_trace += z.trace();
    if (total_trace > 1e-12) {
        double orth = 0;
        for (int k = 0; k + 1 < static_cast<int>(red.basis.size()); ++k) {  // all but lambda
            double acc = 0;
            for (const auto& [j, a] : red.basis[k]) acc += a.dot(res.solution.multiplier[j]);
            orth = std::max(orth, std::abs(acc) / total_trace);
        }
        double margin = 0, eig = 0;
        for (size_t j = 0; j < res.solution.multiplier.size(); ++j) {
            margin -= red.constant[j].dot(res.solution.multiplier[j]) / total_trace;
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(res.solution.multiplier[j] / total_trace,
                                                       Eigen::EigenvaluesOnly);
            eig = std::max(eig, -es.eigenvalues().minCoeff());
        }
        out.dual_margin = margin;
        out.dual_eig_residual = std::max(0.0, eig);
        out.dual_orth_residual = orth;
        if (margin >= vtol && orth <= vtol && out.dual_eig_residual <= vtol) {
            out.verdict = SolveOutcome::Verdict::infeasible;
            // normalize so the de-embedded blocks have unit total trace
            for (const auto& z : res.solution.multiplier)
                out.dual_blocks.push_back(derealify(z) * (2.0 / total_trace));
        }
    }
    out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace bridge_detail

// Membership test: does the assemblage admit a level-n certificate? The
// solver maximizes the feasibility shift lambda with M(theta) - lambda I >= 0;
// feasibility is decided only by revalidating the reconstructed certificate,
// infeasibility only by the rechecked Farkas certificate.
inline SolveOutcome membership(const Assemblage& asm_, int level, const SdpOptions& opts = {}) {
    auto rep = validate(asm_, opts.input_tol);
    if (!rep.pass(opts.input_tol))
        throw std::invalid_argument("membership: assemblage fails validation\n" + rep.describe());
    auto asmb = bridge_detail::assemble(bridge_detail::Mode::membership, asm_.scenario, level, &asm_, nullptr,
                                        nullptr, opts.word_cap);
    return bridge_detail::run_feasibility(asmb, opts);
}

inline SolveOutcome instrumental_membership(const InstrumentalAssemblage& ia, int level,
                                            const SdpOptions& opts = {}) {
    auto rep = ia.check();
    if (!rep.pass(opts.input_tol))
        throw std::invalid_argument("instrumental_membership: assemblage fails validation\n" + rep.describe());
    auto pins = instrumental_embed(ia);
    auto asmb = bridge_detail::assemble(bridge_detail::Mode::instrumental, ia.scenario, level, nullptr, &pins,
                                        nullptr, opts.word_cap);
    return bridge_detail::run_feasibility(asmb, opts);
}

// Upper bound on the functional value over level-n certified assemblages.
// The reported bound is the multiplier-side objective, which upper-bounds
// the exact optimum by weak duality.
struct BoundResult {
    double upper_bound = 0.0;
    double objective = 0.0;  // the maximizing side g.y
    double gap = 0.0;
    Assemblage optimizer;
    std::string solver_status;
    int iterations = 0;
    double solve_seconds = 0.0;
    std::vector<std::string> warnings;
    bool reliable = false;
};

inline BoundResult steering_bound(const SteeringFunctional& functional, int level, const SdpOptions& opts = {}) {
    if (functional.check_hermitian() > opts.input_tol)
        throw std::invalid_argument("steering_bound: functional coefficients must be Hermitian");
    auto t0 = std::chrono::steady_clock::now();
    auto asmb = bridge_detail::assemble(bridge_detail::Mode::bound, functional.scenario, level, nullptr, nullptr,
                                        &functional, opts.word_cap);
    auto res = solve_conic(asmb.problem, opts.solver);
    if (res.solution.status == conic::SolverStatus::unbounded)
        throw std::logic_error("steering_bound: problem unbounded (normalization constraints missing)");
    BoundResult out;
    out.warnings = asmb.warnings;
    out.solver_status = conic::to_string(res.solution.status);
    out.iterations = res.solution.iterations;
    out.gap = res.solution.gap;
    out.objective = res.solution.lmi_objective + res.objective_offset;
    out.upper_bound = res.solution.multiplier_objective + res.objective_offset;
    out.optimizer = bridge_detail::assemblage_from(asmb, res.y_full);
    out.reliable = res.solution.status == conic::SolverStatus::optimal ||
                   res.solution.status == conic::SolverStatus::near_optimal;
    out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace steerhier
