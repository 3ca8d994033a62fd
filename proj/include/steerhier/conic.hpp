#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace steerhier::conic {

// Primal-dual interior-point solver for linear matrix inequalities over a
// product of real symmetric PSD cones.
//
// LMI side (what callers state):   maximize  g.y
//                                  over      y in R^m
//                                  with      S_j = C_j + sum_k y_k A_jk >= 0
//
// Multiplier side (used for infeasibility certificates):
//                                  minimize  sum_j <C_j, Z_j>
//                                  with      sum_j <A_jk, Z_j> = -g_k,
//                                            Z_j >= 0
//
// Weak duality: sum_j <C_j, Z_j> >= g.y for any feasible pair, and
// <Z_j, S_j> = 0 at an optimum. The search direction is the standard
// HKM/XZ one with a Mehrotra predictor-corrector; the Schur complement
// B_lk = sum_j Tr(A_jl Sinv_j A_jk Z_j) is symmetric positive definite
// as long as the A_jk are linearly independent.
//
// Matrices are passed as sparse symmetric triplets (row <= col, the value
// implicitly mirrored). Blocks flagged `complex_structured` carry the real
// embedding [[X re, -X im], [X im, X re]] of a Hermitian matrix; iterates
// are projected back onto that subalgebra each step to stop roundoff drift.

struct SymTriplet {
    int32_t row = 0, col = 0;
    double value = 0.0;
};

struct SparseSym {
    std::vector<SymTriplet> entries;

    void add(int r, int c, double v) {
        if (r > c) std::swap(r, c);
        entries.push_back({r, c, v});
    }

    void add_scaled_to(Eigen::MatrixXd& dense, double scale) const {
        for (const auto& t : entries) {
            dense(t.row, t.col) += scale * t.value;
            if (t.row != t.col) dense(t.col, t.row) += scale * t.value;
        }
    }

    // Tr(A M) for symmetric A and arbitrary M.
    double dot(const Eigen::MatrixXd& m) const {
        double acc = 0;
        for (const auto& t : entries)
            acc += t.row == t.col ? t.value * m(t.row, t.row) : t.value * (m(t.row, t.col) + m(t.col, t.row));
        return acc;
    }

    double max_abs() const {
        double v = 0;
        for (const auto& t : entries) v = std::max(v, std::abs(t.value));
        return v;
    }
};

struct Problem {
    std::vector<int> block_dims;
    std::vector<SparseSym> constant;  // C_j
    // basis[k] lists the blocks variable k touches.
    std::vector<std::vector<std::pair<int, SparseSym>>> basis;
    std::vector<double> objective;  // g
    std::vector<bool> complex_structured;

    int variables() const { return static_cast<int>(basis.size()); }
    int blocks() const { return static_cast<int>(block_dims.size()); }
};

struct Settings {
    int max_iterations = 150;
    double gap_tol = 1e-9;
    double feas_tol = 1e-9;
    double step_fraction = 0.98;
    int threads = 0;      // 0: leave runtime default
    bool verbose = false;
};

enum class SolverStatus { optimal, near_optimal, max_iterations, stalled, unbounded, numerical_error };

inline const char* to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::optimal: return "optimal";
        case SolverStatus::near_optimal: return "near_optimal";
        case SolverStatus::max_iterations: return "max_iterations";
        case SolverStatus::stalled: return "stalled";
        case SolverStatus::unbounded: return "unbounded";
        case SolverStatus::numerical_error: return "numerical_error";
    }
    return "unknown";
}

struct Solution {
    SolverStatus status = SolverStatus::numerical_error;
    std::vector<double> y;
    std::vector<Eigen::MatrixXd> slack;       // S_j = C_j + sum_k y_k A_jk
    std::vector<Eigen::MatrixXd> multiplier;  // Z_j
    double lmi_objective = 0;                 // g.y
    double multiplier_objective = 0;          // sum_j <C_j, Z_j>
    double gap = 0, primal_residual = 0, dual_residual = 0, mu = 0;
    int iterations = 0;
};

namespace detail {

inline void project_complex_structure(Eigen::MatrixXd& m) {
    const int h = static_cast<int>(m.rows()) / 2;
    Eigen::MatrixXd p = (m.topLeftCorner(h, h) + m.bottomRightCorner(h, h)) / 2.0;
    Eigen::MatrixXd q = (m.topRightCorner(h, h) - m.bottomLeftCorner(h, h)) / 2.0;
    m.topLeftCorner(h, h) = p;
    m.bottomRightCorner(h, h) = p;
    m.topRightCorner(h, h) = q;
    m.bottomLeftCorner(h, h) = -q;
}

// Largest alpha in (0, 1] with X + alpha*D >= 0, damped by tau.
inline double max_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& d, double tau) {
    Eigen::LLT<Eigen::MatrixXd> llt(x);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd jig = x + 1e-12 * x.trace() / x.rows() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
        llt.compute(jig);
        if (llt.info() != Eigen::Success) return 0.0;
    }
    Eigen::MatrixXd t1 = llt.matrixL().solve(d);
    Eigen::MatrixXd w = llt.matrixL().solve(t1.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((w + w.transpose()) / 2.0, Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin >= -1e-14) return 1.0;
    return std::min(1.0, -tau / lmin);
}

inline Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return (m + m.transpose()) / 2.0; }

}  // namespace detail

inline Solution solve(const Problem& prob, const Settings& settings = {},
                      const std::vector<double>* warm_y = nullptr) {
    const int m = prob.variables();
    const int nb = prob.blocks();
    if (static_cast<int>(prob.objective.size()) != m) throw std::invalid_argument("conic: objective size mismatch");
    if (static_cast<int>(prob.constant.size()) != nb) throw std::invalid_argument("conic: constant block count mismatch");

#ifdef _OPENMP
    if (settings.threads > 0) omp_set_num_threads(settings.threads);
#endif

    // per-block variable lists
    std::vector<std::vector<std::pair<int, const SparseSym*>>> block_vars(nb);
    for (int k = 0; k < m; ++k)
        for (const auto& [j, a] : prob.basis[k]) {
            if (j < 0 || j >= nb) throw std::invalid_argument("conic: basis block index out of range");
            block_vars[j].push_back({k, &a});
        }

    double g_norm = 0, c_norm = 0;
    for (double v : prob.objective) g_norm = std::max(g_norm, std::abs(v));
    for (const auto& c : prob.constant) c_norm = std::max(c_norm, c.max_abs());

    Solution sol;
    sol.y.assign(m, 0.0);
    if (warm_y) {
        if (static_cast<int>(warm_y->size()) != m) throw std::invalid_argument("conic: warm start size mismatch");
        sol.y = *warm_y;
    }

    auto slack_at = [&](const std::vector<double>& y) {
        std::vector<Eigen::MatrixXd> s(nb);
        for (int j = 0; j < nb; ++j) {
            s[j] = Eigen::MatrixXd::Zero(prob.block_dims[j], prob.block_dims[j]);
            prob.constant[j].add_scaled_to(s[j], 1.0);
        }
        for (int k = 0; k < m; ++k)
            for (const auto& [j, a] : prob.basis[k]) a.add_scaled_to(s[j], y[k]);
        return s;
    };

    sol.slack = slack_at(sol.y);
    sol.multiplier.resize(nb);
    int total_dim = 0;
    for (int j = 0; j < nb; ++j) {
        total_dim += prob.block_dims[j];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.slack[j], Eigen::EigenvaluesOnly);
        double lmin = es.eigenvalues().minCoeff();
        if (lmin < 1e-6)
            sol.slack[j] += (1.0 - lmin) * Eigen::MatrixXd::Identity(prob.block_dims[j], prob.block_dims[j]);
        sol.multiplier[j] =
            std::max(1.0, g_norm) * Eigen::MatrixXd::Identity(prob.block_dims[j], prob.block_dims[j]);
    }

    auto residuals = [&](std::vector<double>& rp, std::vector<Eigen::MatrixXd>& rd) {
        rp.assign(m, 0.0);
        for (int k = 0; k < m; ++k) {
            double acc = -prob.objective[k];
            for (const auto& [j, a] : prob.basis[k]) acc -= a.dot(sol.multiplier[j]);
            rp[k] = acc;
        }
        auto target = slack_at(sol.y);
        rd.resize(nb);
        for (int j = 0; j < nb; ++j) rd[j] = target[j] - sol.slack[j];
    };

    double tau = settings.step_fraction;
    int consecutive_tiny_steps = 0;

    std::vector<double> rp;
    std::vector<Eigen::MatrixXd> rd;
    Eigen::MatrixXd big_b(m, m);
    std::vector<Eigen::MatrixXd> sinv(nb), g0(nb), dz(nb), ds(nb), dz_aff(nb), ds_aff(nb);
    Eigen::VectorXd dy(m), dy_aff(m);

    for (sol.iterations = 0; sol.iterations < settings.max_iterations; ++sol.iterations) {
        residuals(rp, rd);
        double mu = 0;
        for (int j = 0; j < nb; ++j) mu += (sol.multiplier[j].array() * sol.slack[j].array()).sum();
        mu /= total_dim;
        sol.mu = mu;

        sol.multiplier_objective = 0;
        for (int j = 0; j < nb; ++j) sol.multiplier_objective += prob.constant[j].dot(sol.multiplier[j]);
        sol.lmi_objective = 0;
        for (int k = 0; k < m; ++k) sol.lmi_objective += prob.objective[k] * sol.y[k];

        sol.gap = std::abs(sol.multiplier_objective - sol.lmi_objective) /
                  (1.0 + std::abs(sol.multiplier_objective) + std::abs(sol.lmi_objective));
        sol.primal_residual = 0;
        for (double v : rp) sol.primal_residual = std::max(sol.primal_residual, std::abs(v));
        sol.primal_residual /= 1.0 + g_norm;
        sol.dual_residual = 0;
        for (const auto& r : rd) sol.dual_residual = std::max(sol.dual_residual, r.cwiseAbs().maxCoeff());
        sol.dual_residual /= 1.0 + c_norm;

        if (settings.verbose)
            std::fprintf(stderr, "iter %3d  mu %.3e  gap %.3e  rp %.3e  rd %.3e\n", sol.iterations, mu,
                         sol.gap, sol.primal_residual, sol.dual_residual);

        if (sol.gap <= settings.gap_tol && sol.primal_residual <= settings.feas_tol &&
            sol.dual_residual <= settings.feas_tol) {
            sol.status = SolverStatus::optimal;
            return sol;
        }
        if (std::abs(sol.lmi_objective) > 1e10) {
            sol.status = SolverStatus::unbounded;
            return sol;
        }

        // factorizations of the current iterate
        std::vector<Eigen::LLT<Eigen::MatrixXd>> slack_llt(nb);
        bool fact_ok = true;
        for (int j = 0; j < nb; ++j) {
            slack_llt[j].compute(sol.slack[j]);
            if (slack_llt[j].info() != Eigen::Success) fact_ok = false;
        }
        if (!fact_ok) {
            sol.status = SolverStatus::numerical_error;
            return sol;
        }
        for (int j = 0; j < nb; ++j)
            sinv[j] = slack_llt[j].solve(Eigen::MatrixXd::Identity(prob.block_dims[j], prob.block_dims[j]));

        // Schur complement B_lk = sum_j Tr(A_jl Sinv_j A_jk Z_j)
        big_b.setZero();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int k = 0; k < m; ++k) {
            for (const auto& [j, a] : prob.basis[k]) {
                const int n = prob.block_dims[j];
                // distinct rows of the symmetric pattern of A_jk
                std::vector<int> rows;
                for (const auto& t : a.entries) {
                    rows.push_back(t.row);
                    if (t.row != t.col) rows.push_back(t.col);
                }
                std::sort(rows.begin(), rows.end());
                rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
                std::vector<int> pos(n, -1);
                for (size_t i = 0; i < rows.size(); ++i) pos[rows[i]] = static_cast<int>(i);
                // W = (A_jk Z_j) restricted to those rows
                Eigen::MatrixXd w = Eigen::MatrixXd::Zero(rows.size(), n);
                for (const auto& t : a.entries) {
                    w.row(pos[t.row]) += t.value * sol.multiplier[j].row(t.col);
                    if (t.row != t.col) w.row(pos[t.col]) += t.value * sol.multiplier[j].row(t.row);
                }
                Eigen::MatrixXd sinv_cols(n, rows.size());
                for (size_t i = 0; i < rows.size(); ++i) sinv_cols.col(i) = sinv[j].col(rows[i]);
                Eigen::MatrixXd u = sinv_cols * w;  // Sinv A_jk Z_j
                for (const auto& [l, al] : block_vars[j]) big_b(l, k) += al->dot(u);
            }
        }
        big_b = ((big_b + big_b.transpose()) / 2.0).eval();

        Eigen::LLT<Eigen::MatrixXd> schur(big_b);
        Eigen::LDLT<Eigen::MatrixXd> schur_ldlt;
        bool use_ldlt = schur.info() != Eigen::Success;
        if (use_ldlt) {
            schur_ldlt.compute(big_b + 1e-13 * (1.0 + big_b.trace() / m) * Eigen::MatrixXd::Identity(m, m));
            if (schur_ldlt.info() != Eigen::Success) {
                sol.status = SolverStatus::numerical_error;
                return sol;
            }
        }
        auto schur_solve = [&](const Eigen::VectorXd& rhs) {
            Eigen::VectorXd x = use_ldlt ? Eigen::VectorXd(schur_ldlt.solve(rhs)) : Eigen::VectorXd(schur.solve(rhs));
            // one step of iterative refinement
            Eigen::VectorXd r = rhs - big_b * x;
            x += use_ldlt ? Eigen::VectorXd(schur_ldlt.solve(r)) : Eigen::VectorXd(schur.solve(r));
            return x;
        };

        auto newton = [&](double sigma_mu, bool corrector, Eigen::VectorXd& dy_out,
                          std::vector<Eigen::MatrixXd>& dz_out, std::vector<Eigen::MatrixXd>& ds_out) {
            Eigen::VectorXd rhs(m);
            for (int j = 0; j < nb; ++j) {
                g0[j] = -sol.multiplier[j];
                if (sigma_mu != 0) g0[j] += sigma_mu * sinv[j];
                g0[j] -= detail::sym(sinv[j] * rd[j] * sol.multiplier[j]);
                if (corrector) g0[j] -= detail::sym(dz_aff[j] * ds_aff[j] * sinv[j]);
            }
            for (int k = 0; k < m; ++k) {
                double acc = -rp[k];
                for (const auto& [j, a] : prob.basis[k]) acc += a.dot(g0[j]);
                rhs[k] = acc;
            }
            dy_out = schur_solve(rhs);
            for (int j = 0; j < nb; ++j) ds_out[j] = rd[j];
            for (int k = 0; k < m; ++k)
                for (const auto& [j, a] : prob.basis[k]) a.add_scaled_to(ds_out[j], dy_out[k]);
            for (int j = 0; j < nb; ++j)
                dz_out[j] = g0[j] - detail::sym(sinv[j] * (ds_out[j] - rd[j]) * sol.multiplier[j]);
        };

        // predictor
        newton(0.0, false, dy_aff, dz_aff, ds_aff);
        double az_aff = 1.0, as_aff = 1.0;
        for (int j = 0; j < nb; ++j) {
            az_aff = std::min(az_aff, detail::max_step(sol.multiplier[j], dz_aff[j], tau));
            as_aff = std::min(as_aff, detail::max_step(sol.slack[j], ds_aff[j], tau));
        }
        double mu_aff = 0;
        for (int j = 0; j < nb; ++j)
            mu_aff += ((sol.multiplier[j] + az_aff * dz_aff[j]).array() *
                       (sol.slack[j] + as_aff * ds_aff[j]).array())
                          .sum();
        mu_aff = std::max(mu_aff / total_dim, 0.0);
        double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-10, 1.0);

        // corrector
        newton(sigma * mu, true, dy, dz, ds);
        double az = 1.0, as = 1.0;
        for (int j = 0; j < nb; ++j) {
            az = std::min(az, detail::max_step(sol.multiplier[j], dz[j], tau));
            as = std::min(as, detail::max_step(sol.slack[j], ds[j], tau));
        }

        for (int k = 0; k < m; ++k) sol.y[k] += as * dy[k];
        for (int j = 0; j < nb; ++j) {
            sol.multiplier[j] = detail::sym(sol.multiplier[j] + az * dz[j]);
            sol.slack[j] = detail::sym(sol.slack[j] + as * ds[j]);
            if (prob.complex_structured.size() && prob.complex_structured[j]) {
                detail::project_complex_structure(sol.multiplier[j]);
                detail::project_complex_structure(sol.slack[j]);
            }
        }

        if (std::max(az, as) < 1e-4)
            ++consecutive_tiny_steps;
        else
            consecutive_tiny_steps = 0;
        if (consecutive_tiny_steps >= 3) {
            sol.status = SolverStatus::stalled;
            break;
        }
    }

    if (sol.status != SolverStatus::stalled) sol.status = SolverStatus::max_iterations;
    residuals(rp, rd);
    sol.primal_residual = 0;
    for (double v : rp) sol.primal_residual = std::max(sol.primal_residual, std::abs(v));
    sol.primal_residual /= 1.0 + g_norm;
    sol.dual_residual = 0;
    for (const auto& r : rd) sol.dual_residual = std::max(sol.dual_residual, r.cwiseAbs().maxCoeff());
    sol.dual_residual /= 1.0 + c_norm;
    if (sol.gap <= 1e3 * settings.gap_tol && sol.primal_residual <= 1e3 * settings.feas_tol &&
        sol.dual_residual <= 1e3 * settings.feas_tol)
        sol.status = SolverStatus::near_optimal;
    return sol;
}

}  // namespace steerhier::conic
