#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

namespace steerhier {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using complexd = std::complex<double>;

// Subsystem ordering is fixed throughout: for dims {d0, d1, ..., dk} the
// composite index is i0*(d1*...*dk) + i1*(d2*...*dk) + ... + ik, i.e. the
// last factor varies fastest (row-major Kronecker convention).
inline MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
    MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline MatrixXcd kron_chain(const std::vector<MatrixXcd>& factors) {
    if (factors.empty()) return MatrixXcd::Identity(1, 1);
    MatrixXcd out = factors[0];
    for (size_t i = 1; i < factors.size(); ++i) out = kron(out, factors[i]);
    return out;
}

// Embeds `op` as identity ⊗ ... ⊗ op ⊗ ... ⊗ identity at position `slot`.
inline MatrixXcd embed_at(const MatrixXcd& op, const std::vector<int>& dims, int slot) {
    std::vector<MatrixXcd> factors;
    factors.reserve(dims.size());
    for (size_t i = 0; i < dims.size(); ++i) {
        if (static_cast<int>(i) == slot) {
            if (op.rows() != dims[i]) throw std::invalid_argument("embed_at: operator dimension mismatch");
            factors.push_back(op);
        } else {
            factors.push_back(MatrixXcd::Identity(dims[i], dims[i]));
        }
    }
    return kron_chain(factors);
}

// Partial trace keeping only the subsystem `keep`.
inline MatrixXcd partial_trace_keep_one(const MatrixXcd& m, const std::vector<int>& dims, int keep) {
    int total = 1;
    for (int d : dims) total *= d;
    if (m.rows() != total || m.cols() != total) throw std::invalid_argument("partial_trace: dimension mismatch");
    int before = 1, after = 1;
    for (int i = 0; i < keep; ++i) before *= dims[i];
    for (size_t i = keep + 1; i < dims.size(); ++i) after *= dims[i];
    const int dk = dims[keep];
    MatrixXcd out = MatrixXcd::Zero(dk, dk);
    for (int b = 0; b < before; ++b)
        for (int a = 0; a < after; ++a)
            for (int i = 0; i < dk; ++i)
                for (int j = 0; j < dk; ++j) out(i, j) += m((b * dk + i) * after + a, (b * dk + j) * after + a);
    return out;
}

// Traces out the single subsystem `drop`, keeping all others in order.
inline MatrixXcd partial_trace_drop_one(const MatrixXcd& m, const std::vector<int>& dims, int drop) {
    int total = 1;
    for (int d : dims) total *= d;
    if (m.rows() != total || m.cols() != total) throw std::invalid_argument("partial_trace: dimension mismatch");
    int before = 1, after = 1;
    for (int i = 0; i < drop; ++i) before *= dims[i];
    for (size_t i = drop + 1; i < dims.size(); ++i) after *= dims[i];
    const int dk = dims[drop];
    MatrixXcd out = MatrixXcd::Zero(before * after, before * after);
    for (int b = 0; b < before; ++b)
        for (int bp = 0; bp < before; ++bp)
            for (int a = 0; a < after; ++a)
                for (int ap = 0; ap < after; ++ap) {
                    complexd acc = 0.0;
                    for (int i = 0; i < dk; ++i) acc += m((b * dk + i) * after + a, (bp * dk + i) * after + ap);
                    out(b * after + a, bp * after + ap) = acc;
                }
    return out;
}

inline double hermiticity_residual(const MatrixXcd& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

inline double min_eigenvalue(const MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es((m + m.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es((m + m.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

inline double operator_norm(const MatrixXcd& m) {
    Eigen::JacobiSVD<MatrixXcd> svd(m);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

// ---- seeded random constructions (deterministic per seed) ----

inline complexd gaussian_complex(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return {n(rng), n(rng)};
}

inline MatrixXcd ginibre(int rows, int cols, std::mt19937_64& rng) {
    MatrixXcd g(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) g(i, j) = gaussian_complex(rng);
    return g;
}

inline VectorXcd random_pure_state(int dim, std::mt19937_64& rng) {
    VectorXcd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = gaussian_complex(rng);
    return v / v.norm();
}

// Haar-style random unitary: QR of a Ginibre matrix with the R diagonal
// phases absorbed so the result is unique.
inline MatrixXcd random_unitary(int dim, std::mt19937_64& rng) {
    MatrixXcd g = ginibre(dim, dim, rng);
    Eigen::HouseholderQR<MatrixXcd> qr(g);
    MatrixXcd q = qr.householderQ();
    MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i) {
        complexd d = r(i, i);
        complexd phase = std::abs(d) > 0 ? d / std::abs(d) : complexd(1.0, 0.0);
        q.col(i) *= phase;
    }
    return q;
}

inline MatrixXcd random_density_matrix(int dim, std::mt19937_64& rng) {
    MatrixXcd g = ginibre(dim, dim, rng);
    MatrixXcd rho = g * g.adjoint();
    return rho / rho.trace().real();
}

// Projective measurement with `outcomes` effects: eigenspaces of a random
// Hermitian matrix, bucketed into contiguous groups as evenly as possible.
// Requires dim >= outcomes so that no effect is the zero projector.
inline std::vector<MatrixXcd> random_projective_measurement(int dim, int outcomes, std::mt19937_64& rng) {
    if (dim < outcomes)
        throw std::invalid_argument("random_projective_measurement: dimension smaller than outcome count");
    MatrixXcd g = ginibre(dim, dim, rng);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es((g + g.adjoint()) / 2.0);
    const MatrixXcd& vecs = es.eigenvectors();
    std::vector<MatrixXcd> proj(outcomes);
    int base = dim / outcomes, extra = dim % outcomes, col = 0;
    for (int a = 0; a < outcomes; ++a) {
        int width = base + (a < extra ? 1 : 0);
        MatrixXcd va = vecs.middleCols(col, width);
        proj[a] = va * va.adjoint();
        col += width;
    }
    return proj;
}

// Random POVM: normalized Wishart parts, E_a = M^{-1/2} W_a M^{-1/2}.
inline std::vector<MatrixXcd> random_povm(int dim, int outcomes, std::mt19937_64& rng) {
    std::vector<MatrixXcd> w(outcomes);
    MatrixXcd total = MatrixXcd::Zero(dim, dim);
    for (int a = 0; a < outcomes; ++a) {
        MatrixXcd g = ginibre(dim, dim, rng);
        w[a] = g * g.adjoint();
        total += w[a];
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(total);
    MatrixXcd inv_sqrt = es.operatorInverseSqrt();
    for (auto& e : w) e = inv_sqrt * e * inv_sqrt;
    return w;
}

inline MatrixXcd matrix_sqrt(const MatrixXcd& psd) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es((psd + psd.adjoint()) / 2.0);
    VectorXd vals = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * vals.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

inline MatrixXcd random_hermitian(int dim, std::mt19937_64& rng) {
    MatrixXcd g = ginibre(dim, dim, rng);
    return (g + g.adjoint()) / 2.0;
}

}  // namespace steerhier
