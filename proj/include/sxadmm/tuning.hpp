#ifndef SXADMM_TUNING_HPP_
#define SXADMM_TUNING_HPP_

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sxadmm/stacked.hpp"

namespace sxadmm {

/// Orthonormal null space basis of a dynamics matrix C_i.
struct NullBasis {
    Matrix Z;  // y_i by (y_i - N x_i)
};

inline NullBasis null_space_basis(const Matrix& C, double rank_tol = 1e-10) {
    const Index rows = C.rows();
    Vector sv;
    Matrix V;
    if (std::min(C.rows(), C.cols()) <= 32) {
        Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeFullV);
        sv = svd.singularValues();
        V = svd.matrixV();
    } else {
        Eigen::BDCSVD<Matrix> svd(C, Eigen::ComputeFullV);
        sv = svd.singularValues();
        V = svd.matrixV();
    }
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    Index rank = 0;
    for (Index k = 0; k < sv.size(); ++k)
        if (sv(k) > rank_tol * smax) ++rank;
    if (rank < rows)
        throw RankDefect("null_space_basis: dynamics matrix is numerically row rank deficient");
    return NullBasis{V.rightCols(C.cols() - rows)};
}

/// Smallest/largest eigenvalue of the projected Hessian Z' Qcal Z and the
/// resulting optimal penalty. rho* is independent of beta.
struct PenaltyEntry {
    Index subsystem = 0;
    double eig_min = 0;
    double eig_max = 0;
    double rho_star = 0;
    bool positive_definite = false;
};

struct PenaltyReport {
    std::vector<PenaltyEntry> entries;
    double fallback_rho = 1.0;

    /// Per-subsystem penalties: rho* where defined, fallback elsewhere.
    Vector rho_vector() const {
        Vector r(static_cast<Index>(entries.size()));
        for (std::size_t i = 0; i < entries.size(); ++i)
            r[static_cast<Index>(i)] = entries[i].positive_definite ? entries[i].rho_star
                                                                    : fallback_rho;
        return r;
    }
};

inline std::pair<double, double> projected_hessian_extremes(const Matrix& Qcal, const Matrix& Z) {
    const Matrix H = Z.transpose() * Qcal * Z;
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

inline double optimal_rho(const Matrix& Qcal, const Matrix& Z, double pd_tol = 1e-12) {
    auto [emin, emax] = projected_hessian_extremes(Qcal, Z);
    if (emin <= pd_tol)
        throw NotPositiveDefinite("optimal_rho: projected Hessian is not positive definite");
    return std::sqrt(emin * emax);
}

/// Spectral norm of (Z'(Qcal/rho + I)Z)^{-1} - I/2, the worst-case
/// contraction factor driving the optimal penalty choice. Used as the
/// validation oracle: a log sweep over rho attains its minimum at rho*.
inline double contraction_norm(double rho, const Matrix& Qcal, const Matrix& Z) {
    if (!(rho > 0)) throw DimensionMismatch("contraction_norm: rho must be positive");
    const Index n = Z.cols();
    const Matrix H = Z.transpose() * (Qcal / rho) * Z + Matrix::Identity(n, n);
    const Matrix Mtilde = H.ldlt().solve(Matrix::Identity(n, n)) - 0.5 * Matrix::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Mtilde + Mtilde.transpose()));
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Computes the per-subsystem penalty report for a stacked problem.
inline PenaltyReport tune_penalties(const PartitionedProblem& pp, double fallback_rho = 1.0,
                                    double pd_tol = 1e-12) {
    PenaltyReport report;
    report.fallback_rho = fallback_rho;
    for (Index i = 0; i < pp.M; ++i) {
        const auto& sub = pp.subsystems[i];
        PenaltyEntry e;
        e.subsystem = i;
        const NullBasis nb = null_space_basis(sub.C_dense());
        auto [emin, emax] = projected_hessian_extremes(sub.Qcal_dense(), nb.Z);
        e.eig_min = emin;
        e.eig_max = emax;
        e.positive_definite = emin > pd_tol;
        e.rho_star = e.positive_definite ? std::sqrt(emin * emax) : fallback_rho;
        report.entries.push_back(e);
    }
    return report;
}

}  // namespace sxadmm

#endif  // SXADMM_TUNING_HPP_
