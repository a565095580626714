#ifndef SXADMM_STRUCTURE_HPP_
#define SXADMM_STRUCTURE_HPP_

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sxadmm/types.hpp"

namespace sxadmm {

/// Impulse-driven flow of the difference system. phi keeps a prefix of the
/// sequence for inspection; the link usage accumulates over all simulated
/// steps regardless of the prefix cap.
struct FlowSequence {
    std::vector<Matrix> phi;  // stored prefix of Phi^k = [A diag(dx^k), B diag(du^k)]
    Index truncation_k = 0;
    bool converged = false;
};

struct LinkUsage {
    Matrix gamma;  // x by (x+u), element-wise L2 norm of the flow over time
};

struct StructureReport {
    Vector s_rows;
    double s = std::numeric_limits<double>::quiet_NaN();
    bool exists = false;
    bool semiconvergent = false;
    bool controllable = false;
    bool structured = false;  // annotation only: s above the 3/4 threshold

    static constexpr double kStructuredThreshold = 0.75;
};

/// True iff lim A^k exists: all eigenvalues strictly inside the unit circle
/// except possibly a semisimple eigenvalue 1.
inline bool check_semiconvergent(const Matrix& A, double tol = 1e-9) {
    Eigen::EigenSolver<Matrix> es(A);
    if (es.info() != Eigen::Success) return false;
    const auto& ev = es.eigenvalues();
    Index near_one = 0;
    for (Index k = 0; k < ev.size(); ++k) {
        const double mag = std::abs(ev[k]);
        if (mag < 1.0 - tol) continue;
        if (std::abs(ev[k] - std::complex<double>(1.0, 0.0)) <= tol) {
            ++near_one;
            continue;
        }
        return false;  // on/outside the unit circle but not at 1
    }
    if (near_one == 0) return true;
    // eigenvalue 1 must be semisimple: geometric multiplicity equals algebraic
    const Matrix AmI = A - Matrix::Identity(A.rows(), A.cols());
    Eigen::JacobiSVD<Matrix> svd(AmI);
    const double smax = svd.singularValues()(0);
    Index rank = 0;
    for (Index k = 0; k < svd.singularValues().size(); ++k)
        if (svd.singularValues()(k) > tol * std::max(1.0, smax)) ++rank;
    const Index geometric = A.rows() - rank;
    return geometric >= near_one;
}

/// Numerical rank test of [B, AB, ..., A^{x-1}B].
inline bool check_controllable(const Matrix& A, const Matrix& B, double tol = 1e-9) {
    const Index x = A.rows();
    if (B.cols() == 0) return x == 0;
    Matrix ctrb(x, x * B.cols());
    Matrix AkB = B;
    for (Index k = 0; k < x; ++k) {
        ctrb.middleCols(k * B.cols(), B.cols()) = AkB;
        if (k + 1 < x) AkB = A * AkB;
    }
    Eigen::JacobiSVD<Matrix> svd(ctrb);
    const double smax = svd.singularValues()(0);
    if (smax == 0) return false;
    Index rank = 0;
    for (Index k = 0; k < svd.singularValues().size(); ++k)
        if (svd.singularValues()(k) > tol * smax) ++rank;
    return rank == x;
}

/// Simulates the difference system under a unit input impulse and
/// accumulates the link usage. impulse_weights rescales the impulse per
/// input channel (all-ones by default); transformed systems use it to keep
/// the experiment covariant with input scalings.
inline std::pair<FlowSequence, LinkUsage> link_usage(const LtiSystem& sys, Index max_k = 10000,
                                                     double decay_tol = 1e-12,
                                                     const Vector& impulse_weights = Vector(),
                                                     Index phi_prefix_cap = 128) {
    sys.validate();
    const Index x = sys.state_dim();
    const Index u = sys.input_dim();
    Vector w = impulse_weights.size() > 0 ? impulse_weights : Vector::Ones(u);
    if (w.size() != u) throw DimensionMismatch("link_usage: impulse weight size mismatch");

    FlowSequence flow;
    Matrix gamma_sq = Matrix::Zero(x, x + u);

    Vector dx = Vector::Zero(x);
    for (Index k = 0; k <= max_k; ++k) {
        // du^0 = w, du^1 = -w, zero afterwards
        Vector du = Vector::Zero(u);
        if (k == 0) du = w;
        else if (k == 1) du = -w;

        // Phi^k = [A diag(dx), B diag(du)]
        for (Index j = 0; j < x; ++j)
            gamma_sq.col(j) += (sys.A.col(j) * dx[j]).cwiseAbs2();
        for (Index j = 0; j < u; ++j)
            gamma_sq.col(x + j) += (sys.B.col(j) * du[j]).cwiseAbs2();
        if (static_cast<Index>(flow.phi.size()) < phi_prefix_cap) {
            Matrix phi(x, x + u);
            phi.leftCols(x) = sys.A * dx.asDiagonal();
            phi.rightCols(u) = sys.B * du.asDiagonal();
            flow.phi.push_back(std::move(phi));
        }

        flow.truncation_k = k;
        if (k >= 2 && dx.lpNorm<Eigen::Infinity>() < decay_tol) {
            flow.converged = true;
            break;
        }
        dx = sys.A * dx + sys.B * du;
    }
    return {std::move(flow), LinkUsage{gamma_sq.cwiseSqrt()}};
}

/// Row-wise ratio of mean internal to total link usage under a partition.
/// Rows without external elements (M = 1) count as fully internal. If some
/// row of gamma is all zero the measure is undefined and exists is false.
inline StructureReport separation_tendency(const LinkUsage& usage, const Partition& partition) {
    const Matrix& G = usage.gamma;
    const Index x = partition.total_x();
    const Index u = partition.total_u();
    if (G.rows() != x || G.cols() != x + u)
        throw DimensionMismatch("separation_tendency: gamma does not match partition dims");

    StructureReport report;
    report.s_rows = Vector::Zero(x);
    report.exists = true;

    for (Index r = 0; r < x; ++r) {
        const Index owner = partition.x_owner(r);
        double int_sum = 0, ext_sum = 0;
        Index n_int = 0, n_ext = 0;
        for (Index c = 0; c < x + u; ++c) {
            const Index col_owner = c < x ? partition.x_owner(c) : partition.u_owner(c - x);
            if (col_owner == owner) {
                int_sum += G(r, c);
                ++n_int;
            } else {
                ext_sum += G(r, c);
                ++n_ext;
            }
        }
        if (int_sum + ext_sum <= 0) {
            report.exists = false;
            continue;
        }
        if (n_ext == 0) {
            report.s_rows[r] = 1.0;  // all flow internal by construction
            continue;
        }
        const double mi = int_sum / n_int;
        const double me = ext_sum / n_ext;
        report.s_rows[r] = mi / (mi + me);
    }
    if (report.exists) {
        report.s = report.s_rows.mean();
        report.structured = report.s >= StructureReport::kStructuredThreshold;
    } else {
        report.s = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

/// Applies [x; u] = T [xbar; ubar] with diagonal T; the returned system
/// evolves the transformed coordinates.
inline LtiSystem diagonal_transform(const LtiSystem& sys, const Vector& T) {
    const Index x = sys.state_dim();
    const Index u = sys.input_dim();
    if (T.size() != x + u) throw DimensionMismatch("diagonal_transform: T has wrong length");
    for (Index j = 0; j < T.size(); ++j)
        if (T[j] == 0) throw ZeroScale("diagonal_transform: zero scale entry");
    const auto Tx = T.head(x);
    const auto Tu = T.tail(u);
    LtiSystem out;
    out.A = Tx.cwiseInverse().asDiagonal() * sys.A * Tx.asDiagonal();
    out.B = Tx.cwiseInverse().asDiagonal() * sys.B * Tu.asDiagonal();
    return out;
}

/// Full structure analysis: existence checks plus link usage and s.
/// The impulse covaries with input scalings through impulse_weights, which
/// realizes the diagonal-transform invariance of s.
inline StructureReport analyze_structure(const LtiSystem& sys, const Partition& partition,
                                         Index max_k = 10000, double decay_tol = 1e-12,
                                         const Vector& impulse_weights = Vector()) {
    auto [flow, usage] = link_usage(sys, max_k, decay_tol, impulse_weights);
    StructureReport report = separation_tendency(usage, partition);
    report.semiconvergent = check_semiconvergent(sys.A);
    report.controllable = check_controllable(sys.A, sys.B);
    if (!flow.converged) report.exists = false;
    return report;
}

}  // namespace sxadmm

#endif  // SXADMM_STRUCTURE_HPP_
