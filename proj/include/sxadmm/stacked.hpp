#ifndef SXADMM_STACKED_HPP_
#define SXADMM_STACKED_HPP_

#include "sxadmm/decomposition.hpp"
#include "sxadmm/types.hpp"

namespace sxadmm {

/// Per-subsystem stacked data for the partitioned QP.
///
/// The stacked variable is y_i = [y_i^1; ...; y_i^N] with stage layout
/// y_i^k = [u_i^k; w_i^k; x_i^{k+1}]. The dynamics matrix C_i is banded with
/// block rows [A_ii, B_ii, W_i, -I]; the first row absorbs A_ii x_i^1 into
/// the right-hand side c_i.
struct SubsystemData {
    Index x = 0, u = 0, w = 0, N = 0;
    Matrix A;       // A_ii
    Matrix B;       // B_ii
    Matrix W;       // virtual input basis, x by w
    Matrix Qx;      // Q_i
    Matrix Ru;      // R_i
    Vector q;       // linear objective term, length y_dim()
    double K = 0;   // constant objective term
    Vector c;       // dynamics right-hand side, length N*x
    Vector lower, upper;  // bounds over y_i (+-inf where free), empty for custom sets
    ConstraintSet xset, uset;
    bool box_like = true;  // bounds vectors valid (box or unbounded sets)

    Index stage_dim() const { return u + w + x; }
    Index y_dim() const { return N * stage_dim(); }

    Index u_offset(Index stage) const { return stage * stage_dim(); }
    Index w_offset(Index stage) const { return stage * stage_dim() + u; }
    Index x_offset(Index stage) const { return stage * stage_dim() + u + w; }

    /// C_i y_i, evaluated stage-wise from the banded structure.
    Vector apply_C(const Vector& y) const {
        Vector r = Vector::Zero(N * x);
        for (Index s = 0; s < N; ++s) {
            auto rs = r.segment(s * x, x);
            if (u > 0) rs.noalias() += B * y.segment(u_offset(s), u);
            if (w > 0) rs.noalias() += W * y.segment(w_offset(s), w);
            rs -= y.segment(x_offset(s), x);
            if (s > 0) rs.noalias() += A * y.segment(x_offset(s - 1), x);
        }
        return r;
    }

    /// C_i^T mu.
    Vector apply_Ct(const Vector& mu) const {
        Vector g = Vector::Zero(y_dim());
        for (Index s = 0; s < N; ++s) {
            const auto ms = mu.segment(s * x, x);
            if (u > 0) g.segment(u_offset(s), u).noalias() += B.transpose() * ms;
            if (w > 0) g.segment(w_offset(s), w).noalias() += W.transpose() * ms;
            g.segment(x_offset(s), x) -= ms;
            if (s > 0) g.segment(x_offset(s - 1), x).noalias() += A.transpose() * ms;
        }
        return g;
    }

    /// Qcal_i y_i (block-diagonal per stage, zero weight on w components).
    Vector apply_Q(const Vector& y) const {
        Vector g = Vector::Zero(y_dim());
        for (Index s = 0; s < N; ++s) {
            if (u > 0) g.segment(u_offset(s), u).noalias() = Ru * y.segment(u_offset(s), u);
            g.segment(x_offset(s), x).noalias() = Qx * y.segment(x_offset(s), x);
        }
        return g;
    }

    Vector project_Y(const Vector& z) const {
        if (box_like) return z.cwiseMax(lower).cwiseMin(upper);
        Vector out = z;
        for (Index s = 0; s < N; ++s) {
            if (u > 0) out.segment(u_offset(s), u) = uset.project(z.segment(u_offset(s), u));
            out.segment(x_offset(s), x) = xset.project(z.segment(x_offset(s), x));
        }
        return out;
    }

    Matrix C_dense() const {
        Matrix C = Matrix::Zero(N * x, y_dim());
        for (Index s = 0; s < N; ++s) {
            if (u > 0) C.block(s * x, u_offset(s), x, u) = B;
            if (w > 0) C.block(s * x, w_offset(s), x, w) = W;
            C.block(s * x, x_offset(s), x, x) = -Matrix::Identity(x, x);
            if (s > 0) C.block(s * x, x_offset(s - 1), x, x) = A;
        }
        return C;
    }

    Matrix Qcal_dense() const {
        Matrix Qc = Matrix::Zero(y_dim(), y_dim());
        for (Index s = 0; s < N; ++s) {
            if (u > 0) Qc.block(u_offset(s), u_offset(s), u, u) = Ru;
            Qc.block(x_offset(s), x_offset(s), x, x) = Qx;
        }
        return Qc;
    }
};

/// One destination subsystem's reduced coupling rows
/// Ar x^k + Br u^k - w_i^k = 0 with Ar = W_i^T Aext_i, Br = W_i^T Bext_i.
struct CouplingRows {
    Index dest = 0;
    Matrix Ar;  // w_i by x
    Matrix Br;  // w_i by u
    std::vector<Index> sources;  // blocks j whose states/inputs enter these rows
};

/// Stacked form of the partitioned MPC problem.
struct PartitionedProblem {
    Index M = 0, N = 0;
    Index x = 0, u = 0, w = 0;
    Partition partition;
    Decomposition dec;
    Vector x1;
    std::vector<SubsystemData> subsystems;
    std::vector<CouplingRows> coupling;  // only destinations with w_i > 0
    Vector d;                            // length N*w, time-major
    std::vector<Index> perm;             // time sort: ybar[p] = y[perm[p]]

    Index y_dim() const {
        Index n = 0;
        for (const auto& s : subsystems) n += s.y_dim();
        return n;
    }
    Index coupling_rows() const { return N * w; }

    Index y_offset(Index i) const {
        Index o = 0;
        for (Index j = 0; j < i; ++j) o += subsystems[j].y_dim();
        return o;
    }

    /// Subsystem owning each y component.
    std::vector<Index> owners() const {
        std::vector<Index> own(static_cast<std::size_t>(y_dim()));
        Index o = 0;
        for (Index i = 0; i < M; ++i)
            for (Index j = 0; j < subsystems[i].y_dim(); ++j) own[o++] = i;
        return own;
    }

    Vector permute(const Vector& y) const {
        Vector ybar(y.size());
        for (Index p = 0; p < y.size(); ++p) ybar[p] = y[perm[p]];
        return ybar;
    }
    Vector unpermute(const Vector& ybar) const {
        Vector y(ybar.size());
        for (Index p = 0; p < ybar.size(); ++p) y[perm[p]] = ybar[p];
        return y;
    }

    /// Offsets of [x, u, w] runs inside time block b of the permuted vector.
    /// Block 0 is [u^1; w^1], blocks 1..N-1 are [x; u; w], block N is x^{N+1}.
    Index time_block_offset(Index b) const {
        if (b == 0) return 0;
        return (u + w) + (b - 1) * (x + u + w);
    }
    Index time_block_size(Index b) const {
        if (b == 0) return u + w;
        if (b == N) return x;
        return x + u + w;
    }

    Matrix D_dense() const {
        Matrix Dbar = Matrix::Zero(coupling_rows(), y_dim());
        for (Index b = 0; b < N; ++b) {
            const Index ro = b * w;
            const Index co = time_block_offset(b);
            const Index xcols = (b == 0) ? 0 : x;
            Index wr = 0;
            for (const auto& rows : coupling) {
                const Index wi = rows.Ar.rows();
                if (b > 0) Dbar.block(ro + wr, co, wi, x) = rows.Ar;
                Dbar.block(ro + wr, co + xcols, wi, u) = rows.Br;
                // -I on the destination's own w columns
                Index wo = 0;
                for (Index i = 0; i < rows.dest; ++i) wo += dec.wdims[i];
                Dbar.block(ro + wr, co + xcols + u + wo, wi, wi) =
                    -Matrix::Identity(wi, wi);
                wr += wi;
            }
        }
        Matrix D = Matrix::Zero(coupling_rows(), y_dim());
        for (Index p = 0; p < y_dim(); ++p) D.col(perm[p]) = Dbar.col(p);
        return D;
    }
};

namespace detail {

inline std::vector<Index> build_time_sort(const PartitionedProblem& pp) {
    std::vector<Index> perm;
    perm.reserve(static_cast<std::size_t>(pp.y_dim()));
    std::vector<Index> yoff(pp.M);
    for (Index i = 0; i < pp.M; ++i) yoff[i] = pp.y_offset(i);

    auto push_run = [&](Index i, Index start, Index len) {
        for (Index j = 0; j < len; ++j) perm.push_back(yoff[i] + start + j);
    };

    // block 0: [u^1; w^1]
    for (Index i = 0; i < pp.M; ++i) push_run(i, pp.subsystems[i].u_offset(0), pp.subsystems[i].u);
    for (Index i = 0; i < pp.M; ++i) push_run(i, pp.subsystems[i].w_offset(0), pp.subsystems[i].w);
    // blocks 1..N-1: [x^{b+1}; u^{b+1}; w^{b+1}]
    for (Index b = 1; b < pp.N; ++b) {
        for (Index i = 0; i < pp.M; ++i)
            push_run(i, pp.subsystems[i].x_offset(b - 1), pp.subsystems[i].x);
        for (Index i = 0; i < pp.M; ++i)
            push_run(i, pp.subsystems[i].u_offset(b), pp.subsystems[i].u);
        for (Index i = 0; i < pp.M; ++i)
            push_run(i, pp.subsystems[i].w_offset(b), pp.subsystems[i].w);
    }
    // block N: x^{N+1}
    for (Index i = 0; i < pp.M; ++i)
        push_run(i, pp.subsystems[i].x_offset(pp.N - 1), pp.subsystems[i].x);
    return perm;
}

}  // namespace detail

/// Builds the stacked partitioned problem from an admissible partition and
/// its decomposition.
inline PartitionedProblem build_stacked(const MpcProblem& problem, const Partition& partition,
                                        const Decomposition& dec) {
    auto report = validate_admissibility(problem, partition);
    if (!report.admissible) throw NotAdmissible(report.reason);

    PartitionedProblem pp;
    pp.M = partition.blocks();
    pp.N = problem.horizon;
    pp.x = problem.system.state_dim();
    pp.u = problem.system.input_dim();
    pp.w = dec.total_w();
    pp.partition = partition;
    pp.dec = dec;
    pp.x1 = problem.x1;

    for (Index i = 0; i < pp.M; ++i) {
        SubsystemData sub;
        sub.N = pp.N;
        sub.x = partition.xdims[i];
        sub.u = partition.udims[i];
        sub.w = dec.wdims[i];
        const Index xo = partition.x_offset(i);
        const Index uo = partition.u_offset(i);
        sub.A = problem.system.A.block(xo, xo, sub.x, sub.x);
        sub.B = sub.u > 0 ? problem.system.B.block(xo, uo, sub.x, sub.u) : Matrix(sub.x, 0);
        sub.W = dec.W[i];
        sub.Qx = report.Q_blocks[i];
        sub.Ru = report.R_blocks[i];
        sub.xset = report.state_sets[i];
        sub.uset = report.input_sets[i];

        // objective terms: q = -Qcal r_y, K = 1/2 r_y' Qcal r_y
        sub.q = Vector::Zero(sub.y_dim());
        sub.K = 0;
        for (Index s = 0; s < pp.N; ++s) {
            const Vector rx = problem.x_refs[s].segment(xo, sub.x);
            sub.q.segment(sub.x_offset(s), sub.x) = -(sub.Qx * rx);
            sub.K += 0.5 * rx.dot(sub.Qx * rx);
            if (sub.u > 0) {
                const Vector ru = problem.u_refs[s].segment(uo, sub.u);
                sub.q.segment(sub.u_offset(s), sub.u) = -(sub.Ru * ru);
                sub.K += 0.5 * ru.dot(sub.Ru * ru);
            }
        }

        sub.c = Vector::Zero(pp.N * sub.x);
        sub.c.head(sub.x) = -(sub.A * problem.x1.segment(xo, sub.x));

        sub.box_like = sub.xset.kind() != ConstraintSet::Kind::Custom &&
                       sub.uset.kind() != ConstraintSet::Kind::Custom;
        if (sub.box_like) {
            sub.lower = Vector::Constant(sub.y_dim(), -kInf);
            sub.upper = Vector::Constant(sub.y_dim(), kInf);
            for (Index s = 0; s < pp.N; ++s) {
                if (sub.u > 0 && sub.uset.kind() == ConstraintSet::Kind::Box) {
                    sub.lower.segment(sub.u_offset(s), sub.u) = sub.uset.lower();
                    sub.upper.segment(sub.u_offset(s), sub.u) = sub.uset.upper();
                }
                if (sub.xset.kind() == ConstraintSet::Kind::Box) {
                    sub.lower.segment(sub.x_offset(s), sub.x) = sub.xset.lower();
                    sub.upper.segment(sub.x_offset(s), sub.x) = sub.xset.upper();
                }
            }
        }
        pp.subsystems.push_back(std::move(sub));
    }

    // Reduced coupling rows per destination with w_i > 0.
    for (Index i = 0; i < pp.M; ++i) {
        if (dec.wdims[i] == 0) continue;
        CouplingRows rows;
        rows.dest = i;
        const Index xo = partition.x_offset(i);
        rows.Ar = dec.W[i].transpose() * dec.Aext.middleRows(xo, partition.xdims[i]);
        rows.Br = dec.W[i].transpose() * dec.Bext.middleRows(xo, partition.xdims[i]);
        for (Index j = 0; j < pp.M; ++j) {
            if (j == i) continue;
            const bool a_hit =
                rows.Ar.middleCols(partition.x_offset(j), partition.xdims[j]).cwiseAbs().maxCoeff() != 0.0;
            const bool b_hit =
                partition.udims[j] > 0 &&
                rows.Br.middleCols(partition.u_offset(j), partition.udims[j]).cwiseAbs().maxCoeff() != 0.0;
            if (a_hit || b_hit) rows.sources.push_back(j);
        }
        pp.coupling.push_back(std::move(rows));
    }

    pp.d = Vector::Zero(pp.coupling_rows());
    Index wr = 0;
    for (const auto& rows : pp.coupling) {
        // first time block: Br u^1 - w^1 = -Ar x^1
        pp.d.segment(wr, rows.Ar.rows()) = -(rows.Ar * problem.x1);
        wr += rows.Ar.rows();
    }

    pp.perm = detail::build_time_sort(pp);
    return pp;
}

/// State/input trajectory; xs[0] is the initial state, xs has N+1 entries.
struct Trajectory {
    std::vector<Vector> xs;
    std::vector<Vector> us;
};

/// Lifts a trajectory into the stacked variable, with w_i^k the coordinates
/// of the external flow in the W_i basis.
inline Vector lift_trajectory(const PartitionedProblem& pp, const Trajectory& traj) {
    if (static_cast<Index>(traj.xs.size()) != pp.N + 1 ||
        static_cast<Index>(traj.us.size()) != pp.N)
        throw DimensionMismatch("lift_trajectory: trajectory length mismatch");
    Vector y = Vector::Zero(pp.y_dim());
    for (Index i = 0; i < pp.M; ++i) {
        const auto& sub = pp.subsystems[i];
        const Index xo = pp.partition.x_offset(i);
        const Index uo = pp.partition.u_offset(i);
        const Index yo = pp.y_offset(i);
        for (Index s = 0; s < pp.N; ++s) {
            if (sub.u > 0)
                y.segment(yo + sub.u_offset(s), sub.u) = traj.us[s].segment(uo, sub.u);
            if (sub.w > 0) {
                const Vector v = pp.dec.Aext.middleRows(xo, sub.x) * traj.xs[s] +
                                 pp.dec.Bext.middleRows(xo, sub.x) * traj.us[s];
                y.segment(yo + sub.w_offset(s), sub.w) = sub.W.transpose() * v;
            }
            y.segment(yo + sub.x_offset(s), sub.x) = traj.xs[s + 1].segment(xo, sub.x);
        }
    }
    return y;
}

/// Extracts the trajectory stored in a stacked variable.
inline Trajectory extract_trajectory(const PartitionedProblem& pp, const Vector& y) {
    Trajectory traj;
    traj.xs.assign(static_cast<std::size_t>(pp.N + 1), Vector::Zero(pp.x));
    traj.us.assign(static_cast<std::size_t>(pp.N), Vector::Zero(pp.u));
    traj.xs[0] = pp.x1;
    for (Index i = 0; i < pp.M; ++i) {
        const auto& sub = pp.subsystems[i];
        const Index xo = pp.partition.x_offset(i);
        const Index uo = pp.partition.u_offset(i);
        const Index yo = pp.y_offset(i);
        for (Index s = 0; s < pp.N; ++s) {
            if (sub.u > 0)
                traj.us[s].segment(uo, sub.u) = y.segment(yo + sub.u_offset(s), sub.u);
            traj.xs[s + 1].segment(xo, sub.x) = y.segment(yo + sub.x_offset(s), sub.x);
        }
    }
    return traj;
}

inline double stacked_objective(const PartitionedProblem& pp, const Vector& y) {
    double val = 0;
    for (Index i = 0; i < pp.M; ++i) {
        const auto& sub = pp.subsystems[i];
        const auto yi = y.segment(pp.y_offset(i), sub.y_dim());
        val += 0.5 * yi.dot(sub.apply_Q(yi)) + sub.q.dot(yi) + sub.K;
    }
    return val;
}

inline double mpc_objective(const MpcProblem& problem, const Trajectory& traj) {
    double val = 0;
    for (Index k = 0; k < problem.horizon; ++k) {
        const Vector ex = traj.xs[k + 1] - problem.x_refs[k];
        const Vector eu = traj.us[k] - problem.u_refs[k];
        val += 0.5 * ex.dot(problem.Q * ex) + 0.5 * eu.dot(problem.R * eu);
    }
    return val;
}

/// Checks that a lifted trajectory satisfies the stacked dynamics and
/// coupling within tol. Dynamics violations in the input trajectory show up
/// in the C_i residuals.
inline bool verify_equivalence(const MpcProblem& problem, const PartitionedProblem& pp,
                               const Trajectory& traj, double tol = 1e-9) {
    (void)problem;
    const Vector y = lift_trajectory(pp, traj);
    for (Index i = 0; i < pp.M; ++i) {
        const auto& sub = pp.subsystems[i];
        const Vector r = sub.apply_C(y.segment(pp.y_offset(i), sub.y_dim())) - sub.c;
        if (r.lpNorm<Eigen::Infinity>() > tol) return false;
    }
    if (pp.w > 0) {
        const Vector r = pp.D_dense() * y - pp.d;
        if (r.lpNorm<Eigen::Infinity>() > tol) return false;
    }
    return true;
}

/// Simulates the system forward from x1 under the given inputs.
inline Trajectory simulate(const LtiSystem& sys, const Vector& x1,
                           const std::vector<Vector>& us) {
    Trajectory traj;
    traj.xs.push_back(x1);
    traj.us = us;
    for (const auto& uk : us) traj.xs.push_back(sys.A * traj.xs.back() + sys.B * uk);
    return traj;
}

}  // namespace sxadmm

#endif  // SXADMM_STACKED_HPP_
