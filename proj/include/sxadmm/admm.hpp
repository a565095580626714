#ifndef SXADMM_ADMM_HPP_
#define SXADMM_ADMM_HPP_

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>

#include "sxadmm/stacked.hpp"

namespace sxadmm {

struct AdmmConfig {
    Vector rho;                  // per-subsystem penalties, length M
    double beta = 0.5;           // balance between the zeta and eps copies
    int max_iters = 10000;
    double tol_primal = 1e-8;
    double tol_dual = 1e-8;
    double penalty_scale = 1.0;  // multiplier applied to every rho_i
    bool record_step_residuals = false;
    int trace_stride = 1;
    std::optional<double> dist_target;  // stop once dist vs reference falls below
    double ops_per_iter = std::numeric_limits<double>::quiet_NaN();  // fills cum_ops

    Vector effective_rho(Index M) const {
        if (rho.size() != M)
            throw DimensionMismatch("AdmmConfig: rho must have one entry per subsystem");
        for (Index i = 0; i < M; ++i)
            if (!(rho[i] > 0)) throw DimensionMismatch("AdmmConfig: rho entries must be positive");
        if (!(penalty_scale > 0))
            throw DimensionMismatch("AdmmConfig: penalty_scale must be positive");
        return rho * penalty_scale;
    }

    static AdmmConfig uniform(Index M, double rho_value) {
        AdmmConfig cfg;
        cfg.rho = Vector::Constant(M, rho_value);
        return cfg;
    }
};

struct AdmmState {
    Vector y, zeta, eps, lambda_zeta, lambda_eps;
    int iter = 0;

    static AdmmState zero(Index y_dim) {
        AdmmState s;
        s.y = Vector::Zero(y_dim);
        s.zeta = Vector::Zero(y_dim);
        s.eps = Vector::Zero(y_dim);
        s.lambda_zeta = Vector::Zero(y_dim);
        s.lambda_eps = Vector::Zero(y_dim);
        return s;
    }
};

struct IterTrace {
    int iter = 0;
    double r_zeta = 0;
    double r_eps = 0;
    double objective = 0;
    double dist = std::numeric_limits<double>::quiet_NaN();
    double cum_ops = std::numeric_limits<double>::quiet_NaN();
    double dyn_residual = std::numeric_limits<double>::quiet_NaN();       // after step 2.1
    double coupling_residual = std::numeric_limits<double>::quiet_NaN();  // after step 2.3
    double zeta_violation = std::numeric_limits<double>::quiet_NaN();     // after step 2.2
};

enum class SolveStatus { Converged, MaxIters, DistTargetReached };

struct Solution {
    Trajectory traj;
    Vector y;
    SolveStatus status = SolveStatus::MaxIters;
    int iters = 0;
    std::vector<IterTrace> trace;
    std::vector<std::string> warnings;
    AdmmState state;

    bool converged() const { return status != SolveStatus::MaxIters; }
};

/// Element-wise clipping onto a box/unbounded set.
inline Vector project_box(const Vector& z, const ConstraintSet& set) { return set.project(z); }

/// Squared relative distance of Eq.-style trajectories to a reference.
inline double dist(const Vector& xu, const Vector& xu_ref) {
    const double denom = xu_ref.squaredNorm();
    if (denom == 0) throw ZeroReference("dist: reference trajectory is zero");
    return (xu - xu_ref).squaredNorm() / denom;
}

/// Flattens the decision variables (x^2..x^{N+1}, u^1..u^N) of a trajectory.
inline Vector flatten_decision(const Trajectory& traj) {
    Index n = 0;
    for (std::size_t k = 1; k < traj.xs.size(); ++k) n += traj.xs[k].size();
    for (const auto& uk : traj.us) n += uk.size();
    Vector out(n);
    Index o = 0;
    for (std::size_t k = 1; k < traj.xs.size(); ++k) {
        out.segment(o, traj.xs[k].size()) = traj.xs[k];
        o += traj.xs[k].size();
    }
    for (const auto& uk : traj.us) {
        out.segment(o, uk.size()) = uk;
        o += uk.size();
    }
    return out;
}

inline double dist(const Trajectory& traj, const Trajectory& ref) {
    return dist(flatten_decision(traj), flatten_decision(ref));
}

/// Cached closed-form solver for one subsystem's equality-constrained QP
/// (step 2.1). Uses P = rho (Qcal + rho I)^{-1} and a block-Cholesky
/// factorization of the banded Schur complement C P C^T.
class SubsystemKkt {
  public:
    SubsystemKkt(const SubsystemData& sub, double rho) : sub_(&sub), rho_(rho) {
        const Index x = sub.x, u = sub.u;
        Px_ = rho * (sub.Qx + rho * Matrix::Identity(x, x)).ldlt().solve(Matrix::Identity(x, x));
        if (u > 0)
            Pu_ = rho * (sub.Ru + rho * Matrix::Identity(u, u)).ldlt().solve(Matrix::Identity(u, u));
        nq_ = -sub.q / rho;

        const Matrix WWt = sub.w > 0 ? Matrix(sub.W * sub.W.transpose()) : Matrix::Zero(x, x);
        const Matrix BPuBt = u > 0 ? Matrix(sub.B * Pu_ * sub.B.transpose()) : Matrix::Zero(x, x);
        const Matrix S_first = BPuBt + WWt + Px_;
        const Matrix S_diag = S_first + sub.A * Px_ * sub.A.transpose();
        const Matrix S_sub = -(sub.A * Px_);

        Ldiag_.reserve(sub.N);
        Lsub_.reserve(sub.N - 1);
        Matrix prev;
        for (Index s = 0; s < sub.N; ++s) {
            Matrix Ss = (s == 0) ? S_first : S_diag;
            if (s > 0) {
                // L_{s,s-1} = S_sub L_{s-1,s-1}^{-T}
                Matrix Lsub = prev.triangularView<Eigen::Lower>()
                                  .solve(S_sub.transpose())
                                  .transpose();
                Ss -= Lsub * Lsub.transpose();
                Lsub_.push_back(std::move(Lsub));
            }
            Eigen::LLT<Matrix> llt(Ss);
            if (llt.info() != Eigen::Success)
                throw Error("SubsystemKkt: Schur complement factorization failed");
            prev = llt.matrixL();
            Ldiag_.push_back(prev);
        }
    }

    double rho() const { return rho_; }
    const Vector& neg_q_over_rho() const { return nq_; }

    /// Applies Mcal to v and adds the Ncal c term, i.e. solves
    ///   min 1/2 y' Qcal y - rho v' y  s.t.  C y = c  (up to constants).
    Vector apply(const Vector& v) const {
        const auto& sub = *sub_;
        Vector t = apply_P(v);
        Vector r = sub.apply_C(t) - sub.c;

        // block forward/backward substitution
        const Index x = sub.x;
        Vector z(sub.N * x);
        for (Index s = 0; s < sub.N; ++s) {
            Vector rs = r.segment(s * x, x);
            if (s > 0) rs.noalias() -= Lsub_[s - 1] * z.segment((s - 1) * x, x);
            z.segment(s * x, x) = Ldiag_[s].triangularView<Eigen::Lower>().solve(rs);
        }
        Vector mu(sub.N * x);
        for (Index s = sub.N - 1; s >= 0; --s) {
            Vector zs = z.segment(s * x, x);
            if (s < sub.N - 1)
                zs.noalias() -= Lsub_[s].transpose() * mu.segment((s + 1) * x, x);
            mu.segment(s * x, x) =
                Ldiag_[s].transpose().triangularView<Eigen::Upper>().solve(zs);
        }

        return t - apply_P(sub.apply_Ct(mu));
    }

    Vector apply_P(const Vector& v) const {
        const auto& sub = *sub_;
        Vector t(v.size());
        for (Index s = 0; s < sub.N; ++s) {
            if (sub.u > 0)
                t.segment(sub.u_offset(s), sub.u).noalias() = Pu_ * v.segment(sub.u_offset(s), sub.u);
            if (sub.w > 0) t.segment(sub.w_offset(s), sub.w) = v.segment(sub.w_offset(s), sub.w);
            t.segment(sub.x_offset(s), sub.x).noalias() = Px_ * v.segment(sub.x_offset(s), sub.x);
        }
        return t;
    }

  private:
    const SubsystemData* sub_;
    double rho_;
    Matrix Px_, Pu_;
    Vector nq_;
    std::vector<Matrix> Ldiag_;  // lower Cholesky factors per stage
    std::vector<Matrix> Lsub_;   // sub-diagonal factors
};

/// Weighted affine projection onto D eps = d (step 2.3), performed
/// blockwise over the time-sorted coordinates. Under out-1 each time block
/// splits further into independent per-destination solves.
class CouplingProjector {
  public:
    CouplingProjector(const PartitionedProblem& pp, const Vector& rho_eff, double beta)
        : pp_(&pp) {
        const double one_minus_beta = 1.0 - beta;
        if (!(one_minus_beta > 0))
            throw InvalidBeta("coupling projection undefined for beta = 1");
        einv_.resize(pp.M);
        for (Index i = 0; i < pp.M; ++i) einv_[i] = 1.0 / (rho_eff[i] * one_minus_beta);

        for (const auto& rows : pp.coupling) {
            Dest dst;
            dst.dest = rows.dest;
            dst.wi = rows.Ar.rows();
            Index wo = 0;
            for (Index i = 0; i < rows.dest; ++i) wo += pp.dec.wdims[i];
            dst.w_offset = wo;
            for (Index j : rows.sources) {
                Src src;
                src.block = j;
                src.x_offset = pp.partition.x_offset(j);
                src.u_offset = pp.partition.u_offset(j);
                src.Aj = rows.Ar.middleCols(src.x_offset, pp.partition.xdims[j]);
                src.Bj = pp.partition.udims[j] > 0
                             ? Matrix(rows.Br.middleCols(src.u_offset, pp.partition.udims[j]))
                             : Matrix(dst.wi, 0);
                dst.sources.push_back(std::move(src));
            }
            dests_.push_back(std::move(dst));
        }

        split_ = pp.dec.out1;
        factorize(true);
        factorize(false);
    }

    /// eps = argmin |eps - z|_E  s.t.  D eps = d, with z given in original
    /// (subsystem-major) coordinates.
    Vector project(const Vector& z) const {
        Vector zbar = pp_->permute(z);
        for (Index b = 0; b < pp_->N; ++b) project_block(b, zbar);
        return pp_->unpermute(zbar);
    }

    double residual_inf(const Vector& eps) const {
        Vector ebar = pp_->permute(eps);
        double r = 0;
        for (Index b = 0; b < pp_->N; ++b) {
            Vector rb = block_residual(b, ebar);
            if (rb.size() > 0) r = std::max(r, rb.lpNorm<Eigen::Infinity>());
        }
        return r;
    }

    bool split_per_destination() const { return split_; }

  private:
    struct Src {
        Index block, x_offset, u_offset;
        Matrix Aj, Bj;  // w_i by x_j, w_i by u_j
    };
    struct Dest {
        Index dest, wi, w_offset;
        std::vector<Src> sources;
        Eigen::LLT<Matrix> llt_first, llt_rest;  // used when split per destination
    };

    Vector block_residual(Index b, const Vector& zbar) const {
        const Index co = pp_->time_block_offset(b);
        const Index xcols = (b == 0) ? 0 : pp_->x;
        Vector rb = Vector::Zero(pp_->w);
        Index wr = 0;
        for (const auto& dst : dests_) {
            auto r = rb.segment(wr, dst.wi);
            for (const auto& src : dst.sources) {
                if (b > 0 && src.Aj.cols() > 0)
                    r.noalias() += src.Aj * zbar.segment(co + src.x_offset, src.Aj.cols());
                if (src.Bj.cols() > 0)
                    r.noalias() += src.Bj * zbar.segment(co + xcols + src.u_offset, src.Bj.cols());
            }
            r -= zbar.segment(co + xcols + pp_->u + dst.w_offset, dst.wi);
            if (b == 0) r -= pp_->d.segment(dst_d_offset(dst), dst.wi);
            wr += dst.wi;
        }
        return rb;
    }

    Index dst_d_offset(const Dest& dst) const {
        Index o = 0;
        for (const auto& other : dests_) {
            if (other.dest == dst.dest) break;
            o += other.wi;
        }
        return o;
    }

    void project_block(Index b, Vector& zbar) const {
        if (dests_.empty()) return;
        Vector rb = block_residual(b, zbar);
        Vector mu(pp_->w);
        if (split_) {
            Index wr = 0;
            for (const auto& dst : dests_) {
                const auto& llt = (b == 0) ? dst.llt_first : dst.llt_rest;
                mu.segment(wr, dst.wi) = llt.solve(rb.segment(wr, dst.wi));
                wr += dst.wi;
            }
        } else {
            mu = (b == 0) ? llt_first_.solve(rb) : llt_rest_.solve(rb);
        }

        const Index co = pp_->time_block_offset(b);
        const Index xcols = (b == 0) ? 0 : pp_->x;
        Index wr = 0;
        for (const auto& dst : dests_) {
            const auto mi = mu.segment(wr, dst.wi);
            for (const auto& src : dst.sources) {
                const double e = einv_[src.block];
                if (b > 0 && src.Aj.cols() > 0)
                    zbar.segment(co + src.x_offset, src.Aj.cols()).noalias() -=
                        e * (src.Aj.transpose() * mi);
                if (src.Bj.cols() > 0)
                    zbar.segment(co + xcols + src.u_offset, src.Bj.cols()).noalias() -=
                        e * (src.Bj.transpose() * mi);
            }
            zbar.segment(co + xcols + pp_->u + dst.w_offset, dst.wi).noalias() +=
                einv_[dst.dest] * mi;
            wr += dst.wi;
        }
    }

    void factorize(bool first_block) {
        if (dests_.empty()) return;
        if (split_) {
            for (auto& dst : dests_) {
                Matrix G = einv_[dst.dest] * Matrix::Identity(dst.wi, dst.wi);
                for (const auto& src : dst.sources) {
                    if (!first_block && src.Aj.cols() > 0)
                        G.noalias() += einv_[src.block] * (src.Aj * src.Aj.transpose());
                    if (src.Bj.cols() > 0)
                        G.noalias() += einv_[src.block] * (src.Bj * src.Bj.transpose());
                }
                auto& llt = first_block ? dst.llt_first : dst.llt_rest;
                llt.compute(G);
                if (llt.info() != Eigen::Success)
                    throw SingularCoupling("coupling block is numerically singular");
            }
            return;
        }
        Matrix G = Matrix::Zero(pp_->w, pp_->w);
        Index r1 = 0;
        for (const auto& d1 : dests_) {
            Index r2 = 0;
            for (const auto& d2 : dests_) {
                Matrix block = Matrix::Zero(d1.wi, d2.wi);
                for (const auto& s1 : d1.sources)
                    for (const auto& s2 : d2.sources) {
                        if (s1.block != s2.block) continue;
                        if (!first_block && s1.Aj.cols() > 0)
                            block.noalias() += einv_[s1.block] * (s1.Aj * s2.Aj.transpose());
                        if (s1.Bj.cols() > 0)
                            block.noalias() += einv_[s1.block] * (s1.Bj * s2.Bj.transpose());
                    }
                if (d1.dest == d2.dest)
                    block += einv_[d1.dest] * Matrix::Identity(d1.wi, d1.wi);
                G.block(r1, r2, d1.wi, d2.wi) = block;
                r2 += d2.wi;
            }
            r1 += d1.wi;
        }
        auto& llt = first_block ? llt_first_ : llt_rest_;
        llt.compute(G);
        if (llt.info() != Eigen::Success)
            throw SingularCoupling("coupling matrix D E^{-1} D^T is numerically singular");
    }

    const PartitionedProblem* pp_;
    std::vector<double> einv_;  // 1/(rho_i (1-beta)) per subsystem
    std::vector<Dest> dests_;
    bool split_ = false;
    Eigen::LLT<Matrix> llt_first_, llt_rest_;
};

namespace detail {

struct TraceHelper {
    const PartitionedProblem* pp;
    const Trajectory* ref = nullptr;
    Vector ref_flat;
    std::vector<Index> xu_index;  // y components that carry x/u values

    TraceHelper(const PartitionedProblem& p, const Trajectory* reference) : pp(&p) {
        if (reference) {
            ref = reference;
            ref_flat = flatten_decision(*reference);
            if (ref_flat.squaredNorm() == 0)
                throw ZeroReference("solver reference trajectory is zero");
        }
    }

    double dist_of(const Vector& y) const {
        if (!ref) return std::numeric_limits<double>::quiet_NaN();
        return dist(extract_trajectory(*pp, y), *ref);
    }
};

}  // namespace detail

/// Largest violation of the per-subsystem set constraints by a zeta iterate.
inline double zeta_bound_violation(const PartitionedProblem& pp, const Vector& zeta) {
    double v = 0;
    for (Index i = 0; i < pp.M; ++i) {
        const auto& sub = pp.subsystems[i];
        const auto zi = zeta.segment(pp.y_offset(i), sub.y_dim());
        if (sub.box_like) {
            for (Index j = 0; j < zi.size(); ++j) {
                if (std::isfinite(sub.lower[j])) v = std::max(v, sub.lower[j] - zi[j]);
                if (std::isfinite(sub.upper[j])) v = std::max(v, zi[j] - sub.upper[j]);
            }
        } else {
            v = std::max(v, (sub.project_Y(zi) - zi).lpNorm<Eigen::Infinity>());
        }
    }
    return v;
}

/// Conventional ADMM for the unpartitioned problem (M = 1, no coupling).
inline Solution solve_conventional(const PartitionedProblem& pp, const AdmmConfig& cfg,
                                   const AdmmState* init = nullptr,
                                   const Trajectory* reference = nullptr) {
    if (pp.M != 1 || pp.w != 0)
        throw DimensionMismatch("solve_conventional requires an M = 1 problem without coupling");
    const Vector rho = cfg.effective_rho(1);

    Solution sol;
    if (cfg.beta != 1.0)
        sol.warnings.push_back("beta is ignored by conventional ADMM");

    const auto& sub = pp.subsystems[0];
    SubsystemKkt kkt(sub, rho[0]);
    detail::TraceHelper th(pp, reference);

    AdmmState st = init ? *init : AdmmState::zero(pp.y_dim());
    Vector zeta_prev = st.zeta;

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        st.y = kkt.apply(kkt.neg_q_over_rho() + st.zeta + st.lambda_zeta);
        zeta_prev.swap(st.zeta);
        st.zeta = sub.project_Y(st.y - st.lambda_zeta);
        st.lambda_zeta -= st.y - st.zeta;
        st.iter = iter;

        const double r_primal = (st.y - st.zeta).norm();
        const double r_dual = rho[0] * (st.zeta - zeta_prev).norm();
        const bool traced = (iter % cfg.trace_stride == 0) || iter == cfg.max_iters;
        double d = std::numeric_limits<double>::quiet_NaN();
        if (traced || cfg.dist_target) d = th.dist_of(st.y);
        if (traced) {
            IterTrace t;
            t.iter = iter;
            t.r_zeta = r_primal;
            t.r_eps = 0;
            t.objective = stacked_objective(pp, st.y);
            t.dist = d;
            t.cum_ops = cfg.ops_per_iter * iter;
            if (cfg.record_step_residuals) {
                t.dyn_residual = (sub.apply_C(st.y) - sub.c).lpNorm<Eigen::Infinity>();
                t.zeta_violation = zeta_bound_violation(pp, st.zeta);
            }
            sol.trace.push_back(t);
        }

        if (cfg.dist_target && d <= *cfg.dist_target) {
            sol.status = SolveStatus::DistTargetReached;
            sol.iters = iter;
            break;
        }
        if (r_primal <= cfg.tol_primal && r_dual <= cfg.tol_dual) {
            sol.status = SolveStatus::Converged;
            sol.iters = iter;
            break;
        }
        sol.iters = iter;
    }

    sol.y = st.y;
    sol.state = st;
    sol.traj = extract_trajectory(pp, st.y);
    return sol;
}

/// Structure-exploiting ADMM (Algorithm with per-subsystem penalties rho_i
/// and balance beta). Reduces to the conventional method for M = 1, beta = 1.
inline Solution solve_structured(const PartitionedProblem& pp, const AdmmConfig& cfg,
                                 const AdmmState* init = nullptr,
                                 const Trajectory* reference = nullptr) {
    const Vector rho = cfg.effective_rho(pp.M);
    if (!(cfg.beta > 0.0) || cfg.beta > 1.0)
        throw InvalidBeta("beta must lie in (0, 1]");
    if (cfg.beta == 1.0 && pp.w > 0)
        throw InvalidBeta(
            "beta = 1 with M > 1 drops the coupling constraint; the algorithm is unsuited");

    Solution sol;
    const Index ydim = pp.y_dim();
    std::vector<SubsystemKkt> kkts;
    kkts.reserve(pp.M);
    for (Index i = 0; i < pp.M; ++i) kkts.emplace_back(pp.subsystems[i], rho[i]);

    std::optional<CouplingProjector> coupling;
    if (pp.w > 0) coupling.emplace(pp, rho, cfg.beta);

    detail::TraceHelper th(pp, reference);
    AdmmState st = init ? *init : AdmmState::zero(ydim);
    Vector zeta_prev = st.zeta, eps_prev = st.eps;
    // Without coupling the eps copy constrains nothing and the method is the
    // conventional splitting applied per subsystem.
    const double beta = pp.w > 0 ? cfg.beta : 1.0;
    const double comp = 1.0 - beta;

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        // step 2.1: per-subsystem equality-constrained QP
        for (Index i = 0; i < pp.M; ++i) {
            const Index o = pp.y_offset(i);
            const Index n = pp.subsystems[i].y_dim();
            Vector v;
            if (beta == 1.0) {
                v = kkts[i].neg_q_over_rho() + st.zeta.segment(o, n) +
                    st.lambda_zeta.segment(o, n);
            } else {
                v = kkts[i].neg_q_over_rho() +
                    beta * (st.zeta.segment(o, n) + st.lambda_zeta.segment(o, n)) +
                    comp * (st.eps.segment(o, n) + st.lambda_eps.segment(o, n));
            }
            st.y.segment(o, n) = kkts[i].apply(v);
        }

        // step 2.2: per-subsystem set projection
        zeta_prev.swap(st.zeta);
        for (Index i = 0; i < pp.M; ++i) {
            const Index o = pp.y_offset(i);
            const Index n = pp.subsystems[i].y_dim();
            st.zeta.segment(o, n) =
                pp.subsystems[i].project_Y(st.y.segment(o, n) - st.lambda_zeta.segment(o, n));
        }

        // step 2.3: coupling projection in time-sorted blocks
        eps_prev.swap(st.eps);
        if (coupling)
            st.eps = coupling->project(st.y - st.lambda_eps);
        else
            st.eps = st.y - st.lambda_eps;

        // step 2.4: dual updates
        st.lambda_zeta -= st.y - st.zeta;
        st.lambda_eps -= st.y - st.eps;
        st.iter = iter;

        const double r_zeta = (st.y - st.zeta).norm();
        const double r_eps = coupling ? (st.y - st.eps).norm() : 0.0;
        double r_dual = 0;
        for (Index i = 0; i < pp.M; ++i) {
            const Index o = pp.y_offset(i);
            const Index n = pp.subsystems[i].y_dim();
            r_dual += rho[i] * rho[i] *
                      ((st.zeta.segment(o, n) - zeta_prev.segment(o, n)).squaredNorm() +
                       (st.eps.segment(o, n) - eps_prev.segment(o, n)).squaredNorm());
        }
        r_dual = std::sqrt(r_dual);

        const bool traced = (iter % cfg.trace_stride == 0) || iter == cfg.max_iters;
        double d = std::numeric_limits<double>::quiet_NaN();
        if (traced || cfg.dist_target) d = th.dist_of(st.y);
        if (traced) {
            IterTrace t;
            t.iter = iter;
            t.r_zeta = r_zeta;
            t.r_eps = r_eps;
            t.objective = stacked_objective(pp, st.y);
            t.dist = d;
            t.cum_ops = cfg.ops_per_iter * iter;
            if (cfg.record_step_residuals) {
                double dyn = 0;
                for (Index i = 0; i < pp.M; ++i) {
                    const auto& sub = pp.subsystems[i];
                    dyn = std::max(dyn, (sub.apply_C(st.y.segment(pp.y_offset(i), sub.y_dim())) -
                                         sub.c)
                                            .lpNorm<Eigen::Infinity>());
                }
                t.dyn_residual = dyn;
                t.coupling_residual = coupling ? coupling->residual_inf(st.eps) : 0.0;
                t.zeta_violation = zeta_bound_violation(pp, st.zeta);
            }
            sol.trace.push_back(t);
        }

        if (cfg.dist_target && d <= *cfg.dist_target) {
            sol.status = SolveStatus::DistTargetReached;
            sol.iters = iter;
            break;
        }
        if (r_zeta <= cfg.tol_primal && r_eps <= cfg.tol_primal && r_dual <= cfg.tol_dual) {
            sol.status = SolveStatus::Converged;
            sol.iters = iter;
            break;
        }
        sol.iters = iter;
    }

    sol.y = st.y;
    sol.state = st;
    sol.traj = extract_trajectory(pp, st.y);
    return sol;
}

/// KKT residual of the original QP at a candidate trajectory, using the
/// M = 1 stacking. Equality multipliers come from a least-squares fit over
/// the components not at a bound; bound multipliers must carry the right
/// sign. Returns the largest violation.
inline double kkt_residual(const PartitionedProblem& pp_m1, const Trajectory& traj,
                           double active_tol = 1e-7) {
    if (pp_m1.M != 1) throw DimensionMismatch("kkt_residual expects an M = 1 stacking");
    const auto& sub = pp_m1.subsystems[0];
    const Vector y = lift_trajectory(pp_m1, traj);
    const Vector g = sub.apply_Q(y) + sub.q;

    std::vector<Index> free_idx;
    std::vector<int> bound(y.size(), 0);  // -1 lower, +1 upper, 0 free
    for (Index j = 0; j < y.size(); ++j) {
        const double lo = sub.box_like ? sub.lower[j] : -kInf;
        const double hi = sub.box_like ? sub.upper[j] : kInf;
        const double span = std::max(1.0, std::abs(y[j]));
        if (std::isfinite(lo) && y[j] <= lo + active_tol * span) bound[j] = -1;
        else if (std::isfinite(hi) && y[j] >= hi - active_tol * span) bound[j] = +1;
        else free_idx.push_back(j);
    }

    const Matrix C = sub.C_dense();
    Matrix CtF(free_idx.size(), C.rows());
    Vector gF(free_idx.size());
    for (std::size_t k = 0; k < free_idx.size(); ++k) {
        CtF.row(k) = C.col(free_idx[k]).transpose();
        gF[k] = g[free_idx[k]];
    }
    Vector nu = CtF.colPivHouseholderQr().solve(-gF);
    const Vector resid = g + C.transpose() * nu;

    double r = 0;
    for (Index j = 0; j < y.size(); ++j) {
        if (bound[j] == 0) r = std::max(r, std::abs(resid[j]));
        else if (bound[j] < 0) r = std::max(r, std::max(0.0, -resid[j]));  // mu_lo >= 0
        else r = std::max(r, std::max(0.0, resid[j]));                     // mu_hi >= 0
    }
    r = std::max(r, (sub.apply_C(y) - sub.c).lpNorm<Eigen::Infinity>());
    if (sub.box_like) {
        r = std::max(r, (sub.lower - y).maxCoeff());
        r = std::max(r, (y - sub.upper).maxCoeff());
    }
    return r;
}

}  // namespace sxadmm

#endif  // SXADMM_ADMM_HPP_
