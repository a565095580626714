#ifndef SXADMM_TYPES_HPP_
#define SXADMM_TYPES_HPP_

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sxadmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct NotAdmissible : Error { using Error::Error; };
struct InvalidBeta : Error { using Error::Error; };
struct SingularCoupling : Error { using Error::Error; };
struct NotPositiveDefinite : Error { using Error::Error; };
struct RankDefect : Error { using Error::Error; };
struct ZeroReference : Error { using Error::Error; };
struct ZeroScale : Error { using Error::Error; };
struct GenerationFailed : Error { using Error::Error; };
struct OracleNotConverged : Error { using Error::Error; };
struct InvalidUseCase : Error { using Error::Error; };
struct FileFormatError : Error { using Error::Error; };

/// Discrete-time LTI system x^{k+1} = A x^k + B u^k.
struct LtiSystem {
    Matrix A;
    Matrix B;

    Index state_dim() const { return A.rows(); }
    Index input_dim() const { return B.cols(); }

    void validate() const {
        if (A.rows() < 1 || A.rows() != A.cols())
            throw DimensionMismatch("LtiSystem: A must be square with at least one state");
        if (B.rows() != A.rows())
            throw DimensionMismatch("LtiSystem: B must have as many rows as A");
    }
};

/// Contiguous grouping of states and inputs into M blocks.
struct Partition {
    std::vector<Index> xdims;
    std::vector<Index> udims;

    Index blocks() const { return static_cast<Index>(xdims.size()); }

    Index total_x() const {
        Index n = 0;
        for (Index d : xdims) n += d;
        return n;
    }
    Index total_u() const {
        Index n = 0;
        for (Index d : udims) n += d;
        return n;
    }

    Index x_offset(Index i) const {
        Index o = 0;
        for (Index j = 0; j < i; ++j) o += xdims[j];
        return o;
    }
    Index u_offset(Index i) const {
        Index o = 0;
        for (Index j = 0; j < i; ++j) o += udims[j];
        return o;
    }

    /// Subsystem owning state column j (contiguous grouping).
    Index x_owner(Index j) const {
        Index o = 0;
        for (Index i = 0; i < blocks(); ++i) {
            o += xdims[i];
            if (j < o) return i;
        }
        throw DimensionMismatch("Partition: state index out of range");
    }
    Index u_owner(Index j) const {
        Index o = 0;
        for (Index i = 0; i < blocks(); ++i) {
            o += udims[i];
            if (j < o) return i;
        }
        throw DimensionMismatch("Partition: input index out of range");
    }

    void validate() const {
        if (xdims.empty() || xdims.size() != udims.size())
            throw DimensionMismatch("Partition: xdims/udims must be non-empty and equally sized");
        for (Index d : xdims)
            if (d < 1) throw DimensionMismatch("Partition: state blocks need at least one state");
        for (Index d : udims)
            if (d < 0) throw DimensionMismatch("Partition: negative input block size");
    }

    void validate_for(const LtiSystem& sys) const {
        validate();
        if (total_x() != sys.state_dim() || total_u() != sys.input_dim())
            throw DimensionMismatch("Partition: block sizes do not sum to system dimensions");
    }

    static Partition trivial(const LtiSystem& sys) {
        return Partition{{sys.state_dim()}, {sys.input_dim()}};
    }
};

/// Projectable constraint set for states or inputs.
///
/// Custom sets must declare per-subsystem factors to be usable with a
/// nontrivial partition; the library cannot verify separability of an
/// arbitrary projection.
class ConstraintSet {
  public:
    enum class Kind { Unbounded, Box, Custom };
    using Projection = std::function<Vector(const Vector&)>;

    ConstraintSet() : kind_(Kind::Unbounded) {}

    static ConstraintSet unbounded() { return ConstraintSet(); }

    static ConstraintSet box(Vector lower, Vector upper) {
        if (lower.size() != upper.size())
            throw DimensionMismatch("ConstraintSet::box: bound sizes differ");
        for (Index j = 0; j < lower.size(); ++j)
            if (lower[j] > upper[j])
                throw DimensionMismatch("ConstraintSet::box: lower bound exceeds upper bound");
        ConstraintSet s;
        s.kind_ = Kind::Box;
        s.lower_ = std::move(lower);
        s.upper_ = std::move(upper);
        return s;
    }

    static ConstraintSet custom(Projection proj, std::vector<ConstraintSet> factors = {}) {
        ConstraintSet s;
        s.kind_ = Kind::Custom;
        s.project_ = std::move(proj);
        s.factors_ = std::move(factors);
        return s;
    }

    Kind kind() const { return kind_; }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    bool has_factors() const { return !factors_.empty(); }
    const std::vector<ConstraintSet>& factors() const { return factors_; }

    Vector project(const Vector& z) const {
        switch (kind_) {
            case Kind::Unbounded:
                return z;
            case Kind::Box:
                if (z.size() != lower_.size())
                    throw DimensionMismatch("ConstraintSet::project: size mismatch");
                return z.cwiseMax(lower_).cwiseMin(upper_);
            case Kind::Custom:
                return project_(z);
        }
        return z;  // unreachable
    }

    bool contains(const Vector& z, double tol = 0.0) const {
        if (kind_ == Kind::Box) {
            return (z.array() >= lower_.array() - tol).all() &&
                   (z.array() <= upper_.array() + tol).all();
        }
        return (project(z) - z).lpNorm<Eigen::Infinity>() <= tol;
    }

    /// Restriction of a box/unbounded set to a contiguous coordinate range.
    ConstraintSet slice(Index offset, Index len) const {
        switch (kind_) {
            case Kind::Unbounded:
                return unbounded();
            case Kind::Box:
                return box(lower_.segment(offset, len), upper_.segment(offset, len));
            case Kind::Custom:
                throw NotAdmissible("custom constraint sets cannot be sliced; declare factors");
        }
        return unbounded();
    }

  private:
    Kind kind_;
    Vector lower_, upper_;
    Projection project_;
    std::vector<ConstraintSet> factors_;
};

/// Finite-horizon tracking problem
///   min sum_k 1/2|x^{k+1}-r_x^k|_Q^2 + 1/2|u^k-r_u^k|_R^2
///   s.t. x^{k+1} = A x^k + B u^k,  (x^{k+1},u^k) in X x U.
struct MpcProblem {
    LtiSystem system;
    Index horizon = 0;               // N
    Matrix Q, R;                     // stage weights, symmetric PSD
    std::vector<Vector> x_refs;      // N entries, reference for x^{k+1}
    std::vector<Vector> u_refs;      // N entries, reference for u^k
    Vector x1;                       // initial state
    ConstraintSet state_set, input_set;

    void validate(double sym_tol = 1e-12, double psd_tol = -1e-10) const {
        system.validate();
        const Index x = system.state_dim();
        const Index u = system.input_dim();
        if (horizon < 1) throw DimensionMismatch("MpcProblem: horizon must be positive");
        if (Q.rows() != x || Q.cols() != x) throw DimensionMismatch("MpcProblem: Q must be x by x");
        if (R.rows() != u || R.cols() != u) throw DimensionMismatch("MpcProblem: R must be u by u");
        if (x1.size() != x) throw DimensionMismatch("MpcProblem: x1 has wrong size");
        if (static_cast<Index>(x_refs.size()) != horizon ||
            static_cast<Index>(u_refs.size()) != horizon)
            throw DimensionMismatch("MpcProblem: reference sequences must have length N");
        for (const auto& r : x_refs)
            if (r.size() != x) throw DimensionMismatch("MpcProblem: state reference size");
        for (const auto& r : u_refs)
            if (r.size() != u) throw DimensionMismatch("MpcProblem: input reference size");

        check_symmetric_psd(Q, "Q", sym_tol, psd_tol);
        check_symmetric_psd(R, "R", sym_tol, psd_tol);
    }

  private:
    static void check_symmetric_psd(const Matrix& W, const char* name, double sym_tol,
                                    double psd_tol) {
        if (W.size() == 0) return;
        const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
        if ((W - W.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale)
            throw DimensionMismatch(std::string("MpcProblem: ") + name + " is not symmetric");
        Eigen::SelfAdjointEigenSolver<Matrix> es(W);
        if (es.eigenvalues().minCoeff() < psd_tol)
            throw DimensionMismatch(std::string("MpcProblem: ") + name +
                                    " is not positive semidefinite");
    }
};

/// Result of checking a partition against a problem's weights and sets.
struct AdmissibilityReport {
    struct Violation {
        char matrix;  // 'Q' or 'R'
        Index row, col;
        double value;
    };

    bool admissible = false;
    std::string reason;
    std::vector<Violation> violations;
    std::vector<Matrix> Q_blocks, R_blocks;
    std::vector<ConstraintSet> state_sets, input_sets;
};

namespace detail {

inline void collect_offblock_violations(const Matrix& W, const std::vector<Index>& dims, char tag,
                                        double tol, std::vector<AdmissibilityReport::Violation>& out) {
    if (W.size() == 0) return;
    const double thresh = tol * std::max(1.0, W.cwiseAbs().maxCoeff());
    Index r0 = 0;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        Index c0 = 0;
        for (std::size_t j = 0; j < dims.size(); ++j) {
            if (i != j) {
                for (Index r = 0; r < dims[i]; ++r)
                    for (Index c = 0; c < dims[j]; ++c)
                        if (std::abs(W(r0 + r, c0 + c)) > thresh)
                            out.push_back({tag, r0 + r, c0 + c, W(r0 + r, c0 + c)});
            }
            c0 += dims[j];
        }
        r0 += dims[i];
    }
}

inline bool split_set(const ConstraintSet& set, const std::vector<Index>& dims, Index total,
                      std::vector<ConstraintSet>& out, std::string& why) {
    out.clear();
    switch (set.kind()) {
        case ConstraintSet::Kind::Unbounded:
            out.assign(dims.size(), ConstraintSet::unbounded());
            return true;
        case ConstraintSet::Kind::Box: {
            if (set.lower().size() != total) {
                why = "box bound dimension does not match problem";
                return false;
            }
            Index o = 0;
            for (Index d : dims) {
                out.push_back(d > 0 ? set.slice(o, d) : ConstraintSet::unbounded());
                o += d;
            }
            return true;
        }
        case ConstraintSet::Kind::Custom:
            if (!set.has_factors()) {
                why = "custom constraint set declares no per-subsystem factors";
                return false;
            }
            if (set.factors().size() != dims.size()) {
                why = "custom constraint set factor count does not match partition";
                return false;
            }
            out = set.factors();
            return true;
    }
    return false;
}

}  // namespace detail

/// Checks Assumption-style admissibility: Q, R block-diagonal under the
/// partition and constraint sets separable. Off-block entries are compared
/// against 1e-12 times the largest weight magnitude.
inline AdmissibilityReport validate_admissibility(const MpcProblem& problem,
                                                  const Partition& partition,
                                                  double block_tol = 1e-12) {
    problem.validate();
    partition.validate_for(problem.system);

    AdmissibilityReport report;
    detail::collect_offblock_violations(problem.Q, partition.xdims, 'Q', block_tol,
                                        report.violations);
    detail::collect_offblock_violations(problem.R, partition.udims, 'R', block_tol,
                                        report.violations);
    if (!report.violations.empty()) {
        std::ostringstream os;
        os << "weights are not block-diagonal under the partition; first violation at ";
        const auto& v = report.violations.front();
        os << v.matrix << "(" << v.row << "," << v.col << ") = " << v.value;
        report.reason = os.str();
        return report;
    }

    std::string why;
    if (!detail::split_set(problem.state_set, partition.xdims, problem.system.state_dim(),
                           report.state_sets, why)) {
        report.reason = "state set not separable: " + why;
        return report;
    }
    if (!detail::split_set(problem.input_set, partition.udims, problem.system.input_dim(),
                           report.input_sets, why)) {
        report.reason = "input set not separable: " + why;
        return report;
    }

    for (Index i = 0; i < partition.blocks(); ++i) {
        const Index xo = partition.x_offset(i);
        const Index uo = partition.u_offset(i);
        report.Q_blocks.push_back(problem.Q.block(xo, xo, partition.xdims[i], partition.xdims[i]));
        report.R_blocks.push_back(
            partition.udims[i] > 0
                ? problem.R.block(uo, uo, partition.udims[i], partition.udims[i])
                : Matrix(0, 0));
    }
    report.admissible = true;
    return report;
}

}  // namespace sxadmm

#endif  // SXADMM_TYPES_HPP_
