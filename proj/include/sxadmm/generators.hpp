#ifndef SXADMM_GENERATORS_HPP_
#define SXADMM_GENERATORS_HPP_

#include <Eigen/Eigenvalues>

#include <random>

#include "sxadmm/stacked.hpp"
#include "sxadmm/structure.hpp"
#include "sxadmm/types.hpp"

namespace sxadmm {

enum class Category {
    Cascade,
    Full,
    Sparse,
    LowerTriangular,
    Banded,
    LowerBanded,
    Star,
    ExampleUnstructured,
    Fig4Chain,
};

inline const char* category_name(Category c) {
    switch (c) {
        case Category::Cascade: return "cascade";
        case Category::Full: return "full";
        case Category::Sparse: return "sparse";
        case Category::LowerTriangular: return "lower_triangular";
        case Category::Banded: return "banded";
        case Category::LowerBanded: return "lower_banded";
        case Category::Star: return "star";
        case Category::ExampleUnstructured: return "example_unstructured";
        case Category::Fig4Chain: return "fig4_chain";
    }
    return "unknown";
}

struct GenSpec {
    Category category = Category::Full;
    Index x = 10;
    std::uint64_t seed = 0;
    double spectral_radius_target = 0.95;
    Index coupling_rank = 1;
    double sparse_fill = 0.1;
};

namespace gendetail {

inline Matrix randn(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
    return m;
}

inline Vector randn_vec(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector v(n);
    for (Index j = 0; j < n; ++j) v[j] = dist(rng);
    return v;
}

inline double spectral_radius(const Matrix& A) {
    Eigen::EigenSolver<Matrix> es(A, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline void rescale_semiconvergent(Matrix& A, double target) {
    const double r = spectral_radius(A);
    if (r > target) A *= target / r;
}

inline Matrix rank_limited(Index rows, Index cols, Index rank, std::mt19937_64& rng) {
    Matrix m = Matrix::Zero(rows, cols);
    for (Index k = 0; k < rank; ++k)
        m += randn_vec(rows, rng) * randn_vec(cols, rng).transpose();
    return m;
}

/// Block layout used by the random categories: blocks of about three
/// states, one input per block.
inline std::vector<Index> default_blocks(Index x) {
    const Index M = std::max<Index>(2, (x + 2) / 3);
    std::vector<Index> dims(M, x / M);
    for (Index i = 0; i < x % M; ++i) ++dims[i];
    return dims;
}

}  // namespace gendetail

struct GeneratedSystem {
    LtiSystem sys;
    Partition partition;
    GenSpec spec;
};

/// Lower block-banded cascade with block-diagonal inputs and fixed-rank
/// stage coupling; S stages of x_i states and u_i inputs each.
inline GeneratedSystem gen_cascade(Index S, Index xi, Index ui, Index coupling_rank,
                                   std::uint64_t seed, double spectral_radius_target = 0.95) {
    if (S < 2) throw DimensionMismatch("gen_cascade: at least two stages required");
    std::mt19937_64 rng(seed);
    const Index x = S * xi, u = S * ui;

    for (int attempt = 0; attempt < 64; ++attempt) {
        Matrix A = Matrix::Zero(x, x);
        Matrix B = Matrix::Zero(x, u);
        for (Index i = 0; i < S; ++i) {
            A.block(i * xi, i * xi, xi, xi) = gendetail::randn(xi, xi, rng);
            if (i > 0)
                A.block(i * xi, (i - 1) * xi, xi, xi) =
                    gendetail::rank_limited(xi, xi, coupling_rank, rng);
            if (ui > 0) B.block(i * xi, i * ui, xi, ui) = gendetail::randn(xi, ui, rng);
        }
        gendetail::rescale_semiconvergent(A, spectral_radius_target);
        if (check_controllable(A, B) && check_semiconvergent(A)) {
            GeneratedSystem out;
            out.sys = LtiSystem{A, B};
            out.partition.xdims.assign(S, xi);
            out.partition.udims.assign(S, ui);
            out.spec = GenSpec{Category::Cascade, x, seed, spectral_radius_target, coupling_rank};
            return out;
        }
    }
    throw GenerationFailed("gen_cascade: retry budget exhausted");
}

/// Random system in one of the six occupation-pattern categories, with a
/// block partition aligned to the pattern.
inline GeneratedSystem gen_category(const GenSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Index> xdims = gendetail::default_blocks(spec.x);
    const Index M = static_cast<Index>(xdims.size());
    std::vector<Index> udims(M, 1);
    Partition partition{xdims, udims};
    const Index x = spec.x, u = M;

    for (int attempt = 0; attempt < 64; ++attempt) {
        Matrix A = Matrix::Zero(x, x);
        Matrix B = Matrix::Zero(x, u);
        for (Index i = 0; i < M; ++i) {
            const Index xo = partition.x_offset(i);
            A.block(xo, xo, xdims[i], xdims[i]) = gendetail::randn(xdims[i], xdims[i], rng);
            B.block(xo, i, xdims[i], 1) = gendetail::randn_vec(xdims[i], rng);
        }
        for (Index i = 0; i < M; ++i) {
            for (Index j = 0; j < M; ++j) {
                if (i == j) continue;
                bool fill = false;
                switch (spec.category) {
                    case Category::Full: fill = true; break;
                    case Category::Sparse: fill = false; break;  // scalar fill below
                    case Category::LowerTriangular: fill = i > j; break;
                    case Category::Banded: fill = std::abs(i - j) == 1; break;
                    case Category::LowerBanded: fill = i == j + 1; break;
                    case Category::Star: fill = i == 0 || j == 0; break;
                    default:
                        throw DimensionMismatch("gen_category: not a random category");
                }
                if (fill)
                    A.block(partition.x_offset(i), partition.x_offset(j), xdims[i], xdims[j]) =
                        gendetail::randn(xdims[i], xdims[j], rng);
            }
        }
        if (spec.category == Category::Sparse) {
            for (Index r = 0; r < x; ++r) {
                const Index ro = partition.x_owner(r);
                for (Index c = 0; c < x; ++c) {
                    if (partition.x_owner(c) == ro) continue;
                    const bool hit = unif(rng) < spec.sparse_fill;
                    const double val = gendetail::randn_vec(1, rng)[0];
                    if (hit) A(r, c) = val;
                }
            }
        }
        if (spec.category == Category::Full) B = gendetail::randn(x, u, rng);

        gendetail::rescale_semiconvergent(A, spec.spectral_radius_target);
        if (check_controllable(A, B) && check_semiconvergent(A)) {
            GeneratedSystem out;
            out.sys = LtiSystem{A, B};
            out.partition = partition;
            out.spec = spec;
            return out;
        }
    }
    throw GenerationFailed("gen_category: retry budget exhausted");
}

/// The worked two-state example: idempotent full system, uncontrollable,
/// s = 1/2 under the {1,1}/{1,0} partition.
inline GeneratedSystem example_unstructured() {
    GeneratedSystem out;
    out.sys.A = (Matrix(2, 2) << 0.5, 0.5, 0.5, 0.5).finished();
    out.sys.B = (Matrix(2, 1) << 1.0, 1.0).finished();
    out.partition.xdims = {1, 1};
    out.partition.udims = {1, 0};
    out.spec = GenSpec{Category::ExampleUnstructured, 2, 0, 1.0, 0};
    return out;
}

/// Chain family for the complexity growth curves: 2x2 blocks, rank-1
/// superdiagonal couplings (w_i = 1), and a rank-2 closing link into the
/// last block (w_M = 2). Each source feeds exactly one destination.
struct Fig4Chain {
    LtiSystem sys;
    Partition partition;
    std::vector<Index> expected_wdims;
};

inline Fig4Chain gen_fig4_chain(Index M, std::uint64_t seed = 7) {
    if (M < 1) throw DimensionMismatch("gen_fig4_chain: M must be positive");
    std::mt19937_64 rng(seed);
    const Index x = 2 * M, u = M;

    for (int attempt = 0; attempt < 64; ++attempt) {
        Matrix A = Matrix::Zero(x, x);
        Matrix B = Matrix::Zero(x, u);
        for (Index i = 0; i < M; ++i) {
            A.block(2 * i, 2 * i, 2, 2) = gendetail::randn(2, 2, rng);
            B.block(2 * i, i, 2, 1) = gendetail::randn_vec(2, rng);
            if (i + 1 < M) A.block(2 * i, 2 * (i + 1), 2, 2) = gendetail::rank_limited(2, 2, 1, rng);
        }
        if (M > 1) A.block(2 * (M - 1), 0, 2, 2) = gendetail::randn(2, 2, rng);
        gendetail::rescale_semiconvergent(A, 0.95);
        if (check_controllable(A, B) && check_semiconvergent(A)) {
            Fig4Chain out;
            out.sys = LtiSystem{A, B};
            out.partition.xdims.assign(M, 2);
            out.partition.udims.assign(M, 1);
            if (M == 1) {
                out.expected_wdims = {0};
            } else {
                out.expected_wdims.assign(M - 1, 1);
                out.expected_wdims.push_back(2);
            }
            return out;
        }
    }
    throw GenerationFailed("gen_fig4_chain: retry budget exhausted");
}

/// Wraps a system into the tracking problem used by the studies: unit state
/// weights, 0.1 input weights, references from a perturbed simulated
/// trajectory, and optional symmetric boxes sized to keep that trajectory
/// feasible.
struct WrapOptions {
    Index horizon = 8;
    bool box_constrained = true;
    double box_margin = 2.0;
    double input_scale = 0.5;
    double ref_noise = 0.1;
};

inline MpcProblem make_tracking_problem(const LtiSystem& sys, std::uint64_t seed,
                                        const WrapOptions& opts = {}) {
    std::mt19937_64 rng(seed);
    const Index x = sys.state_dim(), u = sys.input_dim();
    MpcProblem p;
    p.system = sys;
    p.horizon = opts.horizon;
    p.Q = Matrix::Identity(x, x);
    p.R = 0.1 * Matrix::Identity(u, u);
    p.x1 = gendetail::randn_vec(x, rng);

    std::vector<Vector> us;
    for (Index k = 0; k < opts.horizon; ++k)
        us.push_back(opts.input_scale * gendetail::randn_vec(u, rng));
    Trajectory sim = simulate(sys, p.x1, us);

    for (Index k = 0; k < opts.horizon; ++k) {
        p.x_refs.push_back(sim.xs[k + 1] + opts.ref_noise * gendetail::randn_vec(x, rng));
        p.u_refs.push_back(sim.us[k] + opts.ref_noise * gendetail::randn_vec(u, rng));
    }

    if (opts.box_constrained) {
        double bx = 0, bu = 0;
        for (const auto& xs : sim.xs) bx = std::max(bx, xs.lpNorm<Eigen::Infinity>());
        for (const auto& uk : sim.us) bu = std::max(bu, uk.lpNorm<Eigen::Infinity>());
        bx += opts.box_margin;
        bu += opts.box_margin;
        p.state_set = ConstraintSet::box(Vector::Constant(x, -bx), Vector::Constant(x, bx));
        p.input_set = ConstraintSet::box(Vector::Constant(u, -bu), Vector::Constant(u, bu));
    }
    return p;
}

}  // namespace sxadmm

#endif  // SXADMM_GENERATORS_HPP_
