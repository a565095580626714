#include <gtest/gtest.h>

#include <random>

#include "sxadmm/generators.hpp"
#include "sxadmm/structure.hpp"

using namespace sxadmm;

TEST(Semiconvergent, IdentityAndJordan) {
    EXPECT_TRUE(check_semiconvergent(Matrix::Identity(3, 3)));
    EXPECT_TRUE(check_semiconvergent(example_unstructured().sys.A));  // idempotent
    Matrix jordan(2, 2);
    jordan << 1.0, 1.0, 0.0, 1.0;
    EXPECT_FALSE(check_semiconvergent(jordan));
    Matrix neg = Vector::Map((const double[]){0.5, -1.0}, 2).asDiagonal();
    EXPECT_FALSE(check_semiconvergent(neg));
    EXPECT_TRUE(check_semiconvergent(Matrix::Zero(2, 2)));
}

TEST(Controllable, Basics) {
    EXPECT_TRUE(check_controllable(Matrix::Zero(2, 2), Matrix::Identity(2, 2)));
    auto ex = example_unstructured();
    EXPECT_FALSE(check_controllable(ex.sys.A, ex.sys.B));
    auto cascade = gen_cascade(4, 2, 1, 1, 3);
    EXPECT_TRUE(check_controllable(cascade.sys.A, cascade.sys.B));
}

TEST(LinkUsage, ExampleOneExactValues) {
    auto ex = example_unstructured();
    auto [flow, usage] = link_usage(ex.sys);
    EXPECT_TRUE(flow.converged);

    Matrix phi0(2, 3), phi1(2, 3);
    phi0 << 0, 0, 1, 0, 0, 1;
    phi1 << 0.5, 0.5, -1, 0.5, 0.5, -1;
    ASSERT_GE(flow.phi.size(), 2u);
    EXPECT_LE((flow.phi[0] - phi0).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((flow.phi[1] - phi1).cwiseAbs().maxCoeff(), 1e-12);

    Matrix gamma(2, 3);
    const double s2 = std::sqrt(2.0);
    gamma << 0.5, 0.5, s2, 0.5, 0.5, s2;
    EXPECT_LE((usage.gamma - gamma).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LinkUsage, StaticGainPattern) {
    // A = 0, B = I: only the input impulse flows, each channel used twice
    LtiSystem sys{Matrix::Zero(2, 2), Matrix::Identity(2, 2)};
    auto [flow, usage] = link_usage(sys);
    EXPECT_TRUE(flow.converged);
    EXPECT_LE((usage.gamma.leftCols(2)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((usage.gamma.rightCols(2) - std::sqrt(2.0) * Matrix::Identity(2, 2))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
}

TEST(LinkUsage, NoExcitationMeansUndefined) {
    LtiSystem sys{0.5 * Matrix::Identity(2, 2), Matrix::Zero(2, 1)};
    auto [flow, usage] = link_usage(sys);
    EXPECT_EQ(usage.gamma.cwiseAbs().maxCoeff(), 0.0);
    auto report = separation_tendency(usage, Partition{{1, 1}, {1, 0}});
    EXPECT_FALSE(report.exists);
    EXPECT_TRUE(std::isnan(report.s));
}

TEST(LinkUsage, TransitionIdentityHoldsAlongImpulseResponse) {
    auto gen = gen_category(GenSpec{Category::Banded, 7, 19});
    auto [flow, usage] = link_usage(gen.sys);
    // rebuild the impulse state trajectory and check x^{k+1} = x^k + Phi^k 1
    Vector xk = Vector::Zero(gen.sys.state_dim());
    for (std::size_t k = 0; k < flow.phi.size(); ++k) {
        Vector uk = Vector::Zero(gen.sys.input_dim());
        if (k == 0) uk.setOnes();
        const Vector xnext = gen.sys.A * xk + gen.sys.B * uk;
        const Vector reconstructed = xk + flow.phi[k] * Vector::Ones(flow.phi[k].cols());
        EXPECT_LE((xnext - reconstructed).lpNorm<Eigen::Infinity>(), 1e-12);
        xk = xnext;
    }
}

TEST(SeparationTendency, ExampleOneIsOneHalf) {
    auto ex = example_unstructured();
    auto report = analyze_structure(ex.sys, ex.partition);
    EXPECT_TRUE(report.exists);
    EXPECT_NEAR(report.s, 0.5, 1e-12);
    EXPECT_TRUE(report.semiconvergent);
    EXPECT_FALSE(report.controllable);
    EXPECT_FALSE(report.structured);
}

TEST(SeparationTendency, BlockDiagonalIsOne) {
    Matrix A = Matrix::Zero(4, 4);
    A.block(0, 0, 2, 2) << 0.4, 0.1, 0.0, 0.3;
    A.block(2, 2, 2, 2) << 0.2, 0.0, 0.1, 0.5;
    Matrix B = Matrix::Zero(4, 2);
    B.col(0).head(2) << 1.0, 0.5;
    B.col(1).tail(2) << 0.7, 1.0;
    auto report = analyze_structure(LtiSystem{A, B}, Partition{{2, 2}, {1, 1}});
    ASSERT_TRUE(report.exists);
    EXPECT_NEAR(report.s, 1.0, 1e-10);
}

TEST(SeparationTendency, BlockHollowIsZero) {
    // zero diagonal blocks, controllable and semi-convergent by construction
    Matrix A(2, 2), B(2, 2);
    A << 0.0, 0.5, 0.5, 0.0;
    B << 0.0, 1.0, 1.0, 0.0;
    LtiSystem sys{A, B};
    ASSERT_TRUE(check_semiconvergent(A));
    ASSERT_TRUE(check_controllable(A, B));
    auto report = analyze_structure(sys, Partition{{1, 1}, {1, 1}});
    ASSERT_TRUE(report.exists);
    EXPECT_NEAR(report.s, 0.0, 1e-10);
}

TEST(DiagonalTransform, IdentityAndZeroScale) {
    auto ex = example_unstructured();
    auto same = diagonal_transform(ex.sys, Vector::Ones(3));
    EXPECT_TRUE(same.A.isApprox(ex.sys.A, 0.0));
    EXPECT_TRUE(same.B.isApprox(ex.sys.B, 0.0));
    Vector bad = Vector::Ones(3);
    bad[1] = 0.0;
    EXPECT_THROW(diagonal_transform(ex.sys, bad), ZeroScale);
}

TEST(DiagonalTransform, ExampleOneInvariance) {
    auto ex = example_unstructured();
    const double s0 = analyze_structure(ex.sys, ex.partition).s;
    Vector T(3);
    T << 2.0, 3.0, 5.0;
    auto transformed = diagonal_transform(ex.sys, T);
    // the impulse covaries with the input scaling
    const Vector weights = T.tail(1).cwiseInverse();
    const double s1 = analyze_structure(transformed, ex.partition, 10000, 1e-12, weights).s;
    EXPECT_NEAR(s0, s1, 1e-12);
}

TEST(DiagonalTransform, RandomTransformsPreserveS) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> mag(0.2, 5.0);
    std::bernoulli_distribution flip(0.5);
    auto gen = gen_cascade(5, 3, 1, 1, 21);
    const double s0 = analyze_structure(gen.sys, gen.partition).s;
    for (int trial = 0; trial < 25; ++trial) {
        Vector T(gen.sys.state_dim() + gen.sys.input_dim());
        for (Index j = 0; j < T.size(); ++j) T[j] = (flip(rng) ? -1.0 : 1.0) * mag(rng);
        auto transformed = diagonal_transform(gen.sys, T);
        const Vector weights = T.tail(gen.sys.input_dim()).cwiseInverse();
        const double s1 =
            analyze_structure(transformed, gen.partition, 10000, 1e-12, weights).s;
        EXPECT_LE(std::abs(s0 - s1), 1e-10);
    }
}

TEST(SeparationTendency, BoundsHoldForGeneratedSystems) {
    std::mt19937_64 seeds(5);
    const Category cats[] = {Category::Full,   Category::Sparse,      Category::LowerTriangular,
                             Category::Banded, Category::LowerBanded, Category::Star};
    for (Category cat : cats) {
        auto gen = gen_category(GenSpec{cat, 10, seeds()});
        auto report = analyze_structure(gen.sys, gen.partition);
        ASSERT_TRUE(report.exists) << category_name(cat);
        EXPECT_TRUE(report.semiconvergent);
        EXPECT_TRUE(report.controllable);
        for (Index r = 0; r < report.s_rows.size(); ++r) {
            EXPECT_GE(report.s_rows[r], 0.0);
            EXPECT_LE(report.s_rows[r], 1.0);
        }
    }
}

TEST(SeparationTendency, FullSystemsSitInTheMiddleBand) {
    std::mt19937_64 seeds(1234);
    for (int trial = 0; trial < 6; ++trial) {
        auto gen = gen_category(GenSpec{Category::Full, trial % 2 ? 10 : 5, seeds()});
        auto report = analyze_structure(gen.sys, gen.partition);
        ASSERT_TRUE(report.exists);
        EXPECT_GE(report.s, 0.35);
        EXPECT_LE(report.s, 0.65);
    }
}

TEST(SeparationTendency, TrivialPartitionIsFullyInternal) {
    auto gen = gen_category(GenSpec{Category::Full, 6, 8});
    auto report = analyze_structure(gen.sys, Partition::trivial(gen.sys));
    ASSERT_TRUE(report.exists);
    EXPECT_NEAR(report.s, 1.0, 1e-12);
}
