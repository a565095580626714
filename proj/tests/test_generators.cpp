#include <gtest/gtest.h>

#include "sxadmm/decomposition.hpp"
#include "sxadmm/generators.hpp"
#include "sxadmm/structure.hpp"

using namespace sxadmm;

TEST(Cascade, DimensionsAndProperties) {
    auto gen = gen_cascade(20, 6, 1, 1, 1);
    EXPECT_EQ(gen.sys.state_dim(), 120);
    EXPECT_EQ(gen.sys.input_dim(), 20);
    EXPECT_TRUE(check_semiconvergent(gen.sys.A));
    EXPECT_TRUE(check_controllable(gen.sys.A, gen.sys.B));

    auto dec = decompose(gen.sys, gen.partition);
    EXPECT_EQ(dec.wdims[0], 0);
    for (Index i = 1; i < 20; ++i) EXPECT_EQ(dec.wdims[i], 1);
    EXPECT_TRUE(dec.out1);
}

TEST(Cascade, HighSeparationTendency) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto gen = gen_cascade(20, 6, 1, 1, seed);
        auto report = analyze_structure(gen.sys, gen.partition);
        ASSERT_TRUE(report.exists);
        EXPECT_GE(report.s, 0.9) << "seed " << seed;
        EXPECT_TRUE(report.structured);
    }
}

TEST(Cascade, RankZeroCouplingIsBlockDiagonal) {
    auto gen = gen_cascade(3, 2, 1, 0, 4);
    auto dec = decompose(gen.sys, gen.partition);
    EXPECT_EQ(dec.Aext.cwiseAbs().maxCoeff(), 0.0);
    auto report = analyze_structure(gen.sys, gen.partition);
    ASSERT_TRUE(report.exists);
    EXPECT_NEAR(report.s, 1.0, 1e-10);
}

TEST(Cascade, SeedDeterminism) {
    auto a = gen_cascade(5, 3, 1, 1, 99);
    auto b = gen_cascade(5, 3, 1, 1, 99);
    EXPECT_EQ((a.sys.A - b.sys.A).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((a.sys.B - b.sys.B).cwiseAbs().maxCoeff(), 0.0);
    auto c = gen_cascade(5, 3, 1, 1, 100);
    EXPECT_GT((a.sys.A - c.sys.A).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Categories, PatternsAreExact) {
    struct PatternCheck {
        Category cat;
        bool (*allowed)(Index, Index);  // off-diagonal block (i, j) may be nonzero
    };
    const PatternCheck checks[] = {
        {Category::LowerTriangular, [](Index i, Index j) { return i > j; }},
        {Category::Banded, [](Index i, Index j) { return std::abs(i - j) == 1; }},
        {Category::LowerBanded, [](Index i, Index j) { return i == j + 1; }},
        {Category::Star, [](Index i, Index j) { return i == 0 || j == 0; }},
    };
    for (const auto& chk : checks) {
        auto gen = gen_category(GenSpec{chk.cat, 10, 17});
        auto dec = decompose(gen.sys, gen.partition);
        const auto& part = gen.partition;
        for (Index i = 0; i < part.blocks(); ++i)
            for (Index j = 0; j < part.blocks(); ++j) {
                if (i == j || chk.allowed(i, j)) continue;
                const double mx = dec.Aext
                                      .block(part.x_offset(i), part.x_offset(j),
                                             part.xdims[i], part.xdims[j])
                                      .cwiseAbs()
                                      .maxCoeff();
                EXPECT_EQ(mx, 0.0) << category_name(chk.cat) << " block " << i << "," << j;
            }
    }
}

TEST(Categories, AllSemiconvergentAndControllable) {
    const Category cats[] = {Category::Full,   Category::Sparse,      Category::LowerTriangular,
                             Category::Banded, Category::LowerBanded, Category::Star};
    std::uint64_t seed = 400;
    for (Category cat : cats)
        for (Index x : {5, 10}) {
            auto gen = gen_category(GenSpec{cat, x, seed++});
            EXPECT_TRUE(check_semiconvergent(gen.sys.A)) << category_name(cat) << " x=" << x;
            EXPECT_TRUE(check_controllable(gen.sys.A, gen.sys.B))
                << category_name(cat) << " x=" << x;
        }
}

TEST(Categories, StarWithOneLeafIsTwoBlockCoupling) {
    auto gen = gen_category(GenSpec{Category::Star, 5, 23});
    // x = 5 splits into two blocks: hub plus a single leaf, both couplings live
    ASSERT_EQ(gen.partition.blocks(), 2);
    auto dec = decompose(gen.sys, gen.partition);
    EXPECT_GT(dec.Aext.topRightCorner(gen.partition.xdims[0], gen.partition.xdims[1])
                  .cwiseAbs()
                  .maxCoeff(),
              0.0);
    EXPECT_GT(dec.Aext.bottomLeftCorner(gen.partition.xdims[1], gen.partition.xdims[0])
                  .cwiseAbs()
                  .maxCoeff(),
              0.0);
}

TEST(ExampleUnstructured, PaperFacts) {
    auto gen = example_unstructured();
    EXPECT_LE((gen.sys.A * gen.sys.A - gen.sys.A).cwiseAbs().maxCoeff(), 0.0);  // idempotent
    EXPECT_FALSE(check_controllable(gen.sys.A, gen.sys.B));
    auto report = analyze_structure(gen.sys, gen.partition);
    EXPECT_NEAR(report.s, 0.5, 1e-12);
}

TEST(Fig4Chain, DimsAndOut1) {
    auto chain = gen_fig4_chain(15);
    EXPECT_EQ(chain.sys.state_dim(), 30);
    auto dec = decompose(chain.sys, chain.partition);
    EXPECT_TRUE(dec.out1);
    ASSERT_EQ(dec.wdims.size(), 15u);
    EXPECT_EQ(dec.wdims, chain.expected_wdims);

    auto single = gen_fig4_chain(1);
    auto dec1 = decompose(single.sys, single.partition);
    EXPECT_EQ(dec1.total_w(), 0);
}

TEST(TrackingProblem, FeasibleByConstruction) {
    auto gen = gen_cascade(4, 3, 1, 1, 55);
    auto p = make_tracking_problem(gen.sys, 56, WrapOptions{6, true, 2.0, 0.5, 0.1});
    p.validate();
    // the generating trajectory respects the boxes, so the problem is feasible
    auto part = Partition::trivial(gen.sys);
    auto pp = build_stacked(p, part, decompose(gen.sys, part));
    EXPECT_TRUE(pp.subsystems[0].box_like);
    EXPECT_TRUE(std::isfinite(pp.subsystems[0].lower.minCoeff()));
}
