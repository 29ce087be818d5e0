#include <gtest/gtest.h>

#include <map>

#include "hmcnn/hierarchy.hpp"
#include "oracles.hpp"

using namespace hmcnn;

TEST(EvalTree, LevelOneExamples)
{
    const auto mean = HierTree::uniform(1, mean_node());
    EXPECT_DOUBLE_EQ(eval_tree(mean, Grid{{0, 1}, {0, 1}}), 0.5);
    const auto mx = HierTree::uniform(1, max_node());
    EXPECT_DOUBLE_EQ(eval_tree(mx, Grid{{0.2, 0.9}, {0.1, 0.4}}), 0.9);
}

TEST(EvalTree, MeansPreserveConstants)
{
    const auto tree = HierTree::uniform(2, mean_node());
    EXPECT_DOUBLE_EQ(eval_tree(tree, Grid{4, 4, 0.37}), 0.37);
}

TEST(EvalTree, WrongPatchSize)
{
    const auto tree = HierTree::uniform(2, mean_node());
    EXPECT_THROW(eval_tree(tree, Grid{3, 4, 0.0}), invalid_input);
}

TEST(EvalTree, ArgumentOrder)
{
    // Level 1 reads (x11, x12, x21, x22).
    const auto first = [](int slot) {
        return NodeFn{[slot](const std::array<double, 4>& u) { return u[slot]; }};
    };
    const Grid p1{{0.1, 0.2}, {0.3, 0.4}};
    EXPECT_EQ(eval_tree(HierTree::uniform(1, first(1)), p1), 0.2);
    EXPECT_EQ(eval_tree(HierTree::uniform(1, first(2)), p1), 0.3);
    // Level 2: slot 1 is the block shifted in the first index.
    Grid p2{4, 4, 0.0};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) p2(i, j) = 0.1 * i + 0.01 * j;
    std::vector<std::vector<NodeFn>> nodes(2);
    nodes[0].assign(4, first(0));
    nodes[1] = {first(1)};
    EXPECT_NEAR(eval_tree(HierTree{2, nodes}, p2), 0.2, 1e-15);
    nodes[1] = {first(2)};
    EXPECT_NEAR(eval_tree(HierTree{2, nodes}, p2), 0.02, 1e-15);
}

TEST(EvalTree, EveryPixelReachedOnce)
{
    for (int l = 1; l <= 3; ++l) {
        const int side = 1 << l;
        Grid g{side, side};
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j) g(i, j) = i * side + j; // distinct tags
        std::map<double, int> seen;
        std::vector<std::vector<NodeFn>> nodes(l);
        nodes[0].assign(static_cast<std::size_t>(pow4(l - 1)), NodeFn{[&seen](const std::array<double, 4>& u) {
                            for (double v : u) ++seen[v];
                            return 0.0;
                        }});
        for (int k = 2; k <= l; ++k) nodes[k - 1].assign(static_cast<std::size_t>(pow4(l - k)), constant_node(0));
        eval_tree(HierTree{l, nodes}, g);
        EXPECT_EQ(seen.size(), static_cast<std::size_t>(side * side));
        for (const auto& [v, c] : seen) EXPECT_EQ(c, 1);
    }
}

TEST(EvalMaxpool, Examples)
{
    const auto c = HierTree::uniform(2, constant_node(0.3));
    Rng rng{1};
    EXPECT_EQ(eval_maxpool(c, oracle::random_image(6, 5, rng)), 0.3);
    const auto mean = HierTree::uniform(1, mean_node());
    const Image two{{0.1, 0.5}, {0.9, 0.3}};
    EXPECT_DOUBLE_EQ(eval_maxpool(mean, two), eval_tree(mean, two.pixels()));
    const Image wide{{0, 0, 1}, {0, 0, 1}};
    PatchPosition where;
    EXPECT_DOUBLE_EQ(eval_maxpool(mean, wide, &where), 0.5);
    EXPECT_EQ(where.i, 1);
    EXPECT_EQ(where.j, 2);
    EXPECT_THROW(eval_maxpool(HierTree::uniform(2, mean_node()), wide), invalid_input);
}

TEST(EvalMaxpool, ZeroBorderAddsPositionsOnly)
{
    Rng rng{2};
    const auto tree = HierTree::uniform(2, affine_node({0.3, -0.2, 0.5, 0.1}, 0.05));
    for (int k = 0; k < 20; ++k) {
        const Image img = oracle::random_image(6, 7, rng);
        Grid big{8, 9, 0.0};
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 7; ++j) big(i, j) = img.at(i, j);
        double extra = -std::numeric_limits<double>::infinity();
        for (int i = 1; i + 3 <= 8; ++i)
            for (int j = 1; j + 3 <= 9; ++j)
                if (i + 3 > 6 || j + 3 > 7) extra = std::max(extra, eval_tree(tree, subimage(big, i, j, {4, 4})));
        EXPECT_DOUBLE_EQ(eval_maxpool(tree, Image{big}), std::max(eval_maxpool(tree, img), extra));
    }
}

TEST(EvalModel, Examples)
{
    Rng rng{3};
    const auto tree = HierTree::uniform(1, mean_node());
    const Image img = oracle::random_image(5, 4, rng);
    const HierarchyModel id{{tree}, [](std::span<const double> u) { return u[0]; }};
    EXPECT_EQ(eval_model(id, img), eval_maxpool(tree, img));
    const HierarchyModel avg{{tree, tree}, [](std::span<const double> u) { return (u[0] + u[1]) / 2; }};
    EXPECT_DOUBLE_EQ(eval_model(avg, img), eval_maxpool(tree, img));
    const HierarchyModel prod{{HierTree::uniform(1, constant_node(0.5)), HierTree::uniform(1, constant_node(0.8))},
                              [](std::span<const double> u) { return u[0] * u[1]; }};
    EXPECT_DOUBLE_EQ(eval_model(prod, img), 0.4);
    const HierarchyModel mixed{{tree, HierTree::uniform(2, mean_node())}, [](std::span<const double>) { return 0.0; }};
    EXPECT_THROW(eval_model(mixed, img), invalid_input);
}

TEST(Lemma4Bound, Examples)
{
    EXPECT_EQ(lemma4_bound(3, 2, 1.0, 0.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(lemma4_bound(1, 1, 1.0, 0.1, 0.05), 0.3);
    EXPECT_DOUBLE_EQ(lemma4_bound(4, 2, 0.5, 0.0, 0.2), 1.6);
    EXPECT_THROW(lemma4_bound(1, 1, 1.0, -0.1, 0.0), invalid_input);
}

TEST(Lemma4Bound, MaxInterchange)
{
    Rng rng{4};
    for (int k = 0; k < 1000; ++k) {
        const int n = 1 + static_cast<int>(rng.below(10));
        double ma = -1e300, mb = -1e300, md = 0;
        for (int i = 0; i < n; ++i) {
            const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
            ma = std::max(ma, a);
            mb = std::max(mb, b);
            md = std::max(md, std::abs(a - b));
        }
        EXPECT_LE(std::abs(ma - mb), md);
    }
}

TEST(SmoothnessSpecTest, Validation)
{
    EXPECT_NO_THROW((SmoothnessSpec{1.0, 2.5, 1.0, 3.0}.validate()));
    EXPECT_THROW((SmoothnessSpec{0.5, 2.0, 1.0, 1.0}.validate()), invalid_input);
    EXPECT_THROW((SmoothnessSpec{1.0, 2.0, 0.0, 1.0}.validate()), invalid_input);
}

TEST(DenseTree, MatchesCallableTree)
{
    Rng rng{5};
    const auto dt = make_dense_tree(2, 2, 3, rng);
    const auto tree = dt.to_tree();
    for (int k = 0; k < 10; ++k) {
        const Image img = oracle::random_image(6, 5, rng);
        EXPECT_NEAR(eval_maxpool_dense<double>(dt, img), eval_maxpool(tree, img), 1e-13);
        EXPECT_NEAR(static_cast<double>(eval_maxpool_dense<long double>(dt, img)), eval_maxpool(tree, img), 1e-12);
    }
}
