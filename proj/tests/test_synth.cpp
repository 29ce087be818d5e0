#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "hmcnn/dataset_io.hpp"
#include "hmcnn/synth.hpp"
#include "oracles.hpp"

using namespace hmcnn;

namespace {

ShapeInstance make(ShapeKind kind, double cx, double cy, double area, double rot = 0.0, double grey = 1.0)
{
    ShapeInstance s;
    s.kind = kind;
    s.cx = cx;
    s.cy = cy;
    s.area = area;
    s.rotation = rot;
    s.grey = grey;
    return s;
}

TaskConfig config(int task, std::size_t n, std::uint64_t seed)
{
    TaskConfig c;
    c.task = task;
    c.n = n;
    c.seed = seed;
    return c;
}

// Large samples are shared between tests.
const std::vector<Scene>& scenes(int task)
{
    static const std::vector<Scene> t1 = generate_scenes(config(1, 10000, 2024));
    static const std::vector<Scene> t2 = generate_scenes(config(2, 10000, 2025));
    return task == 1 ? t1 : t2;
}

} // namespace

TEST(Rasterize, EmptyListIsBlack)
{
    const Image img = rasterize({}, 8, 9);
    for (double v : img.pixels().values()) EXPECT_EQ(v, 0.0);
}

TEST(Rasterize, AxisAlignedSquare)
{
    const Image img = rasterize({make(ShapeKind::square, 12, 12, 16)}, 32, 32);
    int lit = 0;
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) {
            const bool in = i >= 10 && i <= 13 && j >= 10 && j <= 13;
            EXPECT_EQ(img.at(i, j), in ? 1.0 : 0.0) << i << "," << j;
            lit += img.at(i, j) > 0;
        }
    EXPECT_EQ(lit, 16);
}

TEST(Rasterize, ShapeAreasApproximatePixelCounts)
{
    Rng rng{1};
    for (int k = 0; k < 200; ++k) {
        const double area = rng.uniform(50, 64);
        for (auto kind : {ShapeKind::circle, ShapeKind::square, ShapeKind::triangle}) {
            auto s = make(kind, 16 + rng.uniform(-2, 2), 16 + rng.uniform(-2, 2), area, rng.uniform(0, 6.28));
            const Image img = rasterize({s}, 32, 32);
            double lit = 0;
            for (double v : img.pixels().values()) lit += v > 0;
            if (kind == ShapeKind::circle) EXPECT_NEAR(lit, area, 0.15 * area);
            else EXPECT_NEAR(lit, area, 0.25 * area);
        }
    }
}

TEST(Rasterize, LaterShapeWins)
{
    const auto a = make(ShapeKind::square, 12, 12, 16, 0, 0.5);
    const auto b = make(ShapeKind::square, 13, 13, 16, 0, 1.0);
    EXPECT_EQ(rasterize({a, b}, 32, 32).at(11, 11), 1.0);
    EXPECT_EQ(rasterize({b, a}, 32, 32).at(11, 11), 0.5);
}

TEST(Rasterize, OutOfBounds)
{
    EXPECT_THROW(rasterize({make(ShapeKind::circle, 1, 16, 30)}, 32, 32), invalid_input);
    EXPECT_THROW(rasterize({make(ShapeKind::square, 16, 31, 16)}, 32, 32), invalid_input);
}

TEST(Overlap, Examples)
{
    const auto a = make(ShapeKind::square, 10, 10, 16);
    EXPECT_EQ(area_overlap_fraction(make(ShapeKind::circle, 25, 25, 30), a), 0.0);
    EXPECT_NEAR(area_overlap_fraction(a, a), 1.0, 0.02);
    // Shifted by half a side: analytic overlap 1/2.
    EXPECT_NEAR(area_overlap_fraction(make(ShapeKind::square, 12, 10, 16), a), 0.5, 0.03);
    EXPECT_NEAR(area_overlap_fraction(make(ShapeKind::square, 10.3, 12.3, 36), make(ShapeKind::square, 10.3, 9.3, 36)),
                0.5, 0.03);
}

TEST(Overlap, MatchesAnalyticForTranslatedSquares)
{
    Rng rng{3};
    for (int k = 0; k < 100; ++k) {
        const double side = rng.uniform(4, 8), dx = rng.uniform(-side, side), dy = rng.uniform(-side, side);
        const auto old = make(ShapeKind::square, 16 + rng.uniform(), 16 + rng.uniform(), side * side);
        const auto neu = make(ShapeKind::square, old.cx + dx, old.cy + dy, side * side);
        const double exact = (side - std::abs(dx)) * (side - std::abs(dy)) / (side * side);
        EXPECT_NEAR(area_overlap_fraction(neu, old), exact, 0.08);
    }
}

TEST(TaskConfigTest, Validation)
{
    EXPECT_NO_THROW(config(1, 10, 0).validate());
    auto bad = config(3, 10, 0);
    EXPECT_THROW(bad.validate(), invalid_input);
    auto big = config(1, 10, 0);
    big.area_hi = 400;
    EXPECT_THROW(big.validate(), invalid_input);
    auto inverted = config(1, 10, 0);
    inverted.area_lo = 70;
    EXPECT_THROW(inverted.validate(), invalid_input);
    EXPECT_THROW(gen_task1(config(2, 10, 0)), invalid_input);
    EXPECT_THROW(gen_task2(config(1, 10, 0)), invalid_input);
}

TEST(Task1, ClassProbability)
{
    const double p = task1_circle_probability();
    const double q = (1 - p) / 2;
    EXPECT_NEAR(std::pow(2 * q, 3), 0.5, 1e-15);
    long long zeros = 0;
    for (const auto& sc : scenes(1)) zeros += sc.label == 0;
    const double freq = static_cast<double>(zeros) / 10000.0;
    EXPECT_GE(freq, 0.48);
    EXPECT_LE(freq, 0.52);
    EXPECT_GT(oracle::binomial_two_sided_p(10000, zeros, 0.5), 0.001);
}

TEST(Task1, KindFrequencies)
{
    const double p = task1_circle_probability(), q = (1 - p) / 2;
    std::map<ShapeKind, long long> count;
    for (const auto& sc : scenes(1)) {
        ASSERT_EQ(sc.shapes.size(), 3u);
        for (const auto& s : sc.shapes) ++count[s.kind];
    }
    const double n = 30000;
    for (auto [kind, prob] : {std::pair{ShapeKind::circle, p}, {ShapeKind::square, q}, {ShapeKind::triangle, q}})
        EXPECT_LE(std::abs(count[kind] - n * prob), 3 * std::sqrt(n * prob * (1 - prob))) << to_string(kind);
}

TEST(Task1, ShapesGreysAndAreas)
{
    for (const auto& sc : scenes(1)) {
        std::multiset<double> greys;
        bool circle = false;
        for (const auto& s : sc.shapes) {
            greys.insert(s.grey);
            EXPECT_GE(s.area, 16.0);
            EXPECT_LE(s.area, 64.0);
            EXPECT_TRUE(s.inside(32, 32));
            circle = circle || s.kind == ShapeKind::circle;
        }
        EXPECT_EQ(greys, (std::multiset<double>{1.0 / 3.0, 2.0 / 3.0, 1.0}));
        EXPECT_EQ(sc.label, circle ? 1 : 0);
    }
}

TEST(Task1, PixelValuesAndVisibleGreys)
{
    const auto ds = gen_task1(config(1, 300, 7));
    const auto sc = generate_scenes(config(1, 300, 7));
    const std::set<double> allowed{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
    int checked = 0;
    for (std::size_t k = 0; k < ds.size(); ++k) {
        std::set<double> seen;
        for (double v : ds.image(k).pixels().values()) {
            EXPECT_TRUE(allowed.count(v)) << v;
            if (v > 0) seen.insert(v);
        }
        bool disjoint = true;
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < a; ++b) disjoint = disjoint && area_overlap_fraction(sc[k].shapes[a], sc[k].shapes[b]) == 0.0;
        if (!disjoint) continue;
        EXPECT_EQ(seen.size(), 3u);
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(Task1, OverlapAudit)
{
    for (const auto& sc : scenes(1))
        for (std::size_t a = 1; a < sc.shapes.size(); ++a)
            for (std::size_t b = 0; b < a; ++b) EXPECT_LE(area_overlap_fraction(sc.shapes[a], sc.shapes[b]), 0.03);
}

TEST(Task1, Deterministic)
{
    std::stringstream a, b;
    write_dataset(a, gen_task1(config(1, 50, 99)));
    write_dataset(b, gen_task1(config(1, 50, 99)));
    EXPECT_EQ(a.str(), b.str());
    std::stringstream c;
    write_dataset(c, gen_task1(config(1, 50, 100)));
    EXPECT_NE(a.str(), c.str());
}

TEST(Task2, ClassProbabilityAndRules)
{
    long long ones = 0;
    for (const auto& sc : scenes(2)) {
        ASSERT_EQ(sc.shapes.size(), 2u);
        std::multiset<double> greys;
        for (const auto& s : sc.shapes) {
            EXPECT_NE(s.kind, ShapeKind::square);
            greys.insert(s.grey);
        }
        EXPECT_EQ(greys, (std::multiset<double>{0.5, 1.0}));
        EXPECT_EQ(sc.label, sc.shapes[0].kind == sc.shapes[1].kind ? 1 : 0);
        ones += sc.label;
    }
    const double freq = static_cast<double>(ones) / 10000.0;
    EXPECT_GE(freq, 0.48);
    EXPECT_LE(freq, 0.52);
    EXPECT_GT(oracle::binomial_two_sided_p(10000, ones, 0.5), 0.001);
}

TEST(Task2, PixelValuesAndDeterminism)
{
    const auto a = gen_task2(config(2, 100, 5));
    for (std::size_t k = 0; k < a.size(); ++k)
        for (double v : a.image(k).pixels().values()) EXPECT_TRUE(v == 0.0 || v == 0.5 || v == 1.0);
    EXPECT_EQ(a, gen_task2(config(2, 100, 5)));
}

TEST(Task2, OverlapAudit)
{
    for (const auto& sc : scenes(2)) EXPECT_LE(area_overlap_fraction(sc.shapes[1], sc.shapes[0]), 0.03);
}

TEST(Generation, RetryCapReported)
{
    auto cfg = config(1, 5, 3);
    cfg.d1 = cfg.d2 = 20;
    cfg.area_lo = cfg.area_hi = 40;
    cfg.max_retries = 1;
    cfg.max_overlap = 0.0;
    try {
        for (std::size_t i = 0; i < 200; ++i) {
            cfg.seed = i;
            gen_task1(cfg);
        }
        FAIL() << "expected generation_error";
    } catch (const generation_error& e) {
        EXPECT_NE(std::string(e.what()).find("seed"), std::string::npos);
    }
}

TEST(Pgm, Format)
{
    std::stringstream s;
    write_pgm(s, Image{{0.0, 1.0, 0.5}, {1.0 / 3.0, 0.0, 0.0}});
    EXPECT_EQ(s.str(), "P2\n3 2\n255\n0 255 128\n85 0 0\n");
}
