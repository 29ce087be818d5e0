#include <gtest/gtest.h>

#include "hmcnn/conv.hpp"
#include "hmcnn/serialize.hpp"
#include "oracles.hpp"

using namespace hmcnn;

namespace {

ConvNet ones_net()
{
    ConvNet net{{1}, {2}};
    for (auto& w : net.layers[0].filters) w = 1.0;
    net.out_weights = {1.0};
    return net;
}

Image ones(int d1, int d2) { return Image{Grid{d1, d2, 1.0}}; }

} // namespace

TEST(ConvForward, ZeroPaddingFixture)
{
    const auto maps = conv_layers_forward(ones_net(), ones(3, 3));
    // 1-based (1,1), (3,1), (3,3).
    EXPECT_EQ(maps[1].at(0, 0, 0), 4.0);
    EXPECT_EQ(maps[1].at(0, 2, 0), 2.0);
    EXPECT_EQ(maps[1].at(0, 2, 2), 1.0);
    EXPECT_EQ(conv_forward(ones_net(), ones(3, 3)), 4.0);
}

TEST(ConvForward, BiasOnly)
{
    ConvNet net{{2}, {2}};
    net.layers[0].bias = {0.3, -0.3};
    const auto maps = conv_layers_forward(net, ones(4, 5));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j) {
            EXPECT_EQ(maps[1].at(0, i, j), 0.3);
            EXPECT_EQ(maps[1].at(1, i, j), 0.0);
        }
}

TEST(ConvForward, OutputWeights)
{
    ConvNet net = ones_net();
    net.out_weights = {0.0};
    EXPECT_EQ(conv_forward(net, ones(3, 3)), 0.0);
    Rng rng{4};
    for (int k = 0; k < 20; ++k) {
        ConvNet pos{{2, 2}, {2, 3}};
        for (auto& L : pos.layers) {
            for (auto& w : L.filters) w = rng.uniform(0, 1);
            for (auto& b : L.bias) b = rng.uniform(0, 1);
        }
        pos.out_weights = {-0.5, -1.5};
        const Image img = oracle::random_image(6, 7, rng);
        const auto maps = oracle::padded_forward(pos, img);
        double mn = std::numeric_limits<double>::infinity();
        for (int i = 0; i + 3 <= 6; ++i)
            for (int j = 0; j + 3 <= 7; ++j) mn = std::min(mn, 0.5 * maps[2][0][i][j] + 1.5 * maps[2][1][i][j]);
        EXPECT_NEAR(conv_forward(pos, img), -mn, 1e-12);
    }
}

TEST(ConvForward, FilterExceedingImage)
{
    ConvNet net{{1}, {4}};
    EXPECT_THROW(conv_forward(net, ones(3, 5)), invalid_input);
}

TEST(ConvForward, MatchesPaddedOracle)
{
    Rng rng{21};
    for (int k = 0; k < 50; ++k) {
        const int L = 1 + static_cast<int>(rng.below(3));
        const int d1 = 4 + static_cast<int>(rng.below(4)), d2 = 4 + static_cast<int>(rng.below(4));
        std::vector<int> ch(L), M(L);
        for (int r = 0; r < L; ++r) {
            ch[r] = 1 + static_cast<int>(rng.below(3));
            M[r] = 1 + static_cast<int>(rng.below(4));
        }
        const ConvNet net = oracle::random_conv(ch, M, rng);
        const Image img = oracle::random_image(d1, d2, rng);
        const auto mine = conv_layers_forward(net, img);
        const auto ref = oracle::padded_forward(net, img);
        for (int r = 0; r <= L; ++r)
            for (int c = 0; c < mine[r].channels; ++c)
                for (int i = 0; i < d1; ++i)
                    for (int j = 0; j < d2; ++j) ASSERT_NEAR(mine[r].at(c, i, j), ref[r][c][i][j], 1e-12);
        EXPECT_NEAR(conv_forward(net, img), oracle::scan_output(net, ref.back()), 1e-12);
    }
}

TEST(ConvForward, AppendingZerosMatchesPaddedOracle)
{
    Rng rng{22};
    for (int k = 0; k < 20; ++k) {
        const ConvNet net = oracle::random_conv({2, 2}, {2, 3}, rng);
        const Image img = oracle::random_image(5, 5, rng);
        Grid big{7, 8, 0.0};
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) big(i, j) = img.at(i, j);
        const Image enlarged{big};
        const auto mine = conv_layers_forward(net, enlarged);
        const auto ref = oracle::padded_forward(net, enlarged);
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < 7; ++i)
                for (int j = 0; j < 8; ++j) ASSERT_NEAR(mine[2].at(c, i, j), ref[2][c][i][j], 1e-12);
    }
}

TEST(ConvProperties, ChannelPermutationInvariance)
{
    Rng rng{5};
    for (int k = 0; k < 30; ++k) {
        const ConvNet net = oracle::random_conv({3, 2}, {2, 2}, rng);
        ConvNet perm = net;
        const int p[3] = {2, 0, 1};
        for (int s = 0; s < 3; ++s) {
            perm.layers[0].bias[p[s]] = net.layers[0].bias[s];
            for (int t1 = 0; t1 < 2; ++t1)
                for (int t2 = 0; t2 < 2; ++t2) {
                    perm.layers[0].w(t1, t2, 0, p[s]) = net.layers[0].w(t1, t2, 0, s);
                    for (int s2 = 0; s2 < 2; ++s2) perm.layers[1].w(t1, t2, p[s], s2) = net.layers[1].w(t1, t2, s, s2);
                }
        }
        const Image img = oracle::random_image(6, 6, rng);
        EXPECT_NEAR(conv_forward(net, img), conv_forward(perm, img), 1e-12);
    }
}

TEST(ConvProperties, MaxMonotoneInLastBias)
{
    Rng rng{6};
    for (int k = 0; k < 30; ++k) {
        ConvNet net = oracle::random_conv({2, 3}, {2, 2}, rng);
        for (auto& w : net.out_weights) w = std::abs(w);
        const Image img = oracle::random_image(5, 6, rng);
        ConvNet up = net;
        for (auto& b : up.layers[1].bias) b += 0.25;
        EXPECT_GE(conv_forward(up, img), conv_forward(net, img));
    }
}

TEST(Composite, IdentityHeadAndConstantHead)
{
    Rng rng{7};
    const ConvNet f = oracle::random_conv({2}, {2}, rng);
    CompositeNet net{{f}, identity_dense()};
    const Image img = oracle::random_image(5, 5, rng);
    EXPECT_NEAR(composite_forward(net, img), conv_forward(f, img), 1e-15);
    net.head = DenseNet{1, {3}};
    net.head.out_bias = 0.42;
    EXPECT_EQ(composite_forward(net, img), 0.42);
    EXPECT_EQ(composite_forward(net, oracle::random_image(5, 5, rng)), 0.42);
}

TEST(Composite, SubtractionHeadOnEqualParts)
{
    Rng rng{8};
    const ConvNet f = oracle::random_conv({2, 2}, {2, 2}, rng);
    DenseNet head{2, {2}};
    // σ(u − v) − σ(v − u) = u − v
    head.hidden[0].weights = {1, -1, -1, 1};
    head.out_weights = {1, -1};
    const CompositeNet net{{f, f}, head};
    for (int k = 0; k < 10; ++k) EXPECT_EQ(composite_forward(net, oracle::random_image(6, 5, rng)), 0.0);
}

TEST(Composite, ShapeMismatch)
{
    Rng rng{9};
    CompositeNet net{{oracle::random_conv({2}, {2}, rng), oracle::random_conv({3}, {2}, rng)}, DenseNet{2, {2}}};
    EXPECT_THROW(composite_forward(net, oracle::random_image(4, 4, rng)), invalid_input);
    CompositeNet net2{{oracle::random_conv({2}, {2}, rng)}, DenseNet{2, {2}}};
    EXPECT_THROW(composite_forward(net2, oracle::random_image(4, 4, rng)), invalid_input);
}

TEST(CompositeGrad, ZeroUpstream)
{
    Rng rng{10};
    const CompositeNet net = make_composite(2, {2, 2}, {2, 2}, {3}, rng);
    const auto g = composite_grad(net, oracle::random_image(6, 6, rng), 0.0);
    for (double v : g.flatten()) EXPECT_EQ(v, 0.0);
}

TEST(CompositeGrad, BiasOnlyNet)
{
    ConvNet f{{1}, {2}};
    f.layers[0].bias = {0.4};
    f.out_weights = {1.5};
    const CompositeNet net{{f}, identity_dense()};
    const Image img = Image::zeros(4, 4);
    const auto g = composite_grad(net, img, 1.0);
    const double h = 1e-6;
    CompositeNet p = net, m = net;
    p.convs[0].layers[0].bias[0] += h;
    m.convs[0].layers[0].bias[0] -= h;
    const double fd = (composite_forward(p, img) - composite_forward(m, img)) / (2 * h);
    EXPECT_LE(oracle::rel_error(g.convs[0].layers[0].bias[0], fd), 1e-5);
    EXPECT_NEAR(fd, 1.5, 1e-8);
}

TEST(CompositeGrad, MatchesFiniteDifferences)
{
    Rng rng{11};
    int checked = 0, attempts = 0;
    while (checked < 50 && attempts < 1000) {
        ++attempts;
        const int t = 1 + static_cast<int>(rng.below(2));
        const std::vector<int> ch{1 + static_cast<int>(rng.below(3)), 1 + static_cast<int>(rng.below(3))};
        const std::vector<int> M{1 + static_cast<int>(rng.below(2)), 1 + static_cast<int>(rng.below(2))};
        CompositeNet net;
        for (int b = 0; b < t; ++b) net.convs.push_back(oracle::random_conv(ch, M, rng));
        net.head = oracle::random_dense(t, {3}, rng);
        const Image img = oracle::random_image(6, 6, rng);
        const auto g = composite_grad(net, img, 1.0);
        const auto eval = [&](const std::vector<double>& th) {
            CompositeNet n2 = net;
            n2.unflatten(th);
            return composite_forward(n2, img);
        };
        const auto pattern = [&](const std::vector<double>& th) {
            CompositeNet n2 = net;
            n2.unflatten(th);
            return oracle::activation_pattern(n2, img);
        };
        const auto res = oracle::check_gradient(net.flatten(), g.flatten(), eval, pattern);
        if (!res.smooth) continue;
        EXPECT_LE(res.max_rel, 1e-5);
        ++checked;
    }
    EXPECT_EQ(checked, 50);
}

TEST(CompositeGrad, ArgmaxTieGoesToFirstRowMajor)
{
    // 1x1 filter on a constant image: every position ties.
    ConvNet f{{1}, {1}};
    f.layers[0].filters = {1.0};
    f.out_weights = {1.0};
    const Image img{Grid{3, 3, 0.5}};
    const auto tape = conv_record(f, img);
    EXPECT_EQ(tape.argmax.i, 0);
    EXPECT_EQ(tape.argmax.j, 0);
}

TEST(Serialization, RoundTripAndCount)
{
    Rng rng{12};
    const CompositeNet net = make_composite(2, {3, 2}, {2, 4}, {5, 2}, rng);
    const json j = to_json(net);
    EXPECT_EQ(j.at("parameter_count").get<std::size_t>(), net.parameter_count());
    EXPECT_EQ(oracle::count_json_parameters(j), net.parameter_count());
    const CompositeNet back = composite_from_json(json::parse(j.dump()));
    EXPECT_EQ(back, net);
    json broken = j;
    broken["convs"][0]["layers"][0]["bias"].erase(0);
    EXPECT_THROW(composite_from_json(broken), invalid_input);
}

TEST(ExtendedPrecision, AgreesWithDouble)
{
    Rng rng{13};
    const ConvNet net = oracle::random_conv({3, 2}, {2, 3}, rng);
    const Image img = oracle::random_image(7, 7, rng);
    EXPECT_NEAR(static_cast<double>(conv_forward<long double>(net, img)), conv_forward(net, img), 1e-12);
}
