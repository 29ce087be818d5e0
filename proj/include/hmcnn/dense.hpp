#ifndef HMCNN_DENSE_HPP
#define HMCNN_DENSE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hmcnn/image.hpp"
#include "hmcnn/rng.hpp"

namespace hmcnn {

/// One hidden layer: pre = weights·in + bias, weights row-major (out × in).
struct DenseLayer {
    int in = 0;
    int out = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(int in_dim, int out_dim)
        : in{in_dim}, out{out_dim}, weights(static_cast<std::size_t>(in_dim) * out_dim, 0.0), bias(out_dim, 0.0)
    {
    }

    double& w(int i, int j) { return weights[static_cast<std::size_t>(i) * in + j]; }
    double w(int i, int j) const { return weights[static_cast<std::size_t>(i) * in + j]; }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Fully connected ReLU network g: R^t → R with L hidden layers,
///   g(x) = Σ_i out_weights_i · g_i^{(L)}(x) + out_bias,
///   g_i^{(r)} = σ(Σ_j w_{ij}^{(r−1)} g_j^{(r−1)} + w_{i0}^{(r−1)}),  g^{(0)} = x.
/// L = 0 is allowed and gives an affine map of the input.
struct DenseNet {
    int input_dim = 0;
    std::vector<DenseLayer> hidden;
    std::vector<double> out_weights;
    double out_bias = 0.0;

    DenseNet() = default;

    /// Zero network with the given hidden widths.
    DenseNet(int t, const std::vector<int>& widths) : input_dim{t}
    {
        if (t < 1) throw invalid_input("DenseNet: input dimension must be positive");
        int prev = t;
        for (int w : widths) {
            if (w < 0) throw invalid_input("DenseNet: negative width");
            hidden.emplace_back(prev, w);
            prev = w;
        }
        out_weights.assign(prev, 0.0);
    }

    int num_hidden() const noexcept { return static_cast<int>(hidden.size()); }
    int last_width() const noexcept { return hidden.empty() ? input_dim : hidden.back().out; }

    std::vector<int> widths() const
    {
        std::vector<int> w;
        for (const auto& h : hidden) w.push_back(h.out);
        return w;
    }

    std::size_t parameter_count() const noexcept
    {
        std::size_t n = out_weights.size() + 1;
        for (const auto& h : hidden) n += h.weights.size() + h.bias.size();
        return n;
    }

    /// Shapes chain correctly and every parameter is finite.
    void validate() const
    {
        int prev = input_dim;
        if (input_dim < 1) throw invalid_input("DenseNet: input dimension must be positive");
        for (const auto& h : hidden) {
            if (h.in != prev || h.out < 0 || h.weights.size() != static_cast<std::size_t>(h.in) * h.out ||
                h.bias.size() != static_cast<std::size_t>(h.out))
                throw invalid_input("DenseNet: layer shapes do not chain");
            prev = h.out;
        }
        if (out_weights.size() != static_cast<std::size_t>(prev))
            throw invalid_input("DenseNet: output weight count does not match last layer");
        auto finite = [](double v) { return std::isfinite(v); };
        for (const auto& h : hidden)
            if (!std::all_of(h.weights.begin(), h.weights.end(), finite) ||
                !std::all_of(h.bias.begin(), h.bias.end(), finite))
                throw invalid_input("DenseNet: non-finite parameter");
        if (!std::all_of(out_weights.begin(), out_weights.end(), finite) || !std::isfinite(out_bias))
            throw invalid_input("DenseNet: non-finite parameter");
    }

    /// Parameters in canonical order: per hidden layer weights then bias,
    /// then output weights, then output bias.
    std::vector<double> flatten() const
    {
        std::vector<double> p;
        p.reserve(parameter_count());
        for (const auto& h : hidden) {
            p.insert(p.end(), h.weights.begin(), h.weights.end());
            p.insert(p.end(), h.bias.begin(), h.bias.end());
        }
        p.insert(p.end(), out_weights.begin(), out_weights.end());
        p.push_back(out_bias);
        return p;
    }

    /// Inverse of flatten; returns the number of values consumed.
    std::size_t unflatten(std::span<const double> p)
    {
        if (p.size() < parameter_count()) throw invalid_input("DenseNet::unflatten: too few values");
        std::size_t k = 0;
        for (auto& h : hidden) {
            for (auto& v : h.weights) v = p[k++];
            for (auto& v : h.bias) v = p[k++];
        }
        for (auto& v : out_weights) v = p[k++];
        out_bias = p[k++];
        return k;
    }

    friend bool operator==(const DenseNet&, const DenseNet&) = default;
};

/// Glorot-uniform hidden weights, zero biases, output weights uniform on [−0.1,0.1].
inline DenseNet make_dense(int t, const std::vector<int>& widths, Rng& rng)
{
    DenseNet net{t, widths};
    for (auto& h : net.hidden) {
        const double a = std::sqrt(6.0 / static_cast<double>(h.in + h.out));
        for (auto& w : h.weights) w = rng.uniform(-a, a);
    }
    for (auto& w : net.out_weights) w = rng.uniform(-0.1, 0.1);
    return net;
}

/// Network computing its single input exactly: σ(x) − σ(−x).
inline DenseNet identity_dense()
{
    DenseNet net{1, {2}};
    net.hidden[0].w(0, 0) = 1.0;
    net.hidden[0].w(1, 0) = -1.0;
    net.out_weights = {1.0, -1.0};
    return net;
}

template <class Real = double>
Real dense_forward(const DenseNet& net, std::span<const Real> x)
{
    if (static_cast<int>(x.size()) != net.input_dim)
        throw invalid_input("dense_forward: input has length " + std::to_string(x.size()) + ", expected " +
                            std::to_string(net.input_dim));
    std::vector<Real> cur(x.begin(), x.end()), next;
    for (const auto& h : net.hidden) {
        next.assign(h.out, Real(0));
        for (int i = 0; i < h.out; ++i) {
            Real acc = static_cast<Real>(h.bias[i]);
            for (int j = 0; j < h.in; ++j) acc += static_cast<Real>(h.w(i, j)) * cur[j];
            next[i] = acc > Real(0) ? acc : Real(0);
        }
        cur.swap(next);
    }
    Real y = static_cast<Real>(net.out_bias);
    for (std::size_t i = 0; i < cur.size(); ++i) y += static_cast<Real>(net.out_weights[i]) * cur[i];
    return y;
}

inline double dense_forward(const DenseNet& net, std::initializer_list<double> x)
{
    return dense_forward<double>(net, std::span<const double>(x.begin(), x.size()));
}

/// Gradient of upstream·g(x): parameters (same layout as the net) and input.
struct DenseGrad {
    DenseNet params;
    std::vector<double> input;
};

/// Reverse-mode gradient. At a ReLU kink (pre-activation exactly 0) the
/// subgradient 0 is used.
inline DenseGrad dense_grad(const DenseNet& net, std::span<const double> x, double upstream)
{
    if (static_cast<int>(x.size()) != net.input_dim)
        throw invalid_input("dense_grad: input length mismatch");
    const int L = net.num_hidden();
    std::vector<std::vector<double>> act(L + 1);
    act[0].assign(x.begin(), x.end());
    for (int r = 0; r < L; ++r) {
        const auto& h = net.hidden[r];
        act[r + 1].assign(h.out, 0.0);
        for (int i = 0; i < h.out; ++i) {
            double acc = h.bias[i];
            for (int j = 0; j < h.in; ++j) acc += h.w(i, j) * act[r][j];
            act[r + 1][i] = acc > 0.0 ? acc : 0.0;
        }
    }

    DenseGrad g{DenseNet{net.input_dim, net.widths()}, {}};
    g.params.out_bias = upstream;
    std::vector<double> delta(act[L].size());
    for (std::size_t i = 0; i < act[L].size(); ++i) {
        g.params.out_weights[i] = upstream * act[L][i];
        delta[i] = upstream * net.out_weights[i];
    }
    for (int r = L - 1; r >= 0; --r) {
        const auto& h = net.hidden[r];
        auto& gh = g.params.hidden[r];
        std::vector<double> below(h.in, 0.0);
        for (int i = 0; i < h.out; ++i) {
            if (!(act[r + 1][i] > 0.0)) continue;
            const double d = delta[i];
            gh.bias[i] = d;
            for (int j = 0; j < h.in; ++j) {
                gh.w(i, j) = d * act[r][j];
                below[j] += d * h.w(i, j);
            }
        }
        delta.swap(below);
    }
    g.input = std::move(delta);
    return g;
}

} // namespace hmcnn

#endif
