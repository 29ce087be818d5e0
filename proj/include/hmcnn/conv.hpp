#ifndef HMCNN_CONV_HPP
#define HMCNN_CONV_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hmcnn/dense.hpp"
#include "hmcnn/image.hpp"
#include "hmcnn/rng.hpp"

namespace hmcnn {

/// Convolutional layer r with k_{r−1} input and k_r output channels and an
/// M×M window. Filter (s1 → s2) is stored contiguously: index
/// ((s2·in_ch + s1)·M + t1)·M + t2, all 0-based.
struct ConvLayer {
    int in_ch = 0;
    int out_ch = 0;
    int M = 0;
    std::vector<double> filters;
    std::vector<double> bias;

    ConvLayer() = default;
    ConvLayer(int in, int out, int window)
        : in_ch{in}, out_ch{out}, M{window},
          filters(static_cast<std::size_t>(in) * out * window * window, 0.0), bias(out, 0.0)
    {
    }

    std::size_t filter_offset(int s1, int s2) const noexcept
    {
        return (static_cast<std::size_t>(s2) * in_ch + s1) * static_cast<std::size_t>(M) * M;
    }
    double& w(int t1, int t2, int s1, int s2) noexcept { return filters[filter_offset(s1, s2) + t1 * M + t2]; }
    double w(int t1, int t2, int s1, int s2) const noexcept { return filters[filter_offset(s1, s2) + t1 * M + t2]; }

    friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

/// Convolutional network of the class F(L, k, M): zero padding at the far
/// edges, per-channel bias, ReLU, and a global max over the restricted
/// position range {1,…,d1−M_L+1}×{1,…,d2−M_L+1} of Σ_s w_s·o^{(L)}_{(i,j),s}.
struct ConvNet {
    std::vector<ConvLayer> layers;
    std::vector<double> out_weights;

    ConvNet() = default;

    /// Zero network, k0 = 1.
    ConvNet(const std::vector<int>& channels, const std::vector<int>& windows)
    {
        if (channels.empty() || channels.size() != windows.size())
            throw invalid_input("ConvNet: channel and window lists must be nonempty and equal length");
        int prev = 1;
        for (std::size_t r = 0; r < channels.size(); ++r) {
            if (channels[r] < 1 || windows[r] < 1) throw invalid_input("ConvNet: channels and windows must be positive");
            layers.emplace_back(prev, channels[r], windows[r]);
            prev = channels[r];
        }
        out_weights.assign(prev, 0.0);
    }

    int num_layers() const noexcept { return static_cast<int>(layers.size()); }
    int last_channels() const noexcept { return layers.empty() ? 1 : layers.back().out_ch; }

    std::vector<int> channels() const
    {
        std::vector<int> k;
        for (const auto& l : layers) k.push_back(l.out_ch);
        return k;
    }
    std::vector<int> windows() const
    {
        std::vector<int> m;
        for (const auto& l : layers) m.push_back(l.M);
        return m;
    }

    std::size_t parameter_count() const noexcept
    {
        std::size_t n = out_weights.size();
        for (const auto& l : layers) n += l.filters.size() + l.bias.size();
        return n;
    }

    /// Structural check; with d1,d2 > 0 also checks 1 ≤ M_r ≤ min{d1,d2}.
    void validate(int d1 = 0, int d2 = 0) const
    {
        if (layers.empty()) throw invalid_input("ConvNet: needs at least one layer");
        int prev = 1;
        for (std::size_t r = 0; r < layers.size(); ++r) {
            const auto& l = layers[r];
            if (l.in_ch != prev || l.out_ch < 1 || l.M < 1 ||
                l.filters.size() != static_cast<std::size_t>(l.in_ch) * l.out_ch * l.M * l.M ||
                l.bias.size() != static_cast<std::size_t>(l.out_ch))
                throw invalid_input("ConvNet: layer " + std::to_string(r + 1) + " has inconsistent shape");
            if (d1 > 0 && l.M > std::min(d1, d2))
                throw invalid_input("ConvNet: filter of layer " + std::to_string(r + 1) + " (M=" +
                                    std::to_string(l.M) + ") exceeds the image");
            prev = l.out_ch;
        }
        if (out_weights.size() != static_cast<std::size_t>(prev))
            throw invalid_input("ConvNet: output weight count does not match last layer");
    }

    std::vector<double> flatten() const
    {
        std::vector<double> p;
        p.reserve(parameter_count());
        for (const auto& l : layers) {
            p.insert(p.end(), l.filters.begin(), l.filters.end());
            p.insert(p.end(), l.bias.begin(), l.bias.end());
        }
        p.insert(p.end(), out_weights.begin(), out_weights.end());
        return p;
    }

    std::size_t unflatten(std::span<const double> p)
    {
        if (p.size() < parameter_count()) throw invalid_input("ConvNet::unflatten: too few values");
        std::size_t k = 0;
        for (auto& l : layers) {
            for (auto& v : l.filters) v = p[k++];
            for (auto& v : l.bias) v = p[k++];
        }
        for (auto& v : out_weights) v = p[k++];
        return k;
    }

    friend bool operator==(const ConvNet&, const ConvNet&) = default;
};

/// Glorot-uniform filters (fan = M²·channels), zero biases, output weights
/// uniform on [−0.1, 0.1].
inline ConvNet make_conv(const std::vector<int>& channels, const std::vector<int>& windows, Rng& rng)
{
    ConvNet net{channels, windows};
    for (auto& l : net.layers) {
        const double fan = static_cast<double>(l.M * l.M) * (l.in_ch + l.out_ch);
        const double a = std::sqrt(6.0 / fan);
        for (auto& w : l.filters) w = rng.uniform(-a, a);
    }
    for (auto& w : net.out_weights) w = rng.uniform(-0.1, 0.1);
    return net;
}

/// Stack of channel sheets over the full d1×d2 grid; value (c,i,j) is at
/// (c·d1 + i)·d2 + j, 0-based.
template <class Real = double>
struct FeatureMaps {
    int channels = 0;
    int d1 = 0;
    int d2 = 0;
    std::vector<Real> data;

    Real at(int c, int i, int j) const noexcept
    {
        return data[(static_cast<std::size_t>(c) * d1 + i) * d2 + j];
    }
    Real* plane(int c) noexcept { return data.data() + static_cast<std::size_t>(c) * d1 * d2; }
    const Real* plane(int c) const noexcept { return data.data() + static_cast<std::size_t>(c) * d1 * d2; }
};

namespace detail {

inline bool all_zero(const double* p, std::size_t n) noexcept
{
    for (std::size_t k = 0; k < n; ++k)
        if (p[k] != 0.0) return false;
    return true;
}

template <class Real>
void conv_layer_apply(const ConvLayer& layer, const FeatureMaps<Real>& in, FeatureMaps<Real>& out)
{
    const int d1 = in.d1, d2 = in.d2, M = layer.M;
    out.channels = layer.out_ch;
    out.d1 = d1;
    out.d2 = d2;
    out.data.assign(static_cast<std::size_t>(layer.out_ch) * d1 * d2, Real(0));
    for (int s2 = 0; s2 < layer.out_ch; ++s2) {
        Real* o = out.plane(s2);
        std::fill(o, o + static_cast<std::size_t>(d1) * d2, static_cast<Real>(layer.bias[s2]));
        for (int s1 = 0; s1 < layer.in_ch; ++s1) {
            const double* f = layer.filters.data() + layer.filter_offset(s1, s2);
            if (all_zero(f, static_cast<std::size_t>(M) * M)) continue;
            const Real* src = in.plane(s1);
            // Window terms with (i+t1, j+t2) outside the grid are omitted.
            for (int t1 = 0; t1 < M; ++t1)
                for (int t2 = 0; t2 < M; ++t2) {
                    const double wd = f[t1 * M + t2];
                    if (wd == 0.0) continue;
                    const Real w = static_cast<Real>(wd);
                    for (int i = 0; i + t1 < d1; ++i) {
                        Real* orow = o + static_cast<std::size_t>(i) * d2;
                        const Real* irow = src + static_cast<std::size_t>(i + t1) * d2 + t2;
                        const int jn = d2 - t2;
                        for (int j = 0; j < jn; ++j) orow[j] += w * irow[j];
                    }
                }
        }
        for (std::size_t k = 0; k < static_cast<std::size_t>(d1) * d2; ++k)
            if (!(o[k] > Real(0))) o[k] = Real(0);
    }
}

template <class Real>
FeatureMaps<Real> input_maps(const Image& img)
{
    FeatureMaps<Real> m{1, img.d1(), img.d2(), {}};
    m.data.assign(img.pixels().values().begin(), img.pixels().values().end());
    return m;
}

} // namespace detail

/// Activations o^{(0)}, …, o^{(L)}; each has full d1×d2 extent.
template <class Real = double>
std::vector<FeatureMaps<Real>> conv_layers_forward(const ConvNet& net, const Image& img)
{
    net.validate(img.d1(), img.d2());
    std::vector<FeatureMaps<Real>> maps(net.layers.size() + 1);
    maps[0] = detail::input_maps<Real>(img);
    for (std::size_t r = 0; r < net.layers.size(); ++r) detail::conv_layer_apply(net.layers[r], maps[r], maps[r + 1]);
    return maps;
}

/// Position of the global max; first in row-major order on ties.
struct MaxPosition {
    int i = 0;
    int j = 0;
};

template <class Real>
Real conv_output_from_maps(const ConvNet& net, const FeatureMaps<Real>& last, MaxPosition* where = nullptr)
{
    const int M = net.layers.back().M;
    const int ni = last.d1 - M + 1, nj = last.d2 - M + 1;
    Real best = -std::numeric_limits<Real>::infinity();
    MaxPosition arg{};
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < nj; ++j) {
            Real v = 0;
            for (int s = 0; s < last.channels; ++s)
                if (net.out_weights[s] != 0.0) v += static_cast<Real>(net.out_weights[s]) * last.at(s, i, j);
            if (v > best) {
                best = v;
                arg = {i, j};
            }
        }
    if (where) *where = arg;
    return best;
}

template <class Real = double>
Real conv_forward(const ConvNet& net, const Image& img)
{
    const auto maps = conv_layers_forward<Real>(net, img);
    return conv_output_from_maps(net, maps.back());
}

/// g ∘ (f_1, …, f_t): t independent convolutional networks of identical
/// shape feeding a dense head with input dimension t.
struct CompositeNet {
    std::vector<ConvNet> convs;
    DenseNet head;

    int t() const noexcept { return static_cast<int>(convs.size()); }

    void validate(int d1 = 0, int d2 = 0) const
    {
        if (convs.empty()) throw invalid_input("CompositeNet: needs t >= 1");
        for (const auto& c : convs) {
            c.validate(d1, d2);
            if (c.channels() != convs[0].channels() || c.windows() != convs[0].windows())
                throw invalid_input("CompositeNet: convolutional parts differ in shape");
        }
        head.validate();
        if (head.input_dim != t()) throw invalid_input("CompositeNet: head input dimension differs from t");
    }

    std::size_t parameter_count() const noexcept
    {
        std::size_t n = head.parameter_count();
        for (const auto& c : convs) n += c.parameter_count();
        return n;
    }

    std::vector<double> flatten() const
    {
        std::vector<double> p;
        p.reserve(parameter_count());
        for (const auto& c : convs) {
            const auto q = c.flatten();
            p.insert(p.end(), q.begin(), q.end());
        }
        const auto q = head.flatten();
        p.insert(p.end(), q.begin(), q.end());
        return p;
    }

    void unflatten(std::span<const double> p)
    {
        if (p.size() != parameter_count()) throw invalid_input("CompositeNet::unflatten: wrong length");
        std::size_t k = 0;
        for (auto& c : convs) k += c.unflatten(p.subspan(k));
        head.unflatten(p.subspan(k));
    }

    /// Zero network of the same shape.
    CompositeNet zeros_like() const
    {
        CompositeNet z = *this;
        std::vector<double> p(parameter_count(), 0.0);
        z.unflatten(p);
        return z;
    }

    friend bool operator==(const CompositeNet&, const CompositeNet&) = default;
};

inline CompositeNet make_composite(int t, const std::vector<int>& channels, const std::vector<int>& windows,
                                   const std::vector<int>& dense_widths, Rng& rng)
{
    if (t < 1) throw invalid_input("make_composite: t must be positive");
    CompositeNet net;
    for (int b = 0; b < t; ++b) net.convs.push_back(make_conv(channels, windows, rng));
    net.head = make_dense(t, dense_widths, rng);
    return net;
}

template <class Real = double>
Real composite_forward(const CompositeNet& net, const Image& img)
{
    net.validate(img.d1(), img.d2());
    std::vector<Real> feats;
    for (const auto& c : net.convs) feats.push_back(conv_forward<Real>(c, img));
    return dense_forward<Real>(net.head, std::span<const Real>(feats));
}

/// Forward record used by the reverse pass.
struct ConvTape {
    std::vector<FeatureMaps<double>> maps;
    MaxPosition argmax;
    double output = 0.0;
};

inline ConvTape conv_record(const ConvNet& net, const Image& img)
{
    ConvTape tape;
    tape.maps = conv_layers_forward<double>(net, img);
    tape.output = conv_output_from_maps(net, tape.maps.back(), &tape.argmax);
    return tape;
}

/// Adds upstream · ∂output/∂params into `grad` (same shape as `net`). The
/// global max routes gradient to its row-major-first argmax only; the ReLU
/// subgradient at 0 is 0.
inline void conv_backward(const ConvNet& net, const ConvTape& tape, double upstream, ConvNet& grad)
{
    if (upstream == 0.0) return;
    const int L = net.num_layers();
    const int d1 = tape.maps[0].d1, d2 = tape.maps[0].d2;
    const std::size_t plane = static_cast<std::size_t>(d1) * d2;

    // Gradient w.r.t. o^{(L)}, nonzero only at the argmax position.
    const auto& last = tape.maps[L];
    std::vector<double> d_out(static_cast<std::size_t>(last.channels) * plane, 0.0);
    const std::size_t pos = static_cast<std::size_t>(tape.argmax.i) * d2 + tape.argmax.j;
    for (int s = 0; s < last.channels; ++s) {
        grad.out_weights[s] += upstream * last.at(s, tape.argmax.i, tape.argmax.j);
        d_out[s * plane + pos] = upstream * net.out_weights[s];
    }
    // Rows/cols [i0,i1)×[j0,j1) bound the nonzero entries of d_out.
    int i0 = tape.argmax.i, i1 = tape.argmax.i + 1, j0 = tape.argmax.j, j1 = tape.argmax.j + 1;

    std::vector<double> d_in;
    for (int r = L; r >= 1; --r) {
        const ConvLayer& layer = net.layers[r - 1];
        ConvLayer& gl = grad.layers[r - 1];
        const auto& outm = tape.maps[r];
        const auto& inm = tape.maps[r - 1];
        const int M = layer.M;
        // δ = d_out ⊙ 1{o > 0}
        for (int s2 = 0; s2 < layer.out_ch; ++s2) {
            double* d = d_out.data() + s2 * plane;
            const double* o = outm.plane(s2);
            for (int i = i0; i < i1; ++i)
                for (int j = j0; j < j1; ++j) {
                    const std::size_t k = static_cast<std::size_t>(i) * d2 + j;
                    if (!(o[k] > 0.0)) d[k] = 0.0;
                }
        }
        const bool need_input = r > 1;
        if (need_input) d_in.assign(static_cast<std::size_t>(layer.in_ch) * plane, 0.0);
        for (int s2 = 0; s2 < layer.out_ch; ++s2) {
            const double* d = d_out.data() + s2 * plane;
            double bsum = 0.0;
            for (int i = i0; i < i1; ++i)
                for (int j = j0; j < j1; ++j) bsum += d[static_cast<std::size_t>(i) * d2 + j];
            gl.bias[s2] += bsum;
            for (int s1 = 0; s1 < layer.in_ch; ++s1) {
                const double* src = inm.plane(s1);
                double* gf = gl.filters.data() + layer.filter_offset(s1, s2);
                const double* f = layer.filters.data() + layer.filter_offset(s1, s2);
                double* din = need_input ? d_in.data() + s1 * plane : nullptr;
                for (int t1 = 0; t1 < M; ++t1)
                    for (int t2 = 0; t2 < M; ++t2) {
                        const double w = f[t1 * M + t2];
                        double acc = 0.0;
                        const int iend = std::min(i1, d1 - t1), jend = std::min(j1, d2 - t2);
                        for (int i = i0; i < iend; ++i) {
                            const double* drow = d + static_cast<std::size_t>(i) * d2;
                            const double* srow = src + static_cast<std::size_t>(i + t1) * d2 + t2;
                            for (int j = j0; j < jend; ++j) acc += drow[j] * srow[j];
                            if (din && w != 0.0) {
                                double* irow = din + static_cast<std::size_t>(i + t1) * d2 + t2;
                                for (int j = j0; j < jend; ++j) irow[j] += w * drow[j];
                            }
                        }
                        gf[t1 * M + t2] += acc;
                    }
            }
        }
        if (need_input) {
            d_out.swap(d_in);
            i1 = std::min(d1, i1 + M - 1);
            j1 = std::min(d2, j1 + M - 1);
        }
    }
}

/// Reverse-mode gradient of upstream·f(img) for a single convolutional net.
inline ConvNet conv_grad(const ConvNet& net, const Image& img, double upstream)
{
    ConvNet grad{net.channels(), net.windows()};
    const ConvTape tape = conv_record(net, img);
    conv_backward(net, tape, upstream, grad);
    return grad;
}

/// Forward record of g∘(f_1..f_t).
struct CompositeTape {
    std::vector<ConvTape> convs;
    std::vector<double> features;
    double output = 0.0;
};

inline CompositeTape composite_record(const CompositeNet& net, const Image& img)
{
    CompositeTape tape;
    tape.convs.reserve(net.convs.size());
    for (const auto& c : net.convs) {
        tape.convs.push_back(conv_record(c, img));
        tape.features.push_back(tape.convs.back().output);
    }
    tape.output = dense_forward<double>(net.head, std::span<const double>(tape.features));
    return tape;
}

/// Adds upstream·∂output/∂params into `grad`.
inline void composite_backward(const CompositeNet& net, const CompositeTape& tape, double upstream, CompositeNet& grad)
{
    if (upstream == 0.0) return;
    const DenseGrad dg = dense_grad(net.head, tape.features, upstream);
    auto gp = grad.head.flatten();
    const auto dp = dg.params.flatten();
    for (std::size_t k = 0; k < gp.size(); ++k) gp[k] += dp[k];
    grad.head.unflatten(gp);
    for (std::size_t b = 0; b < net.convs.size(); ++b)
        conv_backward(net.convs[b], tape.convs[b], dg.input[b], grad.convs[b]);
}

/// Adds upstream·∂(g∘(f_1..f_t))(img)/∂params into `grad`; returns the output.
inline double composite_accumulate(const CompositeNet& net, const Image& img, double upstream, CompositeNet& grad)
{
    const CompositeTape tape = composite_record(net, img);
    composite_backward(net, tape, upstream, grad);
    return tape.output;
}

inline CompositeNet composite_grad(const CompositeNet& net, const Image& img, double upstream)
{
    net.validate(img.d1(), img.d2());
    CompositeNet grad = net.zeros_like();
    composite_accumulate(net, img, upstream, grad);
    return grad;
}

} // namespace hmcnn

#endif
