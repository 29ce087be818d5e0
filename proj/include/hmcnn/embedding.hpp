#ifndef HMCNN_EMBEDDING_HPP
#define HMCNN_EMBEDDING_HPP

// Exact embedding of a hierarchical max-pooling model with dense-network
// nodes into a single convolutional network.
//
// Channel layout (0-based). Pair p occupies channels 2p and 2p+1 and stores a
// signed value v as (σ(v), σ(−v)). Pair 0 holds the pixel. The value of node
// (k,s) lives in pair 1 + Σ_{j<k} 4^{l−j} + (s−1). Channels from
// pair_channels on are scratch space for the hidden neurons of whichever node
// network is active at that layer.
//
// Layer timetable (1-based). Scale k starts after
//   base(k) = Σ_{j<k} 4^{l−j}·L_net + (k−1)
// layers. The hidden layers of node (k,s) are base(k)+(s−1)L_net+1 …
// base(k)+s·L_net, its output pair is written at base(k)+s·L_net+1. Every
// pair is carried forward by the identity trick once written.

#include <array>
#include <string>
#include <vector>

#include "hmcnn/bounds.hpp"
#include "hmcnn/conv.hpp"
#include "hmcnn/dense.hpp"
#include "hmcnn/hierarchy.hpp"

namespace hmcnn {

struct EmbeddingPlan {
    int l = 0;
    int L_net = 0;
    int r_net = 0;
    int l_net = 0;         ///< (4^l−1)/3·L_net + l
    int pair_channels = 0; ///< (2·4^l+4)/3
    int channels = 0;      ///< pair_channels + r_net, every layer
    std::vector<int> M;    ///< 2^{π(s)}, s = 1..l_net

    int pair_count() const noexcept { return pair_channels / 2; }

    /// Pair index holding node (k,s); k = 0 denotes the pixel pair.
    int node_pair(int k, int s) const
    {
        if (k == 0) return 0;
        int p = 1;
        for (int j = 1; j < k; ++j) p += static_cast<int>(pow4(l - j));
        return p + (s - 1);
    }

    int scale_base(int k) const
    {
        int b = k - 1;
        for (int j = 1; j < k; ++j) b += static_cast<int>(pow4(l - j)) * L_net;
        return b;
    }

    /// r0 of node (k,s): the layer whose activations feed its first hidden layer.
    int input_layer(int k, int s) const { return scale_base(k) + (s - 1) * L_net; }
    int output_layer(int k, int s) const { return scale_base(k) + s * L_net + 1; }
};

inline EmbeddingPlan plan_embedding(int l, int L_net, int r_net)
{
    if (l < 1 || l > 6) throw invalid_input("plan_embedding: l must lie in [1,6]");
    if (L_net < 1 || r_net < 1) throw invalid_input("plan_embedding: L_net and r_net must be positive");
    EmbeddingPlan p;
    p.l = l;
    p.L_net = L_net;
    p.r_net = r_net;
    p.l_net = static_cast<int>(node_count(l)) * L_net + l;
    p.pair_channels = static_cast<int>((2 * pow4(l) + 4) / 3);
    p.channels = p.pair_channels + r_net;
    p.M = filter_schedule(l, L_net);
    return p;
}

/// A convolutional network under construction, with a record of which
/// (layer, output channel) rows have been assigned.
struct ConvCanvas {
    ConvNet net;
    std::vector<std::vector<char>> written; // [r−1][channel]

    ConvCanvas(const std::vector<int>& channels, const std::vector<int>& windows) : net{channels, windows}
    {
        for (int k : channels) written.emplace_back(k, 0);
    }

    int layers() const noexcept { return net.num_layers(); }

    ConvLayer& layer(int r) { return net.layers.at(r - 1); }

    void claim(int r, int channel)
    {
        if (r < 1 || r > layers()) throw invalid_input("ConvCanvas: layer " + std::to_string(r) + " out of range");
        auto& row = written[r - 1];
        if (channel < 0 || channel >= static_cast<int>(row.size()))
            throw invalid_input("ConvCanvas: channel " + std::to_string(channel) + " exceeds budget at layer " +
                                std::to_string(r));
        if (row[channel])
            throw invalid_input("ConvCanvas: channel " + std::to_string(channel) + " of layer " + std::to_string(r) +
                                " written twice");
        row[channel] = 1;
    }

    bool is_written(int r, int channel) const { return written.at(r - 1).at(channel) != 0; }
};

inline ConvCanvas make_canvas(const EmbeddingPlan& plan)
{
    return ConvCanvas{std::vector<int>(plan.l_net, plan.channels), plan.M};
}

/// Identity pair at layer r. With src_b < 0 the single channel src_a of layer
/// r−1 is saved: dest = (σ(x), σ(−x)). Otherwise the pair (src_a, src_b) is
/// carried forward: dest = (σ(a−b), σ(b−a)). In both cases the difference of
/// the destination channels equals the source value; all weights are ±1.
inline void write_identity_pair(ConvCanvas& c, int r, int src_a, int src_b, int dest_a, int dest_b)
{
    if (dest_a == dest_b) throw invalid_input("write_identity_pair: destination channels coincide");
    c.claim(r, dest_a);
    c.claim(r, dest_b);
    ConvLayer& L = c.layer(r);
    if (src_a < 0 || src_a >= L.in_ch || src_b >= L.in_ch)
        throw invalid_input("write_identity_pair: source channel out of range");
    L.w(0, 0, src_a, dest_a) = 1.0;
    L.w(0, 0, src_a, dest_b) = -1.0;
    if (src_b >= 0) {
        L.w(0, 0, src_b, dest_a) = -1.0;
        L.w(0, 0, src_b, dest_b) = 1.0;
    }
}

/// Offsets (t1,t2) at which the four arguments of a scale-k node are read,
/// in argument order. Scale 1 passes (x_{1,1}, x_{1,2}, x_{2,1}, x_{2,2});
/// higher scales pass quadrants shifted first in the first, then in the
/// second index.
inline std::array<std::array<int, 2>, 4> node_offsets(int k)
{
    if (k == 1) return {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
    const int h = 1 << (k - 1);
    return {{{0, 0}, {h, 0}, {0, h}, {h, h}}};
}

/// Placement of one node network g_net inside the canvas.
struct SpliceSpec {
    int r0 = 0;                      ///< layer read by the first hidden layer
    int k = 1;                       ///< scale; filter offsets from node_offsets(k)
    std::array<int, 8> in_channels{}; ///< input m is in_channels[2m] − in_channels[2m+1]
    int out_a = 0;                   ///< output pair
    int out_b = 1;
    int hidden_offset = 0;           ///< first scratch channel
    DenseNet g;
    /// Read the four inputs from channel raw_channel of layer r0 directly
    /// (only meaningful with r0 = 0, where that layer is the image).
    bool raw_input = false;
    int raw_channel = 0;
};

/// Writes g_net into layers r0+1 … r0+L_net+1 so that the output pair
/// difference at (i,j) equals g_net applied to the four input values read at
/// (i,j)+node_offsets(k).
inline void splice_dense_into_conv(ConvCanvas& c, const SpliceSpec& sp)
{
    sp.g.validate();
    if (sp.g.input_dim != 4) throw invalid_input("splice_dense_into_conv: network must have 4 inputs");
    const int L = sp.g.num_hidden();
    if (L < 1) throw invalid_input("splice_dense_into_conv: network needs a hidden layer");
    if (sp.r0 < 0 || sp.r0 + L + 1 > c.layers())
        throw invalid_input("splice_dense_into_conv: layers r0+1..r0+L_net+1 exceed the canvas");
    if (sp.raw_input && sp.r0 != 0) throw invalid_input("splice_dense_into_conv: raw input requires r0 = 0");
    const auto off = node_offsets(sp.k);
    const int reach = std::max(off[3][0], off[3][1]);
    if (c.layer(sp.r0 + 1).M < reach + 1)
        throw invalid_input("splice_dense_into_conv: filter at layer " + std::to_string(sp.r0 + 1) +
                            " too small to reach offset " + std::to_string(reach + 1));

    // Hidden layers.
    for (int q = 1; q <= L; ++q) {
        const int r = sp.r0 + q;
        const DenseLayer& h = sp.g.hidden[q - 1];
        ConvLayer& cl = c.layer(r);
        for (int i = 0; i < h.out; ++i) {
            const int ch = sp.hidden_offset + i;
            c.claim(r, ch);
            cl.bias[ch] = h.bias[i];
            if (q == 1) {
                for (int m = 0; m < 4; ++m) {
                    const double w = h.w(i, m);
                    const int t1 = off[m][0], t2 = off[m][1];
                    if (sp.raw_input) {
                        cl.w(t1, t2, sp.raw_channel, ch) += w;
                    } else {
                        cl.w(t1, t2, sp.in_channels[2 * m], ch) += w;
                        cl.w(t1, t2, sp.in_channels[2 * m + 1], ch) -= w;
                    }
                }
            } else {
                for (int j = 0; j < h.in; ++j) cl.w(0, 0, sp.hidden_offset + j, ch) = h.w(i, j);
            }
        }
    }
    // Output pair: (σ(g), σ(−g)).
    const int r = sp.r0 + L + 1;
    ConvLayer& cl = c.layer(r);
    c.claim(r, sp.out_a);
    c.claim(r, sp.out_b);
    cl.bias[sp.out_a] = sp.g.out_bias;
    cl.bias[sp.out_b] = -sp.g.out_bias;
    for (int j = 0; j < sp.g.last_width(); ++j) {
        cl.w(0, 0, sp.hidden_offset + j, sp.out_a) = sp.g.out_weights[j];
        cl.w(0, 0, sp.hidden_offset + j, sp.out_b) = -sp.g.out_weights[j];
    }
}

/// Convolutional network m_net with conv_forward(m_net, x) = the max-pooling
/// model of `tree` for every image with 2^l ≤ min{d1,d2}.
inline ConvNet build_cnn_from_hierarchy(const DenseHierTree& tree, const EmbeddingPlan& plan)
{
    tree.validate();
    if (tree.level != plan.l) throw invalid_input("build_cnn_from_hierarchy: tree level differs from plan");
    for (const auto& row : tree.nodes)
        for (const auto& g : row) {
            if (g.num_hidden() != plan.L_net)
                throw invalid_input("build_cnn_from_hierarchy: node network depth differs from L_net");
            for (int w : g.widths())
                if (w > plan.r_net) throw invalid_input("build_cnn_from_hierarchy: node width exceeds r_net");
        }

    ConvCanvas c = make_canvas(plan);
    const int l = plan.l;

    // birth[p]: layer at which pair p is first written.
    std::vector<int> birth(plan.pair_count(), 0);
    write_identity_pair(c, 1, 0, -1, 0, 1);
    birth[0] = 1;

    for (int k = 1; k <= l; ++k)
        for (int s = 1; s <= static_cast<int>(pow4(l - k)); ++s) {
            SpliceSpec sp;
            sp.r0 = plan.input_layer(k, s);
            sp.k = k;
            sp.g = tree.node(k, s);
            sp.hidden_offset = plan.pair_channels;
            const int p_out = plan.node_pair(k, s);
            sp.out_a = 2 * p_out;
            sp.out_b = 2 * p_out + 1;
            if (k == 1 && sp.r0 == 0) {
                sp.raw_input = true;
                sp.raw_channel = 0;
            } else {
                for (int m = 0; m < 4; ++m) {
                    const int p_in = k == 1 ? 0 : plan.node_pair(k - 1, 4 * (s - 1) + m + 1);
                    sp.in_channels[2 * m] = 2 * p_in;
                    sp.in_channels[2 * m + 1] = 2 * p_in + 1;
                }
            }
            splice_dense_into_conv(c, sp);
            birth[p_out] = plan.output_layer(k, s);
        }

    for (int r = 2; r <= plan.l_net; ++r)
        for (int p = 0; p < plan.pair_count(); ++p)
            if (birth[p] != 0 && birth[p] < r) write_identity_pair(c, r, 2 * p, 2 * p + 1, 2 * p, 2 * p + 1);

    const int p_final = plan.node_pair(l, 1);
    c.net.out_weights[2 * p_final] = 1.0;
    c.net.out_weights[2 * p_final + 1] = -1.0;
    return std::move(c.net);
}

} // namespace hmcnn

#endif
