#ifndef HMCNN_HIERARCHY_HPP
#define HMCNN_HIERARCHY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hmcnn/dense.hpp"
#include "hmcnn/image.hpp"

namespace hmcnn {

/// A node g_{k,s}: R^4 → R. Declared domain [−2,2]^4.
using NodeFn = std::function<double(const std::array<double, 4>&)>;

/// Number of nodes of a level-l tree: Σ_k 4^{l−k} = (4^l − 1)/3.
constexpr long long node_count(int l) noexcept { return ((1LL << (2 * l)) - 1) / 3; }

constexpr long long pow4(int e) noexcept { return 1LL << (2 * e); }

/// Hierarchical model of level l. nodes[k−1][s−1] is g_{k,s},
/// k = 1..l, s = 1..4^{l−k}.
///
/// Argument order. For k ≥ 2, f_{k,s} feeds g_{k,s} the four quadrants in the
/// order: rows/cols (top,left), (shifted in the first index, left),
/// (top, shifted in the second index), (both shifted). At k = 1 the four
/// pixels are passed as (x_{1,1}, x_{1,2}, x_{2,1}, x_{2,2}), i.e. the
/// second-index neighbour comes second.
struct HierTree {
    int level = 0;
    std::vector<std::vector<NodeFn>> nodes;

    HierTree() = default;
    HierTree(int l, std::vector<std::vector<NodeFn>> g) : level{l}, nodes{std::move(g)} { validate(); }

    /// Tree whose every node is `g`.
    static HierTree uniform(int l, const NodeFn& g)
    {
        if (l < 1) throw invalid_input("HierTree: level must be positive");
        std::vector<std::vector<NodeFn>> nodes(l);
        for (int k = 1; k <= l; ++k) nodes[k - 1].assign(static_cast<std::size_t>(pow4(l - k)), g);
        return HierTree{l, std::move(nodes)};
    }

    int side() const noexcept { return 1 << level; }

    const NodeFn& node(int k, int s) const { return nodes.at(k - 1).at(s - 1); }

    void validate() const
    {
        if (level < 1 || level > 14) throw invalid_input("HierTree: level out of range");
        if (static_cast<int>(nodes.size()) != level) throw invalid_input("HierTree: need one node row per level");
        for (int k = 1; k <= level; ++k) {
            if (static_cast<long long>(nodes[k - 1].size()) != pow4(level - k))
                throw invalid_input("HierTree: level " + std::to_string(k) + " needs 4^(l-k) nodes");
            for (const auto& g : nodes[k - 1])
                if (!g) throw invalid_input("HierTree: empty node function");
        }
    }
};

namespace detail {

inline double eval_node(const HierTree& tree, const Grid& x, int k, int s, int i0, int j0)
{
    if (k == 1)
        return tree.node(1, s)({x(i0, j0), x(i0, j0 + 1), x(i0 + 1, j0), x(i0 + 1, j0 + 1)});
    const int h = 1 << (k - 1);
    const int c = 4 * (s - 1);
    return tree.node(k, s)({eval_node(tree, x, k - 1, c + 1, i0, j0), eval_node(tree, x, k - 1, c + 2, i0 + h, j0),
                            eval_node(tree, x, k - 1, c + 3, i0, j0 + h),
                            eval_node(tree, x, k - 1, c + 4, i0 + h, j0 + h)});
}

} // namespace detail

/// f_{l,1} of a 2^l × 2^l patch.
inline double eval_tree(const HierTree& tree, const Grid& patch)
{
    tree.validate();
    if (patch.rows() != tree.side() || patch.cols() != tree.side())
        throw invalid_input("eval_tree: patch must be " + std::to_string(tree.side()) + "x" +
                            std::to_string(tree.side()));
    for (double v : patch.values())
        if (!std::isfinite(v)) throw invalid_input("eval_tree: non-finite patch entry");
    return detail::eval_node(tree, patch, tree.level, 1, 0, 0);
}

/// 1-based position (i,j) of a maximum.
struct PatchPosition {
    int i = 1;
    int j = 1;
};

/// max over (i,j) with (i,j) + {0,…,2^l−1}^2 inside the grid of f_{l,1}(x_{(i,j)+I}).
/// Ties resolve to the first position in row-major order.
inline double eval_maxpool(const HierTree& tree, const Image& img, PatchPosition* where = nullptr)
{
    tree.validate();
    const int side = tree.side();
    if (side > std::min(img.d1(), img.d2()))
        throw invalid_input("eval_maxpool: patch side " + std::to_string(side) + " exceeds image");
    double best = -std::numeric_limits<double>::infinity();
    PatchPosition arg{};
    for (int i = 0; i + side <= img.d1(); ++i)
        for (int j = 0; j + side <= img.d2(); ++j) {
            const double v = detail::eval_node(tree, img.pixels(), tree.level, 1, i, j);
            if (v > best) {
                best = v;
                arg = {i + 1, j + 1};
            }
        }
    if (where) *where = arg;
    return best;
}

/// Smoothness constraint metadata; C1 and C2 are not checked against the nodes.
struct SmoothnessSpec {
    double p1 = 1.0;
    double p2 = 1.0;
    double C1 = 1.0;
    double C2 = 1.0;

    void validate() const
    {
        if (!(p1 >= 1.0) || !(p2 >= 1.0) || std::isinf(p1) || std::isinf(p2))
            throw invalid_input("SmoothnessSpec: p1, p2 must lie in [1, inf)");
        if (!(C1 > 0.0) || !(C2 > 0.0)) throw invalid_input("SmoothnessSpec: C1, C2 must be positive");
    }
};

using OuterFn = std::function<double(std::span<const double>)>;

/// m(x) = g(m_1(x), …, m_{d*}(x)) with every m_a a max-pooling model over a
/// level-l tree.
struct HierarchyModel {
    std::vector<HierTree> trees;
    OuterFn outer;

    int order() const noexcept { return static_cast<int>(trees.size()); }
    int level() const noexcept { return trees.empty() ? 0 : trees[0].level; }

    void validate() const
    {
        if (trees.empty()) throw invalid_input("HierarchyModel: needs at least one tree");
        for (const auto& t : trees) {
            t.validate();
            if (t.level != trees[0].level) throw invalid_input("HierarchyModel: trees differ in level");
        }
        if (!outer) throw invalid_input("HierarchyModel: missing outer function");
    }
};

inline double eval_model(const HierarchyModel& model, const Image& img)
{
    model.validate();
    std::vector<double> u;
    u.reserve(model.trees.size());
    for (const auto& t : model.trees) u.push_back(eval_maxpool(t, img));
    return model.outer(std::span<const double>(u));
}

/// √t·(2C+1)^l·max{max_node_dev, outer_dev}.
inline double lemma4_bound(int t, int l, double C, double max_node_dev, double outer_dev)
{
    if (t < 1 || l < 1) throw invalid_input("lemma4_bound: t and l must be positive");
    if (!(C > 0.0)) throw invalid_input("lemma4_bound: C must be positive");
    if (!(max_node_dev >= 0.0) || !(outer_dev >= 0.0)) throw invalid_input("lemma4_bound: negative deviation");
    return std::sqrt(static_cast<double>(t)) * std::pow(2.0 * C + 1.0, l) * std::max(max_node_dev, outer_dev);
}

// Node constructors.

inline NodeFn constant_node(double c)
{
    return [c](const std::array<double, 4>&) { return c; };
}

inline NodeFn affine_node(std::array<double, 4> w, double b)
{
    return [w, b](const std::array<double, 4>& u) { return w[0] * u[0] + w[1] * u[1] + w[2] * u[2] + w[3] * u[3] + b; };
}

inline NodeFn mean_node()
{
    return [](const std::array<double, 4>& u) { return (u[0] + u[1] + u[2] + u[3]) / 4.0; };
}

inline NodeFn max_node()
{
    return [](const std::array<double, 4>& u) { return std::max(std::max(u[0], u[1]), std::max(u[2], u[3])); };
}

inline NodeFn product_node()
{
    return [](const std::array<double, 4>& u) { return u[0] * u[1] * u[2] * u[3]; };
}

/// Node computed by a dense network with 4 inputs.
inline NodeFn dense_node(DenseNet net)
{
    net.validate();
    if (net.input_dim != 4) throw invalid_input("dense_node: network must have 4 inputs");
    auto p = std::make_shared<const DenseNet>(std::move(net));
    return [p](const std::array<double, 4>& u) { return dense_forward<double>(*p, std::span<const double>(u)); };
}

/// Hierarchical tree whose nodes are dense networks. Kept separately from
/// HierTree so that the networks stay inspectable (embedding, extended
/// precision evaluation).
struct DenseHierTree {
    int level = 0;
    std::vector<std::vector<DenseNet>> nodes; // nodes[k−1][s−1]

    const DenseNet& node(int k, int s) const { return nodes.at(k - 1).at(s - 1); }

    void validate() const
    {
        if (level < 1) throw invalid_input("DenseHierTree: level must be positive");
        if (static_cast<int>(nodes.size()) != level) throw invalid_input("DenseHierTree: need one row per level");
        for (int k = 1; k <= level; ++k) {
            if (static_cast<long long>(nodes[k - 1].size()) != pow4(level - k))
                throw invalid_input("DenseHierTree: level " + std::to_string(k) + " needs 4^(l-k) nodes");
            for (const auto& n : nodes[k - 1]) {
                n.validate();
                if (n.input_dim != 4) throw invalid_input("DenseHierTree: node networks need 4 inputs");
            }
        }
    }

    HierTree to_tree() const
    {
        validate();
        std::vector<std::vector<NodeFn>> g(level);
        for (int k = 1; k <= level; ++k)
            for (const auto& n : nodes[k - 1]) g[k - 1].push_back(dense_node(n));
        return HierTree{level, std::move(g)};
    }
};

/// Random dense tree: every node has L_net hidden layers of width r_net.
inline DenseHierTree make_dense_tree(int l, int L_net, int r_net, Rng& rng)
{
    DenseHierTree t;
    t.level = l;
    t.nodes.resize(l);
    for (int k = 1; k <= l; ++k)
        for (long long s = 0; s < pow4(l - k); ++s)
            t.nodes[k - 1].push_back(make_dense(4, std::vector<int>(L_net, r_net), rng));
    return t;
}

namespace detail {

template <class Real>
Real eval_dense_node(const DenseHierTree& tree, const Grid& x, int k, int s, int i0, int j0)
{
    std::array<Real, 4> u;
    if (k == 1) {
        u = {static_cast<Real>(x(i0, j0)), static_cast<Real>(x(i0, j0 + 1)), static_cast<Real>(x(i0 + 1, j0)),
             static_cast<Real>(x(i0 + 1, j0 + 1))};
    } else {
        const int h = 1 << (k - 1);
        const int c = 4 * (s - 1);
        u = {eval_dense_node<Real>(tree, x, k - 1, c + 1, i0, j0),
             eval_dense_node<Real>(tree, x, k - 1, c + 2, i0 + h, j0),
             eval_dense_node<Real>(tree, x, k - 1, c + 3, i0, j0 + h),
             eval_dense_node<Real>(tree, x, k - 1, c + 4, i0 + h, j0 + h)};
    }
    return dense_forward<Real>(tree.node(k, s), std::span<const Real>(u));
}

} // namespace detail

/// eval_maxpool for a dense tree, evaluated in arithmetic type Real.
template <class Real = double>
Real eval_maxpool_dense(const DenseHierTree& tree, const Image& img)
{
    tree.validate();
    const int side = 1 << tree.level;
    if (side > std::min(img.d1(), img.d2())) throw invalid_input("eval_maxpool_dense: patch exceeds image");
    Real best = -std::numeric_limits<Real>::infinity();
    for (int i = 0; i + side <= img.d1(); ++i)
        for (int j = 0; j + side <= img.d2(); ++j)
            best = std::max(best, detail::eval_dense_node<Real>(tree, img.pixels(), tree.level, 1, i, j));
    return best;
}

} // namespace hmcnn

#endif
