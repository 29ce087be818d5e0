#ifndef HMCNN_SYNTH_HPP
#define HMCNN_SYNTH_HPP

// Synthetic shape images. Coordinates are continuous: x runs along the first
// image index i, y along the second index j, the image covers [0,d1]×[0,d2]
// and pixel (i,j) (0-based) has its centre at (i+0.5, j+0.5).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmcnn/image.hpp"
#include "hmcnn/rng.hpp"

namespace hmcnn {

enum class ShapeKind { circle, square, triangle };

inline const char* to_string(ShapeKind k) noexcept
{
    switch (k) {
    case ShapeKind::circle: return "circle";
    case ShapeKind::square: return "square";
    case ShapeKind::triangle: return "triangle";
    }
    return "?";
}

struct ShapeInstance {
    ShapeKind kind = ShapeKind::circle;
    double cx = 0.0; ///< centre (centroid for triangles), first axis
    double cy = 0.0; ///< second axis
    double area = 0.0;
    double rotation = 0.0; ///< radians; ignored for circles
    double grey = 1.0;

    double circle_radius() const { return std::sqrt(area / std::numbers::pi); }
    double square_side() const { return std::sqrt(area); }
    double triangle_side() const { return std::sqrt(4.0 * area / std::sqrt(3.0)); }

    /// Corners of a square or triangle, counter-clockwise.
    std::vector<std::array<double, 2>> vertices() const
    {
        std::vector<std::array<double, 2>> v;
        if (kind == ShapeKind::square) {
            const double h = square_side() / 2.0;
            const double c = std::cos(rotation), s = std::sin(rotation);
            for (auto [u, w] : {std::array<double, 2>{-h, -h}, {h, -h}, {h, h}, {-h, h}})
                v.push_back({cx + c * u - s * w, cy + s * u + c * w});
        } else if (kind == ShapeKind::triangle) {
            const double R = triangle_side() / std::sqrt(3.0);
            for (int k = 0; k < 3; ++k) {
                const double a = rotation + 2.0 * std::numbers::pi * k / 3.0;
                v.push_back({cx + R * std::cos(a), cy + R * std::sin(a)});
            }
        }
        return v;
    }

    bool contains(double x, double y) const
    {
        if (kind == ShapeKind::circle) {
            const double r = circle_radius();
            return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
        }
        const auto v = vertices();
        for (std::size_t k = 0; k < v.size(); ++k) {
            const auto& a = v[k];
            const auto& b = v[(k + 1) % v.size()];
            if ((b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]) < 0.0) return false;
        }
        return true;
    }

    /// Extent relative to the centre: {min dx, max dx, min dy, max dy}.
    std::array<double, 4> relative_extent() const
    {
        if (kind == ShapeKind::circle) {
            const double r = circle_radius();
            return {-r, r, -r, r};
        }
        std::array<double, 4> e{0, 0, 0, 0};
        for (const auto& p : vertices()) {
            e[0] = std::min(e[0], p[0] - cx);
            e[1] = std::max(e[1], p[0] - cx);
            e[2] = std::min(e[2], p[1] - cy);
            e[3] = std::max(e[3], p[1] - cy);
        }
        return e;
    }

    bool inside(int d1, int d2) const
    {
        const auto e = relative_extent();
        return cx + e[0] >= 0.0 && cx + e[1] <= d1 && cy + e[2] >= 0.0 && cy + e[3] <= d2;
    }
};

/// Background 0; a pixel takes the grey of the last shape whose region
/// contains the pixel centre.
inline Image rasterize(const std::vector<ShapeInstance>& shapes, int d1, int d2)
{
    Grid g{d1, d2, 0.0};
    for (std::size_t n = 0; n < shapes.size(); ++n) {
        const auto& s = shapes[n];
        if (!s.inside(d1, d2)) throw invalid_input("rasterize: shape " + std::to_string(n) + " leaves the image");
        if (!(s.grey > 0.0 && s.grey <= 1.0)) throw invalid_input("rasterize: grey must lie in (0,1]");
        const auto e = s.relative_extent();
        const int i0 = std::max(0, static_cast<int>(std::floor(s.cx + e[0])));
        const int i1 = std::min(d1 - 1, static_cast<int>(std::ceil(s.cx + e[1])));
        const int j0 = std::max(0, static_cast<int>(std::floor(s.cy + e[2])));
        const int j1 = std::min(d2 - 1, static_cast<int>(std::ceil(s.cy + e[3])));
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j)
                if (s.contains(i + 0.5, j + 0.5)) g(i, j) = s.grey;
    }
    return Image{std::move(g)};
}

/// Fraction of s_old's area covered by s_new, from containment tests on a
/// grid of 4×4 sample points per unit pixel over s_old's bounding box.
inline double area_overlap_fraction(const ShapeInstance& s_new, const ShapeInstance& s_old)
{
    constexpr int sub = 4;
    const auto e = s_old.relative_extent();
    const int i0 = static_cast<int>(std::floor(s_old.cx + e[0]));
    const int i1 = static_cast<int>(std::ceil(s_old.cx + e[1]));
    const int j0 = static_cast<int>(std::floor(s_old.cy + e[2]));
    const int j1 = static_cast<int>(std::ceil(s_old.cy + e[3]));
    long long in_old = 0, in_both = 0;
    for (int a = i0 * sub; a < i1 * sub; ++a)
        for (int b = j0 * sub; b < j1 * sub; ++b) {
            const double x = (a + 0.5) / sub, y = (b + 0.5) / sub;
            if (!s_old.contains(x, y)) continue;
            ++in_old;
            if (s_new.contains(x, y)) ++in_both;
        }
    return in_old == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(in_old);
}

struct TaskConfig {
    int task = 1;
    int d1 = 32;
    int d2 = 32;
    double area_lo = 16.0;
    double area_hi = 64.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    int max_retries = 10000;
    double max_overlap = 0.01;

    void validate() const
    {
        if (task != 1 && task != 2) throw invalid_input("TaskConfig: task must be 1 or 2");
        if (d1 < 8 || d2 < 8) throw invalid_input("TaskConfig: images must be at least 8x8");
        if (!(area_lo > 0.0) || !(area_hi >= area_lo)) throw invalid_input("TaskConfig: bad area interval");
        // Two of the largest triangles must fit side by side.
        if (2.0 * std::sqrt(4.0 * area_hi / std::sqrt(3.0)) > std::min(d1, d2))
            throw invalid_input("TaskConfig: area_hi too large for the image");
        if (max_retries < 1) throw invalid_input("TaskConfig: max_retries must be positive");
    }
};

/// Circle probability of the first task, p = 1 − 0.5^{1/3}; square and
/// triangle each have q = 0.5^{1/3}/2, so P(no circle) = (2q)^3 = 1/2.
inline double task1_circle_probability() { return 1.0 - std::cbrt(0.5); }

struct Scene {
    std::vector<ShapeInstance> shapes;
    int label = 0;
};

class generation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void place_shape(ShapeInstance& s, const std::vector<ShapeInstance>& placed, const TaskConfig& cfg, Rng& rng,
                        std::size_t index)
{
    const auto e = s.relative_extent();
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        s.cx = rng.uniform(-e[0], cfg.d1 - e[1]);
        s.cy = rng.uniform(-e[2], cfg.d2 - e[3]);
        bool ok = true;
        for (const auto& old : placed)
            if (area_overlap_fraction(s, old) > cfg.max_overlap) {
                ok = false;
                break;
            }
        if (ok) return;
    }
    throw generation_error("placement retry cap exhausted (seed " + std::to_string(cfg.seed) + ", image " +
                           std::to_string(index) + ")");
}

} // namespace detail

/// Scene `index` of the dataset; depends only on (cfg, index).
inline Scene generate_scene(const TaskConfig& cfg, std::size_t index)
{
    Rng rng{derive_seed(cfg.seed, index)};
    const int count = cfg.task == 1 ? 3 : 2;
    std::vector<ShapeKind> kinds;
    for (int k = 0; k < count; ++k) {
        const double u = rng.uniform();
        if (cfg.task == 1) {
            const double p = task1_circle_probability();
            const double q = (1.0 - p) / 2.0;
            kinds.push_back(u < p ? ShapeKind::circle : u < p + q ? ShapeKind::square : ShapeKind::triangle);
        } else {
            kinds.push_back(u < 0.5 ? ShapeKind::circle : ShapeKind::triangle);
        }
    }
    std::vector<double> greys = cfg.task == 1 ? std::vector<double>{1.0 / 3.0, 2.0 / 3.0, 1.0}
                                              : std::vector<double>{0.5, 1.0};
    shuffle(std::span<double>(greys), rng);

    Scene sc;
    for (int k = 0; k < count; ++k) {
        ShapeInstance s;
        s.kind = kinds[k];
        s.grey = greys[k];
        s.area = rng.uniform(cfg.area_lo, cfg.area_hi);
        s.rotation = rng.uniform(0.0, 2.0 * std::numbers::pi);
        detail::place_shape(s, sc.shapes, cfg, rng, index);
        sc.shapes.push_back(s);
    }
    if (cfg.task == 1)
        sc.label = std::any_of(kinds.begin(), kinds.end(), [](ShapeKind k) { return k == ShapeKind::circle; }) ? 1 : 0;
    else
        sc.label = kinds[0] == kinds[1] ? 1 : 0;
    return sc;
}

inline std::vector<Scene> generate_scenes(const TaskConfig& cfg)
{
    cfg.validate();
    std::vector<Scene> out;
    out.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) out.push_back(generate_scene(cfg, i));
    return out;
}

inline LabeledDataset render_scenes(const std::vector<Scene>& scenes, int d1, int d2)
{
    std::vector<Image> images;
    std::vector<int> labels;
    images.reserve(scenes.size());
    for (const auto& sc : scenes) {
        images.push_back(rasterize(sc.shapes, d1, d2));
        labels.push_back(sc.label);
    }
    return LabeledDataset{std::move(images), std::move(labels)};
}

/// Three shapes, label 1 iff at least one is a circle.
inline LabeledDataset gen_task1(const TaskConfig& cfg)
{
    if (cfg.task != 1) throw invalid_input("gen_task1: config is not for task 1");
    if (cfg.n == 0) throw invalid_input("gen_task1: n must be positive");
    return render_scenes(generate_scenes(cfg), cfg.d1, cfg.d2);
}

/// Two shapes from {circle, triangle}, label 1 iff both are of the same kind.
inline LabeledDataset gen_task2(const TaskConfig& cfg)
{
    if (cfg.task != 2) throw invalid_input("gen_task2: config is not for task 2");
    if (cfg.n == 0) throw invalid_input("gen_task2: n must be positive");
    return render_scenes(generate_scenes(cfg), cfg.d1, cfg.d2);
}

inline LabeledDataset gen_task(const TaskConfig& cfg) { return cfg.task == 1 ? gen_task1(cfg) : gen_task2(cfg); }

/// Plain PGM ("P2"), width d2, height d1, max value 255.
inline void write_pgm(std::ostream& out, const Image& img)
{
    out << "P2\n" << img.d2() << ' ' << img.d1() << "\n255\n";
    for (int i = 0; i < img.d1(); ++i) {
        for (int j = 0; j < img.d2(); ++j) {
            if (j) out << ' ';
            out << static_cast<int>(std::lround(img.at(i, j) * 255.0));
        }
        out << '\n';
    }
}

inline void save_pgm(const Image& img, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_pgm(out, img);
}

} // namespace hmcnn

#endif
