#ifndef HMCNN_TRAIN_HPP
#define HMCNN_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmcnn/bounds.hpp"
#include "hmcnn/conv.hpp"
#include "hmcnn/image.hpp"
#include "hmcnn/rng.hpp"

namespace hmcnn {

/// One architecture of the search grid. The convolutional part has filter
/// sizes 2, 4, …, 2^l, each repeated L_n times, with k1 channels per layer;
/// the dense head has L_n layers of k2 neurons.
struct GridPoint {
    int l = 2;
    int t = 1;
    int L_n = 1;
    int k1 = 2;
    int k2 = 5;

    std::vector<int> channels() const { return std::vector<int>(static_cast<std::size_t>(l) * L_n, k1); }
    std::vector<int> windows() const
    {
        std::vector<int> M;
        for (int e = 1; e <= l; ++e)
            for (int r = 0; r < L_n; ++r) M.push_back(1 << e);
        return M;
    }
    std::vector<int> dense_widths() const { return std::vector<int>(L_n, k2); }

    long long parameter_count() const { return weight_count(t, channels(), windows(), dense_widths()).W; }

    std::string label() const
    {
        return "l=" + std::to_string(l) + " t=" + std::to_string(t) + " L_n=" + std::to_string(L_n) +
               " k1=" + std::to_string(k1) + " k2=" + std::to_string(k2);
    }

    friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct ArchitectureGrid {
    std::vector<int> l{2, 3};
    std::vector<int> t{1, 2};
    std::vector<int> L_n{1};
    std::vector<int> k1{2, 4};
    std::vector<int> k2{5};

    /// Points in nested order over l, t, L_n, k1, k2 (k2 fastest).
    std::vector<GridPoint> points() const
    {
        std::vector<GridPoint> out;
        for (int a : l)
            for (int b : t)
                for (int c : L_n)
                    for (int d : k1)
                        for (int e : k2) out.push_back({a, b, c, d, e});
        return out;
    }

    static ArchitectureGrid desk() { return {}; }
    static ArchitectureGrid full() { return {{2, 3, 4}, {1, 2}, {1, 2, 3}, {2, 4, 8}, {5, 10}}; }
};

struct TrainConfig {
    ArchitectureGrid grid = ArchitectureGrid::desk();
    double step = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 200;
    int batch = 32;
    double c4 = 1.0;
    /// Parameter cap; 0 means "size of the data set being fitted".
    long long cap = 0;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (grid.points().empty()) throw invalid_input("TrainConfig: empty architecture grid");
        if (!(step > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0))
            throw invalid_input("TrainConfig: invalid optimizer settings");
        if (epochs < 1 || batch < 1) throw invalid_input("TrainConfig: epochs and batch must be positive");
        if (!(c4 > 0.0) || cap < 0) throw invalid_input("TrainConfig: c4 must be positive, cap nonnegative");
    }

    /// β_n = max{1, c4·log n}.
    double truncation(std::size_t n) const { return std::max(1.0, c4 * std::log(static_cast<double>(n))); }
};

class training_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FittedEstimate {
    CompositeNet net;
    double beta = 1.0;
    GridPoint point;
    std::vector<double> epoch_losses; ///< mean squared error per epoch, measured during the pass
    double train_loss = 0.0;          ///< mean squared error on the training data after fitting

    /// η_n(x), untruncated.
    double raw(const Image& img) const { return composite_forward<double>(net, img); }
    /// T_β η_n(x).
    double eta(const Image& img) const { return truncate(raw(img), beta); }
};

inline double mean_squared_error(const CompositeNet& net, const LabeledDataset& ds)
{
    double s = 0.0;
    for (std::size_t k = 0; k < ds.size(); ++k) {
        const double e = composite_forward<double>(net, ds.image(k)) - ds.label(k);
        s += e * e;
    }
    return s / static_cast<double>(ds.size());
}

/// Least-squares fit over the composite class with the given architecture,
/// minimised by Adam on mini-batches.
inline FittedEstimate train_lsq(const LabeledDataset& ds, const GridPoint& arch, const TrainConfig& cfg,
                                const std::function<void(int, double)>& on_epoch = {})
{
    cfg.validate();
    if (ds.size() == 0) throw invalid_input("train_lsq: empty dataset");
    const long long cap = cfg.cap > 0 ? cfg.cap : static_cast<long long>(ds.size());
    if (arch.parameter_count() > cap)
        throw invalid_input("train_lsq: " + arch.label() + " has " + std::to_string(arch.parameter_count()) +
                            " parameters, cap is " + std::to_string(cap));
    for (int M : arch.windows())
        if (M > std::min(ds.d1(), ds.d2())) throw invalid_input("train_lsq: filter exceeds image for " + arch.label());

    Rng init{derive_seed(cfg.seed, 1)};
    Rng order{derive_seed(cfg.seed, 2)};
    FittedEstimate est;
    est.point = arch;
    est.beta = cfg.truncation(ds.size());
    est.net = make_composite(arch.t, arch.channels(), arch.windows(), arch.dense_widths(), init);

    std::vector<double> theta = est.net.flatten();
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    CompositeNet grad = est.net.zeros_like();
    long long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(std::span<std::size_t>(idx), order);
        double loss = 0.0;
        for (std::size_t b0 = 0; b0 < idx.size(); b0 += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t b1 = std::min(idx.size(), b0 + static_cast<std::size_t>(cfg.batch));
            const double scale = 2.0 / static_cast<double>(b1 - b0);
            grad = est.net.zeros_like();
            for (std::size_t q = b0; q < b1; ++q) {
                const std::size_t k = idx[q];
                const CompositeTape tape = composite_record(est.net, ds.image(k));
                const double r = tape.output - ds.label(k);
                loss += r * r;
                composite_backward(est.net, tape, scale * r, grad);
            }
            const std::vector<double> g = grad.flatten();
            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (std::size_t j = 0; j < theta.size(); ++j) {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                theta[j] -= cfg.step * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg.adam_eps);
            }
            est.net.unflatten(theta);
        }
        loss /= static_cast<double>(ds.size());
        if (!std::isfinite(loss))
            throw training_error("training diverged (non-finite loss) at epoch " + std::to_string(epoch + 1) +
                                 " for " + arch.label());
        est.epoch_losses.push_back(loss);
        if (on_epoch) on_epoch(epoch + 1, loss);
    }
    est.train_loss = mean_squared_error(est.net, ds);
    return est;
}

/// 1 iff T_β η_n(x) ≥ 1/2.
inline int plugin_classify(const FittedEstimate& est, const Image& img) { return est.eta(img) >= 0.5 ? 1 : 0; }

using Classifier = std::function<int(const Image&)>;

/// (1/N)·Σ 1{f(X_i) ≠ Y_i}.
inline double empirical_risk(const Classifier& clf, const LabeledDataset& test)
{
    if (test.size() == 0) throw invalid_input("empirical_risk: empty test set");
    std::size_t wrong = 0;
    for (std::size_t k = 0; k < test.size(); ++k)
        if (clf(test.image(k)) != test.label(k)) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(test.size());
}

inline double empirical_risk(const FittedEstimate& est, const LabeledDataset& test)
{
    return empirical_risk([&est](const Image& x) { return plugin_classify(est, x); }, test);
}

/// Predicts the majority training label (ties give 1).
inline Classifier constant_baseline(const LabeledDataset& train)
{
    const int label = train.label_frequency() >= 0.5 ? 1 : 0;
    return [label](const Image&) { return label; };
}

struct GridResult {
    GridPoint point;
    long long parameters = 0;
    bool admissible = false;
    double validation_risk = std::numeric_limits<double>::quiet_NaN();
    double train_loss = std::numeric_limits<double>::quiet_NaN();
};

struct Selection {
    FittedEstimate estimate; ///< winner retrained on all data
    std::size_t winner = 0;  ///< index into `grid`
    std::vector<GridResult> grid;
    std::size_t n_train = 0;
    std::size_t n_valid = 0;
};

/// Sample splitting: fit every admissible grid point on the first ⌊4n/5⌋
/// examples, pick the lowest validation misclassification risk (first in
/// grid order on ties) and refit it on all n examples. A point is admissible
/// when its parameter count does not exceed the size of the split it is
/// fitted on (or cfg.cap when set).
inline Selection model_select(const LabeledDataset& ds, const TrainConfig& cfg,
                              const std::function<void(const GridResult&)>& on_point = {})
{
    cfg.validate();
    if (ds.size() < 5) throw invalid_input("model_select: need at least 5 examples");
    Selection sel;
    sel.n_train = ds.size() * 4 / 5;
    sel.n_valid = ds.size() - sel.n_train;
    const LabeledDataset train = ds.slice(0, sel.n_train);
    const LabeledDataset valid = ds.slice(sel.n_train, ds.size());
    const long long cap = cfg.cap > 0 ? cfg.cap : static_cast<long long>(sel.n_train);

    const auto points = cfg.grid.points();
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t g = 0; g < points.size(); ++g) {
        GridResult r;
        r.point = points[g];
        r.parameters = points[g].parameter_count();
        bool fits = true;
        for (int M : points[g].windows()) fits = fits && M <= std::min(ds.d1(), ds.d2());
        r.admissible = fits && r.parameters <= cap;
        if (r.admissible) {
            TrainConfig c = cfg;
            c.seed = derive_seed(cfg.seed, 1000 + g);
            c.cap = cap;
            const FittedEstimate est = train_lsq(train, points[g], c);
            r.train_loss = est.train_loss;
            r.validation_risk = empirical_risk(est, valid);
            if (r.validation_risk < best) {
                best = r.validation_risk;
                sel.winner = g;
                any = true;
            }
        }
        sel.grid.push_back(r);
        if (on_point) on_point(r);
    }
    if (!any) throw invalid_input("model_select: no grid point satisfies the parameter cap");
    sel.estimate = train_lsq(ds, points[sel.winner], cfg);
    return sel;
}

/// Sample quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q)
{
    if (v.empty()) throw invalid_input("quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct RiskSummary {
    double median = 0.0;
    double iqr = 0.0;
};

inline RiskSummary summarize(const std::vector<double>& risks)
{
    return {quantile(risks, 0.5), quantile(risks, 0.75) - quantile(risks, 0.25)};
}

} // namespace hmcnn

#endif
