#ifndef HMCNN_BOUNDS_HPP
#define HMCNN_BOUNDS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hmcnn/image.hpp"

namespace hmcnn {

/// π(s) = Σ_{i=1}^{l} 1{ s ≥ i + Σ_{r=l−i+1}^{l−1} 4^r·L_n }.
inline int pi_index(long long s, int l, long long L_n)
{
    int count = 0;
    for (int i = 1; i <= l; ++i) {
        long long threshold = i;
        for (int r = l - i + 1; r <= l - 1; ++r) threshold += (1LL << (2 * r)) * L_n;
        if (s >= threshold) ++count;
    }
    return count;
}

/// Filter sizes M_s = 2^{π(s)} for s = 1, …, (4^l−1)/3·L_n + l.
inline std::vector<int> filter_schedule(int l, long long L_n)
{
    if (l < 1 || l > 14 || L_n < 1) throw invalid_input("filter_schedule: need l in [1,14] and L_n >= 1");
    const long long layers = ((1LL << (2 * l)) - 1) / 3 * L_n + l;
    if (layers > 50'000'000) throw invalid_input("filter_schedule: schedule too long to materialise");
    std::vector<int> M(static_cast<std::size_t>(layers));
    for (long long s = 1; s <= layers; ++s) M[static_cast<std::size_t>(s - 1)] = 1 << pi_index(s, l, L_n);
    return M;
}

/// Network sizes of the approximation result.
struct ArchSchedule {
    long long L_n = 0;
    int l = 0;
    int t = 0;       // = d*
    long long L1 = 0;
    long long L2 = 0;
    std::vector<int> k1; // channels per convolutional layer
    std::vector<int> k2; // neurons per dense layer
    std::vector<int> M;
    double c1 = 1.0;
    int c2 = 1;
};

/// L_n = max{⌈c1·n^{4/(2(2p1+4))}⌉, ⌈c1·n^{d*/(2(2p2+d*))}⌉},
/// L1 = (4^l−1)/3·L_n + l, L2 = L_n, k^(1)_s = (2·4^l+4)/3 + c2, k^(2)_s = c2,
/// M_s = 2^{π(s)}.
inline ArchSchedule theorem1_schedule(double n, double p1, double p2, int d_star, int l, double c1 = 1.0, int c2 = 1)
{
    if (!(n > 1.0)) throw invalid_input("theorem1_schedule: n must exceed 1");
    if (!(p1 >= 1.0) || !(p2 >= 1.0)) throw invalid_input("theorem1_schedule: p1, p2 must be >= 1");
    if (d_star < 1 || l < 1) throw invalid_input("theorem1_schedule: d* and l must be positive");
    if (!(c1 > 0.0) || c2 < 1) throw invalid_input("theorem1_schedule: c1 > 0 and c2 >= 1 required");
    const double a = std::ceil(c1 * std::pow(n, 4.0 / (2.0 * (2.0 * p1 + 4.0))));
    const double b = std::ceil(c1 * std::pow(n, d_star / (2.0 * (2.0 * p2 + d_star))));
    ArchSchedule s;
    s.L_n = static_cast<long long>(std::max({a, b, 1.0}));
    s.l = l;
    s.t = d_star;
    s.c1 = c1;
    s.c2 = c2;
    s.M = filter_schedule(l, s.L_n);
    s.L1 = static_cast<long long>(s.M.size());
    s.L2 = s.L_n;
    const int width = static_cast<int>((2 * (1LL << (2 * l)) + 4) / 3) + c2;
    s.k1.assign(static_cast<std::size_t>(s.L1), width);
    s.k2.assign(static_cast<std::size_t>(s.L2), c2);
    return s;
}

/// max{n^{−p1/(2p1+4)}, n^{−p2/(2p2+d*)}}; with `squared` the exponents are
/// doubled (the L2 rate).
inline double rate(double n, double p1, double p2, int d_star, bool squared = false)
{
    if (!(n > 1.0)) throw invalid_input("rate: n must exceed 1");
    if (!(p1 >= 1.0) || !(p2 >= 1.0) || d_star < 1) throw invalid_input("rate: need p1, p2 >= 1 and d* >= 1");
    const double f = squared ? 2.0 : 1.0;
    return std::max(std::pow(n, -f * p1 / (2.0 * p1 + 4.0)), std::pow(n, -f * p2 / (2.0 * p2 + d_star)));
}

struct ComplexityReport {
    /// W_r for r = 1, …, L1+L2+2; the last entry is the total W.
    std::vector<long long> W_r;
    long long W = 0;
    int t = 0;
    int k_max = 0;
    int M_max = 0;
    long long L_max = 0;
    int d1 = 0;
    int d2 = 0;
    double n = 0.0;
    double eps = 0.0;
    double vc = 0.0;
    double log_covering = 0.0;
};

/// Counts the weights of g∘(f_1..f_t) layer by layer:
///   W_r = t·(Σ_{s≤r} M_s² k_s k_{s−1} + Σ_{s≤r} k_s),  k_0 = 1,   r ≤ L1
///   W_{L1+1} = W_{L1} + t·k_{L1}
///   W_{L1+1+r} = W_{L1+r} + (k_{L1+r} + 1)·k_{L1+r+1},  k_{L1+1} = t, k_{L1+1+r} = k^(2)_r
///   W = W_{L1+L2+2} = W_{L1+L2+1} + k_{L1+L2+1} + 1
inline ComplexityReport weight_count(int t, std::span<const int> k1, std::span<const int> M, std::span<const int> k2)
{
    if (t < 1) throw invalid_input("weight_count: t must be positive");
    if (k1.empty() || k1.size() != M.size()) throw invalid_input("weight_count: k1 and M must be nonempty, equal length");
    for (int v : k1)
        if (v < 1) throw invalid_input("weight_count: channel counts must be positive");
    for (int v : M)
        if (v < 1) throw invalid_input("weight_count: filter sizes must be positive");
    for (int v : k2)
        if (v < 0) throw invalid_input("weight_count: negative dense width");

    ComplexityReport rep;
    rep.t = t;
    long long conv = 0;
    long long prev = 1;
    for (std::size_t s = 0; s < k1.size(); ++s) {
        conv += static_cast<long long>(M[s]) * M[s] * k1[s] * prev + k1[s];
        prev = k1[s];
        rep.W_r.push_back(t * conv);
    }
    long long W = rep.W_r.back() + static_cast<long long>(t) * k1.back();
    rep.W_r.push_back(W);
    long long width = t;
    for (int k : k2) {
        W += (width + 1) * k;
        width = k;
        rep.W_r.push_back(W);
    }
    W += width + 1;
    rep.W_r.push_back(W);
    rep.W = W;
    rep.k_max = std::max({*std::max_element(k1.begin(), k1.end()), t,
                          k2.empty() ? 0 : *std::max_element(k2.begin(), k2.end())});
    rep.M_max = *std::max_element(M.begin(), M.end());
    rep.L_max = static_cast<long long>(std::max(k1.size(), k2.size()));
    return rep;
}

inline ComplexityReport weight_count(int t, const std::vector<int>& k1, const std::vector<int>& M,
                                     const std::vector<int>& k2)
{
    return weight_count(t, std::span<const int>(k1), std::span<const int>(M), std::span<const int>(k2));
}

/// 16·t·(L1+L2+2)²·k_max²·M_max²·log2(2e·t·(L1+L2+2)·k_max·d1·d2).
inline double vc_bound(int t, long long L1, long long L2, int k_max, int M_max, int d1, int d2)
{
    if (static_cast<long long>(d1) * d2 <= 1 || d1 < 1 || d2 < 1) throw invalid_input("vc_bound: need d1*d2 > 1");
    if (t < 1 || L1 < 0 || L2 < 0 || k_max < 1 || M_max < 1) throw invalid_input("vc_bound: arguments must be positive");
    const double L = static_cast<double>(L1 + L2 + 2);
    const double k = k_max, M = M_max;
    return 16.0 * t * L * L * k * k * M * M *
           std::log2(2.0 * std::numbers::e * t * L * k * static_cast<double>(d1) * static_cast<double>(d2));
}

/// log 3 + 2·vc·log(6e·c4·log n / ε) without precondition checks.
inline double covering_bound_unchecked(double vc, double c4, double n, double eps)
{
    return std::log(3.0) + 2.0 * vc * std::log(6.0 * std::numbers::e * c4 * std::log(n) / eps);
}

/// Bound on the log L1 covering number; requires ε ∈ (0,1) and c4·log n ≥ 2.
inline double covering_bound(double vc, double c4, double n, double eps)
{
    if (!(eps > 0.0 && eps < 1.0)) throw invalid_input("covering_bound: eps must lie in (0,1)");
    if (!(n > 1.0) || !(c4 * std::log(n) >= 2.0)) throw invalid_input("covering_bound: need c4*log(n) >= 2");
    if (!(vc >= 0.0)) throw invalid_input("covering_bound: vc must be nonnegative");
    return covering_bound_unchecked(vc, c4, n, eps);
}

/// Fills the VC and covering fields of a weight-count report.
inline ComplexityReport complexity_report(int t, const std::vector<int>& k1, const std::vector<int>& M,
                                          const std::vector<int>& k2, int d1, int d2, double n, double eps,
                                          double c4 = 1.0)
{
    ComplexityReport rep = weight_count(t, k1, M, k2);
    rep.d1 = d1;
    rep.d2 = d2;
    rep.n = n;
    rep.eps = eps;
    rep.vc = vc_bound(t, static_cast<long long>(k1.size()), static_cast<long long>(k2.size()), rep.k_max, rep.M_max,
                      d1, d2);
    rep.log_covering = covering_bound(rep.vc, c4, n, eps);
    return rep;
}

struct Lemma14Result {
    bool premise_holds = false;
    bool conclusion_holds = false;
};

/// Premise 2^m ≤ 2^L·(mR/w)^w and conclusion m ≤ L + w·log2(2R·log2 R),
/// both evaluated in log2 space. (mR/w)^w is read as 1 when w = 0.
inline Lemma14Result lemma14_check(double R, double m, double w, double L)
{
    Lemma14Result r;
    double rhs = L;
    if (w > 0.0) {
        if (m > 0.0) rhs += w * std::log2(m * R / w);
        else rhs = -std::numeric_limits<double>::infinity();
    }
    r.premise_holds = m <= rhs;
    r.conclusion_holds = m <= L + w * std::log2(2.0 * R * std::log2(R));
    return r;
}

struct AmGmResult {
    double log_lhs = 0.0; ///< Σ w_i·log(x_i/w_i)
    double log_rhs = 0.0; ///< (Σw)·log(Σx/Σw)
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// Π(x_i/w_i)^{w_i} ≤ (Σx_i/Σw_i)^{Σw_i}. `holds` allows 1e-12 relative
/// slack in log space.
inline AmGmResult weighted_am_gm_check(std::span<const double> x, std::span<const double> w)
{
    if (x.empty() || x.size() != w.size()) throw invalid_input("weighted_am_gm_check: vectors must be nonempty, equal length");
    double sx = 0.0, sw = 0.0;
    AmGmResult r;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(w[i] > 0.0)) throw invalid_input("weighted_am_gm_check: entries must be positive");
        r.log_lhs += w[i] * (std::log(x[i]) - std::log(w[i]));
        sx += x[i];
        sw += w[i];
    }
    r.log_rhs = sw * (std::log(sx) - std::log(sw));
    r.lhs = std::exp(r.log_lhs);
    r.rhs = std::exp(r.log_rhs);
    r.holds = r.log_lhs <= r.log_rhs + 1e-12 * std::max(1.0, std::abs(r.log_rhs));
    return r;
}

} // namespace hmcnn

#endif
