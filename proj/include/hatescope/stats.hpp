#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hatescope/error.hpp"
#include "hatescope/rng.hpp"

namespace hatescope::stats {

/// Linear-interpolated quantile of sorted data (Hyndman-Fan type 7).
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw DataError("quantile of empty data");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline double sample_mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct MeanCi {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Bootstrap percentile interval for the mean.
inline MeanCi mean_ci(std::span<const double> values, double level = 0.95, std::size_t resamples = 2000,
                      std::uint64_t seed = 0) {
    if (values.empty()) throw DataError("mean_ci needs at least one value");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
    if (resamples == 0) throw ConfigError("resamples must be at least 1");
    MeanCi r;
    r.mean = sample_mean(values);
    if (values.size() == 1) {
        r.lo = r.hi = r.mean;
        return r;
    }
    Rng rng = make_rng(seed);
    std::vector<double> means(resamples);
    const std::size_t n = values.size();
    for (auto& m : means) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += values[uniform_index(rng, n)];
        m = s / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double alpha = (1.0 - level) / 2.0;
    // Resampled means can round a hair past a constant sample; keep lo <= mean <= hi.
    r.lo = std::min(quantile_sorted(means, alpha), r.mean);
    r.hi = std::max(quantile_sorted(means, 1.0 - alpha), r.mean);
    return r;
}

/// Midranks (1-based) of the pooled data; ties share the average rank.
inline std::vector<double> midranks(std::span<const double> pooled, double* tie_term = nullptr) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> ranks(n);
    double ties = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[idx[j + 1]] == pooled[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        const double t = static_cast<double>(j - i + 1);
        ties += t * t * t - t;
        i = j + 1;
    }
    if (tie_term) *tie_term = ties;
    return ranks;
}

enum class MannWhitneyMethod { exact, normal };

struct MannWhitneyResult {
    /// U statistic of the first sample.
    double u = 0.0;
    double p_value = 1.0;
    MannWhitneyMethod method = MannWhitneyMethod::normal;
};

inline constexpr std::size_t kExactMannWhitneyMax = 8;

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// Two-sided Mann-Whitney U test. Exact enumeration of every split of the
/// pooled midranks when both samples have at most 8 values; otherwise the
/// normal approximation with tie and continuity corrections.
inline MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DataError("Mann-Whitney U needs two non-empty samples");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    double tie_term = 0.0;
    const auto ranks = midranks(pooled, &tie_term);
    double ra = 0.0;
    for (std::size_t i = 0; i < na; ++i) ra += ranks[i];

    MannWhitneyResult res;
    res.u = ra - static_cast<double>(na) * static_cast<double>(na + 1) / 2.0;
    const double mu = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
    const double observed = std::abs(res.u - mu);

    if (na <= kExactMannWhitneyMax && nb <= kExactMannWhitneyMax) {
        res.method = MannWhitneyMethod::exact;
        // Every choice of na positions out of n is equally likely under H0.
        // Ranks are multiples of 0.5, so the comparison uses a half-ulp slack.
        std::vector<int> pick(n, 0);
        std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(na), 1);
        std::uint64_t total = 0, extreme = 0;
        do {
            double r = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (pick[i]) r += ranks[i];
            }
            const double u = r - static_cast<double>(na) * static_cast<double>(na + 1) / 2.0;
            ++total;
            if (std::abs(u - mu) >= observed - 1e-9) ++extreme;
        } while (std::prev_permutation(pick.begin(), pick.end()));
        res.p_value = static_cast<double>(extreme) / static_cast<double>(total);
        return res;
    }

    res.method = MannWhitneyMethod::normal;
    const double dn = static_cast<double>(n);
    const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                       ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) {
        res.p_value = 1.0;
        return res;
    }
    const double z = std::max(0.0, observed - 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * normal_sf(z));
    return res;
}

/// Silverman's rule of thumb: 0.9 * min(sd, IQR / 1.34) * n^(-1/5). Falls
/// back to whichever spread is non-zero, and to 1.0 for constant data.
inline double silverman_bandwidth(std::span<const double> values) {
    if (values.empty()) throw DataError("bandwidth of empty data");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const double sd = sample_sd(s);
    const double iqr = (quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25)) / 1.34;
    double spread = std::min(sd, iqr);
    if (spread <= 0.0) spread = std::max(sd, iqr);
    if (spread <= 0.0) return 1.0;
    return 0.9 * spread * std::pow(static_cast<double>(s.size()), -0.2);
}

struct KdeCurve {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
};

inline constexpr std::size_t kKdeGridPoints = 512;
/// Grid padding in bandwidths beyond the data range. At 4h the Gaussian tail
/// outside the grid is ~6e-5, inside the 1e-3 integration tolerance.
inline constexpr double kKdeGridPadding = 4.0;

/// Gaussian kernel density at a single point.
inline double kde_at(std::span<const double> values, double bandwidth, double x) {
    double acc = 0.0;
    for (double v : values) {
        const double z = (x - v) / bandwidth;
        acc += std::exp(-0.5 * z * z);
    }
    return acc / (static_cast<double>(values.size()) * bandwidth * std::sqrt(2.0 * M_PI));
}

/// Gaussian KDE evaluated on an evenly spaced grid.
inline KdeCurve kde(std::span<const double> values, std::optional<double> bandwidth = std::nullopt,
                    std::size_t grid_points = kKdeGridPoints, double padding = kKdeGridPadding) {
    if (values.empty()) throw DataError("KDE needs at least one value");
    if (grid_points < 2) throw ConfigError("KDE grid needs at least 2 points");
    KdeCurve c;
    c.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(values);
    if (!(c.bandwidth > 0.0)) throw ConfigError("KDE bandwidth must be positive");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn - padding * c.bandwidth, hi = *mx + padding * c.bandwidth;
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    c.grid.resize(grid_points);
    c.density.resize(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double x = i + 1 == grid_points ? hi : lo + step * static_cast<double>(i);
        c.grid[i] = x;
        c.density[i] = kde_at(values, c.bandwidth, x);
    }
    return c;
}

inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += (x[i] - x[i - 1]) * (y[i] + y[i - 1]) / 2.0;
    return s;
}

}  // namespace hatescope::stats
