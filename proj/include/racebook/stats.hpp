#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace racebook {

struct TestResult {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

// Upper tail of the chi-square distribution; 1 when df == 0.
inline double chi_square_sf(double x, double df) {
    if (df <= 0.0 || x <= 0.0) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

// Pearson chi-square test of homogeneity for two count vectors over the same
// categories. Categories empty in both samples are dropped.
inline TestResult chi_square_homogeneity(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.size() != b.size()) throw std::invalid_argument("chi_square_homogeneity: category count mismatch");
    const double na = std::accumulate(a.begin(), a.end(), 0.0);
    const double nb = std::accumulate(b.begin(), b.end(), 0.0);
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("chi_square_homogeneity: empty sample");
    const double n = na + nb;
    double stat = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double col = static_cast<double>(a[i]) + static_cast<double>(b[i]);
        if (col == 0.0) continue;
        ++k;
        const double ea = na * col / n, eb = nb * col / n;
        stat += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
    }
    const double df = k > 1 ? static_cast<double>(k - 1) : 0.0;
    return {stat, df, chi_square_sf(stat, df)};
}

// Pearson goodness of fit against expected probabilities.
inline TestResult chi_square_gof(std::span<const std::uint64_t> counts, std::span<const double> probs) {
    if (counts.size() != probs.size()) throw std::invalid_argument("chi_square_gof: size mismatch");
    const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
    double stat = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = n * probs[i];
        stat += (counts[i] - e) * (counts[i] - e) / e;
    }
    const double df = static_cast<double>(counts.size()) - 1.0;
    return {stat, df, chi_square_sf(stat, df)};
}

// Kruskal-Wallis H with tie correction; chi-square approximation for p.
inline TestResult kruskal_wallis(std::span<const std::vector<double>> groups) {
    struct Obs { double v; std::size_t g; };
    std::vector<Obs> all;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (double v : groups[g]) all.push_back({v, g});
    const auto n = static_cast<double>(all.size());
    if (groups.size() < 2 || all.size() < 2) throw std::invalid_argument("kruskal_wallis: need two non-empty groups");
    std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.v < b.v; });
    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].v == all[i].v) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) rank_sum[all[k].g] += avg;
        const auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    double h = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g)
        if (!groups[g].empty()) h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
    const double correction = 1.0 - tie_term / (n * n * n - n);
    if (correction <= 0.0) return {0.0, static_cast<double>(groups.size() - 1), 1.0};
    h /= correction;
    const double df = static_cast<double>(groups.size() - 1);
    return {h, df, chi_square_sf(h, df)};
}

struct Summary {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation
};

inline Summary summarize(std::span<const double> xs) {
    Summary s;
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

}  // namespace racebook
