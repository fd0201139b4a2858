#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "wbe/date.hpp"
#include "wbe/series.hpp"

namespace testing {

inline wbe::TimePoint day(int y, unsigned m, unsigned d) { return wbe::TimePoint::from_ymd(y, m, d); }

inline std::vector<double> normals(std::mt19937_64& rng, std::size_t n, double mean = 0.0, double sd = 1.0) {
    std::normal_distribution<double> dist(mean, sd);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = dist(rng);
    }
    return v;
}

/// AR(p) path with a burn-in of 200 steps.
inline std::vector<double> ar_path(std::mt19937_64& rng, std::span<const double> phi, double c, std::size_t n,
                                   double sd = 1.0) {
    std::normal_distribution<double> eps(0.0, sd);
    const std::size_t burn = 200;
    std::vector<double> y(n + burn, 0.0);
    for (std::size_t t = phi.size(); t < y.size(); ++t) {
        double v = c + eps(rng);
        for (std::size_t j = 0; j < phi.size(); ++j) {
            v += phi[j] * y[t - 1 - j];
        }
        y[t] = v;
    }
    return {y.begin() + static_cast<long>(burn), y.end()};
}

inline std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> eps(0.0, 1.0);
    std::vector<double> y(n);
    double level = 0.0;
    for (auto& v : y) {
        level += eps(rng);
        v = level;
    }
    return y;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
