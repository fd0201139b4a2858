#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wbe/series.hpp"

namespace wbe::smoothing {

enum class SmootherMethod { Sma, Loess };

struct SmootherSpec {
    SmootherMethod method = SmootherMethod::Sma;
    int window_k = 3;       // SMA, odd
    int neighbors_kl = 11;  // LOESS, >= 3
};

/// Centered moving average over k (odd) points. The first and last (k-1)/2 entries are missing.
RegularSeries sma(const RegularSeries& s, int k);

/// Degree-1 local regression with tricube weights over the k_L nearest neighbours, evaluated
/// at the input dates.
ScatteredSeries loess(const ScatteredSeries& s, int k_l);

/// LOESS evaluated on a regular grid. Grid nodes outside the data range are left missing.
RegularSeries loess_on_grid(const ScatteredSeries& s, int k_l, TimePoint start, int step_days, std::size_t count);

/// Daily grid spanning the data range.
RegularSeries loess_daily(const ScatteredSeries& s, int k_l);

/// Raw LOESS core on numeric abscissae (sorted ascending); evaluates at `at`.
std::vector<double> loess_values(std::span<const double> t, std::span<const double> y, int k_l,
                                 std::span<const double> at);

/// Leave-one-out error of the exclude-self window mean, over points with a full window.
double sma_loocv(std::span<const double> y, int k);

struct WindowScore {
    int k = 0;
    double loocv = 0.0;
};

struct WindowSelection {
    int k = 0;
    std::vector<WindowScore> scores;  // evaluated candidates, ascending k
};

/// Candidate with minimal LOOCV (ties: smallest k). Candidates longer than the series are skipped.
WindowSelection select_sma_window(const RegularSeries& s, std::span<const int> candidates);

struct LoessMatchScore {
    int k_l = 0;
    double pearson = 0.0;
    double msim = 0.0;
    std::size_t overlap = 0;
};

struct LoessMatch {
    int k_l = 0;
    std::vector<LoessMatchScore> scores;
};

/// k_L whose LOESS output (sampled at the reference dates) correlates best with `reference`;
/// ties broken by higher MSIM, then smaller k_L.
LoessMatch match_loess_to_reference(const ScatteredSeries& s_daily, const RegularSeries& reference,
                                    std::span<const int> candidates);

/// Linear fill of interior gaps; leading/trailing gaps are kept. Returns the number of filled slots.
std::size_t fill_interior_gaps(RegularSeries& s);

}  // namespace wbe::smoothing
