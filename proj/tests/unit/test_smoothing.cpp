#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"
#include "wbe/error.hpp"
#include "wbe/metrics.hpp"
#include "wbe/smoothing.hpp"

using namespace wbe;
namespace sm = wbe::smoothing;
using testing::day;

using V = std::vector<double>;

namespace {

RegularSeries weekly(const V& v) { return RegularSeries::dense(day(2021, 1, 4), 7, v); }

ScatteredSeries scattered(const V& offsets, const V& values) {
    std::vector<SeriesPoint> pts;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        pts.push_back({day(2021, 1, 1).plus_days(static_cast<long>(offsets[i])), values[i]});
    }
    return ScatteredSeries(std::move(pts));
}

double naive_exclude_self(const V& y, int k) {
    const int h = k / 2;
    double ss = 0.0;
    int n = 0;
    for (int i = h; i + h < static_cast<int>(y.size()); ++i) {
        double s = 0.0;
        for (int j = i - h; j <= i + h; ++j) {
            s += j == i ? 0.0 : y[j];
        }
        const double e = y[i] - s / (k - 1);
        ss += e * e;
        ++n;
    }
    return std::sqrt(ss / n);
}

}  // namespace

TEST_CASE("sma examples") {
    const auto s = weekly({1, 2, 3, 4, 5});
    const auto out = sm::sma(s, 3);
    REQUIRE(out.size() == 5);
    CHECK_FALSE(out[0]);
    CHECK(*out[1] == 2.0);
    CHECK(*out[2] == 3.0);
    CHECK(*out[3] == 4.0);
    CHECK_FALSE(out[4]);
    CHECK(out.start() == s.start());
    CHECK(out.step_days() == 7);

    const auto id = sm::sma(s, 1);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(*id[i] == *s[i]);
    }
    const auto c = sm::sma(weekly(V(9, 4.25)), 5);
    for (std::size_t i = 2; i < 7; ++i) {
        CHECK(*c[i] == doctest::Approx(4.25).epsilon(1e-15));
    }
    CHECK_THROWS_WITH_AS(sm::sma(s, 4), "window must be odd", ConfigError);
    CHECK_THROWS_AS(sm::sma(s, 7), DataError);
    RegularSeries gappy(day(2021, 1, 4), 7, {1.0, std::nullopt, 3.0});
    CHECK_THROWS_AS(sm::sma(gappy, 3), DataError);
}

TEST_CASE("sma is linear and bounded by the window") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = testing::normals(rng, 40);
        const auto b = testing::normals(rng, 40, 5.0, 3.0);
        V comb(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            comb[i] = 2.0 * a[i] - 0.5 * b[i];
        }
        const int k = 3 + 2 * (trial % 4);
        const auto sa = sm::sma(weekly(a), k);
        const auto sb = sm::sma(weekly(b), k);
        const auto sc = sm::sma(weekly(comb), k);
        const int h = k / 2;
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(sa[i].has_value() == sc[i].has_value());
            if (!sa[i]) {
                continue;
            }
            CHECK(*sc[i] == doctest::Approx(2.0 * *sa[i] - 0.5 * *sb[i]).epsilon(1e-12));
            const auto lo = a.begin() + static_cast<long>(i) - h;
            const auto hi = a.begin() + static_cast<long>(i) + h + 1;
            CHECK(*sa[i] >= *std::min_element(lo, hi) - 1e-12);
            CHECK(*sa[i] <= *std::max_element(lo, hi) + 1e-12);
        }
    }
}

TEST_CASE("loess reproduces linear data") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> gap(1, 5);
    V t;
    double at = 0;
    for (int i = 0; i < 60; ++i) {
        t.push_back(at);
        at += gap(rng);
    }
    V y(t.size());
    std::transform(t.begin(), t.end(), y.begin(), [](double x) { return 2.5 * x - 7.0; });
    const auto s = scattered(t, y);
    for (int k = 3; k <= 60; k += 3) {
        const auto f = sm::loess(s, k);
        for (std::size_t i = 0; i < f.size(); ++i) {
            CHECK(f[i].value == doctest::Approx(y[i]).epsilon(1e-9));
        }
        const auto d = sm::loess_daily(s, k);
        CHECK(d.size() == static_cast<std::size_t>(t.back()) + 1);
        for (std::size_t i = 0; i < d.size(); ++i) {
            CHECK(*d[i] == doctest::Approx(2.5 * static_cast<double>(i) - 7.0).epsilon(1e-9));
        }
    }
    const auto c = sm::loess(scattered(t, V(t.size(), 3.0)), 7);
    for (const auto& p : c.points()) {
        CHECK(p.value == doctest::Approx(3.0).epsilon(1e-14));
    }
}

TEST_CASE("loess errors") {
    const V t{0, 1, 2, 3, 4};
    const V y{1, 2, 1, 2, 1};
    CHECK_THROWS_WITH_AS(sm::loess_values(t, y, 2, t), "LOESS needs k_L >= 3", ConfigError);
    CHECK_THROWS_AS(sm::loess_values(t, y, 6, t), DataError);
    CHECK_THROWS_WITH_AS(sm::loess_values(t, y, 3, V{5.0}), "LOESS evaluation outside the data range refused",
                         DataError);
    CHECK_THROWS_AS(sm::loess_values(t, y, 3, V{-0.5}), DataError);
    const V same{2, 2, 2};
    CHECK_THROWS_WITH_AS(sm::loess_values(same, V{1, 2, 3}, 3, V{2.0}), doctest::Contains("degenerate"), DataError);
    CHECK_THROWS_AS(sm::loess_daily(ScatteredSeries{}, 3), DataError);
}

TEST_CASE("loess on a grid leaves nodes outside the data missing") {
    const auto s = scattered({0, 3, 7, 10, 14, 20}, {1, 4, 2, 5, 3, 6});
    const auto g = sm::loess_on_grid(s, 3, day(2020, 12, 25), 7, 5);
    CHECK_FALSE(g[0]);
    CHECK(g[1]);
    CHECK(g[2]);
    CHECK(g[3]);
    CHECK_FALSE(g[4]);
}

TEST_CASE("sma loocv matches the exclude-self oracle") {
    CHECK_THROWS_AS(sm::sma_loocv(V{1, 2, 3}, 1), ConfigError);
    CHECK_THROWS_AS(sm::sma_loocv(V{1, 2, 3}, 4), ConfigError);
    CHECK_THROWS_AS(sm::sma_loocv(V{1, 2, 3}, 5), DataError);
    // y = [0, 3, 0]: prediction 0, error 3.
    CHECK(sm::sma_loocv(V{0, 3, 0}, 3) == 3.0);

    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const auto y = testing::normals(rng, 30 + trial, 10.0, 4.0);
        for (int k : {3, 5, 7, 9}) {
            CHECK(std::abs(sm::sma_loocv(y, k) - naive_exclude_self(y, k)) < 1e-12);
        }
        const std::vector<int> cands{9, 3, 7, 5, 5};
        const auto sel = sm::select_sma_window(weekly(y), cands);
        REQUIRE(sel.scores.size() == 4);
        CHECK(sel.scores.front().k == 3);
        int best = 3;
        double best_score = naive_exclude_self(y, 3);
        for (int k : {5, 7, 9}) {
            if (naive_exclude_self(y, k) < best_score) {
                best_score = naive_exclude_self(y, k);
                best = k;
            }
        }
        CHECK(sel.k == best);
    }
}

TEST_CASE("sma window selection on white noise prefers the widest window") {
    std::mt19937_64 rng(5);
    const std::vector<int> cands{3, 5, 7, 9};
    for (int trial = 0; trial < 5; ++trial) {
        const auto y = testing::normals(rng, 2000);
        CHECK(sm::select_sma_window(weekly(y), cands).k == 9);
    }
}

TEST_CASE("sma window selection errors") {
    const auto s = weekly({1, 2, 3, 4, 5});
    CHECK_THROWS_WITH_AS(sm::select_sma_window(s, std::vector<int>{}), "no SMA window candidates", ConfigError);
    CHECK_THROWS_AS(sm::select_sma_window(s, std::vector<int>{4}), ConfigError);
    CHECK_THROWS_AS(sm::select_sma_window(s, std::vector<int>{1}), ConfigError);
    CHECK_THROWS_WITH_AS(sm::select_sma_window(s, std::vector<int>{7, 9}),
                         "series shorter than every SMA candidate window", DataError);
    const auto sel = sm::select_sma_window(s, std::vector<int>{3, 5, 7});
    CHECK(sel.scores.size() == 2);
}

TEST_CASE("loess matching picks the best correlated candidate") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SeriesPoint> pts;
    for (int d = 0; d < 364; ++d) {
        if (u(rng) < 0.5) {
            const double v = 10.0 + 5.0 * std::sin(d / 40.0) + testing::normals(rng, 1, 0.0, 1.5)[0];
            pts.push_back({day(2021, 1, 4).plus_days(d), v});
        }
    }
    const ScatteredSeries s(std::move(pts));
    const std::vector<int> cands{7, 9, 11, 15, 21};

    SUBCASE("brute-force argmax") {
        const auto ref = sm::sma(block_average_downsample(s), 3);
        const auto match = sm::match_loess_to_reference(s, ref, cands);
        REQUIRE(match.scores.size() == cands.size());
        V at;
        V r;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (ref[i] && ref.date_at(i) >= s.first_date() && ref.date_at(i) <= s.last_date()) {
                at.push_back(static_cast<double>(days_between(s.first_date(), ref.date_at(i))));
                r.push_back(*ref[i]);
            }
        }
        int best = 0;
        double best_r = -2.0;
        for (int k : cands) {
            const double pr = metrics::pearson_r(r, sm::loess_values(s.day_offsets(), s.values(), k, at));
            if (pr > best_r + 1e-12) {
                best_r = pr;
                best = k;
            }
        }
        CHECK(match.k_l == best);
        for (const auto& sc : match.scores) {
            CHECK(sc.overlap == at.size());
        }
    }
    SUBCASE("a reference produced by one candidate selects it") {
        for (int k : {9, 15}) {
            const auto ref = sm::loess_on_grid(s, k, day(2021, 1, 4), 7, 52);
            CHECK(sm::match_loess_to_reference(s, ref, cands).k_l == k);
        }
    }
    SUBCASE("errors") {
        const auto ref = sm::loess_on_grid(s, 9, day(2021, 1, 4), 7, 52);
        CHECK_THROWS_AS(sm::match_loess_to_reference(s, ref, std::vector<int>{}), ConfigError);
        const auto far = RegularSeries::dense(day(2030, 1, 7), 7, V{1, 2, 3});
        CHECK_THROWS_WITH_AS(sm::match_loess_to_reference(s, far, cands),
                             "no overlapping dates between LOESS input and reference", DataError);
        CHECK_THROWS_WITH_AS(sm::match_loess_to_reference(s, ref, std::vector<int>{1001}),
                             "series shorter than every LOESS candidate", DataError);
    }
}

TEST_CASE("fill interior gaps") {
    RegularSeries s(day(2021, 1, 4), 7, {std::nullopt, 1.0, std::nullopt, std::nullopt, 4.0, 5.0, std::nullopt});
    CHECK(sm::fill_interior_gaps(s) == 2);
    CHECK_FALSE(s[0]);
    CHECK(*s[2] == doctest::Approx(2.0));
    CHECK(*s[3] == doctest::Approx(3.0));
    CHECK_FALSE(s[6]);
    CHECK(sm::fill_interior_gaps(s) == 0);
}
