#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <vector>

#include "carto/common.hpp"

using namespace carto;

TEST_SUITE("common") {

TEST_CASE("mean and standard error") {
    CHECK_FALSE(mean_and_stderr(std::vector<double>{}).has_value());
    const std::vector<double> one{4.0};
    CHECK(mean_and_stderr(one)->mean == 4.0);
    CHECK(mean_and_stderr(one)->stderr_ == 0.0);

    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto s = *mean_and_stderr(v);
    CHECK(s.mean == doctest::Approx(2.5));
    // population stdev sqrt(1.25), divided by sqrt(4)
    CHECK(s.stderr_ == doctest::Approx(std::sqrt(1.25) / 2.0));
    CHECK(s.count == 4);
}

TEST_CASE("type-7 quantiles") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 0.5) == 3.0);
    CHECK(quantile_sorted(v, 0.25) == 2.0);
    CHECK(quantile_sorted(v, 1.0) == 5.0);
    const std::vector<double> w{0.0, 10.0};
    CHECK(quantile_sorted(w, 0.3) == doctest::Approx(3.0));
    const std::vector<double> single{7.0};
    CHECK(quantile_sorted(single, 0.75) == 7.0);
}

TEST_CASE("temporal series indexing") {
    TemporalSeries s({2000, 2004}, true);
    CHECK(s.values.size() == 5);
    CHECK(s.errors.size() == 5);
    CHECK(s.last_year() == 2004);
    s[2002] = 1.5;
    CHECK(s.at(2002) == 1.5);
    CHECK_FALSE(s.at(1999).has_value());
    CHECK_FALSE(s.at(2005).has_value());
    CHECK_THROWS_AS(s[2010], std::out_of_range);
}

TEST_CASE("rng is reproducible and its helpers stay in range") {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng r(5);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = r.below(7);
        REQUIRE(v < 7);
        ++hits[v];
    }
    for (int h : hits) CHECK(h > 800);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const auto k = r.between(-3, 3);
        CHECK(k >= -3);
        CHECK(k <= 3);
    }
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal(2.0, 3.0);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::sqrt(sq / n - mean * mean) == doctest::Approx(3.0).epsilon(0.05));

    std::vector<int> perm(50);
    std::iota(perm.begin(), perm.end(), 0);
    r.shuffle(perm);
    auto sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("parallel_for visits every index once for any worker count") {
    for (unsigned threads : {1u, 2u, 5u}) {
        set_thread_count(threads);
        std::vector<std::atomic<int>> seen(1003);
        parallel_for(seen.size(), [&](std::size_t i) { ++seen[i]; });
        for (auto& s : seen) CHECK(s.load() == 1);
    }
    set_thread_count(0);
}

TEST_CASE("text helpers") {
    CHECK(to_lower_ascii("Deep LEARNING") == "deep learning");
    CHECK(trim("  a b \t\r\n") == "a b");
    CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
}

}
