#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "carto/synthkit.hpp"
#include "helpers.hpp"

using namespace carto;

TEST_SUITE("synthkit") {

TEST_CASE("one blob of ten papers") {
    auto spec = default_synth_spec(1);
    spec.blobs = {{"solo", {0, 0}, 1.0, 10}};
    spec.rejected_share = 0.0;
    const auto w = generate_world(spec);
    CHECK(w.papers.size() == 10);
    std::set<std::string> labels;
    for (const auto& [id, l] : w.planted) labels.insert(l);
    CHECK(labels == std::set<std::string>{"solo"});
}

TEST_CASE("same seed gives identical files") {
    testing::TempDir a, b;
    write_world(a.path(), generate_world(default_synth_spec(5)));
    write_world(b.path(), generate_world(default_synth_spec(5)));
    for (const char* f : {"papers.jsonl", "citations.csv", "ai_keywords.txt", "vectors.f32", "coords.csv",
                          "planted.csv"}) {
        CHECK(testing::read_text(a / f) == testing::read_text(b / f));
    }
    testing::TempDir c;
    write_world(c.path(), generate_world(default_synth_spec(6)));
    CHECK(testing::read_text(a / "papers.jsonl") != testing::read_text(c / "papers.jsonl"));
}

TEST_CASE("generated worlds are well formed") {
    const auto spec = default_synth_spec(2);
    const auto w = generate_world(spec);
    std::map<std::string, int> year;
    for (const auto& p : w.papers) year[p.id] = p.year;
    for (const auto& e : w.citations) CHECK(year.at(e.citer) > year.at(e.cited));
    CHECK(w.vectors.size() == w.coords.size());
    CHECK(w.vectors.dim() == spec.dim);
    for (const auto& p : w.papers) {
        CHECK(spec.years.contains(p.year));
        for (const auto& l : p.fos_labels) {
            CHECK(l.level >= 0);
            CHECK(l.level <= 5);
        }
    }
    auto bad = spec;
    bad.in_cluster = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.blobs.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("three peaks") {
    const auto lp = three_peaks_1d(3000, 1);
    CHECK(lp.points.size() == 3000);
    CHECK(lp.points.dim() == 1);
    std::vector<int> count(3, 0);
    for (int l : lp.labels) ++count.at(l);
    for (int c : count) CHECK(c > 500);
}

TEST_CASE("oracles by hand") {
    const std::vector<std::pair<std::size_t, std::size_t>> k4{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    CHECK(oracle::kcore(4, k4) == std::vector<int>{3, 3, 3, 3});
    CHECK(oracle::rog({0, 0}, {{3, 0}, {0, 4}}) == doctest::Approx(std::sqrt(12.5)));
    CHECK(oracle::farthest({0, 0}, {{1, 0}, {0, -3}}) == 3.0);
    const oracle::Coords line{{0}, {1}, {5}};
    CHECK(oracle::knn(line, {"A", "B", "C"}, 0, 1) == std::set<std::string>{"B"});
    // two points, core distance 1: the MST is the single edge
    CHECK(oracle::mst_weight({{0, 0}, {3, 4}}, 1) == 5.0);
    CHECK_THROWS_AS(oracle::mst_weight(oracle::Coords(oracle::kOracleMaxSize + 1, {0.0}), 1),
                    std::invalid_argument);
}

TEST_CASE("knn oracle is an exhaustive sort") {
    const auto t = random_points(50, 2, 3);
    oracle::Coords c;
    for (std::size_t r = 0; r < t.size(); ++r) c.push_back({t.row(r)[0], t.row(r)[1]});
    std::vector<std::pair<double, std::string>> d;
    for (std::size_t j = 1; j < t.size(); ++j) d.push_back({std::hypot(c[0][0] - c[j][0], c[0][1] - c[j][1]), t.id(j)});
    std::sort(d.begin(), d.end());
    std::set<std::string> want;
    for (int i = 0; i < 7; ++i) want.insert(d[i].second);
    CHECK(oracle::knn(c, t.ids(), 0, 7) == want);
}

TEST_CASE("cohort worlds tag each focal paper with its family") {
    const auto w = rog_cohorts({1, 4}, 5, 10, 3);
    CHECK(w.focal_ids.size() == 10);
    CHECK(w.family.size() == 10);
    CHECK(std::count(w.family.begin(), w.family.end(), 0) == 5);
    CHECK(w.points.size() == w.papers.size());
}

TEST_CASE("coreness scenarios are deterministic") {
    const auto a = coreness_scenario(CorenessTrend::increasing, 4);
    const auto b = coreness_scenario(CorenessTrend::increasing, 4);
    REQUIRE(a.papers.size() == b.papers.size());
    for (std::size_t i = 0; i < a.papers.size(); ++i) CHECK(a.papers[i].concepts == b.papers[i].concepts);
    CHECK(a.ai == b.ai);
}

}
