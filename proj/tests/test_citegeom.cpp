#include <doctest.h>

#include <cmath>
#include <numeric>

#include "carto/citegeom.hpp"
#include "carto/synthkit.hpp"
#include "helpers.hpp"

using namespace carto;
using testing::paper;
using testing::rel_diff;

namespace {

std::vector<double> vec(Point2 p) { return {p.x, p.y}; }

oracle::Coords coords(std::span<const Point2> pts) {
    oracle::Coords out;
    for (auto p : pts) out.push_back(vec(p));
    return out;
}

Point2 rigid(Point2 p, double angle, Point2 shift) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * p.x - s * p.y + shift.x, s * p.x + c * p.y + shift.y};
}

struct Fuzzed {
    Corpus corpus;
    std::vector<Point2> points;
};

Fuzzed fuzzed_corpus(std::uint64_t seed, std::size_t n = 120) {
    Rng rng(seed);
    std::vector<PaperRecord> papers;
    std::vector<CitationEdge> edges;
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < n; ++i) {
        papers.push_back(paper(testing::fmt_id(i), 1990 + static_cast<int>(i * 20 / n), rng.bernoulli(0.3)));
        pts.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50)});
        for (std::size_t j = 0; j < i && j < 8; ++j) {
            edges.push_back({papers.back().id, testing::fmt_id(rng.below(i))});
        }
    }
    return {Corpus(papers, edges), pts};
}

}  // namespace

TEST_SUITE("citegeom") {

TEST_CASE("radius of gyration by hand") {
    const std::vector<Point2> at_focal{{1, 1}, {1, 1}};
    CHECK(rog({1, 1}, at_focal) == 0.0);
    const std::vector<Point2> two{{3, 0}, {0, 4}};
    CHECK(rog({0, 0}, two) == doctest::Approx(std::sqrt(12.5)));
    CHECK(oracle::rog({0, 0}, coords(two)) == doctest::Approx(std::sqrt(12.5)));
    CHECK_THROWS_AS(rog({0, 0}, std::span<const Point2>{}), std::invalid_argument);
}

TEST_CASE("radius of gyration agrees with the oracle") {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        const Point2 f{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        std::vector<Point2> c(1 + rng.below(50));
        for (auto& p : c) p = {rng.uniform(-30, 30), rng.uniform(-30, 30)};
        CHECK(rel_diff(rog(f, c), oracle::rog(vec(f), coords(c))) < 1e-9);
    }
}

TEST_CASE("a citer at distance r_g leaves r_g unchanged") {
    std::vector<Point2> c{{3, 0}, {0, 4}, {-1, -1}};
    const double r = rog({0, 0}, c);
    c.push_back({r * std::cos(0.4), r * std::sin(0.4)});
    CHECK(rel_diff(rog({0, 0}, c), r) < 1e-12);
}

TEST_CASE("farthest point") {
    const std::vector<Point2> two{{0, 0}, {7, 0}};
    CHECK(max_rog({0, 0}, two) == 7.0);
    CHECK(max_rog({7, 0}, two) == 7.0);
    const std::vector<Point2> square{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}, {0.5, 0}};
    CHECK(max_rog({0, 0}, square) == doctest::Approx(std::sqrt(2.0)));

    const auto pts = random_points(1000, 2, 19);
    std::vector<Point2> p2;
    for (std::size_t i = 0; i < pts.size(); ++i) p2.push_back({pts.row(i)[0], pts.row(i)[1]});
    const FarthestPointIndex index(p2);
    const auto all = coords(p2);
    for (std::size_t i = 0; i < 1000; i += 20) {
        CHECK(rel_diff(index.max_distance(p2[i]), oracle::farthest(vec(p2[i]), all)) < 1e-12);
    }
    const std::vector<Point2> one{{0, 0}};
    CHECK_THROWS(max_rog({0, 0}, one));
}

TEST_CASE("normalized radius") {
    CHECK(normalized_rog(5.0, 5.0) == 1.0);
    CHECK(normalized_rog(0.0, 5.0) == 0.0);
    CHECK(normalized_rog(2.0, 8.0) == 0.25);
    CHECK_THROWS_AS(normalized_rog(1.0, 0.0), DataError);
}

TEST_CASE("records are bounded and invariant under rigid motion and scaling") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto f = fuzzed_corpus(seed);
        const CitationGraph graph(f.corpus);
        const std::vector<int> labels(f.corpus.size(), 0);
        const auto base = gyration_records(f.corpus, f.points, graph, labels);
        std::vector<Point2> moved, scaled;
        for (auto p : f.points) {
            moved.push_back(rigid(p, 0.3 * seed, {5.0, -3.0}));
            scaled.push_back({p.x * 2.5, p.y * 2.5});
        }
        const auto m = gyration_records(f.corpus, moved, graph, labels);
        const auto s = gyration_records(f.corpus, scaled, graph, labels);
        REQUIRE(m.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(base[i].r_tilde >= 0.0);
            CHECK(base[i].r_tilde <= 1.0);
            CHECK(base[i].r_g <= base[i].d_max);
            CHECK(rel_diff(m[i].r_g, base[i].r_g) < 1e-9);
            CHECK(rel_diff(s[i].r_g, 2.5 * base[i].r_g) < 1e-9);
            CHECK(std::abs(s[i].r_tilde - base[i].r_tilde) < 1e-9);
        }
    }
}

TEST_CASE("single citer at the farthest point") {
    const Corpus corpus({paper("f", 2000), paper("c", 2001), paper("m", 2001)}, {{"c", "f"}});
    const std::vector<Point2> pts{{0, 0}, {4, 3}, {1, 1}};
    const auto recs = gyration_records(corpus, pts, CitationGraph(corpus), std::vector<int>(3, 0));
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].r_tilde == 1.0);
    CHECK(recs[0].n_citers == 1);
}

TEST_CASE("yearly mean RoG") {
    // one AI paper per year, each cited by two papers at fixed offsets
    std::vector<PaperRecord> papers;
    std::vector<CitationEdge> edges;
    std::vector<Point2> pts;
    for (int y = 2000; y < 2005; ++y) {
        const auto id = "f" + std::to_string(y);
        papers.push_back(paper(id, y, true));
        pts.push_back({10.0 * (y - 2000), 0});
        for (int j = 0; j < 3; ++j) {
            papers.push_back(paper(id + "c" + std::to_string(j), y + 1));
            pts.push_back({10.0 * (y - 2000), 1.0});
            edges.push_back({papers.back().id, id});
        }
    }
    const Corpus corpus(papers, edges);
    const auto recs = gyration_records(corpus, pts, CitationGraph(corpus), std::vector<int>(papers.size(), 0));
    const auto yr = yearly_mean_rog(recs, {2000, 2004}, 3, RogMetric::raw);
    for (int y = 2000; y <= 2004; ++y) CHECK(*yr.ai.at(y) == doctest::Approx(1.0));
    const auto strict = yearly_mean_rog(recs, {2000, 2004}, 4, RogMetric::raw);
    CHECK_FALSE(strict.ai.at(2002).has_value());
    CHECK_FALSE(yr.non_ai.at(2001).has_value());
}

TEST_CASE("distribution summaries") {
    std::vector<GyrationRecord> recs{{"a", 2000, 5, 1.0, 2.0, 0.5, true, 0}};
    const auto one = cluster_rog_distributions(recs, 3);
    CHECK(one.at(0).ai.summary->median == 0.5);
    CHECK(one.at(0).ai.summary->min == 0.5);
    CHECK_FALSE(one.at(0).non_ai.summary.has_value());

    const auto f = fuzzed_corpus(9, 300);
    const auto r = gyration_records(f.corpus, f.points, CitationGraph(f.corpus), std::vector<int>(300, 2));
    for (const auto& [label, d] : cluster_rog_distributions(r, 3)) {
        for (const auto* dist : {&d.ai, &d.non_ai}) {
            if (!dist->summary) continue;
            CHECK(std::is_sorted(dist->sample.begin(), dist->sample.end()));
            CHECK(dist->summary->median == quantile_sorted(dist->sample, 0.5));
        }
    }
}

TEST_CASE("AI citation matrix") {
    const Corpus corpus({paper("a", 2000, true), paper("b", 2000, true), paper("c", 2001), paper("d", 2001),
                         paper("e", 2001)},
                        {{"c", "a"}, {"d", "a"}, {"d", "b"}, {"e", "b"}});
    const CitationGraph graph(corpus);
    ClusterAssignment within{{"a", "b", "c", "d", "e"}, {0, 1, 0, 1, 1}, 2};
    auto m = ai_citation_matrix(corpus, graph, within);
    CHECK(m.at(0, 0) == 1.0);
    CHECK(m.at(1, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(m.at(1, 1) == doctest::Approx(2.0 / 3.0));
    for (std::size_t i = 0; i < 2; ++i) CHECK(m.at(i, 0) + m.at(i, 1) == doctest::Approx(1.0).epsilon(1e-12));

    ClusterAssignment same{{"a", "b", "c", "d", "e"}, {0, 0, 0, 0, 1}, 2};
    m = ai_citation_matrix(corpus, graph, same);
    CHECK(m.at(0, 0) == 1.0);
    CHECK_FALSE(m.zero_row[0]);
    CHECK(m.zero_row[1] == false);
    const auto papers = ai_citation_matrix(corpus, graph, within, CitationCounting::papers);
    CHECK(papers.counts[1 * 2 + 0] == 1.0);  // d once toward cluster 0
    ClusterAssignment quiet{{"a", "b", "c", "d", "e"}, {0, 0, 1, 0, 0}, 2};
    const Corpus lonely({paper("a", 2000, true), paper("b", 2000), paper("c", 2000)}, {{"b", "a"}});
    ClusterAssignment la{{"a", "b", "c"}, {0, 0, 1}, 2};
    CHECK(ai_citation_matrix(lonely, CitationGraph(lonely), la).zero_row[1]);
}

TEST_CASE("cumulative series match recomputation from scratch") {
    const auto f = fuzzed_corpus(4, 200);
    const CitationGraph graph(f.corpus);
    for (Corpus::Row focal = 0; focal < 60; focal += 7) {
        const auto s = cumulative_rog_series(f.corpus, f.points, graph, focal, {1990, 2012});
        for (int y = 1990; y <= 2012; ++y) {
            std::vector<Point2> citers;
            for (auto c : graph.citers(focal)) {
                if (f.corpus.paper(c).year <= y) citers.push_back(f.points[c]);
            }
            if (citers.empty()) {
                CHECK_FALSE(s.at(y).has_value());
            } else {
                CHECK(rel_diff(*s.at(y), rog(f.points[focal], citers)) < 1e-9);
            }
        }
    }
}

TEST_CASE("log returns") {
    TemporalSeries flat({2000, 2004});
    for (int y = 2000; y <= 2004; ++y) flat[y] = 3.0;
    const auto r = log_return_series(flat);
    for (int y = 2001; y <= 2004; ++y) CHECK(*r.at(y) == 0.0);
    CHECK_FALSE(r.at(2000).has_value());

    TemporalSeries dbl({2000, 2002});
    dbl[2000] = 1.0;
    dbl[2001] = 2.0;
    dbl[2002] = 2.0;
    CHECK(*log_return_series(dbl).at(2001) == doctest::Approx(std::log(2.0)));

    TemporalSeries gap({2000, 2002});
    gap[2001] = 1.0;
    gap[2002] = 1.5;
    const auto g = log_return_series(gap);
    CHECK_FALSE(g.at(2001).has_value());
    CHECK(g.at(2002).has_value());
}

TEST_CASE("burst then flat citations give a single early peak") {
    const auto w = rog_cohorts({1}, 1, 8, 5);
    const Corpus corpus(w.papers, w.citations);
    const CitationGraph graph(corpus);
    const auto focal = corpus.row_of(w.focal_ids[0]);
    const auto s = cumulative_rog_series(corpus, w.points, graph, focal, {w.cohort_year, w.cohort_year + 8});
    const auto r = log_return_series(s);
    CHECK(*r.at(w.cohort_year + 1) > 0.3);
    for (int y = w.cohort_year + 2; y <= w.cohort_year + 8; ++y) CHECK(std::abs(r.at(y).value_or(0.0)) < 1e-9);
}

TEST_CASE("k-means basics") {
    const std::vector<std::vector<double>> data{{0, 0}, {0, 2}, {10, 0}, {10, 2}};
    const auto one = kmeans(data, 1, 1);
    CHECK(one.centroids[0] == std::vector<double>{5, 1});
    const auto two = kmeans(data, 2, 1);
    CHECK(two.assignment == std::vector<int>{0, 0, 1, 1});
    CHECK(two.distortion == doctest::Approx(4.0));
    CHECK(kmeans(data, 2, 1).assignment == two.assignment);
}

TEST_CASE("k-means ends in a local optimum") {
    Rng rng(6);
    std::vector<std::vector<double>> data(80, std::vector<double>(3));
    for (auto& row : data) {
        for (auto& v : row) v = rng.normal(0, 1) + (rng.bernoulli(0.5) ? 4.0 : 0.0);
    }
    for (std::size_t k = 2; k <= 5; ++k) {
        const auto r = kmeans(data, k, 3);
        auto sse = [&](const std::vector<int>& a) {
            std::vector<std::vector<double>> sum(k, std::vector<double>(3, 0.0));
            std::vector<double> cnt(k, 0.0);
            for (std::size_t i = 0; i < data.size(); ++i) {
                cnt[a[i]] += 1;
                for (int d = 0; d < 3; ++d) sum[a[i]][d] += data[i][d];
            }
            double total = 0.0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                for (int d = 0; d < 3; ++d) total += std::pow(data[i][d] - sum[a[i]][d] / cnt[a[i]], 2);
            }
            return total;
        };
        CHECK(rel_diff(sse(r.assignment), r.distortion) < 1e-9);
        for (std::size_t i = 0; i < data.size(); ++i) {
            for (int to = 0; to < static_cast<int>(k); ++to) {
                auto moved = r.assignment;
                if (moved[i] == to) continue;
                const int from = moved[i];
                moved[i] = to;
                if (std::count(moved.begin(), moved.end(), from) == 0) continue;
                CHECK(sse(moved) >= r.distortion - 1e-9);
            }
        }
    }
}

TEST_CASE("elbow") {
    const std::vector<double> sharp{100, 10, 8, 7, 6.5};
    CHECK(elbow(sharp, 1) == 2);
    const std::vector<double> short_range{5, 1};
    CHECK(elbow(short_range, 3) == 3);
}

TEST_CASE("two families of series separate at k = 2") {
    const auto w = rog_cohorts({1, 4}, 12, 10, 21);
    const Corpus corpus(w.papers, w.citations);
    const CitationGraph graph(corpus);
    std::vector<TemporalSeries> series;
    std::vector<int> first;
    for (const auto& id : w.focal_ids) {
        const auto s = cumulative_rog_series(corpus, w.points, graph, corpus.row_of(id),
                                             {w.cohort_year, w.cohort_year + 10});
        series.push_back(log_return_series(s));
        first.push_back(w.cohort_year + 1);
    }
    const auto data = align_series(series, first, 10);
    const auto r = cluster_rog_dynamics(data, 1, 6, 2);
    CHECK(r.k == 2);
    for (std::size_t i = 0; i < w.family.size(); ++i) CHECK(r.clustering.assignment[i] == w.family[i]);
    CHECK_THROWS_AS(cluster_rog_dynamics(std::vector<std::vector<double>>(3, {1.0}), 1, 6, 2),
                    std::invalid_argument);
}

TEST_CASE("rog csv layout") {
    testing::TempDir dir;
    std::vector<GyrationRecord> recs{{"a", 2000, 5, 1.0, 2.0, 0.5, true, 3}};
    write_rog_csv(dir / "r.csv", recs);
    const auto text = testing::read_text(dir / "r.csv");
    CHECK(text.rfind("id,year,n_citers,r_g,d_max,r_tilde,ai_flag,cluster\n", 0) == 0);
    CHECK(text.find("a,2000,5,1,2,0.5,1,3") != std::string::npos);
}

}
