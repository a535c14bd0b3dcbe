#include <doctest.h>

#include <algorithm>

#include "carto/conceptnet.hpp"
#include "carto/synthkit.hpp"
#include "helpers.hpp"

using namespace carto;

namespace {

using Adjacency = std::vector<std::vector<std::uint32_t>>;

Adjacency adjacency(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    Adjacency adj(n);
    for (auto [a, b] : edges) {
        adj[a].push_back(static_cast<std::uint32_t>(b));
        adj[b].push_back(static_cast<std::uint32_t>(a));
    }
    return adj;
}

std::vector<std::pair<std::size_t, std::size_t>> random_graph(std::size_t n, double p, Rng& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (rng.bernoulli(p)) edges.emplace_back(a, b);
        }
    }
    return edges;
}

}  // namespace

TEST_SUITE("conceptnet") {

TEST_CASE("yearly co-occurrence") {
    const std::vector<std::vector<ConceptId>> one{{0, 1, 2}};
    const auto tri = yearly_cooccurrence(2000, one);
    CHECK(tri.nodes == std::set<ConceptId>{0, 1, 2});
    CHECK(tri.edges.size() == 3);
    for (const auto& [e, w] : tri.edges) CHECK(w == 1);

    const std::vector<std::vector<ConceptId>> twice{{0, 1}, {1, 0}, {4}, {5, 5}};
    const auto g = yearly_cooccurrence(2000, twice);
    CHECK(g.edges.at({0, 1}) == 2);
    CHECK(g.edges.size() == 1);
    CHECK(g.nodes == std::set<ConceptId>{0, 1});
}

TEST_CASE("four articles over two years") {
    // year y0: {A,B,C} and {B,D}; year y1: {C,D} and {A,B}
    const std::vector<std::vector<ConceptId>> y0{{0, 1, 2}, {1, 3}};
    const std::vector<std::vector<ConceptId>> y1{{2, 3}, {0, 1}};
    const auto g0 = accumulate({}, yearly_cooccurrence(0, y0));
    const auto g1 = accumulate(g0, yearly_cooccurrence(1, y1));
    CHECK(g0.edges.size() == 4);
    CHECK(g1.edges.size() == 5);
    CHECK(g1.edges.at({0, 1}) == 2);
    CHECK(g1.edges.at({2, 3}) == 1);
    CHECK(g1.edges.at({1, 3}) == 1);
    CHECK(g1.cores.c_max == 2);
}

TEST_CASE("accumulate") {
    const std::vector<std::vector<ConceptId>> p{{0, 1}};
    const auto g = yearly_cooccurrence(2000, p);
    const auto first = accumulate({}, g);
    CHECK(first.nodes == g.nodes);
    CHECK(first.edges == g.edges);
    CHECK(*first.year == 2000);

    const std::vector<std::vector<ConceptId>> q{{0, 1}, {0, 1}};
    const auto second = accumulate(first, yearly_cooccurrence(2001, q));
    CHECK(second.edges.at({0, 1}) == 3);
    CHECK_THROWS_AS(accumulate(second, yearly_cooccurrence(2005, q)), std::invalid_argument);
}

TEST_CASE("accumulation matches a union oracle and only grows") {
    Rng rng(8);
    CumulativeGraph g;
    std::set<ConceptId> nodes;
    std::map<ConceptEdge, std::uint64_t> edges;
    for (int year = 0; year < 10; ++year) {
        std::vector<std::vector<ConceptId>> papers;
        for (int i = 0; i < 6; ++i) {
            std::vector<ConceptId> cs;
            for (int j = 0; j < 3; ++j) cs.push_back(static_cast<ConceptId>(rng.below(25)));
            papers.push_back(cs);
        }
        const auto y = yearly_cooccurrence(year, papers);
        const auto next = accumulate(g, y);
        for (auto n : g.nodes) CHECK(next.nodes.count(n));
        for (const auto& [e, w] : g.edges) CHECK(next.edges.at(e) >= w);
        nodes.insert(y.nodes.begin(), y.nodes.end());
        for (const auto& [e, w] : y.edges) edges[e] += w;
        for (const auto& [n, c] : next.cores.core) CHECK(c <= next.cores.c_max);
        g = next;
    }
    CHECK(g.nodes == nodes);
    CHECK(g.edges == edges);
}

TEST_CASE("core numbers of small graphs") {
    const auto k4 = core_numbers(adjacency(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}));
    CHECK(k4 == std::vector<int>{3, 3, 3, 3});
    const auto star = core_numbers(adjacency(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}}));
    CHECK(star == std::vector<int>(6, 1));
    CHECK(core_numbers(adjacency(2, {})) == std::vector<int>{0, 0});
}

TEST_CASE("core numbers match the peeling oracle") {
    Rng rng(123);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng.below(200);
        const auto edges = random_graph(n, rng.uniform(0.0, 0.15), rng);
        CHECK(core_numbers(adjacency(n, edges)) == oracle::kcore(n, edges));
    }
}

TEST_CASE("largest component") {
    const std::set<ConceptId> nodes{0, 1, 2, 5, 6, 7, 9};
    const std::map<ConceptEdge, std::uint64_t> edges{{{5, 6}, 1}, {{6, 7}, 1}, {{0, 1}, 1}, {{1, 2}, 1}};
    CHECK(largest_component(nodes, edges) == std::set<ConceptId>{0, 1, 2});
}

TEST_CASE("normalized coreness of AI concepts") {
    // clique K5 over 0..4; concept 5 a pendant on 0
    std::vector<ConceptPaper> papers{{2000, {0, 1, 2, 3, 4}}, {2000, {0, 5}}};
    const auto core = coreness_series(papers, {0}, {2000, 2000});
    CHECK(*core.mean.at(2000) == 1.0);
    const auto pendant = coreness_series(papers, {5}, {2000, 2000});
    CHECK(*pendant.mean.at(2000) == doctest::Approx(0.25));
    CHECK(pendant.c_max[0] == 4);
    CHECK(*pendant.apparition_year == 2000);

    // an AI concept outside the giant component leaves a gap
    std::vector<ConceptPaper> apart{{2000, {0, 1, 2}}, {2000, {7, 8}}};
    const auto gap = coreness_series(apart, {7}, {2000, 2000});
    CHECK_FALSE(gap.mean.at(2000).has_value());
}

TEST_CASE("normalized coreness stays in (0, 1]") {
    const auto scen = coreness_scenario(CorenessTrend::decreasing, 2);
    std::size_t graphs = 0;
    const auto r = coreness_series(scen.papers, scen.ai, scen.years, [&](const CumulativeGraph& g) {
        ++graphs;
        for (const auto& [n, c] : g.cores.core) CHECK(c <= g.cores.c_max);
    });
    CHECK(graphs == scen.years.size());
    for (const auto& v : r.mean.values) {
        if (!v) continue;
        CHECK(*v > 0.0);
        CHECK(*v <= 1.0);
    }
}

TEST_CASE("cluster concept papers keep eligible members") {
    auto a = testing::paper("a", 2000);
    a.fos_labels = {{"x", 2}, {"y", 2}};
    auto b = testing::paper("b", 2000);
    b.fos_labels = {{"x", 2}};
    auto c = testing::paper("c", 2001);
    c.fos_labels = {{"x", 2}, {"z", 3}};
    const Corpus corpus({a, b, c}, {});
    const auto table = concept_view(corpus, {2, 3});
    ClusterAssignment as{{"a", "b", "c"}, {0, 0, 1}, 2};
    const auto papers = cluster_concept_papers(corpus, table, as, 0);
    REQUIRE(papers.size() == 1);
    CHECK(papers[0].year == 2000);
    CHECK(concept_ids(table, {"z", "missing"}) == std::set<ConceptId>{*table.find("z")});
}

}
