// Acceptance suite: one line per criterion, non-zero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "carto/atlas.hpp"
#include "carto/citegeom.hpp"
#include "carto/clusterer.hpp"
#include "carto/conceptnet.hpp"
#include "carto/pipeline.hpp"
#include "carto/profiler.hpp"
#include "carto/synthkit.hpp"
#include "carto/validator.hpp"

using namespace carto;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

double rel(double a, double b) {
    const double scale = std::max({1e-12, std::abs(a), std::abs(b)});
    return std::abs(a - b) / scale;
}

std::string pad_id(std::size_t i) { return fmt::format("p{:06d}", i); }

oracle::Coords coords_of(const PointTable& t) {
    oracle::Coords out;
    for (std::size_t r = 0; r < t.size(); ++r) out.emplace_back(t.row(r).begin(), t.row(r).end());
    return out;
}

// Random papers scattered over a square, each citing a few earlier ones.
struct FuzzCorpus {
    Corpus corpus;
    std::vector<Point2> points;
    MapCoordinates map;
};

FuzzCorpus fuzz_corpus(std::size_t n, std::uint64_t seed, std::size_t max_refs = 6) {
    Rng rng(seed);
    std::vector<PaperRecord> papers;
    std::vector<CitationEdge> edges;
    std::vector<Point2> pts;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
        PaperRecord p;
        p.id = pad_id(i);
        p.title = "t";
        p.year = 1970 + static_cast<int>(i * 50 / n);
        p.venue_id = "v";
        p.ref_count = p.citation_count = 10;
        p.ai_flag = rng.bernoulli(0.2);
        papers.push_back(p);
        ids.push_back(p.id);
        pts.push_back({rng.uniform(-100, 100), rng.uniform(-100, 100)});
        if (i == 0) continue;
        const auto refs = rng.below(max_refs + 1);
        for (std::uint64_t r = 0; r < refs; ++r) edges.push_back({p.id, pad_id(rng.below(i))});
    }
    MapCoordinates map(ids, pts);
    return {Corpus(std::move(papers), edges), pts, std::move(map)};
}

Outcome kcore_equivalence() {
    Rng rng(1001);
    for (int g = 0; g < 200; ++g) {
        const std::size_t n = 1 + rng.below(200);
        const double p = rng.uniform(0.0, 0.2);
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        std::vector<std::vector<std::uint32_t>> adj(n);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!rng.bernoulli(p)) continue;
                edges.emplace_back(a, b);
                adj[a].push_back(static_cast<std::uint32_t>(b));
                adj[b].push_back(static_cast<std::uint32_t>(a));
            }
        }
        if (core_numbers(adj) != oracle::kcore(n, edges)) return {false, fmt::format("graph {} differs", g)};
    }
    return {true, "200/200 graphs identical"};
}

Outcome mst_equivalence() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(2000 + s);
        const std::size_t n = 20 + rng.below(481);
        const auto pts = random_points(n, 2, 3000 + s);
        const auto coords = coords_of(pts);
        for (std::size_t ms : {1u, 5u, 15u}) {
            worst = std::max(worst, rel(build_hierarchy(pts, ms).total_weight(), oracle::mst_weight(coords, ms)));
        }
    }
    return {worst <= 1e-9, fmt::format("150 trees, worst relative gap {:.2e}", worst)};
}

Outcome knn_rog_equivalence() {
    std::size_t knn_checks = 0, rog_checks = 0;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(4000 + s);
        const std::size_t n = 50 + rng.below(951);
        auto f = fuzz_corpus(n, 5000 + s);
        const auto high = random_points(n, 12, 6000 + s);
        const PointTable high_ids(f.map.ids(), high.dim(), high.values());
        const auto low = coords_of(f.map), hi = coords_of(high_ids);
        for (int q = 0; q < 10; ++q) {
            const std::size_t row = rng.below(n);
            for (std::size_t k : {1u, 10u, 25u}) {
                for (const auto& [pair, c] : {std::pair<const PointTable*, const oracle::Coords*>{&f.map, &low},
                                              {&high_ids, &hi}}) {
                    std::set<std::string> got;
                    for (const auto& [id, d] : knn(*pair, pair->id(row), k)) got.insert(id);
                    if (got != oracle::knn(*c, pair->ids(), row, k)) {
                        return {false, fmt::format("kNN mismatch in corpus {}", s)};
                    }
                    ++knn_checks;
                }
            }
        }
        const CitationGraph graph(f.corpus);
        const auto recs = gyration_records(f.corpus, f.points, graph, std::vector<int>(n, 0));
        for (const auto& r : recs) {
            const auto row = f.corpus.row_of(r.id);
            oracle::Coords citers;
            for (auto c : graph.citers(row)) citers.push_back({f.points[c].x, f.points[c].y});
            const std::vector<double> focal{f.points[row].x, f.points[row].y};
            const double rg = oracle::rog(focal, citers);
            const double dmax = oracle::farthest(focal, low);
            worst = std::max({worst, rel(r.r_g, rg), rel(r.d_max, dmax), rel(r.r_tilde, std::min(1.0, rg / dmax))});
            ++rog_checks;
        }
    }
    return {worst <= 1e-9, fmt::format("{} kNN sets exact, {} RoG records, worst relative gap {:.2e}", knn_checks,
                                       rog_checks, worst)};
}

Outcome three_peak_recovery() {
    const auto lp = three_peaks_1d(3000, 7);
    const auto tree = condense(build_hierarchy(lp.points, 100), 100);
    const auto leaves = tree.leaves();
    if (leaves.size() != 3) return {false, fmt::format("{} leaves instead of 3", leaves.size())};
    const auto a = select_clusters(tree, leaf_cuts(tree), lp.points.ids());
    // majority generating peak per cluster
    std::vector<std::map<int, std::size_t>> votes(3);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        if (a.labels[i] == kNoise) continue;
        ++votes[a.labels[i]][lp.labels[i]];
        ++kept;
    }
    std::size_t agree = 0;
    std::vector<int> peak(3);
    std::set<int> peaks;
    for (int c = 0; c < 3; ++c) {
        auto best = std::max_element(votes[c].begin(), votes[c].end(),
                                     [](const auto& x, const auto& y) { return x.second < y.second; });
        peak[c] = best->first;
        peaks.insert(best->first);
        agree += best->second;
    }
    const double purity = static_cast<double>(agree) / static_cast<double>(kept);
    // peaks are generated left to right; the middle one is peak 1
    int middle = -1;
    for (int c = 0; c < 3; ++c) {
        if (peak[c] == 1) middle = c;
    }
    bool least = middle >= 0;
    std::string deaths;
    for (int c = 0; c < 3; ++c) {
        const auto& node = tree.node(leaves[static_cast<std::size_t>(c)]);
        deaths += fmt::format(" peak{}:{:.3g}", peak[c], node.lambda_death);
        if (c != middle && middle >= 0) {
            const auto& mid = tree.node(leaves[static_cast<std::size_t>(middle)]);
            least = least && mid.lambda_death < node.lambda_death && mid.persistence() < node.persistence();
        }
    }
    const bool ok = peaks.size() == 3 && least && purity >= 0.99;
    return {ok, fmt::format("3 leaves, purity {:.4f}, death lambda{}", purity, deaths)};
}

Outcome normalization_identities() {
    const std::size_t n = 100000;
    auto f = fuzz_corpus(n, 77, 8);
    const CitationGraph graph(f.corpus);
    Rng rng(78);
    std::vector<int> labels(n);
    ClusterAssignment as;
    as.ids = f.map.ids();
    for (auto& l : labels) l = static_cast<int>(rng.below(7)) - 1;  // -1 is noise
    as.labels = labels;
    as.n_clusters = 6;
    const auto recs = gyration_records(f.corpus, f.points, graph, labels);
    std::size_t outside = 0;
    for (const auto& r : recs) {
        if (!(r.r_tilde >= 0.0 && r.r_tilde <= 1.0)) ++outside;
    }
    double worst = 0.0;
    const auto m = ai_citation_matrix(f.corpus, graph, as);
    for (std::size_t i = 0; i < m.clusters; ++i) {
        if (m.zero_row[i]) continue;
        double sum = 0.0;
        for (std::size_t j = 0; j < m.clusters; ++j) sum += m.at(i, j);
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    const auto shares = ai_share_per_cluster(f.corpus, as);
    double total = 0.0;
    for (const auto& [l, v] : shares.with_noise) total += v;
    worst = std::max(worst, std::abs(total - 1.0));

    // confusion rows on a labelled map
    std::vector<std::optional<std::string>> sub(n);
    for (std::size_t i = 0; i < n; ++i) sub[i] = f.points[i].x < 0 ? (f.points[i].y < 0 ? "a" : "b") : "c";
    const auto split = make_split(sub, 10, 0.99, 3);
    const auto cm = confusion_matrix(f.map, split, 5);
    for (std::size_t i = 0; i < cm.size(); ++i) {
        if (cm.empty_row[i]) continue;
        double sum = 0.0;
        for (std::size_t j = 0; j < cm.size(); ++j) sum += cm.at(i, j);
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return {outside == 0 && worst <= 1e-12,
            fmt::format("{} records, {} outside [0,1], worst row-sum gap {:.2e}", recs.size(), outside, worst)};
}

Outcome rigid_invariance() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto f = fuzz_corpus(800, 900 + s);
        Rng rng(950 + s);
        const double angle = rng.uniform(0, 6.283185307179586);
        const Point2 shift{rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)};
        std::vector<Point2> moved;
        for (auto p : f.points) {
            moved.push_back({std::cos(angle) * p.x - std::sin(angle) * p.y + shift.x,
                             std::sin(angle) * p.x + std::cos(angle) * p.y + shift.y});
        }
        const MapCoordinates mm(f.map.ids(), moved);
        const CitationGraph graph(f.corpus);
        const std::vector<int> labels(f.points.size(), 0);
        const auto a = gyration_records(f.corpus, f.points, graph, labels);
        const auto b = gyration_records(f.corpus, moved, graph, labels);
        for (std::size_t i = 0; i < a.size(); ++i) {
            worst = std::max({worst, rel(a[i].r_g, b[i].r_g), rel(a[i].r_tilde, b[i].r_tilde)});
        }
        const auto high = random_points(800, 10, 990 + s);
        const PointTable hv(f.map.ids(), high.dim(), high.values());
        const auto o1 = neighbor_overlap(hv, f.map, 15), o2 = neighbor_overlap(hv, mm, 15);
        worst = std::max(worst, rel(o1.mean, o2.mean));
        for (std::size_t i = 0; i < o1.shares.size(); ++i) worst = std::max(worst, rel(o1.shares[i], o2.shares[i]));

        std::vector<std::optional<std::string>> sub;
        for (auto p : f.points) sub.push_back(p.x + 0.3 * p.y < 0 ? "left" : "right");
        const auto split = make_split(sub, 10, 0.8, s);
        std::vector<std::size_t> ks{1, 5, 15, 30};
        const auto s1 = knn_accuracy_sweep(f.map, split, ks), s2 = knn_accuracy_sweep(mm, split, ks);
        for (std::size_t i = 0; i < ks.size(); ++i) worst = std::max(worst, rel(s1.accuracy[i], s2.accuracy[i]));
    }
    return {worst <= 1e-9, fmt::format("10 corpora, worst relative change {:.2e}", worst)};
}

std::vector<double> trailing_mean(const TemporalSeries& s, std::size_t window) {
    std::vector<double> out;
    std::vector<double> seen;
    for (const auto& v : s.values) {
        if (!v) continue;
        seen.push_back(*v);
        const std::size_t from = seen.size() > window ? seen.size() - window : 0;
        double sum = 0.0;
        for (std::size_t i = from; i < seen.size(); ++i) sum += seen[i];
        out.push_back(sum / static_cast<double>(seen.size() - from));
    }
    return out;
}

Outcome coreness_trends() {
    std::string detail;
    bool ok = true;
    for (auto trend : {CorenessTrend::decreasing, CorenessTrend::increasing}) {
        const auto scen = coreness_scenario(trend, 31);
        const auto r = coreness_series(scen.papers, scen.ai, scen.years);
        const auto smooth = trailing_mean(r.mean, 5);
        bool mono = smooth.size() == scen.years.size();
        for (std::size_t i = 1; i < smooth.size(); ++i) {
            mono = mono && (trend == CorenessTrend::decreasing ? smooth[i] < smooth[i - 1] : smooth[i] > smooth[i - 1]);
        }
        ok = ok && mono;
        detail += fmt::format("{} {:.3f}->{:.3f} over {} years{}; ",
                              trend == CorenessTrend::decreasing ? "decreasing" : "increasing", smooth.front(),
                              smooth.back(), smooth.size(), mono ? "" : " (not monotone)");
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

CitationMatrix planted_matrix(double in_cluster, std::uint64_t seed) {
    SynthSpec spec = default_synth_spec(seed);
    spec.in_cluster = in_cluster;
    spec.rejected_share = 0.0;
    spec.blobs = {{"b0", {0, 0}, 2.0, 400, 0.0, 0.3}, {"b1", {30, 0}, 2.0, 400, 0.0, 0.3},
                  {"b2", {15, 26}, 2.0, 400, 0.0, 0.3}};
    const auto w = generate_world(spec);
    const Corpus corpus = tag_ai(Corpus(w.papers, w.citations), AIKeywordList(w.ai_phrases));
    ClusterAssignment as;
    const std::map<std::string, int> code{{"b0", 0}, {"b1", 1}, {"b2", 2}};
    for (const auto& p : corpus.papers()) {
        as.ids.push_back(p.id);
        as.labels.push_back(code.at(w.planted.at(p.id)));
    }
    as.n_clusters = 3;
    return ai_citation_matrix(corpus, CitationGraph(corpus), as);
}

Outcome diffusion_confinement() {
    const auto dense = planted_matrix(0.8, 41);
    const auto flat = planted_matrix(1.0 / 3.0, 42);
    double min_diag = 1.0, max_flat = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        min_diag = std::min(min_diag, dense.at(i, i));
        max_flat = std::max(max_flat, flat.at(i, i));
    }
    const bool ok = min_diag >= 0.7 && max_flat <= 2.0 / 3.0;
    return {ok, fmt::format("assortative min diagonal {:.3f}, uniform max diagonal {:.3f} (bound {:.3f})", min_diag,
                            max_flat, 2.0 / 3.0)};
}

Outcome dynamics_separation() {
    const int horizon = 10;
    const auto w = rog_cohorts({1, 4}, 15, horizon, 61);
    const Corpus corpus(w.papers, w.citations);
    const CitationGraph graph(corpus);
    std::vector<TemporalSeries> series;
    std::vector<int> first;
    for (const auto& id : w.focal_ids) {
        const auto s = cumulative_rog_series(corpus, w.points, graph, corpus.row_of(id),
                                             {w.cohort_year, w.cohort_year + horizon});
        series.push_back(log_return_series(s));
        first.push_back(w.cohort_year + 1);
    }
    const auto r = cluster_rog_dynamics(align_series(series, first, horizon), 1, 6, 62);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < w.family.size(); ++i) agree += r.clustering.assignment[i] == w.family[i];
    const bool ok = r.k == 2 && agree == w.family.size();
    return {ok, fmt::format("elbow k={}, {}/{} series in their family", r.k, agree, w.family.size())};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome end_to_end_determinism() {
    const fs::path root = fs::temp_directory_path() / fmt::format("carto_acceptance_{}", ::getpid());
    fs::remove_all(root);
    const std::string cfg = CARTO_DEMO_CONFIG;
    std::vector<std::string> manifests;
    for (const char* run : {"a", "b"}) {
        const auto out = (root / run).string();
        if (run_cli({"--config", cfg, "--out", out, "synth"}) != 0) return {false, "synth failed"};
        if (run_cli({"--config", cfg, "--out", out, "all"}) != 0) return {false, "all failed"};
    }
    std::size_t same = 0, total = 0;
    std::vector<std::string> stages{"synth"};
    stages.insert(stages.end(), kStages.begin(), kStages.end());
    for (const auto& stage : stages) {
        ++total;
        const auto a = root / "a" / stage_directory(stage) / "manifest.json",
                   b = root / "b" / stage_directory(stage) / "manifest.json";
        if (fs::exists(a) && slurp(a) == slurp(b)) ++same;
    }
    fs::remove_all(root);
    return {same == total, fmt::format("{}/{} stage manifests byte-identical", same, total)};
}

struct Criterion {
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"k-core oracle equivalence", 5, kcore_equivalence},
        {"spanning tree oracle equivalence", 30, mst_equivalence},
        {"kNN and RoG oracle equivalence", 30, knn_rog_equivalence},
        {"three-peak cluster recovery", 10, three_peak_recovery},
        {"normalization identities", 20, normalization_identities},
        {"rigid-motion invariance", 20, rigid_invariance},
        {"coreness trends", 10, coreness_trends},
        {"diffusion confinement", 10, diffusion_confinement},
        {"dynamics clustering", 10, dynamics_separation},
        {"end-to-end determinism", 60, end_to_end_determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool ok = o.ok && secs < c.limit_s;
        failures += !ok;
        std::printf("%s  %-34s %6.2fs / %3.0fs  %s\n", ok ? "PASS" : "FAIL", c.name, secs, c.limit_s,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
    return failures ? 1 : 0;
}
