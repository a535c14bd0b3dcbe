#include "carto/synthkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

namespace carto {

void SynthSpec::validate() const {
    auto probability = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(fmt::format("synth: {} = {} is not a probability", what, p));
    };
    probability(in_cluster, "in_cluster");
    probability(preferential, "preferential");
    probability(rejected_share, "rejected_share");
    if (blobs.empty()) throw ConfigError("synth: no blobs");
    if (years.size() == 0) throw ConfigError("synth: empty year range");
    if (dim < 2) throw ConfigError("synth: dim must be at least 2");
    if (refs_min < 0 || refs_max < refs_min) throw ConfigError("synth: bad reference range");
    if (ai_phrases.empty()) throw ConfigError("synth: no AI phrases");
    std::set<std::string> labels;
    for (const auto& b : blobs) {
        probability(b.ai_rate, "ai_rate");
        if (b.count == 0) throw ConfigError("synth: blob '" + b.label + "' has no papers");
        if (!(b.sigma > 0.0)) throw ConfigError("synth: blob '" + b.label + "' needs sigma > 0");
        if (b.vocabulary < concepts_per_paper) {
            throw ConfigError("synth: blob '" + b.label + "' vocabulary smaller than concepts_per_paper");
        }
        if (b.ai_rate > 0.0 && b.ai_vocabulary == 0) {
            throw ConfigError("synth: blob '" + b.label + "' has AI papers but no AI vocabulary");
        }
        if (b.label.empty() || !labels.insert(b.label).second) {
            throw ConfigError("synth: blob labels must be non-empty and distinct");
        }
    }
}

SynthSpec default_synth_spec(std::uint64_t seed) {
    SynthSpec s;
    s.seed = seed;
    s.blobs = {
        {"b0", {0.0, 0.0}, 2.0, 500, 0.05, 0.10, 8, 2},
        {"b1", {20.0, 0.0}, 2.0, 400, 0.03, 0.25, 8, 2},
        {"b2", {10.0, 17.0}, 2.0, 300, 0.08, 0.05, 8, 2},
    };
    return s;
}

namespace {

struct Draft {
    std::size_t blob = 0;
    std::size_t index = 0;
    int year = 0;
    Point2 position;
    bool ai = false;
    bool rejected = false;
};

int draw_year(Rng& rng, const std::vector<double>& cumulative, int first) {
    const double u = rng.uniform01() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return first + static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                             static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

std::vector<std::size_t> distinct_sample(Rng& rng, std::size_t universe, std::size_t count) {
    std::vector<std::size_t> all(universe);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng.below(universe - i)]);
    all.resize(count);
    return all;
}

}  // namespace

SynthWorld generate_world(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t m = spec.blobs.size();

    std::vector<Draft> drafts;
    for (std::size_t b = 0; b < m; ++b) {
        const auto& blob = spec.blobs[b];
        std::vector<double> cumulative;
        double total = 0.0;
        for (int y = spec.years.first; y <= spec.years.last; ++y) {
            total += std::exp(blob.growth * (y - spec.years.first));
            cumulative.push_back(total);
        }
        for (std::size_t i = 0; i < blob.count; ++i) {
            Draft d;
            d.blob = b;
            d.index = i;
            d.year = draw_year(rng, cumulative, spec.years.first);
            d.position = {blob.center.x + rng.normal(0.0, blob.sigma), blob.center.y + rng.normal(0.0, blob.sigma)};
            d.ai = rng.bernoulli(blob.ai_rate);
            d.rejected = rng.bernoulli(spec.rejected_share);
            drafts.push_back(d);
        }
    }
    std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
        return std::tie(a.year, a.blob, a.index) < std::tie(b.year, b.blob, b.index);
    });
    const std::size_t n = drafts.size();
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = fmt::format("W{:06}", i);

    // Citations, in publication order: references point to earlier years only.
    std::vector<std::vector<std::size_t>> pool(m);  // earlier papers per blob
    std::vector<std::vector<std::size_t>> bag(m);   // cited papers per blob, with repetition
    std::vector<std::size_t> in_degree(n, 0);
    std::vector<int> drawn_refs(n, 0);
    SynthWorld world;
    std::size_t year_start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (drafts[i].year != drafts[year_start].year) {
            for (std::size_t j = year_start; j < i; ++j) pool[drafts[j].blob].push_back(j);
            year_start = i;
        }
        const std::size_t own = drafts[i].blob;
        const int refs = static_cast<int>(rng.between(spec.refs_min, spec.refs_max));
        drawn_refs[i] = refs;
        std::set<std::size_t> targets;
        for (int r = 0; r < refs; ++r) {
            std::size_t target_blob = own;
            if (m > 1 && !rng.bernoulli(spec.in_cluster)) {
                target_blob = rng.below(m - 1);
                if (target_blob >= own) ++target_blob;
            }
            const auto& candidates = pool[target_blob];
            if (candidates.empty()) continue;
            const auto& copied = bag[target_blob];
            const std::size_t target = (!copied.empty() && rng.bernoulli(spec.preferential))
                                           ? copied[rng.below(copied.size())]
                                           : candidates[rng.below(candidates.size())];
            targets.insert(target);
        }
        for (auto t : targets) {
            bag[drafts[t].blob].push_back(t);
            ++in_degree[t];
            world.citations.push_back({ids[i], ids[t]});
        }
    }

    std::vector<std::string> kept_ids;
    std::vector<Point2> kept_points;
    std::vector<double> vectors;
    // Random linear lift of the map into `dim` dimensions.
    std::vector<double> lift(spec.dim * 2);
    for (double& v : lift) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = drafts[i];
        const auto& blob = spec.blobs[d.blob];
        PaperRecord p;
        p.id = ids[i];
        p.year = d.year;
        p.venue_id = "venue-" + blob.label;
        p.ref_count = d.rejected ? static_cast<int>(rng.between(1, 5)) : 10 + drawn_refs[i];
        p.citation_count = 10 + static_cast<int>(in_degree[i]) + static_cast<int>(rng.between(0, 20));
        std::string phrase;
        if (d.ai) {
            const std::size_t j = rng.below(blob.ai_vocabulary);
            phrase = spec.ai_phrases[j % spec.ai_phrases.size()];
            p.title = fmt::format("A {} approach to {} problem {}", phrase, blob.label, d.index);
            p.abstract = fmt::format("We apply {} methods to questions of {}.", phrase, blob.label);
            p.fos_labels.push_back({fmt::format("{} {}-{}", phrase, blob.label, j), 2});
        } else {
            p.title = fmt::format("Observations on {} topic {}", blob.label, d.index);
            if (rng.bernoulli(0.9)) p.abstract = fmt::format("Results for {}.", blob.label);
        }
        for (auto c : distinct_sample(rng, blob.vocabulary, spec.concepts_per_paper)) {
            p.fos_labels.push_back({fmt::format("{}-c{}", blob.label, c), 2});
        }
        p.fos_labels.push_back({fmt::format("{}-s{}", blob.label, rng.below(blob.vocabulary / 2 + 1)), 3});
        p.fos_labels.push_back({"field-" + blob.label, 0});
        for (const auto& f : p.fos_labels) {
            if (f.level == 2) p.keywords.push_back(f.concept_id);
        }
        p.topic = Topic{fmt::format("{}-t{}", blob.label, d.index % 3), blob.label, "field-" + blob.label,
                        "synthetic"};
        world.planted.emplace(p.id, blob.label);
        world.papers.push_back(std::move(p));

        if (d.rejected) continue;
        kept_ids.push_back(ids[i]);
        kept_points.push_back(d.position);
        for (std::size_t k = 0; k < spec.dim; ++k) {
            vectors.push_back(lift[2 * k] * d.position.x + lift[2 * k + 1] * d.position.y +
                              rng.normal(0.0, spec.vector_noise * blob.sigma));
        }
    }
    world.ai_phrases = spec.ai_phrases;
    world.coords = MapCoordinates(kept_ids, kept_points);
    world.vectors = VectorStore(kept_ids, spec.dim, std::move(vectors));
    return world;
}

void write_world(const std::filesystem::path& dir, const SynthWorld& world) {
    std::filesystem::create_directories(dir);
    write_papers_jsonl(dir / "papers.jsonl", world.papers);
    write_citations_csv(dir / "citations.csv", world.citations);
    {
        std::ofstream out(dir / "ai_keywords.txt");
        if (!out) throw DataError("cannot write '" + (dir / "ai_keywords.txt").string() + "'");
        for (const auto& p : world.ai_phrases) out << p << '\n';
    }
    write_vectors_f32(dir / "vectors.f32", world.vectors);
    write_coords_csv(dir / "coords.csv", world.coords);
    std::ofstream out(dir / "planted.csv");
    if (!out) throw DataError("cannot write '" + (dir / "planted.csv").string() + "'");
    out << "id,label\n";
    for (const auto& [id, label] : world.planted) out << id << ',' << label << '\n';
}

// --- scenario generators ------------------------------------------------------

LabelledPoints three_peaks_1d(std::size_t total, std::uint64_t seed) {
    struct Peak {
        double center, sigma, share;
    };
    // Left peak densest, middle one sparsest. Each peak is sampled by
    // stratified inverse-CDF draws (one jittered draw per quantile slice) so
    // that sampling noise cannot carve spurious sub-peaks.
    constexpr Peak peaks[] = {{-15.0, 1.5, 0.40}, {0.0, 3.0, 0.25}, {15.0, 2.0, 0.35}};
    Rng rng(seed);
    std::vector<std::string> ids;
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
        const std::size_t count = k == 2 ? total - assigned
                                         : static_cast<std::size_t>(std::llround(peaks[k].share * total));
        assigned += count;
        const boost::math::normal_distribution<double> shape(peaks[k].center, peaks[k].sigma);
        for (std::size_t i = 0; i < count; ++i) {
            const double u = (static_cast<double>(i) + rng.uniform01()) / static_cast<double>(count);
            values.push_back(boost::math::quantile(shape, std::clamp(u, 1e-12, 1.0 - 1e-12)));
            labels.push_back(k);
        }
    }
    for (std::size_t i = 0; i < values.size(); ++i) ids.push_back(fmt::format("x{:06}", i));
    return {PointTable(std::move(ids), 1, std::move(values)), std::move(labels)};
}

PointTable random_points(std::size_t n, std::size_t dim, std::uint64_t seed, double extent) {
    Rng rng(seed);
    std::vector<std::string> ids;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(fmt::format("q{:05}", i));
        for (std::size_t d = 0; d < dim; ++d) values.push_back(rng.uniform(0.0, extent));
    }
    return PointTable(std::move(ids), dim, std::move(values));
}

CorenessScenario coreness_scenario(CorenessTrend trend, std::uint64_t seed) {
    Rng rng(seed);
    CorenessScenario s;
    // Logical concept numbers: AI concepts first, then non-AI ones, then
    // fresh pendants; a seeded permutation hides that order.
    const std::size_t n_ai = trend == CorenessTrend::decreasing ? 6 : 40;
    const std::size_t n_core = trend == CorenessTrend::decreasing ? 25 : 40;
    const int horizon = trend == CorenessTrend::decreasing ? 20 : 19;
    const std::size_t n_pendant = static_cast<std::size_t>(horizon) * 4;
    std::vector<ConceptId> ids(n_ai + n_core + n_pendant);
    std::iota(ids.begin(), ids.end(), 0);
    rng.shuffle(ids);
    auto ai = [&](std::size_t i) { return ids[i]; };
    auto other = [&](std::size_t i) { return ids[n_ai + i]; };
    auto pendant = [&](std::size_t i) { return ids[n_ai + n_core + i]; };
    for (std::size_t i = 0; i < n_ai; ++i) s.ai.insert(ai(i));

    constexpr int first = 2000;
    s.years = {first, first + horizon - 1};
    std::size_t next_pendant = 0;
    for (int t = 0; t < horizon; ++t) {
        const int year = first + t;
        std::size_t clique = 0;  // current non-AI clique size
        if (trend == CorenessTrend::decreasing) {
            if (t == 0) {
                ConceptPaper seedling{year, {}};
                for (std::size_t i = 0; i < n_ai; ++i) seedling.concepts.push_back(ai(i));
                s.papers.push_back(seedling);
                s.papers.push_back({year, {ai(0), other(0)}});
                clique = 1;
            } else {
                clique = n_ai + static_cast<std::size_t>(t);
                ConceptPaper p{year, {}};
                for (std::size_t i = 0; i < clique; ++i) p.concepts.push_back(other(i));
                s.papers.push_back(p);
            }
            // Repeat AI co-occurrences: weights only.
            s.papers.push_back({year, {ai(rng.below(n_ai)), ai(0)}});
        } else {
            clique = n_core;
            if (t == 0) {
                ConceptPaper p{year, {}};
                for (std::size_t i = 0; i < n_core; ++i) p.concepts.push_back(other(i));
                s.papers.push_back(p);
                for (std::size_t i = 0; i < n_ai; ++i) s.papers.push_back({year, {ai(i), other(i)}});
            } else {
                for (std::size_t i = 0; i < n_ai; ++i) {
                    s.papers.push_back({year, {ai(i), ai((i + static_cast<std::size_t>(t)) % n_ai)}});
                }
            }
        }
        // Peripheral noise: fresh concepts hanging off the non-AI clique.
        const auto extra = 1 + rng.below(3);
        for (std::size_t e = 0; e < extra && next_pendant < n_pendant; ++e) {
            s.papers.push_back({year, {other(rng.below(clique)), pendant(next_pendant++)}});
        }
    }
    return s;
}

CohortWorld rog_cohorts(const std::vector<int>& peak_offsets, std::size_t per_family, int horizon,
                        std::uint64_t seed) {
    for (int off : peak_offsets) {
        if (off < 1 || off > horizon) throw std::invalid_argument("rog_cohorts: peak offset outside the horizon");
    }
    Rng rng(seed);
    CohortWorld w;
    w.cohort_year = 2000;
    auto add_paper = [&](std::string id, int year, bool ai, Point2 at) {
        PaperRecord p;
        p.id = std::move(id);
        p.title = ai ? "A machine learning study" : "A study";
        p.year = year;
        p.ref_count = 10;
        p.citation_count = 10;
        p.ai_flag = ai;
        w.papers.push_back(std::move(p));
        w.points.push_back(at);
    };
    auto around = [&](Point2 c, double r) {
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        return Point2{c.x + r * std::cos(a), c.y + r * std::sin(a)};
    };
    for (std::size_t f = 0; f < peak_offsets.size(); ++f) {
        for (std::size_t i = 0; i < per_family; ++i) {
            const std::string focal = fmt::format("F{}-{:03}", f, i);
            const Point2 center{rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)};
            add_paper(focal, w.cohort_year, true, center);
            w.focal_ids.push_back(focal);
            w.family.push_back(static_cast<int>(f));
            double sum = 0.0;
            std::size_t count = 0;
            std::size_t c = 0;
            auto cite = [&](int year, double r) {
                const std::string id = fmt::format("C{}-{:03}-{:02}", f, i, c++);
                add_paper(id, year, false, around(center, r));
                w.citations.push_back({id, focal});
                sum += r * r;
                ++count;
            };
            for (int k = 0; k < 3; ++k) cite(w.cohort_year, rng.uniform(1.0, 2.0));
            for (int t = 1; t <= horizon; ++t) {
                const int year = w.cohort_year + t;
                if (t == peak_offsets[f]) {
                    for (int k = 0; k < 4; ++k) cite(year, rng.uniform(15.0, 20.0));
                } else if (t > peak_offsets[f]) {
                    cite(year, std::sqrt(sum / static_cast<double>(count)));
                }
            }
        }
    }
    return w;
}

// --- oracles ----------------------------------------------------------------------

namespace oracle {

namespace {

void guard(std::size_t n, const char* what) {
    if (n > kOracleMaxSize) {
        throw std::invalid_argument(fmt::format("oracle::{}: {} items exceed the limit of {}", what, n,
                                                kOracleMaxSize));
    }
}

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

std::vector<int> kcore(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    guard(n, "kcore");
    std::vector<std::set<std::size_t>> adj(n);
    for (const auto& [a, b] : edges) {
        if (a == b) continue;
        adj.at(a).insert(b);
        adj.at(b).insert(a);
    }
    std::vector<int> core(n, 0);
    std::vector<bool> removed(n, false);
    int k = 0;
    // Repeatedly strip a vertex of minimum remaining degree.
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t pick = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (!removed[v] && (pick == n || adj[v].size() < adj[pick].size())) pick = v;
        }
        k = std::max(k, static_cast<int>(adj[pick].size()));
        core[pick] = k;
        removed[pick] = true;
        for (auto u : adj[pick]) adj[u].erase(pick);
        adj[pick].clear();
    }
    return core;
}

double mst_weight(const Coords& points, std::size_t min_samples) {
    const std::size_t n = points.size();
    guard(n, "mst_weight");
    if (min_samples == 0 || min_samples >= n) throw std::invalid_argument("oracle::mst_weight: bad min_samples");
    std::vector<double> core(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> d;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) d.push_back(euclid(points[i], points[j]));
        }
        std::sort(d.begin(), d.end());
        core[i] = d[min_samples - 1];
    }
    // Prim over the dense mutual-reachability graph.
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    best[0] = 0.0;
    double total = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t v = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_tree[i] && (v == n || best[i] < best[v])) v = i;
        }
        in_tree[v] = true;
        total += best[v];
        for (std::size_t u = 0; u < n; ++u) {
            if (in_tree[u]) continue;
            const double w = std::max({core[v], core[u], euclid(points[v], points[u])});
            best[u] = std::min(best[u], w);
        }
    }
    return total;
}

std::set<std::string> knn(const Coords& points, const std::vector<std::string>& ids, std::size_t query,
                          std::size_t k) {
    guard(points.size(), "knn");
    std::vector<std::pair<double, std::string>> all;
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (j != query) all.emplace_back(euclid(points[query], points[j]), ids[j]);
    }
    std::sort(all.begin(), all.end());
    std::set<std::string> out;
    for (std::size_t i = 0; i < k && i < all.size(); ++i) out.insert(all[i].second);
    return out;
}

double rog(const std::vector<double>& focal, const Coords& citers) {
    guard(citers.size(), "rog");
    if (citers.empty()) throw std::invalid_argument("oracle::rog: no citers");
    std::vector<double> d;
    for (const auto& c : citers) d.push_back(euclid(focal, c));
    double sum = 0.0;
    for (double v : d) sum += v * v;
    return std::sqrt(sum / static_cast<double>(d.size()));
}

double farthest(const std::vector<double>& focal, const Coords& all) {
    guard(all.size(), "farthest");
    double best = 0.0;
    for (const auto& p : all) best = std::max(best, euclid(focal, p));
    return best;
}

}  // namespace oracle

}  // namespace carto
