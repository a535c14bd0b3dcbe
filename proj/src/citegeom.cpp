#include "carto/citegeom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace carto {

namespace {

double dist2(Point2 a, Point2 b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

double sq_norm(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

}  // namespace

CitationGraph::CitationGraph(const Corpus& corpus) : citers_(corpus.size()) {
    for (const auto& [citer, cited] : corpus.citations()) {
        citers_[cited].push_back(citer);
        ++edges_;
    }
}

double rog(Point2 focal, std::span<const Point2> citers) {
    if (citers.empty()) throw std::invalid_argument("rog: empty citer set");
    double sum = 0.0;
    for (const auto& c : citers) sum += dist2(focal, c);
    return std::sqrt(sum / static_cast<double>(citers.size()));
}

FarthestPointIndex::FarthestPointIndex(std::span<const Point2> points) {
    std::vector<Point2> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) {
        hull_ = pts;
        return;
    }
    // Andrew's monotone chain.
    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    hull_ = std::move(hull);
}

double FarthestPointIndex::max_distance(Point2 q) const {
    double best = 0.0;
    for (const auto& h : hull_) best = std::max(best, dist2(q, h));
    return std::sqrt(best);
}

double max_rog(Point2 focal, std::span<const Point2> all) {
    if (all.size() < 2) throw std::invalid_argument("max_rog: needs at least two mapped papers");
    return FarthestPointIndex(all).max_distance(focal);
}

double normalized_rog(double r_g, double d_max) {
    if (!(d_max > 0.0)) throw DataError("normalized_rog: farthest-point distance is zero");
    return std::min(1.0, r_g / d_max);
}

std::vector<GyrationRecord> gyration_records(const Corpus& corpus, std::span<const Point2> points,
                                             const CitationGraph& graph, std::span<const int> labels,
                                             std::size_t min_citers) {
    if (points.size() != corpus.size() || labels.size() != corpus.size()) {
        throw std::invalid_argument("gyration_records: inputs not aligned with the corpus");
    }
    const FarthestPointIndex far(points);
    min_citers = std::max<std::size_t>(1, min_citers);
    std::vector<std::optional<GyrationRecord>> slots(corpus.size());
    parallel_for(corpus.size(), [&](std::size_t r) {
        const auto citers = graph.citers(static_cast<Corpus::Row>(r));
        if (citers.size() < min_citers) return;
        std::vector<Point2> cp;
        cp.reserve(citers.size());
        for (auto c : citers) cp.push_back(points[c]);
        const auto& p = corpus.papers()[r];
        GyrationRecord rec;
        rec.id = p.id;
        rec.year = p.year;
        rec.n_citers = citers.size();
        rec.r_g = rog(points[r], cp);
        rec.d_max = far.max_distance(points[r]);
        rec.r_tilde = normalized_rog(rec.r_g, rec.d_max);
        rec.ai = p.ai_flag;
        rec.cluster = labels[r];
        slots[r] = std::move(rec);
    });
    std::vector<GyrationRecord> out;
    for (auto& s : slots) {
        if (s) out.push_back(std::move(*s));
    }
    return out;
}

YearlyRog yearly_mean_rog(std::span<const GyrationRecord> records, YearRange window, std::size_t min_citations,
                          RogMetric metric) {
    std::vector<std::vector<double>> ai(window.size());
    std::vector<std::vector<double>> other(window.size());
    for (const auto& r : records) {
        if (r.n_citers < min_citations || !window.contains(r.year)) continue;
        const double v = metric == RogMetric::normalized ? r.r_tilde : r.r_g;
        (r.ai ? ai : other)[static_cast<std::size_t>(r.year - window.first)].push_back(v);
    }
    YearlyRog out{TemporalSeries(window, true), TemporalSeries(window, true)};
    for (std::size_t y = 0; y < window.size(); ++y) {
        if (auto s = mean_and_stderr(ai[y])) {
            out.ai.values[y] = s->mean;
            out.ai.errors[y] = s->stderr_;
        }
        if (auto s = mean_and_stderr(other[y])) {
            out.non_ai.values[y] = s->mean;
            out.non_ai.errors[y] = s->stderr_;
        }
    }
    return out;
}

std::map<int, ClusterRogDistribution> cluster_rog_distributions(std::span<const GyrationRecord> records,
                                                                std::size_t min_citations) {
    std::map<int, ClusterRogDistribution> out;
    for (const auto& r : records) {
        if (r.n_citers < min_citations) continue;
        auto& d = out[r.cluster];
        (r.ai ? d.ai : d.non_ai).sample.push_back(r.r_tilde);
    }
    for (auto& [label, d] : out) {
        for (RogDistribution* dist : {&d.ai, &d.non_ai}) {
            auto& s = dist->sample;
            if (s.empty()) continue;
            std::sort(s.begin(), s.end());
            dist->summary = BoxSummary{s.front(), quantile_sorted(s, 0.25), quantile_sorted(s, 0.5),
                                       quantile_sorted(s, 0.75), s.back()};
        }
    }
    return out;
}

CitationMatrix ai_citation_matrix(const Corpus& corpus, const CitationGraph& graph,
                                  const ClusterAssignment& assignment, CitationCounting counting) {
    std::unordered_map<std::string_view, int> label_of;
    for (std::size_t i = 0; i < assignment.ids.size(); ++i) label_of.emplace(assignment.ids[i], assignment.labels[i]);
    std::vector<int> labels(corpus.size(), kNoise);
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        if (auto it = label_of.find(corpus.papers()[r].id); it != label_of.end()) labels[r] = it->second;
    }
    const auto m = static_cast<std::size_t>(assignment.n_clusters);
    CitationMatrix out;
    out.clusters = m;
    out.counts.assign(m * m, 0.0);
    out.normalized.assign(m * m, 0.0);
    out.zero_row.assign(m, false);

    if (counting == CitationCounting::edges) {
        for (const auto& [citer, cited] : corpus.citations()) {
            if (!corpus.paper(cited).ai_flag || labels[citer] < 0 || labels[cited] < 0) continue;
            out.counts[static_cast<std::size_t>(labels[citer]) * m + static_cast<std::size_t>(labels[cited])] += 1.0;
        }
    } else {
        // Distinct (citing paper, cited cluster) pairs.
        std::vector<std::pair<Corpus::Row, int>> pairs;
        for (const auto& [citer, cited] : corpus.citations()) {
            if (!corpus.paper(cited).ai_flag || labels[citer] < 0 || labels[cited] < 0) continue;
            pairs.emplace_back(citer, labels[cited]);
        }
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        for (const auto& [citer, target] : pairs) {
            out.counts[static_cast<std::size_t>(labels[citer]) * m + static_cast<std::size_t>(target)] += 1.0;
        }
    }
    (void)graph;
    for (std::size_t i = 0; i < m; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) sum += out.counts[i * m + j];
        if (sum == 0.0) {
            out.zero_row[i] = true;
            continue;
        }
        for (std::size_t j = 0; j < m; ++j) out.normalized[i * m + j] = out.counts[i * m + j] / sum;
    }
    return out;
}

TemporalSeries cumulative_rog_series(const Corpus& corpus, std::span<const Point2> points,
                                     const CitationGraph& graph, Corpus::Row focal, YearRange years,
                                     std::size_t min_citations) {
    std::vector<Corpus::Row> citers(graph.citers(focal).begin(), graph.citers(focal).end());
    std::stable_sort(citers.begin(), citers.end(),
                     [&](auto a, auto b) { return corpus.paper(a).year < corpus.paper(b).year; });
    TemporalSeries series(years);
    min_citations = std::max<std::size_t>(1, min_citations);
    double sum = 0.0;
    std::size_t count = 0;
    std::size_t next = 0;
    for (int year = years.first; year <= years.last; ++year) {
        while (next < citers.size() && corpus.paper(citers[next]).year <= year) {
            sum += dist2(points[focal], points[citers[next]]);
            ++count;
            ++next;
        }
        if (count >= min_citations) series[year] = std::sqrt(sum / static_cast<double>(count));
    }
    return series;
}

TemporalSeries log_return_series(const TemporalSeries& rog_by_year) {
    TemporalSeries out(rog_by_year.range());
    bool started = false;
    for (std::size_t i = 1; i < rog_by_year.values.size(); ++i) {
        const auto& prev = rog_by_year.values[i - 1];
        const auto& cur = rog_by_year.values[i];
        if (prev && *prev > 0.0) started = true;
        if (!started) continue;
        if (prev && *prev > 0.0 && cur && *cur > 0.0) out.values[i] = std::log(*cur / *prev);
    }
    return out;
}

std::vector<std::vector<double>> align_series(std::span<const TemporalSeries> series,
                                              std::span<const int> first_years, std::size_t length) {
    if (series.size() != first_years.size()) throw std::invalid_argument("align_series: size mismatch");
    std::vector<std::vector<double>> out(series.size(), std::vector<double>(length, 0.0));
    for (std::size_t s = 0; s < series.size(); ++s) {
        for (std::size_t t = 0; t < length; ++t) {
            if (auto v = series[s].at(first_years[s] + static_cast<int>(t))) out[s][t] = *v;
        }
    }
    return out;
}

// --- k-means --------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> centroids_of(const std::vector<std::vector<double>>& data,
                                              const std::vector<int>& assign, std::size_t k) {
    const std::size_t dim = data.front().size();
    std::vector<std::vector<double>> c(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> n(k, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto a = static_cast<std::size_t>(assign[i]);
        ++n[a];
        for (std::size_t d = 0; d < dim; ++d) c[a][d] += data[i][d];
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (n[j] == 0) continue;
        for (double& v : c[j]) v /= static_cast<double>(n[j]);
    }
    return c;
}

double distortion_of(const std::vector<std::vector<double>>& data, const std::vector<int>& assign,
                     const std::vector<std::vector<double>>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) s += sq_norm(data[i], c[static_cast<std::size_t>(assign[i])]);
    return s;
}

KMeansResult kmeans_once(const std::vector<std::vector<double>>& data, std::size_t k, Rng& rng) {
    const std::size_t n = data.size();
    // k-means++ seeding.
    std::vector<std::vector<double>> centers;
    centers.push_back(data[rng.below(n)]);
    std::vector<double> d2(n);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, sq_norm(data[i], c));
            d2[i] = best;
            total += best;
        }
        std::size_t pick = n - 1;
        if (total > 0.0) {
            double target = rng.uniform01() * total;
            for (std::size_t i = 0; i < n; ++i) {
                target -= d2[i];
                if (target < 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.below(n);
        }
        centers.push_back(data[pick]);
    }

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_norm(data[i], centers[0]);
            for (std::size_t j = 1; j < k; ++j) {
                const double d = sq_norm(data[i], centers[j]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(j);
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        // An emptied cluster takes the point farthest from its centroid.
        std::vector<std::size_t> counts(k, 0);
        for (int a : assign) ++counts[static_cast<std::size_t>(a)];
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] != 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[static_cast<std::size_t>(assign[i])] <= 1) continue;
                const double d = sq_norm(data[i], centers[static_cast<std::size_t>(assign[i])]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            --counts[static_cast<std::size_t>(assign[far])];
            assign[far] = static_cast<int>(j);
            ++counts[j];
            changed = true;
        }
        centers = centroids_of(data, assign, k);
        if (!changed) break;
    }

    // Single-point moves (Hartigan criterion) until none helps.
    std::vector<std::size_t> counts(k, 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    bool moved = true;
    for (int sweep = 0; moved && sweep < 1000; ++sweep) {
        moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = static_cast<std::size_t>(assign[i]);
            if (counts[a] <= 1) continue;
            const double na = static_cast<double>(counts[a]);
            const double remove_gain = na / (na - 1.0) * sq_norm(data[i], centers[a]);
            std::size_t target = a;
            double best_delta = 0.0;
            for (std::size_t b = 0; b < k; ++b) {
                if (b == a) continue;
                const double nb = static_cast<double>(counts[b]);
                const double delta = nb / (nb + 1.0) * sq_norm(data[i], centers[b]) - remove_gain;
                if (delta < best_delta - 1e-12 * (1.0 + remove_gain)) {
                    best_delta = delta;
                    target = b;
                }
            }
            if (target != a) {
                assign[i] = static_cast<int>(target);
                --counts[a];
                ++counts[target];
                centers = centroids_of(data, assign, k);
                moved = true;
            }
        }
    }

    // Canonical labels: clusters numbered by their first member.
    std::vector<int> relabel(k, -1);
    int next = 0;
    for (int& a : assign) {
        auto& r = relabel[static_cast<std::size_t>(a)];
        if (r < 0) r = next++;
        a = r;
    }
    KMeansResult result;
    result.assignment = std::move(assign);
    result.centroids = centroids_of(data, result.assignment, k);
    result.distortion = distortion_of(data, result.assignment, result.centroids);
    return result;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& data, std::size_t k, std::uint64_t seed,
                    std::size_t restarts) {
    if (k == 0 || k > data.size()) throw std::invalid_argument("kmeans: k must lie in [1, n]");
    for (const auto& row : data) {
        if (row.size() != data.front().size()) throw std::invalid_argument("kmeans: ragged input");
    }
    Rng rng(seed);
    KMeansResult best;
    best.distortion = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
        auto candidate = kmeans_once(data, k, rng);
        if (candidate.distortion < best.distortion) best = std::move(candidate);
    }
    return best;
}

std::size_t elbow(std::span<const double> distortion, std::size_t k_min) {
    if (distortion.size() < 3) return k_min;
    std::size_t best = 1;
    double best_curvature = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < distortion.size(); ++i) {
        const double curvature = distortion[i - 1] - 2.0 * distortion[i] + distortion[i + 1];
        if (curvature > best_curvature) {
            best_curvature = curvature;
            best = i;
        }
    }
    return k_min + best;
}

DynamicsResult cluster_rog_dynamics(const std::vector<std::vector<double>>& series, std::size_t k_min,
                                    std::size_t k_max, std::uint64_t seed) {
    if (k_min == 0 || k_max < k_min) throw std::invalid_argument("cluster_rog_dynamics: bad k range");
    if (series.size() < k_max) {
        throw std::invalid_argument("cluster_rog_dynamics: " + std::to_string(series.size()) +
                                    " series for k up to " + std::to_string(k_max));
    }
    DynamicsResult out;
    out.k_min = k_min;
    std::vector<KMeansResult> fits;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        fits.push_back(kmeans(series, k, seed));
        out.distortion.push_back(fits.back().distortion);
    }
    out.k = elbow(out.distortion, k_min);
    out.clustering = std::move(fits[out.k - k_min]);
    return out;
}

// --- writers ----------------------------------------------------------------------

void write_rog_csv(const std::filesystem::path& path, std::span<const GyrationRecord> records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "id,year,n_citers,r_g,d_max,r_tilde,ai_flag,cluster\n";
    for (const auto& r : records) {
        out << r.id << ',' << r.year << ',' << r.n_citers << ',' << fmt::format("{}", r.r_g) << ','
            << fmt::format("{}", r.d_max) << ',' << fmt::format("{}", r.r_tilde) << ',' << (r.ai ? 1 : 0) << ','
            << r.cluster << '\n';
    }
}

void write_citation_matrix_csv(const std::filesystem::path& path, const CitationMatrix& matrix) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "cluster";
    for (std::size_t j = 0; j < matrix.clusters; ++j) out << ",C" << j;
    out << ",zero_row\n";
    for (std::size_t i = 0; i < matrix.clusters; ++i) {
        out << 'C' << i;
        for (std::size_t j = 0; j < matrix.clusters; ++j) out << ',' << fmt::format("{}", matrix.at(i, j));
        out << ',' << (matrix.zero_row[i] ? 1 : 0) << '\n';
    }
}

}  // namespace carto
