#include "carto/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

namespace carto {

namespace {

std::vector<std::string> concepts_of(const PaperRecord& p, Taxonomy taxonomy) {
    std::vector<std::string> out;
    switch (taxonomy) {
        case Taxonomy::fos_level2:
        case Taxonomy::fos_level3: {
            const int level = taxonomy == Taxonomy::fos_level2 ? 2 : 3;
            for (const auto& f : p.fos_labels) {
                if (f.level == level) out.push_back(f.concept_id);
            }
            break;
        }
        case Taxonomy::topics:
            if (p.topic) out.push_back(p.topic->topic_id);
            break;
        case Taxonomy::keywords:
            out = p.keywords;
            break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Labels that appear in the partition, noise first.
std::vector<int> partition_labels(const ClusterAssignment& assignment) {
    std::vector<int> labels{kNoise};
    for (int l = 0; l < assignment.n_clusters; ++l) labels.push_back(l);
    return labels;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

}  // namespace

Taxonomy parse_taxonomy(std::string_view name) {
    if (name == "fos_level2") return Taxonomy::fos_level2;
    if (name == "fos_level3") return Taxonomy::fos_level3;
    if (name == "topics") return Taxonomy::topics;
    if (name == "keywords") return Taxonomy::keywords;
    throw ConfigError("unknown taxonomy '" + std::string(name) + "'");
}

std::string_view taxonomy_name(Taxonomy taxonomy) {
    switch (taxonomy) {
        case Taxonomy::fos_level2: return "fos_level2";
        case Taxonomy::fos_level3: return "fos_level3";
        case Taxonomy::topics: return "topics";
        case Taxonomy::keywords: return "keywords";
    }
    return "?";
}

std::vector<int> labels_by_row(const Corpus& corpus, const ClusterAssignment& assignment) {
    std::unordered_map<std::string_view, int> by_id;
    by_id.reserve(assignment.ids.size());
    for (std::size_t i = 0; i < assignment.ids.size(); ++i) by_id.emplace(assignment.ids[i], assignment.labels[i]);
    std::vector<int> labels(corpus.size(), kNoise);
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        if (auto it = by_id.find(corpus.papers()[r].id); it != by_id.end()) labels[r] = it->second;
    }
    return labels;
}

std::vector<RankedConcept> rank_concepts(const Corpus& corpus, const ClusterAssignment& assignment,
                                         int cluster, Taxonomy taxonomy, std::size_t top_n) {
    if (cluster < kNoise || cluster >= assignment.n_clusters) {
        throw std::invalid_argument("rank_concepts: unknown cluster " + std::to_string(cluster));
    }
    const auto labels = labels_by_row(corpus, assignment);
    std::map<std::string, std::size_t> counts;
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        if (labels[r] != cluster) continue;
        for (auto& c : concepts_of(corpus.papers()[r], taxonomy)) ++counts[c];
    }
    std::vector<RankedConcept> ranking;
    ranking.reserve(counts.size());
    for (auto& [id, count] : counts) ranking.push_back({id, count});
    std::stable_sort(ranking.begin(), ranking.end(),
                     [](const RankedConcept& a, const RankedConcept& b) { return a.count > b.count; });
    if (ranking.size() > top_n) ranking.resize(top_n);
    return ranking;
}

ClusterProfile profile_cluster(const Corpus& corpus, const ClusterAssignment& assignment, int cluster,
                               std::size_t top_n) {
    ClusterProfile profile;
    profile.label = cluster;
    for (Taxonomy t : {Taxonomy::fos_level2, Taxonomy::fos_level3, Taxonomy::topics, Taxonomy::keywords}) {
        profile.rankings[t] = rank_concepts(corpus, assignment, cluster, t, top_n);
    }
    const auto labels = labels_by_row(corpus, assignment);
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        if (labels[r] != cluster) continue;
        ++profile.total_count;
        if (corpus.papers()[r].ai_flag) ++profile.ai_paper_count;
    }
    return profile;
}

AiShares ai_share_per_cluster(const Corpus& corpus, const ClusterAssignment& assignment) {
    const auto labels = labels_by_row(corpus, assignment);
    std::map<int, std::size_t> counts;
    for (int l : partition_labels(assignment)) counts[l] = 0;
    std::size_t total = 0;
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        if (!corpus.papers()[r].ai_flag) continue;
        ++counts[labels[r]];
        ++total;
    }
    if (total == 0) throw DataError("ai_share_per_cluster: corpus has no AI-flagged paper");
    const std::size_t clustered = total - counts[kNoise];
    AiShares shares;
    for (const auto& [label, count] : counts) {
        shares.with_noise[label] = static_cast<double>(count) / static_cast<double>(total);
        if (label != kNoise) {
            shares.clusters_only[label] =
                clustered ? static_cast<double>(count) / static_cast<double>(clustered) : 0.0;
        }
    }
    return shares;
}

std::map<int, ClusterSeries> cluster_size_series(const Corpus& corpus, const ClusterAssignment& assignment,
                                                 YearRange window) {
    if (window.size() == 0) throw std::invalid_argument("cluster_size_series: empty window");
    const auto labels = labels_by_row(corpus, assignment);
    std::map<int, std::vector<std::size_t>> yearly;
    std::map<int, std::vector<std::size_t>> yearly_ai;
    std::map<int, std::size_t> totals;
    for (int l : partition_labels(assignment)) {
        yearly[l].assign(window.size(), 0);
        yearly_ai[l].assign(window.size(), 0);
        totals[l] = 0;
    }
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        const auto& p = corpus.papers()[r];
        ++totals[labels[r]];
        if (!window.contains(p.year)) continue;
        const auto y = static_cast<std::size_t>(p.year - window.first);
        ++yearly[labels[r]][y];
        if (p.ai_flag) ++yearly_ai[labels[r]][y];
    }
    std::map<int, ClusterSeries> out;
    for (const auto& [label, counts] : yearly) {
        ClusterSeries s{TemporalSeries(window), TemporalSeries(window), TemporalSeries(window)};
        const double total = static_cast<double>(totals[label]);
        for (std::size_t y = 0; y < window.size(); ++y) {
            const double c = static_cast<double>(counts[y]);
            const double a = static_cast<double>(yearly_ai[label][y]);
            s.size.values[y] = total > 0 ? c / total : 0.0;
            s.ai_of_cluster.values[y] = total > 0 ? a / total : 0.0;
            if (counts[y] > 0) s.ai_within_year.values[y] = a / c;
        }
        out.emplace(label, std::move(s));
    }
    return out;
}

CumulativeAiResult cumulative_ai_series(const Corpus& corpus, const ClusterAssignment& assignment,
                                        YearRange window, int normalize_year) {
    if (!window.contains(normalize_year)) {
        throw std::invalid_argument("cumulative_ai_series: normalize_year outside the window");
    }
    const auto labels = labels_by_row(corpus, assignment);
    std::map<int, std::vector<std::size_t>> cumulative;
    for (int l : partition_labels(assignment)) cumulative[l].assign(window.size(), 0);
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        const auto& p = corpus.papers()[r];
        if (!p.ai_flag || p.year > window.last) continue;
        const auto start = static_cast<std::size_t>(std::max(0, p.year - window.first));
        auto& c = cumulative[labels[r]];
        for (std::size_t y = start; y < window.size(); ++y) ++c[y];
    }
    CumulativeAiResult result;
    const auto norm_idx = static_cast<std::size_t>(normalize_year - window.first);
    for (const auto& [label, c] : cumulative) {
        if (c[norm_idx] == 0) {
            result.omitted.push_back(label);
            continue;
        }
        TemporalSeries s(window);
        for (std::size_t y = 0; y < window.size(); ++y) {
            s.values[y] = static_cast<double>(c[y]) / static_cast<double>(c[norm_idx]);
        }
        result.series.emplace(label, std::move(s));
    }
    return result;
}

std::vector<Snapshot> snapshot_maps(const MapCoordinates& coords, const Corpus& corpus,
                                    const ClusterAssignment& assignment, YearRange window, int period_length) {
    if (period_length < 1) throw std::invalid_argument("snapshot_maps: period_length must be positive");
    const auto labels = labels_by_row(corpus, assignment);
    std::vector<Snapshot> snapshots;
    for (int start = window.first; start <= window.last; start += period_length) {
        snapshots.push_back({{start, std::min(window.last, start + period_length - 1)}, {}});
    }
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        const auto& p = corpus.papers()[r];
        if (!window.contains(p.year)) continue;
        auto& snap = snapshots[static_cast<std::size_t>((p.year - window.first) / period_length)];
        snap.points.push_back({p.id, coords.point(coords.row_of(p.id)), labels[r], p.ai_flag});
    }
    return snapshots;
}

std::size_t DensityGrid::total() const {
    std::size_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

DensityGrid density_grid(const PointTable& coords, std::size_t cols, std::size_t rows) {
    if (cols < 2 || rows < 2) throw std::invalid_argument("density_grid: resolution must be >= 2 per axis");
    if (coords.dim() != 2) throw std::invalid_argument("density_grid: needs 2-D coordinates");
    DensityGrid grid;
    grid.cols = cols;
    grid.rows = rows;
    grid.counts.assign(cols * rows, 0);
    if (coords.size() == 0) return grid;
    grid.x_min = grid.y_min = std::numeric_limits<double>::infinity();
    grid.x_max = grid.y_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const auto p = coords.row(i);
        grid.x_min = std::min(grid.x_min, p[0]);
        grid.x_max = std::max(grid.x_max, p[0]);
        grid.y_min = std::min(grid.y_min, p[1]);
        grid.y_max = std::max(grid.y_max, p[1]);
    }
    const auto cell = [](double v, double lo, double hi, std::size_t n) {
        if (hi <= lo) return std::size_t{0};
        const auto c = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(n)));
        return std::min(c, n - 1);
    };
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const auto p = coords.row(i);
        ++grid.counts[cell(p[1], grid.y_min, grid.y_max, rows) * cols + cell(p[0], grid.x_min, grid.x_max, cols)];
    }
    return grid;
}

AiConceptRule parse_ai_concept_rule(std::string_view name) {
    if (name == "keyword_name") return AiConceptRule::keyword_name;
    if (name == "ai_exclusive") return AiConceptRule::ai_exclusive;
    if (name == "either") return AiConceptRule::either;
    throw ConfigError("unknown AI concept rule '" + std::string(name) + "'");
}

std::set<std::string> ai_concepts(const Corpus& corpus, const AIKeywordList& keywords, AiConceptRule rule) {
    std::map<std::string, bool> only_on_ai;  // concept -> every occurrence on an AI paper
    for (const auto& p : corpus.papers()) {
        for (const auto& f : p.fos_labels) {
            auto [it, inserted] = only_on_ai.emplace(f.concept_id, p.ai_flag);
            if (!inserted) it->second = it->second && p.ai_flag;
        }
    }
    std::set<std::string> out;
    for (const auto& [concept_id, exclusive] : only_on_ai) {
        const bool by_name = keywords.matches(concept_id);
        const bool take = rule == AiConceptRule::keyword_name ? by_name
                          : rule == AiConceptRule::ai_exclusive ? exclusive
                                                                : (by_name || exclusive);
        if (take) out.insert(concept_id);
    }
    return out;
}

AiConceptShares ai_concept_share_series(const Corpus& corpus, const std::set<std::string>& concepts,
                                        YearRange window) {
    if (concepts.empty()) throw std::invalid_argument("ai_concept_share_series: empty AI concept set");
    std::map<std::string, std::vector<std::size_t>> counts;
    for (const auto& c : concepts) counts[c].assign(window.size(), 0);
    std::vector<std::size_t> totals(window.size(), 0);
    for (const auto& p : corpus.papers()) {
        if (!p.ai_flag || !window.contains(p.year)) continue;
        const auto y = static_cast<std::size_t>(p.year - window.first);
        std::set<std::string> seen;
        for (const auto& f : p.fos_labels) {
            if (concepts.contains(f.concept_id) && seen.insert(f.concept_id).second) {
                ++counts[f.concept_id][y];
                ++totals[y];
            }
        }
    }
    AiConceptShares out;
    std::vector<std::pair<std::size_t, std::string>> overall;
    for (const auto& [concept_id, c] : counts) {
        TemporalSeries s(window);
        std::size_t sum = 0;
        for (std::size_t y = 0; y < window.size(); ++y) {
            sum += c[y];
            if (totals[y] > 0) s.values[y] = static_cast<double>(c[y]) / static_cast<double>(totals[y]);
        }
        overall.emplace_back(sum, concept_id);
        out.series.emplace(concept_id, std::move(s));
    }
    std::stable_sort(overall.begin(), overall.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < overall.size() && i < 10; ++i) out.top.push_back(overall[i].second);
    return out;
}

// --- writers ------------------------------------------------------------------

void write_profile_json(const std::filesystem::path& path, const ClusterProfile& profile) {
    nlohmann::json rankings = nlohmann::json::object();
    for (const auto& [taxonomy, ranking] : profile.rankings) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& r : ranking) list.push_back({{"concept", r.concept_id}, {"count", r.count}});
        rankings[std::string(taxonomy_name(taxonomy))] = std::move(list);
    }
    nlohmann::json doc = {{"label", profile.label},
                          {"total_count", profile.total_count},
                          {"ai_paper_count", profile.ai_paper_count},
                          {"ai_share", profile.ai_share()},
                          {"rankings", std::move(rankings)}};
    open_output(path) << doc.dump(1) << '\n';
}

void write_series_csv(const std::filesystem::path& path, const TemporalSeries& series) {
    auto out = open_output(path);
    const bool with_errors = !series.errors.empty();
    out << (with_errors ? "year,value,stderr\n" : "year,value\n");
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        out << series.first_year + static_cast<int>(i) << ',' << fmt_opt(series.values[i]);
        if (with_errors) out << ',' << fmt_opt(series.errors[i]);
        out << '\n';
    }
}

void write_grid_csv(const std::filesystem::path& path, const DensityGrid& grid) {
    auto out = open_output(path);
    out << "row,col,count\n";
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) out << r << ',' << c << ',' << grid.at(r, c) << '\n';
    }
}

void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& snapshot) {
    auto out = open_output(path);
    out << "id,x,y,label,ai\n";
    for (const auto& p : snapshot.points) {
        out << p.id << ',' << fmt::format("{}", p.position.x) << ',' << fmt::format("{}", p.position.y) << ','
            << p.label << ',' << (p.ai ? 1 : 0) << '\n';
    }
}

}  // namespace carto
