#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "carto/atlas.hpp"
#include "carto/clusterer.hpp"
#include "carto/corpus.hpp"

namespace carto {

// Cluster characterisation. Every function takes the corpus together with an
// assignment covering its papers; papers missing from the assignment count
// as noise. Noise is reported as its own pseudo-cluster (label kNoise).

enum class Taxonomy { fos_level2, fos_level3, topics, keywords };

Taxonomy parse_taxonomy(std::string_view name);
std::string_view taxonomy_name(Taxonomy taxonomy);

struct RankedConcept {
    std::string concept_id;
    std::size_t count = 0;  // papers carrying the concept

    bool operator==(const RankedConcept&) const = default;
};

/// Labels per corpus row, derived from an assignment keyed by id.
std::vector<int> labels_by_row(const Corpus& corpus, const ClusterAssignment& assignment);

/// Most frequent concepts of one cluster, by descending count then id.
std::vector<RankedConcept> rank_concepts(const Corpus& corpus, const ClusterAssignment& assignment,
                                         int cluster, Taxonomy taxonomy, std::size_t top_n);

struct ClusterProfile {
    int label = 0;
    std::map<Taxonomy, std::vector<RankedConcept>> rankings;
    std::size_t ai_paper_count = 0;
    std::size_t total_count = 0;

    double ai_share() const {
        return total_count ? static_cast<double>(ai_paper_count) / static_cast<double>(total_count) : 0.0;
    }
};

ClusterProfile profile_cluster(const Corpus& corpus, const ClusterAssignment& assignment, int cluster,
                               std::size_t top_n);

struct AiShares {
    /// Share of all AI papers per label, noise included; sums to one.
    std::map<int, double> with_noise;
    /// The same counts renormalised over clusters only (noise dropped).
    std::map<int, double> clusters_only;
};

/// Throws DataError when the corpus holds no AI paper.
AiShares ai_share_per_cluster(const Corpus& corpus, const ClusterAssignment& assignment);

struct ClusterSeries {
    TemporalSeries size;            // yearly count / cluster size
    TemporalSeries ai_of_cluster;   // yearly AI count / cluster size
    TemporalSeries ai_within_year;  // yearly AI count / yearly count (gap when no paper)
};

std::map<int, ClusterSeries> cluster_size_series(const Corpus& corpus, const ClusterAssignment& assignment,
                                                 YearRange window);

struct CumulativeAiResult {
    std::map<int, TemporalSeries> series;
    std::vector<int> omitted;  // clusters without AI papers up to normalize_year
};

/// Cumulative AI papers per cluster and year divided by the cumulative count at
/// normalize_year.
CumulativeAiResult cumulative_ai_series(const Corpus& corpus, const ClusterAssignment& assignment,
                                        YearRange window, int normalize_year);

struct SnapshotPoint {
    std::string id;
    Point2 position;
    int label = kNoise;
    bool ai = false;
};

struct Snapshot {
    YearRange period;
    std::vector<SnapshotPoint> points;
};

/// Consecutive periods of `period_length` years; the last one is truncated at
/// the window end.
std::vector<Snapshot> snapshot_maps(const MapCoordinates& coords, const Corpus& corpus,
                                    const ClusterAssignment& assignment, YearRange window, int period_length);

struct DensityGrid {
    std::size_t rows = 0;  // y cells
    std::size_t cols = 0;  // x cells
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    std::vector<std::size_t> counts;  // row-major

    std::size_t at(std::size_t row, std::size_t col) const { return counts[row * cols + col]; }
    std::size_t total() const;
};

/// Histogram over the bounding box; points on the upper edges land in the
/// last cell. Throws std::invalid_argument when a resolution is below 2.
DensityGrid density_grid(const PointTable& coords, std::size_t cols, std::size_t rows);

enum class AiConceptRule { keyword_name, ai_exclusive, either };

AiConceptRule parse_ai_concept_rule(std::string_view name);

/// AI-related concepts among the fields of study: names matching the keyword
/// list, concepts appearing only on AI papers, or either.
std::set<std::string> ai_concepts(const Corpus& corpus, const AIKeywordList& keywords, AiConceptRule rule);

struct AiConceptShares {
    std::map<std::string, TemporalSeries> series;
    std::vector<std::string> top;  // ten most frequent overall
};

/// Per year, each AI concept's share of all AI-concept occurrences on that
/// year's AI papers. Years without occurrences are gaps.
AiConceptShares ai_concept_share_series(const Corpus& corpus, const std::set<std::string>& concepts,
                                        YearRange window);

// --- writers ----------------------------------------------------------------

void write_profile_json(const std::filesystem::path& path, const ClusterProfile& profile);
/// `year,value[,stderr]` rows; gaps are empty cells.
void write_series_csv(const std::filesystem::path& path, const TemporalSeries& series);
void write_grid_csv(const std::filesystem::path& path, const DensityGrid& grid);
void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& snapshot);

}  // namespace carto
