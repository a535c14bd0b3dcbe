#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carto/atlas.hpp"
#include "carto/clusterer.hpp"
#include "carto/common.hpp"
#include "carto/corpus.hpp"

namespace carto {

/// Directed citations (citer -> cited) over corpus rows, with the citers of
/// every paper.
class CitationGraph {
  public:
    using Row = Corpus::Row;

    explicit CitationGraph(const Corpus& corpus);

    std::size_t size() const noexcept { return citers_.size(); }
    std::size_t edge_count() const noexcept { return edges_; }
    std::span<const Row> citers(Row cited) const { return citers_.at(cited); }

  private:
    std::vector<std::vector<Row>> citers_;
    std::size_t edges_ = 0;
};

/// Quadratic mean distance from `focal` to its citers.
/// Throws std::invalid_argument when `citers` is empty.
double rog(Point2 focal, std::span<const Point2> citers);

/// Farthest-point queries against a fixed point set through its convex hull.
class FarthestPointIndex {
  public:
    explicit FarthestPointIndex(std::span<const Point2> points);

    double max_distance(Point2 q) const;
    const std::vector<Point2>& hull() const noexcept { return hull_; }

  private:
    std::vector<Point2> hull_;
};

/// Distance from `focal` to the farthest of `all` (noise points included).
double max_rog(Point2 focal, std::span<const Point2> all);

/// r_g / d_max. Throws DataError when d_max is zero.
double normalized_rog(double r_g, double d_max);

struct GyrationRecord {
    std::string id;
    int year = 0;
    std::size_t n_citers = 0;
    double r_g = 0.0;
    double d_max = 0.0;
    double r_tilde = 0.0;
    bool ai = false;
    int cluster = kNoise;
};

/// Records for every paper with at least `min_citers` citers (and at least one).
/// `points` and `labels` are aligned with corpus rows.
std::vector<GyrationRecord> gyration_records(const Corpus& corpus, std::span<const Point2> points,
                                             const CitationGraph& graph, std::span<const int> labels,
                                             std::size_t min_citers = 1);

enum class RogMetric { normalized, raw };

struct YearlyRog {
    TemporalSeries ai;      // mean with stderr
    TemporalSeries non_ai;
};

/// Mean RoG per publication year for AI and non-AI papers holding at least
/// `min_citations` citers. Empty cohorts are gaps.
YearlyRog yearly_mean_rog(std::span<const GyrationRecord> records, YearRange window,
                          std::size_t min_citations = 3, RogMetric metric = RogMetric::normalized);

struct BoxSummary {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct RogDistribution {
    std::vector<double> sample;  // ascending r_tilde values
    std::optional<BoxSummary> summary;
};

struct ClusterRogDistribution {
    RogDistribution ai;
    RogDistribution non_ai;
};

std::map<int, ClusterRogDistribution> cluster_rog_distributions(std::span<const GyrationRecord> records,
                                                                std::size_t min_citations = 3);

enum class CitationCounting { edges, papers };

struct CitationMatrix {
    std::size_t clusters = 0;
    std::vector<double> counts;      // row-major, raw
    std::vector<double> normalized;  // row-major, rows sum to one unless flagged
    std::vector<bool> zero_row;

    double at(std::size_t i, std::size_t j) const { return normalized[i * clusters + j]; }
};

/// Cell (i, j) counts citations from papers of cluster i to AI papers of
/// cluster j (or distinct citing papers with CitationCounting::papers); noise
/// is left out.
CitationMatrix ai_citation_matrix(const Corpus& corpus, const CitationGraph& graph,
                                  const ClusterAssignment& assignment,
                                  CitationCounting counting = CitationCounting::edges);

/// r_g of `focal` for every year of `years`, using citers published up to that
/// year; undefined while fewer than `min_citations` citers have appeared.
TemporalSeries cumulative_rog_series(const Corpus& corpus, std::span<const Point2> points,
                                     const CitationGraph& graph, Corpus::Row focal, YearRange years,
                                     std::size_t min_citations = 1);

/// log(1 + R_t) with R_t = (r(t) - r(t-1)) / r(t-1). Values start the year
/// after the first positive r_g; a zero or missing r(t-1) leaves a gap.
TemporalSeries log_return_series(const TemporalSeries& rog_by_year);

/// Zero-filled vectors of `length` values taken from `first_year` onwards.
std::vector<std::vector<double>> align_series(std::span<const TemporalSeries> series,
                                              std::span<const int> first_years, std::size_t length);

struct KMeansResult {
    std::vector<int> assignment;  // labels ordered by first member
    std::vector<std::vector<double>> centroids;
    double distortion = 0.0;  // within-cluster sum of squares
};

/// Seeded k-means++ with Lloyd iterations followed by single-point moves until
/// no reassignment lowers the distortion. Best of `restarts` runs.
KMeansResult kmeans(const std::vector<std::vector<double>>& data, std::size_t k, std::uint64_t seed,
                    std::size_t restarts = 10);

struct DynamicsResult {
    std::size_t k = 0;
    std::size_t k_min = 0;
    std::vector<double> distortion;  // per k in [k_min, k_max]
    KMeansResult clustering;
};

/// Picks k by the largest discrete second difference of the distortion curve
/// (k_min when the range holds fewer than three values).
std::size_t elbow(std::span<const double> distortion, std::size_t k_min);

/// Throws std::invalid_argument when there are fewer series than k_max.
DynamicsResult cluster_rog_dynamics(const std::vector<std::vector<double>>& series, std::size_t k_min,
                                    std::size_t k_max, std::uint64_t seed);

// --- writers ------------------------------------------------------------------

void write_rog_csv(const std::filesystem::path& path, std::span<const GyrationRecord> records);
void write_citation_matrix_csv(const std::filesystem::path& path, const CitationMatrix& matrix);

}  // namespace carto
