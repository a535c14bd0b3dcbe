#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "carto/atlas.hpp"
#include "carto/common.hpp"
#include "carto/conceptnet.hpp"
#include "carto/corpus.hpp"

namespace carto {

// Seeded synthetic worlds written in the same formats the pipeline reads.

struct BlobSpec {
    std::string label;  // planted label, also used as the subfield id
    Point2 center;
    double sigma = 1.0;
    std::size_t count = 1;
    double growth = 0.0;  // yearly arrivals grow like exp(growth * (year - first))
    double ai_rate = 0.0;
    std::size_t vocabulary = 8;     // non-AI concepts of the blob
    std::size_t ai_vocabulary = 2;  // concepts whose names carry an AI phrase
};

struct SynthSpec {
    std::uint64_t seed = 1;
    YearRange years{1990, 2020};
    std::size_t dim = 16;          // dimension of the emitted embedding vectors
    double vector_noise = 0.05;    // relative to the blob sigma
    std::vector<BlobSpec> blobs;
    double in_cluster = 0.8;       // chance that a reference stays in the citer's blob
    double preferential = 0.5;     // chance of copying an earlier reference (rich get richer)
    int refs_min = 10;
    int refs_max = 20;
    double rejected_share = 0.02;  // papers given too few references to pass ingestion
    std::size_t concepts_per_paper = 3;
    std::vector<std::string> ai_phrases{"neural network", "machine learning", "deep learning"};

    /// Throws ConfigError when a probability leaves [0, 1] or nothing would be generated.
    void validate() const;
};

/// Three labelled blobs with growing AI shares, used by `synth` by default.
SynthSpec default_synth_spec(std::uint64_t seed);

struct SynthWorld {
    std::vector<PaperRecord> papers;
    std::vector<CitationEdge> citations;
    std::vector<std::string> ai_phrases;
    VectorStore vectors;     // papers passing ingestion only
    MapCoordinates coords;   // likewise
    std::map<std::string, std::string> planted;  // id -> blob label
};

SynthWorld generate_world(const SynthSpec& spec);

/// papers.jsonl, citations.csv, ai_keywords.txt, vectors.f32, coords.csv and
/// planted.csv inside `dir`.
void write_world(const std::filesystem::path& dir, const SynthWorld& world);

// --- scenario generators ------------------------------------------------------

struct LabelledPoints {
    PointTable points;
    std::vector<int> labels;  // generating component per row
};

/// Three 1-D Gaussian peaks (dense left, sparse middle, right) with
/// `total` points in all.
LabelledPoints three_peaks_1d(std::size_t total, std::uint64_t seed);

/// Uniform 2-D points in a square, ids "q0000", ...
PointTable random_points(std::size_t n, std::size_t dim, std::uint64_t seed, double extent = 100.0);

enum class CorenessTrend { decreasing, increasing };

struct CorenessScenario {
    std::vector<ConceptPaper> papers;
    std::set<ConceptId> ai;
    YearRange years;
};

/// Decreasing: AI concepts form the first dense core and a growing non-AI
/// clique takes over. Increasing: AI concepts hang off a large non-AI clique
/// and densify among themselves year after year.
CorenessScenario coreness_scenario(CorenessTrend trend, std::uint64_t seed);

struct CohortWorld {
    std::vector<PaperRecord> papers;
    std::vector<CitationEdge> citations;
    std::vector<Point2> points;            // aligned with papers
    std::vector<std::string> focal_ids;
    std::vector<int> family;               // per focal paper
    int cohort_year = 0;
};

/// Focal papers published in one year whose citers are close at first and
/// jump outwards `peak_offsets[f]` years later (one family per offset);
/// afterwards citers land at the current radius so r_g stays flat.
CohortWorld rog_cohorts(const std::vector<int>& peak_offsets, std::size_t per_family, int horizon,
                        std::uint64_t seed);

// --- brute-force oracles ----------------------------------------------------------
//
// Plain O(n^2) or peeling versions used to check the indexed paths. They take
// raw coordinates and refuse instances above kOracleMaxSize.

namespace oracle {

inline constexpr std::size_t kOracleMaxSize = 2000;

using Coords = std::vector<std::vector<double>>;

std::vector<int> kcore(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

/// Total weight of a minimum spanning tree of the mutual-reachability graph.
double mst_weight(const Coords& points, std::size_t min_samples);

/// Ids of the k nearest other points of row `query`, ties by id.
std::set<std::string> knn(const Coords& points, const std::vector<std::string>& ids, std::size_t query,
                          std::size_t k);

double rog(const std::vector<double>& focal, const Coords& citers);
double farthest(const std::vector<double>& focal, const Coords& all);

}  // namespace oracle

}  // namespace carto
