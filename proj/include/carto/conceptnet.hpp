#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "carto/clusterer.hpp"
#include "carto/common.hpp"
#include "carto/corpus.hpp"

namespace carto {

using ConceptId = std::uint32_t;
using ConceptEdge = std::pair<ConceptId, ConceptId>;  // first < second

/// One paper as seen by the concept network.
struct ConceptPaper {
    int year = 0;
    std::vector<ConceptId> concepts;
};

struct YearlyGraph {
    int year = 0;
    std::set<ConceptId> nodes;
    std::map<ConceptEdge, std::uint64_t> edges;  // weight = papers holding both concepts
};

/// Co-occurrence graph of the papers of one year. Papers with fewer than two
/// distinct concepts add nothing.
YearlyGraph yearly_cooccurrence(int year, std::span<const std::vector<ConceptId>> papers);

struct CoreDecomposition {
    std::map<ConceptId, int> core;
    int c_max = 0;
};

/// Core numbers of an undirected simple graph given as adjacency lists over
/// 0..n-1 (Batagelj-Zaversnik bucket peeling, O(n + m)).
std::vector<int> core_numbers(const std::vector<std::vector<std::uint32_t>>& adjacency);

struct CumulativeGraph {
    std::optional<int> year;  // empty before the first accumulation
    std::set<ConceptId> nodes;
    std::map<ConceptEdge, std::uint64_t> edges;  // weights summed over years
    CoreDecomposition cores;
};

/// k-core decomposition ignoring edge weights.
CoreDecomposition kcore(const std::set<ConceptId>& nodes, const std::map<ConceptEdge, std::uint64_t>& edges);
CoreDecomposition kcore(const CumulativeGraph& graph);

/// Union of `prev` and `current` with summed weights and fresh core numbers.
/// Throws std::invalid_argument unless current.year == prev.year + 1 (any
/// year is accepted after an empty graph).
CumulativeGraph accumulate(const CumulativeGraph& prev, const YearlyGraph& current);

/// Node set of the largest connected component; ties go to the component
/// holding the smallest concept id.
std::set<ConceptId> largest_component(const std::set<ConceptId>& nodes,
                                      const std::map<ConceptEdge, std::uint64_t>& edges);

struct CorenessResult {
    TemporalSeries mean;  // mean normalized coreness of AI concepts, with stderr
    std::vector<std::size_t> n_ai;  // AI concepts in the giant component, per year
    std::vector<int> c_max;         // of the giant component, per year
    std::optional<int> apparition_year;
    std::size_t concepts_seen = 0;
    std::size_t ai_concepts_seen = 0;
    std::size_t final_component_size = 0;
    std::size_t final_component_ai = 0;

    double ai_share_all_seen() const {
        return concepts_seen ? static_cast<double>(ai_concepts_seen) / static_cast<double>(concepts_seen) : 0.0;
    }
    double ai_share_final_component() const {
        return final_component_size
                   ? static_cast<double>(final_component_ai) / static_cast<double>(final_component_size)
                   : 0.0;
    }
};

/// Accumulates the yearly graphs over `years` and, for each year, averages
/// core / c_max over the AI concepts inside the giant component (gap when
/// none is there). `on_year` sees every cumulative graph.
CorenessResult coreness_series(std::span<const ConceptPaper> papers, const std::set<ConceptId>& ai_concepts,
                               YearRange years,
                               const std::function<void(const CumulativeGraph&)>& on_year = {});

/// The eligible papers of cluster `label` with their concept lists.
std::vector<ConceptPaper> cluster_concept_papers(const Corpus& corpus, const ConceptOccurrenceTable& table,
                                                 const ClusterAssignment& assignment, int label);

/// Indices of `names` within the table (names absent from it are skipped).
std::set<ConceptId> concept_ids(const ConceptOccurrenceTable& table, const std::set<std::string>& names);

void write_edges(const std::filesystem::path& path, const CumulativeGraph& graph,
                 const std::vector<std::string>& names);
void write_coreness_csv(const std::filesystem::path& path, const CorenessResult& result);

}  // namespace carto
