#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "carto/atlas.hpp"

namespace carto {

// Density clustering of map points: core distances, the minimum spanning tree
// of the mutual-reachability graph, its single-linkage dendrogram and the
// condensed tree over which clusters are selected by explicit cuts.
//
// Conventions: lambda = 1 / distance (a zero distance gives +inf); the root
// cluster is born at lambda = 0; node ids in a Hierarchy follow the usual
// linkage layout (points 0..n-1, merge i creates node n+i).

/// Distance from each point to its min_samples-th nearest other point.
/// Throws std::invalid_argument unless 0 < min_samples < n.
std::vector<double> core_distances(const PointTable& points, std::size_t min_samples);

struct SpanningEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    double weight = 0.0;
};

/// Minimum spanning tree of the mutual-reachability graph
/// max(core_a, core_b, |a - b|), built with KD-tree accelerated Boruvka.
/// Equal weights are ordered by the lexicographic (id, id) pair of the
/// endpoints, which makes the tree unique. Edges come back in that order.
std::vector<SpanningEdge> mutual_reachability_mst(const PointTable& points,
                                                  std::span<const double> core);

struct Merge {
    std::size_t a = 0;
    std::size_t b = 0;
    double distance = 0.0;
    std::size_t size = 0;
};

struct Hierarchy {
    std::size_t n_points = 0;
    std::vector<Merge> merges;  // n_points - 1 entries, non-decreasing distance

    double total_weight() const;
};

Hierarchy hierarchy_from_mst(std::size_t n_points, std::vector<SpanningEdge> mst);

/// Throws std::invalid_argument for fewer than two points.
Hierarchy build_hierarchy(const PointTable& points, std::size_t min_samples);

struct ClusterNode {
    int id = 0;
    int parent = -1;
    double lambda_birth = 0.0;
    double lambda_death = 0.0;
    std::size_t size = 0;  // points at birth
    std::vector<int> children;

    double persistence() const { return lambda_death - lambda_birth; }
};

/// Where a point leaves the tree: the last cluster holding it and the lambda
/// at which it falls out of that cluster.
struct Departure {
    int cluster = 0;
    double lambda = 0.0;
};

class CondensedTree {
  public:
    CondensedTree() = default;
    CondensedTree(std::size_t min_cluster_size, std::vector<ClusterNode> nodes,
                  std::vector<Departure> departures);

    std::size_t min_cluster_size() const noexcept { return min_cluster_size_; }
    std::size_t n_points() const noexcept { return departures_.size(); }
    const std::vector<ClusterNode>& nodes() const noexcept { return nodes_; }
    const ClusterNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    const std::vector<Departure>& departures() const noexcept { return departures_; }

    std::vector<int> leaves() const;
    /// True when `node` is `ancestor` or lies below it.
    bool in_subtree(int node, int ancestor) const;
    /// Points departing directly from `cluster`.
    std::size_t direct_departures(int cluster) const;

  private:
    std::size_t min_cluster_size_ = 0;
    std::vector<ClusterNode> nodes_;
    std::vector<Departure> departures_;
};

/// Throws std::invalid_argument when min_cluster_size < 2.
CondensedTree condense(const Hierarchy& hierarchy, std::size_t min_cluster_size);

struct Cut {
    int branch = 0;
    double lambda = 0.0;
};

inline constexpr int kNoise = -1;

struct ClusterAssignment {
    std::vector<std::string> ids;
    std::vector<int> labels;  // 0..n_clusters-1 or kNoise
    int n_clusters = 0;

    std::size_t noise_count() const;
    double noise_share() const;
    std::size_t cluster_size(int label) const;
    bool operator==(const ClusterAssignment&) const = default;
};

/// Each cut (branch, lambda) keeps the points of the branch's subtree still
/// attached at lambda; everything else is noise. Labels follow cut order.
/// Throws std::invalid_argument for unknown branches, lambdas outside the
/// branch lifetime, and overlapping (ancestor/descendant) selections.
ClusterAssignment select_clusters(const CondensedTree& tree, std::span<const Cut> cuts,
                                  const std::vector<std::string>& ids);

/// One cut per leaf at its birth lambda, in leaf-id order.
std::vector<Cut> leaf_cuts(const CondensedTree& tree);

struct Refinement {
    MapCoordinates subset;
    CondensedTree tree;
};

/// Re-runs the clustering on the points carrying `label` only; lambdas in
/// the returned tree are local to the subset.
Refinement refine(const MapCoordinates& coords, const ClusterAssignment& assignment, int label,
                  std::size_t min_samples, std::size_t min_cluster_size);

/// Replaces cluster `label` of `base` with the clusters of `sub` (an
/// assignment over that cluster's points) and relabels contiguously.
ClusterAssignment merge_refinement(const ClusterAssignment& base, int label,
                                   const ClusterAssignment& sub);

/// Defaults that keep the reference ratios of min_samples and
/// min_cluster_size to corpus size (100 and 1000 for 855,691 papers).
std::size_t default_min_samples(std::size_t n);
std::size_t default_min_cluster_size(std::size_t n);

void write_tree_json(const std::filesystem::path& path, const CondensedTree& tree,
                     const std::vector<std::string>& ids);
CondensedTree read_tree_json(const std::filesystem::path& path);
void write_clusters_csv(const std::filesystem::path& path, const ClusterAssignment& assignment);
ClusterAssignment read_clusters_csv(const std::filesystem::path& path);

}  // namespace carto
