#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "carto/common.hpp"

namespace carto {

class Corpus;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

/// Dense row-major table of points keyed by paper id.
class PointTable {
  public:
    PointTable() = default;
    /// Throws DataError on duplicate ids, non-finite values or a size mismatch.
    PointTable(std::vector<std::string> ids, std::size_t dim, std::vector<double> values);

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::string& id(std::size_t row) const { return ids_.at(row); }
    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * dim_, dim_};
    }
    const std::vector<double>& values() const noexcept { return values_; }

    std::optional<std::size_t> find(std::string_view id) const;
    std::size_t row_of(std::string_view id) const;  // throws DataError when absent

    /// Position of row r's id in lexicographic id order. Used to break distance ties.
    std::uint32_t rank(std::size_t r) const { return ranks_[r]; }

    bool operator==(const PointTable& o) const {
        return ids_ == o.ids_ && dim_ == o.dim_ && values_ == o.values_;
    }

  private:
    std::vector<std::string> ids_;
    std::size_t dim_ = 0;
    std::vector<double> values_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::uint32_t> ranks_;
};

/// High-dimensional document embeddings.
class VectorStore : public PointTable {
  public:
    using PointTable::PointTable;
    explicit VectorStore(PointTable table) : PointTable(std::move(table)) {}
};

enum class Provenance { imported, fallback_projection };

/// 2-D map positions.
class MapCoordinates : public PointTable {
  public:
    MapCoordinates() = default;
    MapCoordinates(std::vector<std::string> ids, std::vector<Point2> points,
                   Provenance provenance = Provenance::imported);

    Provenance provenance() const noexcept { return provenance_; }
    Point2 point(std::size_t r) const { return {row(r)[0], row(r)[1]}; }
    std::vector<Point2> points() const;

  private:
    Provenance provenance_ = Provenance::imported;
};

struct Neighbor {
    std::size_t row = 0;
    double distance = 0.0;

    bool operator==(const Neighbor&) const = default;
};

/// Exact KD-tree over the rows of a PointTable (or a subset of them).
/// Leaves hold at most `leaf_size` points; every node carries its bounding box.
class KdTree {
  public:
    struct Node {
        std::size_t begin = 0;  // range into order()
        std::size_t end = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::vector<double> lo;
        std::vector<double> hi;

        bool leaf() const noexcept { return left < 0; }
    };

    KdTree(const PointTable& table, std::vector<std::size_t> rows, std::size_t leaf_size = 16);

    const PointTable& table() const noexcept { return *table_; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    /// Table rows permuted so that every node covers a contiguous range.
    const std::vector<std::size_t>& order() const noexcept { return order_; }

    /// Squared distance from `q` to the node's bounding box.
    double box_distance2(const Node& node, std::span<const double> q) const;

    /// k nearest rows by (distance, id rank); `exclude` is skipped.
    std::vector<Neighbor> nearest(std::span<const double> q, std::size_t k,
                                  std::optional<std::size_t> exclude = std::nullopt) const;

  private:
    std::int32_t build(std::size_t begin, std::size_t end, std::size_t leaf_size);

    const PointTable* table_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

/// Exact kNN over a PointTable: a KD-tree for low dimensions, an exhaustive
/// scan otherwise. Holds a reference to the table.
class KnnIndex {
  public:
    explicit KnnIndex(const PointTable& table, std::vector<std::size_t> rows = {});

    std::vector<Neighbor> query(std::span<const double> point, std::size_t k,
                                std::optional<std::size_t> exclude = std::nullopt) const;
    std::size_t size() const noexcept { return rows_.size(); }

  private:
    const PointTable* table_;
    std::vector<std::size_t> rows_;
    std::optional<KdTree> tree_;
};

inline constexpr std::size_t kKdTreeMaxDim = 3;

/// The k nearest other papers of `query_id`, ascending by distance, ties by id.
/// Throws std::out_of_range unless 0 < k < table size.
std::vector<std::pair<std::string, double>> knn(const PointTable& space, std::string_view query_id,
                                                std::size_t k);

/// Projection onto the top two principal directions of the centered vectors.
/// Each loading is signed so its largest-magnitude component is positive.
MapCoordinates fallback_project(const VectorStore& store);

struct OverlapResult {
    std::vector<std::string> ids;
    std::vector<double> shares;  // |kNN_high ∩ kNN_low| / k per paper
    double mean = 0.0;
};

/// Share of each paper's k nearest neighbours common to both spaces (the query
/// paper itself excluded). Requires identical id sets.
OverlapResult neighbor_overlap(const PointTable& high, const PointTable& low, std::size_t k);

/// Coordinates of every corpus paper in corpus row order. Throws DataError if
/// a paper has no position.
std::vector<Point2> aligned_points(const Corpus& corpus, const MapCoordinates& coords);

// --- file formats ---------------------------------------------------------
//
// vectors.f32: "CARTOV32" magic, u64 count, u32 dim, then per record a u32
// byte length + UTF-8 id followed by dim float32 values; all little-endian.
// The CSV alternative has rows `id,v0,...,v{dim-1}` under a header line.

/// Reads either vector format. When `corpus` is given, ids must belong to it.
/// An `expected_dim` of zero accepts the dimension found in the file.
VectorStore import_vectors(const std::filesystem::path& path, std::size_t expected_dim,
                           const Corpus* corpus = nullptr);
void write_vectors_f32(const std::filesystem::path& path, const VectorStore& store);
void write_vectors_csv(const std::filesystem::path& path, const VectorStore& store);

MapCoordinates read_coords_csv(const std::filesystem::path& path, const Corpus* corpus = nullptr,
                               Provenance provenance = Provenance::imported);
void write_coords_csv(const std::filesystem::path& path, const MapCoordinates& coords);

}  // namespace carto
