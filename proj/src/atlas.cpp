#include "carto/atlas.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <queue>
#include <unordered_set>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "carto/corpus.hpp"

namespace carto {

namespace {

static_assert(std::endian::native == std::endian::little,
              "vectors.f32 I/O assumes a little-endian host");

constexpr char kVectorMagic[8] = {'C', 'A', 'R', 'T', 'O', 'V', '3', '2'};

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

struct Candidate {
    double d2;
    std::uint32_t rank;
    std::size_t row;

    bool operator<(const Candidate& o) const {
        return d2 < o.d2 || (d2 == o.d2 && rank < o.rank);
    }
};

std::vector<Neighbor> finish(std::vector<Candidate> best) {
    std::sort(best.begin(), best.end());
    std::vector<Neighbor> out;
    out.reserve(best.size());
    for (const auto& c : best) out.push_back({c.row, std::sqrt(c.d2)});
    return out;
}

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& what) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw DataError("truncated vector file while reading " + what);
    }
    return value;
}

}  // namespace

// --- PointTable ---------------------------------------------------------------

PointTable::PointTable(std::vector<std::string> ids, std::size_t dim, std::vector<double> values)
    : ids_(std::move(ids)), dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw DataError("point dimension must be positive");
    if (values_.size() != ids_.size() * dim_) {
        throw DataError("point table holds " + std::to_string(values_.size()) +
                        " values, expected " + std::to_string(ids_.size() * dim_));
    }
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second) {
            throw DataError("duplicate point id '" + ids_[i] + "'");
        }
        for (double v : row(i)) {
            if (!std::isfinite(v)) throw DataError("non-finite coordinate for id '" + ids_[i] + "'");
        }
    }
    std::vector<std::size_t> by_id(ids_.size());
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(),
              [this](std::size_t a, std::size_t b) { return ids_[a] < ids_[b]; });
    ranks_.resize(ids_.size());
    for (std::size_t r = 0; r < by_id.size(); ++r) ranks_[by_id[r]] = static_cast<std::uint32_t>(r);
}

std::optional<std::size_t> PointTable::find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t PointTable::row_of(std::string_view id) const {
    if (auto r = find(id)) return *r;
    throw DataError("no point for id '" + std::string(id) + "'");
}

namespace {
std::vector<double> flatten(const std::vector<Point2>& points) {
    std::vector<double> values;
    values.reserve(points.size() * 2);
    for (const auto& p : points) {
        values.push_back(p.x);
        values.push_back(p.y);
    }
    return values;
}
}  // namespace

MapCoordinates::MapCoordinates(std::vector<std::string> ids, std::vector<Point2> points,
                               Provenance provenance)
    : PointTable(std::move(ids), 2, flatten(points)), provenance_(provenance) {}

std::vector<Point2> MapCoordinates::points() const {
    std::vector<Point2> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = point(i);
    return out;
}

// --- KdTree -------------------------------------------------------------------

KdTree::KdTree(const PointTable& table, std::vector<std::size_t> rows, std::size_t leaf_size)
    : table_(&table), order_(std::move(rows)) {
    if (order_.empty()) {
        order_.resize(table.size());
        std::iota(order_.begin(), order_.end(), 0);
    }
    if (leaf_size == 0) leaf_size = 1;
    nodes_.reserve(2 * order_.size() / leaf_size + 1);
    if (!order_.empty()) build(0, order_.size(), leaf_size);
}

std::int32_t KdTree::build(std::size_t begin, std::size_t end, std::size_t leaf_size) {
    const std::size_t dim = table_->dim();
    const auto id = static_cast<std::int32_t>(nodes_.size());
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo.assign(dim, std::numeric_limits<double>::infinity());
    node.hi.assign(dim, -std::numeric_limits<double>::infinity());
    for (std::size_t i = begin; i < end; ++i) {
        const auto p = table_->row(order_[i]);
        for (std::size_t d = 0; d < dim; ++d) {
            node.lo[d] = std::min(node.lo[d], p[d]);
            node.hi[d] = std::max(node.hi[d], p[d]);
        }
    }
    std::size_t split_dim = 0;
    double spread = -1.0;
    for (std::size_t d = 0; d < dim; ++d) {
        if (node.hi[d] - node.lo[d] > spread) {
            spread = node.hi[d] - node.lo[d];
            split_dim = d;
        }
    }
    nodes_.push_back(std::move(node));
    if (end - begin <= leaf_size || spread <= 0.0) return id;

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                         const double va = table_->row(a)[split_dim];
                         const double vb = table_->row(b)[split_dim];
                         return va < vb || (va == vb && a < b);
                     });
    const std::int32_t left = build(begin, mid, leaf_size);
    const std::int32_t right = build(mid, end, leaf_size);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

double KdTree::box_distance2(const Node& node, std::span<const double> q) const {
    double s = 0.0;
    for (std::size_t d = 0; d < q.size(); ++d) {
        double gap = 0.0;
        if (q[d] < node.lo[d]) {
            gap = node.lo[d] - q[d];
        } else if (q[d] > node.hi[d]) {
            gap = q[d] - node.hi[d];
        }
        s += gap * gap;
    }
    return s;
}

std::vector<Neighbor> KdTree::nearest(std::span<const double> q, std::size_t k,
                                      std::optional<std::size_t> exclude) const {
    if (k == 0 || nodes_.empty()) return {};
    std::priority_queue<Candidate> heap;  // worst candidate on top

    auto visit = [&](auto&& self, std::int32_t idx) -> void {
        const Node& node = nodes_[static_cast<std::size_t>(idx)];
        if (heap.size() == k && box_distance2(node, q) > heap.top().d2) return;
        if (node.leaf()) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t row = order_[i];
                if (exclude && row == *exclude) continue;
                Candidate c{squared_distance(q, table_->row(row)), table_->rank(row), row};
                if (heap.size() < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            return;
        }
        const Node& l = nodes_[static_cast<std::size_t>(node.left)];
        const Node& r = nodes_[static_cast<std::size_t>(node.right)];
        if (box_distance2(l, q) <= box_distance2(r, q)) {
            self(self, node.left);
            self(self, node.right);
        } else {
            self(self, node.right);
            self(self, node.left);
        }
    };
    visit(visit, 0);

    std::vector<Candidate> best;
    best.reserve(heap.size());
    while (!heap.empty()) {
        best.push_back(heap.top());
        heap.pop();
    }
    return finish(std::move(best));
}

// --- KnnIndex -----------------------------------------------------------------

KnnIndex::KnnIndex(const PointTable& table, std::vector<std::size_t> rows)
    : table_(&table), rows_(std::move(rows)) {
    if (rows_.empty()) {
        rows_.resize(table.size());
        std::iota(rows_.begin(), rows_.end(), 0);
    }
    if (table.dim() <= kKdTreeMaxDim) tree_.emplace(table, rows_);
}

std::vector<Neighbor> KnnIndex::query(std::span<const double> point, std::size_t k,
                                      std::optional<std::size_t> exclude) const {
    if (tree_) return tree_->nearest(point, k, exclude);
    std::vector<Candidate> all;
    all.reserve(rows_.size());
    for (std::size_t row : rows_) {
        if (exclude && row == *exclude) continue;
        all.push_back({squared_distance(point, table_->row(row)), table_->rank(row), row});
    }
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    all.resize(k);
    return finish(std::move(all));
}

std::vector<std::pair<std::string, double>> knn(const PointTable& space, std::string_view query_id,
                                                std::size_t k) {
    if (k == 0 || k >= space.size()) {
        throw std::out_of_range("knn: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(space.size()) + ")");
    }
    const std::size_t q = space.row_of(query_id);
    KnnIndex index(space);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& n : index.query(space.row(q), k, q)) out.emplace_back(space.id(n.row), n.distance);
    return out;
}

// --- projection & overlap -----------------------------------------------------

MapCoordinates fallback_project(const VectorStore& store) {
    const std::size_t n = store.size();
    const std::size_t dim = store.dim();
    if (n < 3) throw std::invalid_argument("fallback_project needs at least 3 vectors");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = store.row(i);
        for (std::size_t d = 0; d < dim; ++d) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = r[d];
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
    if (cov.trace() <= 0.0) throw DataError("fallback_project: input has zero variance");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DataError("fallback_project: eigensolver failed");
    // Eigenvalues ascend; take the last two columns.
    Eigen::MatrixXd loadings(static_cast<Eigen::Index>(dim), 2);
    for (int c = 0; c < 2; ++c) {
        const Eigen::Index col = static_cast<Eigen::Index>(dim) - 1 - c;
        Eigen::VectorXd v = col >= 0 ? Eigen::VectorXd(solver.eigenvectors().col(col))
                                     : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        loadings.col(c) = v;
    }
    const Eigen::MatrixXd proj = x * loadings;
    std::vector<Point2> points(n);
    for (std::size_t i = 0; i < n; ++i) {
        points[i] = {proj(static_cast<Eigen::Index>(i), 0), proj(static_cast<Eigen::Index>(i), 1)};
    }
    return MapCoordinates(store.ids(), std::move(points), Provenance::fallback_projection);
}

OverlapResult neighbor_overlap(const PointTable& high, const PointTable& low, std::size_t k) {
    if (high.size() != low.size()) throw DataError("neighbor_overlap: id sets differ in size");
    std::vector<std::size_t> low_row(high.size());
    for (std::size_t i = 0; i < high.size(); ++i) {
        const auto r = low.find(high.id(i));
        if (!r) throw DataError("neighbor_overlap: id '" + high.id(i) + "' missing from second space");
        low_row[i] = *r;
    }
    if (k == 0 || k >= high.size()) throw std::out_of_range("neighbor_overlap: k out of range");

    const KnnIndex high_index(high);
    const KnnIndex low_index(low);
    OverlapResult result;
    result.ids = high.ids();
    result.shares.resize(high.size());
    parallel_for(high.size(), [&](std::size_t i) {
        std::vector<std::string_view> a;
        for (const auto& n : high_index.query(high.row(i), k, i)) a.push_back(high.id(n.row));
        std::vector<std::string_view> b;
        for (const auto& n : low_index.query(low.row(low_row[i]), k, low_row[i])) b.push_back(low.id(n.row));
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::vector<std::string_view> common;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
        result.shares[i] = static_cast<double>(common.size()) / static_cast<double>(k);
    });
    double sum = 0.0;
    for (double s : result.shares) sum += s;
    result.mean = sum / static_cast<double>(result.shares.size());
    return result;
}

std::vector<Point2> aligned_points(const Corpus& corpus, const MapCoordinates& coords) {
    std::vector<Point2> out(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& id = corpus.papers()[i].id;
        const auto r = coords.find(id);
        if (!r) throw DataError("paper '" + id + "' has no map coordinates");
        out[i] = coords.point(*r);
    }
    return out;
}

// --- file formats -------------------------------------------------------------

namespace {

void check_known(const Corpus* corpus, const std::string& id) {
    if (corpus && !corpus->find(id)) throw DataError("vector id '" + id + "' is not in the corpus");
}

VectorStore read_vectors_binary(std::istream& in, std::size_t expected_dim, const Corpus* corpus) {
    const auto count = read_raw<std::uint64_t>(in, "header");
    const auto dim = read_raw<std::uint32_t>(in, "header");
    if (expected_dim != 0 && dim != expected_dim) {
        throw DataError("vector file dimension " + std::to_string(dim) + " != expected " +
                        std::to_string(expected_dim));
    }
    std::vector<std::string> ids;
    std::vector<double> values;
    ids.reserve(count);
    values.reserve(count * dim);
    std::vector<float> buf(dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto len = read_raw<std::uint32_t>(in, "id length");
        std::string id(len, '\0');
        if (!in.read(id.data(), len)) throw DataError("truncated vector file in record " + std::to_string(i));
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim * sizeof(float)))) {
            throw DataError("truncated vector file in record for id '" + id + "'");
        }
        check_known(corpus, id);
        values.insert(values.end(), buf.begin(), buf.end());
        ids.push_back(std::move(id));
    }
    return VectorStore(std::move(ids), dim, std::move(values));
}

VectorStore read_vectors_csv(std::istream& in, std::size_t expected_dim, const Corpus* corpus) {
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::string> ids;
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cols = split(trim(line), ',');
        const std::string id = cols.front();
        if (expected_dim == 0) expected_dim = cols.size() - 1;
        if (cols.size() - 1 != expected_dim) {
            throw DataError("vector for id '" + id + "' has dimension " + std::to_string(cols.size() - 1) +
                            ", expected " + std::to_string(expected_dim));
        }
        check_known(corpus, id);
        for (std::size_t c = 1; c < cols.size(); ++c) {
            try {
                values.push_back(std::stod(cols[c]));
            } catch (const std::exception&) {
                throw DataError("vector CSV line " + std::to_string(line_no) + ": bad number '" + cols[c] + "'");
            }
        }
        ids.push_back(id);
    }
    return VectorStore(std::move(ids), expected_dim, std::move(values));
}

}  // namespace

VectorStore import_vectors(const std::filesystem::path& path, std::size_t expected_dim,
                           const Corpus* corpus) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    char magic[sizeof kVectorMagic] = {};
    in.read(magic, sizeof magic);
    if (in && std::memcmp(magic, kVectorMagic, sizeof magic) == 0) {
        return read_vectors_binary(in, expected_dim, corpus);
    }
    in.clear();
    in.seekg(0);
    return read_vectors_csv(in, expected_dim, corpus);
}

void write_vectors_f32(const std::filesystem::path& path, const VectorStore& store) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(kVectorMagic, sizeof kVectorMagic);
    write_raw(out, static_cast<std::uint64_t>(store.size()));
    write_raw(out, static_cast<std::uint32_t>(store.dim()));
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto& id = store.id(i);
        write_raw(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        for (double v : store.row(i)) write_raw(out, static_cast<float>(v));
    }
}

void write_vectors_csv(const std::filesystem::path& path, const VectorStore& store) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "id";
    for (std::size_t d = 0; d < store.dim(); ++d) out << ",v" << d;
    out << '\n';
    for (std::size_t i = 0; i < store.size(); ++i) {
        out << store.id(i);
        for (double v : store.row(i)) out << ',' << fmt::format("{}", v);
        out << '\n';
    }
}

MapCoordinates read_coords_csv(const std::filesystem::path& path, const Corpus* corpus,
                               Provenance provenance) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || trim(line) != "id,x,y") {
        throw DataError(path.string() + ": missing 'id,x,y' header");
    }
    std::vector<std::string> ids;
    std::vector<Point2> points;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cols = split(trim(line), ',');
        if (cols.size() != 3) {
            throw DataError(path.string() + " line " + std::to_string(line_no) + ": expected id,x,y");
        }
        check_known(corpus, cols[0]);
        try {
            points.push_back({std::stod(cols[1]), std::stod(cols[2])});
        } catch (const std::exception&) {
            throw DataError(path.string() + " line " + std::to_string(line_no) + ": bad coordinate");
        }
        ids.push_back(cols[0]);
    }
    return MapCoordinates(std::move(ids), std::move(points), provenance);
}

void write_coords_csv(const std::filesystem::path& path, const MapCoordinates& coords) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "id,x,y\n";
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const auto p = coords.point(i);
        out << coords.id(i) << ',' << fmt::format("{}", p.x) << ',' << fmt::format("{}", p.y) << '\n';
    }
}

}  // namespace carto
