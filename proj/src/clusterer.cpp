#include "carto/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

namespace carto {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lambda_of(double distance) { return distance > 0.0 ? 1.0 / distance : kInf; }

class UnionFind {
  public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    std::size_t unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return a;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return a;
    }

  private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

// Total order on candidate edges: weight, then the sorted pair of id ranks.
struct EdgeKey {
    double weight = kInf;
    std::uint32_t lo = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t hi = std::numeric_limits<std::uint32_t>::max();

    static EdgeKey make(double w, std::uint32_t ra, std::uint32_t rb) {
        return ra < rb ? EdgeKey{w, ra, rb} : EdgeKey{w, rb, ra};
    }
    bool operator<(const EdgeKey& o) const {
        return std::tie(weight, lo, hi) < std::tie(o.weight, o.lo, o.hi);
    }
};

struct Candidate {
    EdgeKey key;
    std::size_t a = 0;
    std::size_t b = 0;
};

}  // namespace

// --- core distances & MST -----------------------------------------------------

std::vector<double> core_distances(const PointTable& points, std::size_t min_samples) {
    if (min_samples == 0 || min_samples >= points.size()) {
        throw std::invalid_argument("core_distances: min_samples=" + std::to_string(min_samples) +
                                    " must lie in [1, " + std::to_string(points.size()) + ")");
    }
    const KnnIndex index(points);
    std::vector<double> core(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        core[i] = index.query(points.row(i), min_samples, i).back().distance;
    });
    return core;
}

std::vector<SpanningEdge> mutual_reachability_mst(const PointTable& points,
                                                  std::span<const double> core) {
    const std::size_t n = points.size();
    if (core.size() != n) throw std::invalid_argument("mutual_reachability_mst: core size mismatch");
    std::vector<SpanningEdge> mst;
    if (n < 2) return mst;
    mst.reserve(n - 1);

    const KdTree tree(points, {});
    const auto& nodes = tree.nodes();
    const auto& order = tree.order();

    // Smallest core distance below each node bounds every edge into it.
    std::vector<double> node_min_core(nodes.size(), kInf);
    for (std::size_t i = nodes.size(); i-- > 0;) {
        const auto& nd = nodes[i];
        if (nd.leaf()) {
            for (std::size_t k = nd.begin; k < nd.end; ++k) {
                node_min_core[i] = std::min(node_min_core[i], core[order[k]]);
            }
        } else {
            node_min_core[i] = std::min(node_min_core[static_cast<std::size_t>(nd.left)],
                                        node_min_core[static_cast<std::size_t>(nd.right)]);
        }
    }

    UnionFind uf(n);
    std::vector<std::size_t> comp(n);
    std::vector<long> node_comp(nodes.size());
    std::size_t components = n;

    while (components > 1) {
        for (std::size_t i = 0; i < n; ++i) comp[i] = uf.find(i);
        // A node whose points all share one component is labelled with it, else -1.
        for (std::size_t i = nodes.size(); i-- > 0;) {
            const auto& nd = nodes[i];
            if (nd.leaf()) {
                long c = static_cast<long>(comp[order[nd.begin]]);
                for (std::size_t k = nd.begin + 1; k < nd.end && c >= 0; ++k) {
                    if (static_cast<long>(comp[order[k]]) != c) c = -1;
                }
                node_comp[i] = c;
            } else {
                const long l = node_comp[static_cast<std::size_t>(nd.left)];
                const long r = node_comp[static_cast<std::size_t>(nd.right)];
                node_comp[i] = (l >= 0 && l == r) ? l : -1;
            }
        }

        std::vector<Candidate> best(n);  // indexed by component root
        for (std::size_t q = 0; q < n; ++q) {
            const std::size_t cq = comp[q];
            Candidate& current = best[cq];
            const auto qp = points.row(q);
            const double core_q = core[q];

            auto search = [&](auto&& self, std::int32_t idx) -> void {
                const auto& nd = nodes[static_cast<std::size_t>(idx)];
                if (node_comp[static_cast<std::size_t>(idx)] == static_cast<long>(cq)) return;
                const double bound = std::max({core_q, node_min_core[static_cast<std::size_t>(idx)],
                                               std::sqrt(tree.box_distance2(nd, qp))});
                if (bound > current.key.weight) return;
                if (nd.leaf()) {
                    for (std::size_t k = nd.begin; k < nd.end; ++k) {
                        const std::size_t p = order[k];
                        if (comp[p] == cq) continue;
                        double d2 = 0.0;
                        const auto pp = points.row(p);
                        for (std::size_t d = 0; d < qp.size(); ++d) d2 += (qp[d] - pp[d]) * (qp[d] - pp[d]);
                        const double w = std::max({core_q, core[p], std::sqrt(d2)});
                        const EdgeKey key = EdgeKey::make(w, points.rank(q), points.rank(p));
                        if (key < current.key) current = {key, q, p};
                    }
                    return;
                }
                const auto& l = nodes[static_cast<std::size_t>(nd.left)];
                const auto& r = nodes[static_cast<std::size_t>(nd.right)];
                if (tree.box_distance2(l, qp) <= tree.box_distance2(r, qp)) {
                    self(self, nd.left);
                    self(self, nd.right);
                } else {
                    self(self, nd.right);
                    self(self, nd.left);
                }
            };
            search(search, 0);
        }

        std::vector<Candidate> chosen;
        for (std::size_t c = 0; c < n; ++c) {
            if (comp[c] == c && best[c].key.weight < kInf) chosen.push_back(best[c]);
        }
        std::sort(chosen.begin(), chosen.end(),
                  [](const Candidate& x, const Candidate& y) { return x.key < y.key; });
        for (const auto& cand : chosen) {
            if (uf.find(cand.a) == uf.find(cand.b)) continue;  // picked by both components
            uf.unite(cand.a, cand.b);
            mst.push_back({cand.a, cand.b, cand.key.weight});
            --components;
        }
    }

    std::sort(mst.begin(), mst.end(), [&](const SpanningEdge& x, const SpanningEdge& y) {
        return EdgeKey::make(x.weight, points.rank(x.a), points.rank(x.b)) <
               EdgeKey::make(y.weight, points.rank(y.a), points.rank(y.b));
    });
    return mst;
}

double Hierarchy::total_weight() const {
    double sum = 0.0;
    for (const auto& m : merges) sum += m.distance;
    return sum;
}

Hierarchy hierarchy_from_mst(std::size_t n_points, std::vector<SpanningEdge> mst) {
    if (n_points >= 1 && mst.size() != n_points - 1) {
        throw std::invalid_argument("hierarchy_from_mst: expected n-1 edges");
    }
    std::stable_sort(mst.begin(), mst.end(),
                     [](const SpanningEdge& x, const SpanningEdge& y) { return x.weight < y.weight; });
    Hierarchy h;
    h.n_points = n_points;
    h.merges.reserve(mst.size());
    UnionFind uf(n_points);
    std::vector<std::size_t> node_of(n_points);  // component root -> dendrogram node
    std::vector<std::size_t> size_of(n_points, 1);
    std::iota(node_of.begin(), node_of.end(), 0);
    for (const auto& e : mst) {
        const std::size_t ra = uf.find(e.a);
        const std::size_t rb = uf.find(e.b);
        if (ra == rb) throw std::invalid_argument("hierarchy_from_mst: edges contain a cycle");
        const std::size_t na = node_of[ra];
        const std::size_t nb = node_of[rb];
        const std::size_t size = size_of[ra] + size_of[rb];
        h.merges.push_back({std::min(na, nb), std::max(na, nb), e.weight, size});
        const std::size_t root = uf.unite(ra, rb);
        node_of[root] = n_points + h.merges.size() - 1;
        size_of[root] = size;
    }
    return h;
}

Hierarchy build_hierarchy(const PointTable& points, std::size_t min_samples) {
    if (points.size() < 2) throw std::invalid_argument("build_hierarchy needs at least two points");
    const auto core = core_distances(points, min_samples);
    return hierarchy_from_mst(points.size(), mutual_reachability_mst(points, core));
}

// --- condensed tree -----------------------------------------------------------

CondensedTree::CondensedTree(std::size_t min_cluster_size, std::vector<ClusterNode> nodes,
                             std::vector<Departure> departures)
    : min_cluster_size_(min_cluster_size), nodes_(std::move(nodes)), departures_(std::move(departures)) {}

std::vector<int> CondensedTree::leaves() const {
    std::vector<int> out;
    for (const auto& n : nodes_) {
        if (n.children.empty()) out.push_back(n.id);
    }
    return out;
}

bool CondensedTree::in_subtree(int node, int ancestor) const {
    while (node >= 0) {
        if (node == ancestor) return true;
        node = nodes_.at(static_cast<std::size_t>(node)).parent;
    }
    return false;
}

std::size_t CondensedTree::direct_departures(int cluster) const {
    return static_cast<std::size_t>(std::count_if(departures_.begin(), departures_.end(),
                                                  [cluster](const Departure& d) { return d.cluster == cluster; }));
}

CondensedTree condense(const Hierarchy& hierarchy, std::size_t min_cluster_size) {
    if (min_cluster_size < 2) throw std::invalid_argument("condense: min_cluster_size must be >= 2");
    const std::size_t n = hierarchy.n_points;
    if (n == 0) throw std::invalid_argument("condense: empty hierarchy");

    std::vector<ClusterNode> nodes(1);
    nodes[0].id = 0;
    nodes[0].size = n;
    std::vector<Departure> departures(n);
    if (n == 1) {
        departures[0] = {0, 0.0};
        return CondensedTree(min_cluster_size, std::move(nodes), std::move(departures));
    }

    const auto size_of = [&](std::size_t node) {
        return node < n ? std::size_t{1} : hierarchy.merges[node - n].size;
    };
    // Every point below `node` falls out of `cluster` at `lambda`.
    const auto drop_subtree = [&](std::size_t node, int cluster, double lambda) {
        std::vector<std::size_t> stack{node};
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            if (cur < n) {
                departures[cur] = {cluster, lambda};
            } else {
                stack.push_back(hierarchy.merges[cur - n].a);
                stack.push_back(hierarchy.merges[cur - n].b);
            }
        }
    };

    // Breadth-first over the dendrogram so cluster ids grow level by level.
    std::deque<std::pair<std::size_t, int>> queue{{2 * n - 2, 0}};
    while (!queue.empty()) {
        const auto [node, cluster] = queue.front();
        queue.pop_front();
        // Only subtrees with >= min_cluster_size >= 2 points are queued.
        if (node < n) throw std::logic_error("condense: queued a single point");
        const Merge& m = hierarchy.merges[node - n];
        const double lambda = lambda_of(m.distance);
        const bool keep_a = size_of(m.a) >= min_cluster_size;
        const bool keep_b = size_of(m.b) >= min_cluster_size;
        auto& parent = nodes[static_cast<std::size_t>(cluster)];
        parent.lambda_death = std::max(parent.lambda_death, lambda);

        if (keep_a && keep_b) {
            for (std::size_t child : {m.a, m.b}) {
                ClusterNode c;
                c.id = static_cast<int>(nodes.size());
                c.parent = cluster;
                c.lambda_birth = lambda;
                c.lambda_death = lambda;
                c.size = size_of(child);
                nodes[static_cast<std::size_t>(cluster)].children.push_back(c.id);
                queue.emplace_back(child, c.id);
                nodes.push_back(std::move(c));
            }
        } else {
            for (std::size_t child : {m.a, m.b}) {
                if (size_of(child) >= min_cluster_size) {
                    queue.emplace_back(child, cluster);
                } else {
                    drop_subtree(child, cluster, lambda);
                }
            }
        }
    }
    return CondensedTree(min_cluster_size, std::move(nodes), std::move(departures));
}

// --- selection ----------------------------------------------------------------

std::size_t ClusterAssignment::noise_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

double ClusterAssignment::noise_share() const {
    return labels.empty() ? 0.0 : static_cast<double>(noise_count()) / static_cast<double>(labels.size());
}

std::size_t ClusterAssignment::cluster_size(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

ClusterAssignment select_clusters(const CondensedTree& tree, std::span<const Cut> cuts,
                                  const std::vector<std::string>& ids) {
    if (ids.size() != tree.n_points()) throw std::invalid_argument("select_clusters: id count mismatch");
    const int n_nodes = static_cast<int>(tree.nodes().size());
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        const Cut& c = cuts[i];
        if (c.branch < 0 || c.branch >= n_nodes) {
            throw std::invalid_argument("select_clusters: unknown branch " + std::to_string(c.branch));
        }
        const auto& node = tree.node(c.branch);
        if (!(c.lambda >= node.lambda_birth && c.lambda <= node.lambda_death)) {
            throw std::invalid_argument("select_clusters: lambda " + std::to_string(c.lambda) +
                                        " outside the lifetime of branch " + std::to_string(c.branch));
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (tree.in_subtree(c.branch, cuts[j].branch) || tree.in_subtree(cuts[j].branch, c.branch)) {
                throw std::invalid_argument("select_clusters: branches " + std::to_string(cuts[j].branch) +
                                            " and " + std::to_string(c.branch) + " overlap");
            }
        }
    }

    // Map every tree node to the cut covering it, if any.
    std::vector<int> cut_of(static_cast<std::size_t>(n_nodes), -1);
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        for (int node = 0; node < n_nodes; ++node) {
            if (tree.in_subtree(node, cuts[i].branch)) cut_of[static_cast<std::size_t>(node)] = static_cast<int>(i);
        }
    }

    ClusterAssignment out;
    out.ids = ids;
    out.n_clusters = static_cast<int>(cuts.size());
    out.labels.assign(ids.size(), kNoise);
    for (std::size_t p = 0; p < ids.size(); ++p) {
        const auto& dep = tree.departures()[p];
        const int ci = cut_of[static_cast<std::size_t>(dep.cluster)];
        if (ci < 0) continue;
        const Cut& cut = cuts[static_cast<std::size_t>(ci)];
        // Points leaving the selected branch itself must still be attached at the cut.
        if (dep.cluster != cut.branch || dep.lambda >= cut.lambda) out.labels[p] = ci;
    }
    return out;
}

std::vector<Cut> leaf_cuts(const CondensedTree& tree) {
    std::vector<Cut> cuts;
    for (int leaf : tree.leaves()) cuts.push_back({leaf, tree.node(leaf).lambda_birth});
    return cuts;
}

Refinement refine(const MapCoordinates& coords, const ClusterAssignment& assignment, int label,
                  std::size_t min_samples, std::size_t min_cluster_size) {
    std::vector<std::string> ids;
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < assignment.ids.size(); ++i) {
        if (assignment.labels[i] != label) continue;
        ids.push_back(assignment.ids[i]);
        pts.push_back(coords.point(coords.row_of(assignment.ids[i])));
    }
    if (ids.size() <= min_cluster_size) {
        throw std::invalid_argument("refine: cluster " + std::to_string(label) + " has " +
                                    std::to_string(ids.size()) + " points, needs more than " +
                                    std::to_string(min_cluster_size));
    }
    MapCoordinates subset(std::move(ids), std::move(pts), coords.provenance());
    CondensedTree tree = condense(build_hierarchy(subset, min_samples), min_cluster_size);
    return {std::move(subset), std::move(tree)};
}

ClusterAssignment merge_refinement(const ClusterAssignment& base, int label,
                                   const ClusterAssignment& sub) {
    if (label < 0 || label >= base.n_clusters) throw std::invalid_argument("merge_refinement: bad label");
    std::vector<int> relabel(static_cast<std::size_t>(base.n_clusters), kNoise);
    int next = 0;
    int sub_offset = 0;
    for (int l = 0; l < base.n_clusters; ++l) {
        if (l == label) {
            sub_offset = next;
            next += sub.n_clusters;
        } else {
            relabel[static_cast<std::size_t>(l)] = next++;
        }
    }
    std::unordered_map<std::string, int> sub_label;
    for (std::size_t i = 0; i < sub.ids.size(); ++i) sub_label.emplace(sub.ids[i], sub.labels[i]);

    ClusterAssignment out;
    out.ids = base.ids;
    out.n_clusters = next;
    out.labels.resize(base.labels.size());
    for (std::size_t i = 0; i < base.labels.size(); ++i) {
        const int l = base.labels[i];
        if (l == kNoise) {
            out.labels[i] = kNoise;
        } else if (l == label) {
            const auto it = sub_label.find(base.ids[i]);
            if (it == sub_label.end()) throw std::invalid_argument("merge_refinement: '" + base.ids[i] + "' missing");
            out.labels[i] = it->second == kNoise ? kNoise : sub_offset + it->second;
        } else {
            out.labels[i] = relabel[static_cast<std::size_t>(l)];
        }
    }
    return out;
}

std::size_t default_min_samples(std::size_t n) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * 100.0 / 855691.0)));
}

std::size_t default_min_cluster_size(std::size_t n) {
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(static_cast<double>(n) * 1000.0 / 855691.0)));
}

// --- serialization ------------------------------------------------------------

using nlohmann::json;

namespace {
json lambda_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double lambda_from(const json& v) { return v.is_null() ? kInf : v.get<double>(); }
}  // namespace

void write_tree_json(const std::filesystem::path& path, const CondensedTree& tree,
                     const std::vector<std::string>& ids) {
    if (ids.size() != tree.n_points()) throw std::invalid_argument("write_tree_json: id count mismatch");
    json nodes = json::array();
    for (const auto& n : tree.nodes()) {
        nodes.push_back({{"id", n.id},
                         {"parent", n.parent},
                         {"lambda_birth", lambda_json(n.lambda_birth)},
                         {"lambda_death", lambda_json(n.lambda_death)},
                         {"size", n.size},
                         {"children", n.children}});
    }
    json departures = json::array();
    for (std::size_t p = 0; p < ids.size(); ++p) {
        const auto& d = tree.departures()[p];
        departures.push_back({{"point", p}, {"id", ids[p]}, {"cluster", d.cluster}, {"lambda", lambda_json(d.lambda)}});
    }
    json doc = {{"min_cluster_size", tree.min_cluster_size()},
                {"n_points", tree.n_points()},
                {"nodes", std::move(nodes)},
                {"departures", std::move(departures)}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << doc.dump(1) << '\n';
}

CondensedTree read_tree_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        const json doc = json::parse(in);
        std::vector<ClusterNode> nodes;
        for (const auto& n : doc.at("nodes")) {
            ClusterNode c;
            c.id = n.at("id").get<int>();
            c.parent = n.at("parent").get<int>();
            c.lambda_birth = lambda_from(n.at("lambda_birth"));
            c.lambda_death = lambda_from(n.at("lambda_death"));
            c.size = n.at("size").get<std::size_t>();
            c.children = n.at("children").get<std::vector<int>>();
            nodes.push_back(std::move(c));
        }
        std::vector<Departure> departures;
        for (const auto& d : doc.at("departures")) {
            departures.push_back({d.at("cluster").get<int>(), lambda_from(d.at("lambda"))});
        }
        return CondensedTree(doc.at("min_cluster_size").get<std::size_t>(), std::move(nodes), std::move(departures));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_clusters_csv(const std::filesystem::path& path, const ClusterAssignment& assignment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "id,label\n";
    for (std::size_t i = 0; i < assignment.ids.size(); ++i) {
        out << assignment.ids[i] << ',' << assignment.labels[i] << '\n';
    }
}

ClusterAssignment read_clusters_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || trim(line) != "id,label") {
        throw DataError(path.string() + ": missing 'id,label' header");
    }
    ClusterAssignment a;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cols = split(trim(line), ',');
        if (cols.size() != 2) throw DataError(path.string() + " line " + std::to_string(line_no) + ": expected id,label");
        int label = 0;
        try {
            label = std::stoi(cols[1]);
        } catch (const std::exception&) {
            throw DataError(path.string() + " line " + std::to_string(line_no) + ": bad label");
        }
        if (label < kNoise) throw DataError(path.string() + " line " + std::to_string(line_no) + ": bad label");
        a.ids.push_back(cols[0]);
        a.labels.push_back(label);
        a.n_clusters = std::max(a.n_clusters, label + 1);
    }
    return a;
}

}  // namespace carto
