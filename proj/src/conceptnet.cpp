#include "carto/conceptnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "carto/profiler.hpp"

namespace carto {

YearlyGraph yearly_cooccurrence(int year, std::span<const std::vector<ConceptId>> papers) {
    YearlyGraph g;
    g.year = year;
    for (const auto& concepts : papers) {
        std::vector<ConceptId> distinct = concepts;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 2) continue;
        g.nodes.insert(distinct.begin(), distinct.end());
        for (std::size_t i = 0; i < distinct.size(); ++i) {
            for (std::size_t j = i + 1; j < distinct.size(); ++j) ++g.edges[{distinct[i], distinct[j]}];
        }
    }
    return g;
}

std::vector<int> core_numbers(const std::vector<std::vector<std::uint32_t>>& adjacency) {
    const std::size_t n = adjacency.size();
    std::vector<int> degree(n);
    int max_degree = 0;
    for (std::size_t v = 0; v < n; ++v) {
        degree[v] = static_cast<int>(adjacency[v].size());
        max_degree = std::max(max_degree, degree[v]);
    }
    // Vertices sorted by degree with bucket start offsets.
    std::vector<std::size_t> bin(static_cast<std::size_t>(max_degree) + 1, 0);
    for (int d : degree) ++bin[static_cast<std::size_t>(d)];
    std::size_t start = 0;
    for (auto& b : bin) {
        const std::size_t count = b;
        b = start;
        start += count;
    }
    std::vector<std::uint32_t> vert(n);
    std::vector<std::size_t> pos(n);
    for (std::size_t v = 0; v < n; ++v) {
        pos[v] = bin[static_cast<std::size_t>(degree[v])]++;
        vert[pos[v]] = static_cast<std::uint32_t>(v);
    }
    for (std::size_t d = bin.size(); d-- > 1;) bin[d] = bin[d - 1];
    if (!bin.empty()) bin[0] = 0;

    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t v = vert[i];
        for (std::uint32_t u : adjacency[v]) {
            if (degree[u] > degree[v]) {
                const auto du = static_cast<std::size_t>(degree[u]);
                const std::size_t pu = pos[u];
                const std::size_t pw = bin[du];
                const std::uint32_t w = vert[pw];
                if (u != w) {
                    std::swap(vert[pu], vert[pw]);
                    pos[u] = pw;
                    pos[w] = pu;
                }
                ++bin[du];
                --degree[u];
            }
        }
    }
    return degree;
}

CoreDecomposition kcore(const std::set<ConceptId>& nodes, const std::map<ConceptEdge, std::uint64_t>& edges) {
    std::vector<ConceptId> ids(nodes.begin(), nodes.end());
    std::unordered_map<ConceptId, std::uint32_t> local;
    local.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) local.emplace(ids[i], static_cast<std::uint32_t>(i));
    std::vector<std::vector<std::uint32_t>> adjacency(ids.size());
    for (const auto& [e, w] : edges) {
        const auto a = local.find(e.first);
        const auto b = local.find(e.second);
        if (a == local.end() || b == local.end()) continue;
        adjacency[a->second].push_back(b->second);
        adjacency[b->second].push_back(a->second);
    }
    const auto core = core_numbers(adjacency);
    CoreDecomposition out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.core.emplace(ids[i], core[i]);
        out.c_max = std::max(out.c_max, core[i]);
    }
    return out;
}

CoreDecomposition kcore(const CumulativeGraph& graph) { return kcore(graph.nodes, graph.edges); }

CumulativeGraph accumulate(const CumulativeGraph& prev, const YearlyGraph& current) {
    if (prev.year && current.year != *prev.year + 1) {
        throw std::invalid_argument("accumulate: year " + std::to_string(current.year) + " does not follow " +
                                    std::to_string(*prev.year));
    }
    CumulativeGraph next;
    next.year = current.year;
    next.nodes = prev.nodes;
    next.nodes.insert(current.nodes.begin(), current.nodes.end());
    next.edges = prev.edges;
    for (const auto& [e, w] : current.edges) next.edges[e] += w;
    next.cores = kcore(next);
    return next;
}

std::set<ConceptId> largest_component(const std::set<ConceptId>& nodes,
                                      const std::map<ConceptEdge, std::uint64_t>& edges) {
    std::unordered_map<ConceptId, std::vector<ConceptId>> adjacency;
    for (const auto& [e, w] : edges) {
        adjacency[e.first].push_back(e.second);
        adjacency[e.second].push_back(e.first);
    }
    std::set<ConceptId> visited;
    std::set<ConceptId> best;
    for (ConceptId start : nodes) {  // ascending, so ties keep the earliest component
        if (visited.contains(start)) continue;
        std::set<ConceptId> component{start};
        std::vector<ConceptId> stack{start};
        visited.insert(start);
        while (!stack.empty()) {
            const ConceptId v = stack.back();
            stack.pop_back();
            for (ConceptId u : adjacency[v]) {
                if (visited.insert(u).second) {
                    component.insert(u);
                    stack.push_back(u);
                }
            }
        }
        if (component.size() > best.size()) best = std::move(component);
    }
    return best;
}

CorenessResult coreness_series(std::span<const ConceptPaper> papers, const std::set<ConceptId>& ai_concepts,
                               YearRange years, const std::function<void(const CumulativeGraph&)>& on_year) {
    if (ai_concepts.empty()) throw std::invalid_argument("coreness_series: empty AI concept set");
    std::map<int, std::vector<std::vector<ConceptId>>> by_year;
    for (const auto& p : papers) {
        if (years.contains(p.year)) by_year[p.year].push_back(p.concepts);
    }

    CorenessResult result;
    result.mean = TemporalSeries(years, true);
    result.n_ai.assign(years.size(), 0);
    result.c_max.assign(years.size(), 0);

    CumulativeGraph graph;
    std::set<ConceptId> component;
    for (int year = years.first; year <= years.last; ++year) {
        const auto it = by_year.find(year);
        const std::vector<std::vector<ConceptId>> none;
        graph = accumulate(graph, yearly_cooccurrence(year, it == by_year.end() ? none : it->second));
        if (on_year) on_year(graph);

        component = largest_component(graph.nodes, graph.edges);
        std::map<ConceptEdge, std::uint64_t> component_edges;
        for (const auto& [e, w] : graph.edges) {
            if (component.contains(e.first)) component_edges.emplace(e, w);
        }
        const auto cores = kcore(component, component_edges);
        const auto y = static_cast<std::size_t>(year - years.first);
        result.c_max[y] = cores.c_max;

        std::vector<double> normalized;
        for (ConceptId c : ai_concepts) {
            const auto core = cores.core.find(c);
            if (core != cores.core.end() && cores.c_max > 0) {
                normalized.push_back(static_cast<double>(core->second) / static_cast<double>(cores.c_max));
            }
        }
        result.n_ai[y] = normalized.size();
        if (const auto stats = mean_and_stderr(normalized)) {
            result.mean.values[y] = stats->mean;
            result.mean.errors[y] = stats->stderr_;
            if (!result.apparition_year) result.apparition_year = year;
        }
    }
    result.concepts_seen = graph.nodes.size();
    result.ai_concepts_seen = static_cast<std::size_t>(std::count_if(
        graph.nodes.begin(), graph.nodes.end(), [&](ConceptId c) { return ai_concepts.contains(c); }));
    result.final_component_size = component.size();
    result.final_component_ai = static_cast<std::size_t>(std::count_if(
        component.begin(), component.end(), [&](ConceptId c) { return ai_concepts.contains(c); }));
    return result;
}

std::vector<ConceptPaper> cluster_concept_papers(const Corpus& corpus, const ConceptOccurrenceTable& table,
                                                 const ClusterAssignment& assignment, int label) {
    const auto labels = labels_by_row(corpus, assignment);
    std::vector<ConceptPaper> out;
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        if (labels[r] != label || !table.eligible[r]) continue;
        out.push_back({corpus.papers()[r].year, table.per_paper[r]});
    }
    return out;
}

std::set<ConceptId> concept_ids(const ConceptOccurrenceTable& table, const std::set<std::string>& names) {
    std::set<ConceptId> out;
    for (const auto& name : names) {
        if (auto id = table.find(name)) out.insert(*id);
    }
    return out;
}

void write_edges(const std::filesystem::path& path, const CumulativeGraph& graph,
                 const std::vector<std::string>& names) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "concept_a,concept_b,weight\n";
    for (const auto& [e, w] : graph.edges) out << names.at(e.first) << ',' << names.at(e.second) << ',' << w << '\n';
}

void write_coreness_csv(const std::filesystem::path& path, const CorenessResult& result) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "year,mean,stderr,n_ai,c_max\n";
    for (std::size_t y = 0; y < result.mean.values.size(); ++y) {
        const auto& m = result.mean.values[y];
        const auto& e = result.mean.errors[y];
        out << result.mean.first_year + static_cast<int>(y) << ',' << (m ? fmt::format("{}", *m) : "") << ','
            << (e ? fmt::format("{}", *e) : "") << ',' << result.n_ai[y] << ',' << result.c_max[y] << '\n';
    }
}

}  // namespace carto
