#include "carto/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "carto/atlas.hpp"
#include "carto/citegeom.hpp"
#include "carto/clusterer.hpp"
#include "carto/conceptnet.hpp"
#include "carto/corpus.hpp"
#include "carto/profiler.hpp"
#include "carto/synthkit.hpp"
#include "carto/validator.hpp"

namespace carto {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "' for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: digest initialisation failed");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

namespace {

void write_json(const fs::path& path, const json& value) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << value.dump(2) << '\n';
}

std::string cluster_name(int label) { return label == kNoise ? "noise" : fmt::format("C{}", label); }

// Bookkeeping of one stage: declared inputs and outputs, manifest, timings.
class StageRun {
  public:
    StageRun(std::string name, const PipelineConfig& config, const IniSections& sections)
        : name_(std::move(name)), config_(config), sections_(sections), dir_(config.out / name_),
          start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
    }

    const PipelineConfig& config() const { return config_; }
    const fs::path& dir() const { return dir_; }

    /// A file produced by an earlier stage.
    fs::path upstream(const std::string& stage, const std::string& file, const std::string& producer) {
        return require(config_.out / stage / file, producer);
    }

    fs::path require(const fs::path& path, const std::string& producer) {
        if (!fs::exists(path)) throw MissingArtifact(display(path), producer);
        inputs_.push_back(path);
        return path;
    }

    /// A file named in the configuration.
    fs::path configured(const fs::path& path, const std::string& key) {
        if (!fs::exists(path)) throw ConfigError(key + ": file '" + path.string() + "' does not exist");
        inputs_.push_back(path);
        return path;
    }

    fs::path output(const std::string& file) {
        outputs_.push_back(dir_ / file);
        return outputs_.back();
    }

    void finish() {
        json manifest;
        manifest["stage"] = name_;
        manifest["seed"] = config_.seed;
        json cfg = json::object();
        for (const auto& [section, keys] : sections_) {
            for (const auto& [key, value] : keys) {
                if (section.empty() && key == "out") continue;
                cfg[section.empty() ? key : section + "." + key] = value;
            }
        }
        manifest["config"] = cfg;
        manifest["inputs"] = hashes(inputs_);
        manifest["outputs"] = hashes(outputs_);
        write_json(dir_ / "manifest.json", manifest);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
        write_json(dir_ / "timings.json", {{"stage", name_}, {"seconds", elapsed.count()}});
    }

  private:
    std::string display(const fs::path& path) const {
        const auto rel = path.lexically_normal().lexically_relative(config_.out.lexically_normal());
        if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
        return path.generic_string();
    }

    json hashes(const std::vector<fs::path>& files) const {
        json out = json::array();
        for (const auto& f : files) out.push_back({{"path", display(f)}, {"sha256", sha256_file(f)}});
        return out;
    }

    std::string name_;
    const PipelineConfig& config_;
    const IniSections& sections_;
    fs::path dir_;
    std::chrono::steady_clock::time_point start_;
    std::vector<fs::path> inputs_;
    std::vector<fs::path> outputs_;
};

Corpus stage_corpus(StageRun& run) {
    const auto papers = run.upstream("corpus", "papers.jsonl", "ingest");
    const auto citations = run.upstream("corpus", "citations.csv", "ingest");
    return Corpus(read_papers_jsonl(papers), read_citations_csv(citations));
}

AIKeywordList stage_keywords(StageRun& run) {
    return AIKeywordList::from_file(run.upstream("corpus", "ai_keywords.txt", "ingest"));
}

ClusterAssignment stage_assignment(StageRun& run) {
    return read_clusters_csv(run.upstream("cluster", "clusters.csv", "cluster"));
}

MapCoordinates stage_coords(StageRun& run, const Corpus& corpus) {
    return read_coords_csv(run.upstream("atlas", "coords.csv", "project"), &corpus);
}

std::vector<Cut> parse_cuts(const std::string& text, const CondensedTree& tree, const std::string& key) {
    if (trim(text) == "leaves") return leaf_cuts(tree);
    std::vector<Cut> cuts;
    for (const auto& part : split(text, ',')) {
        const auto item = trim(part);
        if (item.empty()) continue;
        const auto at = item.find('@');
        if (at == std::string::npos) throw ConfigError(key + ": cut '" + item + "' is not branch@lambda");
        try {
            cuts.push_back({std::stoi(item.substr(0, at)), std::stod(item.substr(at + 1))});
        } catch (const std::logic_error&) {
            throw ConfigError(key + ": cut '" + item + "' is not branch@lambda");
        }
    }
    if (cuts.empty()) throw ConfigError(key + ": no cuts given");
    return cuts;
}

// --- stages -----------------------------------------------------------------------

void stage_synth(StageRun& run) {
    const auto world = generate_world(run.config().synth);
    write_world(run.dir(), world);
    for (const char* f : {"papers.jsonl", "citations.csv", "ai_keywords.txt", "vectors.f32", "coords.csv",
                          "planted.csv"}) {
        run.output(f);
    }
}

void stage_ingest(StageRun& run) {
    const auto& c = run.config();
    const auto papers = c.papers ? run.configured(*c.papers, "[ingest] papers")
                                 : run.upstream("synth", "papers.jsonl", "synth");
    const auto citations = c.citations ? run.configured(*c.citations, "[ingest] citations")
                                       : run.upstream("synth", "citations.csv", "synth");
    const auto keywords_path = c.keywords ? run.configured(*c.keywords, "[ingest] keywords")
                                          : run.upstream("synth", "ai_keywords.txt", "synth");
    IngestionConfig ingest = c.ingest;
    if (c.venues) ingest.venues = read_venues_file(run.configured(*c.venues, "[ingest] venues_file"));

    const auto keywords = AIKeywordList::from_file(keywords_path);
    auto loaded = load_corpus(papers, citations, ingest);
    const Corpus corpus = tag_ai(std::move(loaded.corpus), keywords);
    if (corpus.size() == 0) throw DataError("no paper survives ingestion");

    write_papers_jsonl(run.output("papers.jsonl"), corpus.papers());
    write_citations_csv(run.output("citations.csv"), corpus);
    {
        std::ofstream out(run.output("ai_keywords.txt"));
        for (const auto& p : keywords.phrases()) out << p << '\n';
    }
    const auto& d = loaded.drops;
    const auto years = corpus.observed_years();
    write_json(run.output("summary.json"),
               {{"papers", corpus.size()},
                {"citations", corpus.citations().size()},
                {"ai_papers", corpus.ai_count()},
                {"years", {years.first, years.last}},
                {"dropped",
                 {{"year", d.year},
                  {"venue", d.venue},
                  {"min_refs", d.min_refs},
                  {"min_cites", d.min_cites},
                  {"dangling_citations", d.dangling_citations},
                  {"self_citations", d.self_citations},
                  {"duplicate_citations", d.duplicate_citations}}}});
}

void stage_project(StageRun& run) {
    const auto& c = run.config();
    const Corpus corpus = stage_corpus(run);
    const auto vectors_path =
        c.vectors ? run.configured(*c.vectors, "[vectors] path") : run.upstream("synth", "vectors.f32", "synth");
    const auto store = import_vectors(vectors_path, c.dim, &corpus);

    // Both spaces in corpus row order, covering every paper.
    std::vector<std::string> ids;
    std::vector<double> values;
    for (const auto& p : corpus.papers()) {
        const auto r = store.find(p.id);
        if (!r) throw DataError("no vector for paper '" + p.id + "'");
        ids.push_back(p.id);
        const auto row = store.row(*r);
        values.insert(values.end(), row.begin(), row.end());
    }
    const VectorStore vectors(ids, store.dim(), std::move(values));

    MapCoordinates coords;
    if (c.coords == "fallback" ||
        (c.coords == "auto" && !fs::exists(c.out / "synth" / "coords.csv"))) {
        coords = fallback_project(vectors);
    } else {
        const auto path = c.coords == "auto" ? run.upstream("synth", "coords.csv", "synth")
                                             : run.configured(c.coords, "[vectors] coords");
        const auto imported = read_coords_csv(path, &corpus);
        std::vector<Point2> points;
        for (const auto& id : ids) {
            const auto r = imported.find(id);
            if (!r) throw DataError("no map position for paper '" + id + "'");
            points.push_back(imported.point(*r));
        }
        coords = MapCoordinates(ids, std::move(points), Provenance::imported);
    }

    const std::size_t k = std::min(c.overlap_k, corpus.size() - 1);
    json overlap_summary = nullptr;
    if (k > 0) {
        const auto overlap = neighbor_overlap(vectors, coords, k);
        std::ofstream out(run.output("overlap.csv"));
        out << "id,share\n";
        for (std::size_t i = 0; i < overlap.ids.size(); ++i) {
            out << overlap.ids[i] << ',' << fmt::format("{}", overlap.shares[i]) << '\n';
        }
        overlap_summary = overlap.mean;
    }
    write_vectors_f32(run.output("vectors.f32"), vectors);
    write_coords_csv(run.output("coords.csv"), coords);
    write_json(run.output("summary.json"),
               {{"papers", corpus.size()},
                {"dim", vectors.dim()},
                {"provenance", coords.provenance() == Provenance::imported ? "imported" : "fallback_projection"},
                {"overlap_k", k},
                {"mean_overlap", overlap_summary}});
}

void stage_cluster(StageRun& run) {
    const auto& c = run.config();
    const auto coords = read_coords_csv(run.upstream("atlas", "coords.csv", "project"));
    const std::size_t n = coords.size();
    const std::size_t ms = c.min_samples ? c.min_samples : default_min_samples(n);
    const std::size_t mcs = c.min_cluster_size ? c.min_cluster_size : default_min_cluster_size(n);
    const auto tree = condense(build_hierarchy(coords, ms), mcs);
    const auto cuts = parse_cuts(c.cuts, tree, "[cluster] cuts");
    auto assignment = select_clusters(tree, cuts, coords.ids());

    json cut_info = json::array();
    for (const auto& cut : cuts) {
        const auto& node = tree.node(cut.branch);
        cut_info.push_back({{"branch", cut.branch},
                            {"lambda", cut.lambda},
                            {"persistence", std::isfinite(node.persistence()) ? json(node.persistence())
                                                                               : json(nullptr)}});
    }
    write_tree_json(run.output("tree.json"), tree, coords.ids());
    json refined = nullptr;
    if (c.refine_label) {
        const std::size_t rms = c.refine_min_samples ? c.refine_min_samples : ms;
        const std::size_t rmcs = c.refine_min_cluster_size ? c.refine_min_cluster_size : mcs;
        const auto sub = refine(coords, assignment, *c.refine_label, rms, rmcs);
        const auto sub_cuts = parse_cuts(c.refine_cuts, sub.tree, "[cluster] refine_cuts");
        const auto sub_assignment = select_clusters(sub.tree, sub_cuts, sub.subset.ids());
        write_tree_json(run.output("refined_tree.json"), sub.tree, sub.subset.ids());
        assignment = merge_refinement(assignment, *c.refine_label, sub_assignment);
        refined = {{"label", *c.refine_label}, {"clusters", sub_assignment.n_clusters}};
    }
    write_clusters_csv(run.output("clusters.csv"), assignment);
    json sizes = json::array();
    for (int l = 0; l < assignment.n_clusters; ++l) sizes.push_back(assignment.cluster_size(l));
    write_json(run.output("summary.json"), {{"points", n},
                                            {"min_samples", ms},
                                            {"min_cluster_size", mcs},
                                            {"clusters", assignment.n_clusters},
                                            {"sizes", sizes},
                                            {"noise_share", assignment.noise_share()},
                                            {"cuts", cut_info},
                                            {"refinement", refined}});
}

void stage_profile(StageRun& run) {
    const auto& c = run.config();
    const Corpus corpus = stage_corpus(run);
    const auto keywords = stage_keywords(run);
    const auto assignment = stage_assignment(run);
    const auto coords = stage_coords(run, corpus);
    const YearRange window = c.window(corpus.observed_years());

    std::vector<int> labels;
    for (int l = 0; l < assignment.n_clusters; ++l) labels.push_back(l);
    labels.push_back(kNoise);
    for (int l : labels) {
        write_profile_json(run.output("profile_" + cluster_name(l) + ".json"),
                           profile_cluster(corpus, assignment, l, c.top_n));
    }

    const auto shares = ai_share_per_cluster(corpus, assignment);
    json with_noise = json::object();
    json clusters_only = json::object();
    for (const auto& [l, v] : shares.with_noise) with_noise[cluster_name(l)] = v;
    for (const auto& [l, v] : shares.clusters_only) clusters_only[cluster_name(l)] = v;
    write_json(run.output("ai_shares.json"), {{"with_noise", with_noise}, {"clusters_only", clusters_only}});

    for (const auto& [l, s] : cluster_size_series(corpus, assignment, window)) {
        const auto name = cluster_name(l);
        write_series_csv(run.output("series_size_" + name + ".csv"), s.size);
        write_series_csv(run.output("series_ai_of_cluster_" + name + ".csv"), s.ai_of_cluster);
        write_series_csv(run.output("series_ai_within_year_" + name + ".csv"), s.ai_within_year);
    }
    const auto cumulative = cumulative_ai_series(corpus, assignment, window, c.normalize_year.value_or(window.last));
    for (const auto& [l, s] : cumulative.series) {
        write_series_csv(run.output("series_cumulative_ai_" + cluster_name(l) + ".csv"), s);
    }
    for (const auto& snap : snapshot_maps(coords, corpus, assignment, window, c.period)) {
        write_snapshot_csv(run.output(fmt::format("snapshot_{}_{}.csv", snap.period.first, snap.period.last)), snap);
    }
    write_grid_csv(run.output("grid.csv"), density_grid(coords, c.grid, c.grid));

    const auto concepts = ai_concepts(corpus, keywords, parse_ai_concept_rule(c.ai_rule));
    json concept_info = {{"rule", c.ai_rule}, {"concepts", concepts}};
    if (!concepts.empty()) {
        const auto shares_by_concept = ai_concept_share_series(corpus, concepts, window);
        std::ofstream out(run.output("ai_concept_shares.csv"));
        out << "concept,year,share\n";
        for (const auto& [name, s] : shares_by_concept.series) {
            for (std::size_t y = 0; y < s.values.size(); ++y) {
                if (s.values[y]) out << name << ',' << s.first_year + static_cast<int>(y) << ','
                                     << fmt::format("{}", *s.values[y]) << '\n';
            }
        }
        concept_info["top"] = shares_by_concept.top;
    }
    std::vector<std::string> omitted;
    for (int l : cumulative.omitted) omitted.push_back(cluster_name(l));
    write_json(run.output("summary.json"), {{"window", {window.first, window.last}},
                                            {"clusters", assignment.n_clusters},
                                            {"cumulative_omitted", omitted},
                                            {"ai_concepts", concept_info}});
}

void stage_conceptnet(StageRun& run) {
    const auto& c = run.config();
    const Corpus corpus = stage_corpus(run);
    const auto keywords = stage_keywords(run);
    const auto assignment = stage_assignment(run);
    const YearRange window = c.window(corpus.observed_years());
    const auto table = concept_view(corpus, c.levels);
    const auto ai = concept_ids(table, ai_concepts(corpus, keywords, parse_ai_concept_rule(c.ai_rule)));

    std::vector<int> labels;
    if (c.concept_clusters) {
        labels = *c.concept_clusters;
        for (int l : labels) {
            if (l < 0 || l >= assignment.n_clusters) {
                throw ConfigError(fmt::format("[conceptnet] clusters: no cluster {}", l));
            }
        }
    } else {
        for (int l = 0; l < assignment.n_clusters; ++l) labels.push_back(l);
    }

    json clusters = json::object();
    if (!ai.empty()) {
        for (int l : labels) {
            const auto papers = cluster_concept_papers(corpus, table, assignment, l);
            const auto name = cluster_name(l);
            // cumulative graph of every year
            const auto result = coreness_series(papers, ai, window, [&](const CumulativeGraph& g) {
                if (!g.year) return;
                write_edges(run.output(fmt::format("conceptnet_{}_{}.edges", name, *g.year)), g, table.names);
            });
            write_coreness_csv(run.output("coreness_" + name + ".csv"), result);
            clusters[name] = {{"papers", papers.size()},
                              {"apparition_year", result.apparition_year ? json(*result.apparition_year)
                                                                         : json(nullptr)},
                              {"concepts_seen", result.concepts_seen},
                              {"ai_concepts_seen", result.ai_concepts_seen},
                              {"ai_share_all_seen", result.ai_share_all_seen()},
                              {"final_component_size", result.final_component_size},
                              {"ai_share_final_component", result.ai_share_final_component()}};
        }
    }
    json levels = c.levels;
    write_json(run.output("summary.json"), {{"window", {window.first, window.last}},
                                            {"levels", levels},
                                            {"ai_concepts", ai.size()},
                                            {"eligible_papers", table.eligible_count()},
                                            {"clusters", clusters}});
}

void stage_citegeom(StageRun& run) {
    const auto& c = run.config();
    const Corpus corpus = stage_corpus(run);
    const auto assignment = stage_assignment(run);
    const auto coords = stage_coords(run, corpus);
    const auto points = aligned_points(corpus, coords);
    const auto labels = labels_by_row(corpus, assignment);
    const CitationGraph graph(corpus);
    const YearRange window = c.window(corpus.observed_years());

    const auto records = gyration_records(corpus, points, graph, labels);
    write_rog_csv(run.output("rog.csv"), records);
    const auto normalized = yearly_mean_rog(records, window, c.min_citations, RogMetric::normalized);
    const auto raw = yearly_mean_rog(records, window, c.min_citations, RogMetric::raw);
    write_series_csv(run.output("rog_yearly_ai.csv"), normalized.ai);
    write_series_csv(run.output("rog_yearly_non_ai.csv"), normalized.non_ai);
    write_series_csv(run.output("rog_yearly_raw_ai.csv"), raw.ai);
    write_series_csv(run.output("rog_yearly_raw_non_ai.csv"), raw.non_ai);

    json distributions = json::object();
    for (const auto& [l, d] : cluster_rog_distributions(records, c.min_citations)) {
        auto side = [](const RogDistribution& r) -> json {
            json s = {{"sample", r.sample}};
            if (r.summary) {
                s["min"] = r.summary->min;
                s["q1"] = r.summary->q1;
                s["median"] = r.summary->median;
                s["q3"] = r.summary->q3;
                s["max"] = r.summary->max;
            }
            return s;
        };
        distributions[cluster_name(l)] = {{"ai", side(d.ai)}, {"non_ai", side(d.non_ai)}};
    }
    write_json(run.output("rog_distributions.json"), distributions);

    const auto matrix = ai_citation_matrix(corpus, graph, assignment,
                                           c.counting == "papers" ? CitationCounting::papers : CitationCounting::edges);
    write_citation_matrix_csv(run.output("citation_matrix.csv"), matrix);

    // Dynamics of AI cohorts.
    std::vector<int> years = c.dynamics_years;
    if (years.empty()) {
        std::map<int, std::size_t> qualified;
        for (std::size_t r = 0; r < corpus.size(); ++r) {
            const auto& p = corpus.papers()[r];
            if (p.ai_flag && graph.citers(static_cast<Corpus::Row>(r)).size() >= c.min_citations) ++qualified[p.year];
        }
        int best = 0;
        std::size_t best_count = 0;
        for (const auto& [y, n] : qualified) {
            if (n > best_count) {
                best = y;
                best_count = n;
            }
        }
        if (best_count > 0) years.push_back(best);
    }
    json dynamics = json::object();
    for (int year : years) {
        const auto h = static_cast<std::size_t>(c.dynamics_horizon);
        std::vector<std::string> ids;
        std::vector<TemporalSeries> returns;
        std::vector<int> starts;
        for (std::size_t r = 0; r < corpus.size(); ++r) {
            const auto& p = corpus.papers()[r];
            if (!p.ai_flag || p.year != year) continue;
            const auto rog_series = cumulative_rog_series(corpus, points, graph, static_cast<Corpus::Row>(r),
                                                          {year, year + c.dynamics_horizon}, c.min_citations);
            auto lr = log_return_series(rog_series);
            if (std::none_of(lr.values.begin(), lr.values.end(), [](const auto& v) { return v.has_value(); })) continue;
            ids.push_back(p.id);
            returns.push_back(std::move(lr));
            starts.push_back(year + 1);
        }
        const auto aligned = align_series(returns, starts, h);
        {
            std::ofstream out(run.output(fmt::format("rog_series_{}.csv", year)));
            out << "id";
            for (std::size_t t = 1; t <= h; ++t) out << ",t" << t;
            out << '\n';
            for (std::size_t i = 0; i < ids.size(); ++i) {
                out << ids[i];
                for (double v : aligned[i]) out << ',' << fmt::format("{}", v);
                out << '\n';
            }
        }
        json info = {{"year", year}, {"series", ids.size()}, {"horizon", h}};
        if (!ids.empty()) {
            const std::size_t k_max = std::min(c.dynamics_k_max, ids.size());
            const std::size_t k_min = std::min(c.dynamics_k_min, k_max);
            const auto result = cluster_rog_dynamics(aligned, k_min, k_max, c.seed);
            json groups = json::array();
            for (std::size_t g = 0; g < result.k; ++g) {
                std::vector<std::string> members;
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (result.clustering.assignment[i] == static_cast<int>(g)) members.push_back(ids[i]);
                }
                const auto& centroid = result.clustering.centroids[g];
                const auto peak = std::max_element(centroid.begin(), centroid.end()) - centroid.begin();
                groups.push_back({{"label", g}, {"members", members}, {"centroid", centroid}, {"peak_offset", peak + 1}});
            }
            info["k_range"] = {k_min, k_max};
            info["k"] = result.k;
            info["distortion"] = result.distortion;
            info["clusters"] = groups;
        }
        write_json(run.output(fmt::format("dynamics_clusters_{}.json", year)), info);
        dynamics[std::to_string(year)] = {{"series", ids.size()}, {"k", info.value("k", json(nullptr))}};
    }

    std::vector<int> zero_rows;
    for (std::size_t i = 0; i < matrix.clusters; ++i) {
        if (matrix.zero_row[i]) zero_rows.push_back(static_cast<int>(i));
    }
    write_json(run.output("summary.json"), {{"records", records.size()},
                                            {"min_citations", c.min_citations},
                                            {"counting", c.counting},
                                            {"matrix_zero_rows", zero_rows},
                                            {"dynamics", dynamics}});
}

void stage_validate(StageRun& run) {
    const auto& c = run.config();
    const Corpus corpus = stage_corpus(run);
    const auto vectors = import_vectors(run.upstream("atlas", "vectors.f32", "project"), 0, &corpus);
    const auto coords = stage_coords(run, corpus);

    json summary = json::object();
    auto evaluate = [&](const std::string& space, const PointTable& table, double train_fraction) {
        const auto labels = subfield_labels(corpus, table);
        const auto split = make_split(labels, c.label_threshold, train_fraction, c.seed);
        std::vector<std::size_t> ks;
        for (std::size_t k = c.validate_k_min; k <= c.validate_k_max && k < split.train.size(); ++k) ks.push_back(k);
        if (ks.empty()) throw DataError("validate: training set of " + std::to_string(split.train.size()) + " is too small");
        const auto sweep = knn_accuracy_sweep(table, split, ks);
        fs::create_directories(run.dir() / space);
        write_accuracy_csv(run.output(space + "/accuracy_sweep.csv"), sweep);
        const auto confusion = confusion_matrix(table, split, sweep.k_star);
        write_confusion_csv(run.output(space + "/confusion_" + space + ".csv"), confusion);
        const auto best = std::find(sweep.ks.begin(), sweep.ks.end(), sweep.k_star) - sweep.ks.begin();
        json entry = {{"train", split.train.size()},
                      {"test", split.test.size()},
                      {"labels", split.label_names.size()},
                      {"k_star", sweep.k_star},
                      {"accuracy", sweep.accuracy[static_cast<std::size_t>(best)]}};
        if (c.folds > 1) {
            json folds = json::array();
            for (const auto& fold : make_folds(labels, c.label_threshold, c.folds, c.seed)) {
                const auto s = knn_accuracy_sweep(table, fold, ks);
                const auto b = std::find(s.ks.begin(), s.ks.end(), s.k_star) - s.ks.begin();
                folds.push_back({{"k_star", s.k_star}, {"accuracy", s.accuracy[static_cast<std::size_t>(b)]}});
            }
            entry["cross_validation"] = folds;
        }
        summary[space] = entry;
    };
    evaluate("embedding", vectors, c.train_embedding);
    evaluate("map", coords, c.train_map);
    write_json(run.output("summary.json"), summary);
}

const std::map<std::string, std::pair<std::string, void (*)(StageRun&)>> kStageTable = {
    {"synth", {"synth", stage_synth}},
    {"ingest", {"corpus", stage_ingest}},
    {"project", {"atlas", stage_project}},
    {"cluster", {"cluster", stage_cluster}},
    {"profile", {"profile", stage_profile}},
    {"conceptnet", {"conceptnet", stage_conceptnet}},
    {"citegeom", {"citegeom", stage_citegeom}},
    {"validate", {"validate", stage_validate}},
};

}  // namespace

std::string stage_directory(const std::string& stage) {
    const auto it = kStageTable.find(stage);
    if (it == kStageTable.end()) throw ConfigError("unknown stage '" + stage + "'");
    return it->second.first;
}

void run_stage(const std::string& stage, const PipelineConfig& config, const IniSections& sections) {
    if (stage == "all") {
        for (const auto& s : kStages) run_stage(s, config, sections);
        return;
    }
    StageRun run(stage_directory(stage), config, sections);
    kStageTable.at(stage).second(run);
    run.finish();
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Knowledge-map analysis pipeline", "carto"};
    std::optional<std::string> config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "INI configuration file");
    app.add_option("--out", out, "Output root (default: $CARTO_OUT or ./carto_out)");
    app.add_option("--seed", seed, "Global seed");
    app.add_option("--threads", threads, "Worker threads (0: all cores)");
    app.add_option("--set", overrides, "Override section.key=value")->take_all();
    app.require_subcommand(1, 1);
    app.fallthrough();
    const std::pair<const char*, const char*> commands[] = {
        {"synth", "Generate a synthetic corpus"},
        {"ingest", "Filter the corpus and tag AI papers"},
        {"project", "Import vectors and map coordinates"},
        {"cluster", "Density clustering of the map"},
        {"profile", "Cluster profiles and AI shares"},
        {"conceptnet", "Concept co-occurrence coreness"},
        {"citegeom", "Citation radius of gyration"},
        {"validate", "kNN label accuracy"},
        {"all", "Every stage after synth"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string stage = app.get_subcommands().front()->get_name();

    try {
        IniSections sections = config_path ? read_ini_file(*config_path) : IniSections{};
        for (const auto& o : overrides) apply_override(sections, o);
        PipelineConfig config = make_config(sections, seed);
        if (out) {
            config.out = *out;
        } else if (!sections.contains("") || !sections.at("").contains("out")) {
            const char* env = std::getenv("CARTO_OUT");
            if (env && *env) config.out = env;
        }
        set_thread_count(threads);
        run_stage(stage, config, sections);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const MissingArtifact& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace carto
