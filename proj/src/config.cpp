#include "carto/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "carto/profiler.hpp"

namespace carto {

IniSections parse_ini(const std::string& text, const std::string& origin) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    IniSections out;
    for (const auto& [name, child] : tree) {
        if (child.empty() && !child.data().empty()) {
            out[""][name] = trim(child.data());
            continue;
        }
        auto& section = out[name];
        for (const auto& [key, value] : child) section[key] = trim(value.data());
    }
    return out;
}

IniSections read_ini_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_ini(text.str(), path.string());
}

void apply_override(IniSections& sections, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' lacks '='");
    const std::string lhs = trim(assignment.substr(0, eq));
    const auto dot = lhs.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == lhs.size()) {
        throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    }
    sections[lhs.substr(0, dot)][lhs.substr(dot + 1)] = trim(assignment.substr(eq + 1));
}

namespace {

// Hands out values key by key; whatever is left afterwards is unknown.
class Reader {
  public:
    explicit Reader(IniSections sections) : sections_(std::move(sections)) {}

    std::optional<std::string> take(const std::string& section, const std::string& key) {
        auto s = sections_.find(section);
        if (s == sections_.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        std::string value = k->second;
        s->second.erase(k);
        return value;
    }

    template <typename T>
    void get(const std::string& section, const std::string& key, T& target) {
        if (auto v = take(section, key)) target = convert<T>(section, key, *v);
    }

    template <typename T>
    void get(const std::string& section, const std::string& key, std::optional<T>& target) {
        if (auto v = take(section, key)) target = convert<T>(section, key, *v);
    }

    IniSections& sections() { return sections_; }

    void finish() const {
        for (const auto& [section, keys] : sections_) {
            for (const auto& [key, value] : keys) {
                throw ConfigError("unknown config key '" + key + "' in [" + section + "]");
            }
        }
    }

    template <typename T>
    static T convert(const std::string& section, const std::string& key, const std::string& text) {
        auto fail = [&]() -> ConfigError {
            return ConfigError("bad value '" + text + "' for [" + section + "] " + key);
        };
        if constexpr (std::is_same_v<T, std::string>) {
            return text;
        } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
            if (text.empty()) throw fail();
            return std::filesystem::path(text);
        } else if constexpr (std::is_same_v<T, bool>) {
            const auto t = to_lower_ascii(text);
            if (t == "true" || t == "1" || t == "yes") return true;
            if (t == "false" || t == "0" || t == "no") return false;
            throw fail();
        } else if constexpr (std::is_floating_point_v<T>) {
            try {
                std::size_t used = 0;
                const double v = std::stod(text, &used);
                if (used != text.size()) throw fail();
                return static_cast<T>(v);
            } catch (const std::logic_error&) {
                throw fail();
            }
        } else {
            T v{};
            const auto* end = text.data() + text.size();
            const auto [ptr, ec] = std::from_chars(text.data(), end, v);
            if (ec != std::errc() || ptr != end) throw fail();
            return v;
        }
    }

  private:
    IniSections sections_;
};

template <typename T>
std::vector<T> parse_list(const std::string& section, const std::string& key, const std::string& text) {
    std::vector<T> out;
    for (const auto& part : split(text, ',')) {
        const auto item = trim(part);
        if (!item.empty()) out.push_back(Reader::convert<T>(section, key, item));
    }
    return out;
}

const std::set<std::string> kSections = {"",        "ingest",   "vectors",  "cluster", "profile",
                                         "conceptnet", "citegeom", "validate", "synth"};

}  // namespace

PipelineConfig make_config(const IniSections& sections, std::optional<std::uint64_t> seed) {
    for (const auto& [name, keys] : sections) {
        if (!kSections.contains(name) && !name.starts_with("blob.")) {
            throw ConfigError("unknown config section [" + name + "]");
        }
    }
    Reader r(sections);
    PipelineConfig c;
    r.get("", "seed", c.seed);
    r.get("", "out", c.out);
    if (seed) c.seed = *seed;

    r.get("ingest", "papers", c.papers);
    r.get("ingest", "citations", c.citations);
    r.get("ingest", "keywords", c.keywords);
    r.get("ingest", "venues_file", c.venues);
    r.get("ingest", "year_min", c.ingest.year_min);
    r.get("ingest", "year_max", c.ingest.year_max);
    r.get("ingest", "min_refs", c.ingest.min_refs);
    r.get("ingest", "min_cites", c.ingest.min_cites);
    if (c.ingest.year_max < c.ingest.year_min) throw ConfigError("[ingest] year_max precedes year_min");

    r.get("vectors", "path", c.vectors);
    r.get("vectors", "coords", c.coords);
    r.get("vectors", "dim", c.dim);
    r.get("vectors", "overlap_k", c.overlap_k);
    if (c.overlap_k == 0) throw ConfigError("[vectors] overlap_k must be positive");

    r.get("cluster", "min_samples", c.min_samples);
    r.get("cluster", "min_cluster_size", c.min_cluster_size);
    r.get("cluster", "cuts", c.cuts);
    r.get("cluster", "refine_label", c.refine_label);
    r.get("cluster", "refine_min_samples", c.refine_min_samples);
    r.get("cluster", "refine_min_cluster_size", c.refine_min_cluster_size);
    r.get("cluster", "refine_cuts", c.refine_cuts);

    r.get("profile", "top_n", c.top_n);
    r.get("profile", "window_first", c.window_first);
    r.get("profile", "window_last", c.window_last);
    r.get("profile", "normalize_year", c.normalize_year);
    r.get("profile", "period", c.period);
    r.get("profile", "grid", c.grid);
    r.get("profile", "ai_rule", c.ai_rule);
    if (c.period < 1) throw ConfigError("[profile] period must be at least 1");
    parse_ai_concept_rule(c.ai_rule);  // throws ConfigError

    if (auto v = r.take("conceptnet", "levels")) {
        const auto levels = parse_list<int>("conceptnet", "levels", *v);
        c.levels = {levels.begin(), levels.end()};
        for (int l : c.levels) {
            if (l < 0 || l > 5) throw ConfigError("[conceptnet] levels must lie in 0..5");
        }
    }
    if (auto v = r.take("conceptnet", "clusters")) {
        if (trim(*v) != "all") c.concept_clusters = parse_list<int>("conceptnet", "clusters", *v);
    }

    r.get("citegeom", "min_citations", c.min_citations);
    r.get("citegeom", "counting", c.counting);
    if (c.counting != "edges" && c.counting != "papers") {
        throw ConfigError("[citegeom] counting must be 'edges' or 'papers'");
    }
    if (auto v = r.take("citegeom", "dynamics_years")) {
        if (trim(*v) != "auto") c.dynamics_years = parse_list<int>("citegeom", "dynamics_years", *v);
    }
    r.get("citegeom", "dynamics_k_min", c.dynamics_k_min);
    r.get("citegeom", "dynamics_k_max", c.dynamics_k_max);
    r.get("citegeom", "dynamics_horizon", c.dynamics_horizon);
    if (c.dynamics_k_min == 0 || c.dynamics_k_max < c.dynamics_k_min) {
        throw ConfigError("[citegeom] need 1 <= dynamics_k_min <= dynamics_k_max");
    }
    if (c.dynamics_horizon < 2) throw ConfigError("[citegeom] dynamics_horizon must be at least 2");

    r.get("validate", "threshold", c.label_threshold);
    r.get("validate", "k_min", c.validate_k_min);
    r.get("validate", "k_max", c.validate_k_max);
    r.get("validate", "train_embedding", c.train_embedding);
    r.get("validate", "train_map", c.train_map);
    r.get("validate", "folds", c.folds);
    if (c.validate_k_min == 0 || c.validate_k_max < c.validate_k_min) {
        throw ConfigError("[validate] need 1 <= k_min <= k_max");
    }
    for (double f : {c.train_embedding, c.train_map}) {
        if (!(f > 0.0 && f < 1.0)) throw ConfigError("[validate] train fractions must lie in (0, 1)");
    }

    auto& s = c.synth;
    s = default_synth_spec(c.seed);
    r.get("synth", "seed", s.seed);
    r.get("synth", "year_first", s.years.first);
    r.get("synth", "year_last", s.years.last);
    r.get("synth", "dim", s.dim);
    r.get("synth", "vector_noise", s.vector_noise);
    r.get("synth", "in_cluster", s.in_cluster);
    r.get("synth", "preferential", s.preferential);
    r.get("synth", "refs_min", s.refs_min);
    r.get("synth", "refs_max", s.refs_max);
    r.get("synth", "rejected_share", s.rejected_share);
    r.get("synth", "concepts_per_paper", s.concepts_per_paper);
    if (auto v = r.take("synth", "ai_phrases")) {
        s.ai_phrases.clear();
        for (const auto& p : split(*v, ';')) {
            if (!trim(p).empty()) s.ai_phrases.push_back(to_lower_ascii(trim(p)));
        }
    }
    std::vector<BlobSpec> blobs;
    for (auto& [name, keys] : r.sections()) {
        if (!name.starts_with("blob.")) continue;
        BlobSpec b;
        b.label = name.substr(5);
        const std::string section = name;
        r.get(section, "x", b.center.x);
        r.get(section, "y", b.center.y);
        r.get(section, "sigma", b.sigma);
        r.get(section, "count", b.count);
        r.get(section, "growth", b.growth);
        r.get(section, "ai_rate", b.ai_rate);
        r.get(section, "vocabulary", b.vocabulary);
        r.get(section, "ai_vocabulary", b.ai_vocabulary);
        blobs.push_back(std::move(b));
    }
    if (!blobs.empty()) s.blobs = std::move(blobs);
    s.validate();

    r.finish();
    return c;
}

}  // namespace carto
