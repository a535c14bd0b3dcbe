#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "carto/corpus.hpp"
#include "carto/synthkit.hpp"

namespace carto {

/// Raw `section -> key -> value` text; root-level keys use the section "".
using IniSections = std::map<std::string, std::map<std::string, std::string>>;

/// Parses INI text. Throws ConfigError on syntax errors.
IniSections parse_ini(const std::string& text, const std::string& origin = "config");
IniSections read_ini_file(const std::filesystem::path& path);

/// Applies a `section.key=value` override; the key is the text after the last dot.
void apply_override(IniSections& sections, const std::string& assignment);

struct PipelineConfig {
    std::uint64_t seed = 42;
    std::filesystem::path out = "carto_out";

    // [ingest]
    std::optional<std::filesystem::path> papers;
    std::optional<std::filesystem::path> citations;
    std::optional<std::filesystem::path> keywords;
    std::optional<std::filesystem::path> venues;
    IngestionConfig ingest;

    // [vectors]
    std::optional<std::filesystem::path> vectors;
    std::string coords = "auto";  // auto | fallback | path
    std::size_t dim = 0;          // 0: take the file's dimension
    std::size_t overlap_k = 15;

    // [cluster]
    std::size_t min_samples = 0;  // 0: scaled default
    std::size_t min_cluster_size = 0;
    std::string cuts = "leaves";
    std::optional<int> refine_label;
    std::size_t refine_min_samples = 0;
    std::size_t refine_min_cluster_size = 0;
    std::string refine_cuts = "leaves";

    // [profile]
    std::size_t top_n = 10;
    std::optional<int> window_first;
    std::optional<int> window_last;
    std::optional<int> normalize_year;
    int period = 5;
    std::size_t grid = 50;
    std::string ai_rule = "keyword_name";

    // [conceptnet]
    std::set<int> levels{2, 3};
    std::optional<std::vector<int>> concept_clusters;  // empty: every cluster

    // [citegeom]
    std::size_t min_citations = 3;
    std::string counting = "edges";
    std::vector<int> dynamics_years;  // empty: the busiest AI cohort
    std::size_t dynamics_k_min = 1;
    std::size_t dynamics_k_max = 6;
    int dynamics_horizon = 10;

    // [validate]
    std::size_t label_threshold = 10;
    std::size_t validate_k_min = 1;
    std::size_t validate_k_max = 30;
    double train_embedding = 0.99;
    double train_map = 0.8;
    std::size_t folds = 0;  // > 1 adds a cross-validation run

    // [synth] and [blob.<label>]
    SynthSpec synth;

    YearRange window(YearRange observed) const {
        return {window_first.value_or(observed.first), window_last.value_or(observed.last)};
    }
};

/// Builds a configuration from parsed sections. Unknown sections or keys and
/// unparsable values throw ConfigError. `seed` replaces the configured seed.
PipelineConfig make_config(const IniSections& sections, std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace carto
