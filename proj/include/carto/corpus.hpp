#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "carto/common.hpp"

namespace carto {

struct FosLabel {
    std::string concept_id;
    int level = 0;  // 0 (discipline) .. 5 (most specific)

    bool operator==(const FosLabel&) const = default;
};

struct Topic {
    std::string topic_id;
    std::string subfield_id;
    std::string field_id;
    std::string domain_id;

    bool operator==(const Topic&) const = default;
};

struct PaperRecord {
    std::string id;
    std::string title;
    std::optional<std::string> abstract;
    int year = 0;
    std::string venue_id;
    int ref_count = 0;
    int citation_count = 0;
    std::vector<FosLabel> fos_labels;
    std::optional<Topic> topic;
    std::vector<std::string> keywords;
    bool ai_flag = false;

    bool operator==(const PaperRecord&) const = default;
};

struct CitationEdge {
    std::string citer;
    std::string cited;

    auto operator<=>(const CitationEdge&) const = default;
};

/// Ordered list of lowercase phrases marking AI-related text.
class AIKeywordList {
  public:
    /// Throws DataError when empty or when a phrase repeats (after lowering).
    explicit AIKeywordList(std::vector<std::string> phrases);

    /// One phrase per line; blank lines and `#` comments are skipped.
    static AIKeywordList from_file(const std::filesystem::path& path);

    const std::vector<std::string>& phrases() const noexcept { return phrases_; }

    /// True iff any phrase occurs in `text` (case-insensitively) with a
    /// non-alphanumeric character or the text boundary on both sides.
    bool matches(std::string_view text) const;

  private:
    std::vector<std::string> phrases_;
};

struct IngestionConfig {
    int year_min = 1970;
    int year_max = 2020;
    int min_refs = 10;
    int min_cites = 10;
    std::optional<std::set<std::string>> venues;

    YearRange years() const noexcept { return {year_min, year_max}; }
};

/// Per-filter drop counters. A record is charged to the first filter it fails
/// in the order year, venue, min_refs, min_cites.
struct DropReport {
    std::size_t year = 0;
    std::size_t venue = 0;
    std::size_t min_refs = 0;
    std::size_t min_cites = 0;
    std::size_t dangling_citations = 0;
    std::size_t self_citations = 0;
    std::size_t duplicate_citations = 0;

    std::size_t dropped_papers() const noexcept { return year + venue + min_refs + min_cites; }
    bool operator==(const DropReport&) const = default;
};

/// Immutable bibliographic corpus. Papers keep their input order; citations
/// are stored as sorted, unique (citer, cited) row-index pairs.
class Corpus {
  public:
    using Row = std::uint32_t;
    using Edge = std::pair<Row, Row>;

    Corpus() = default;
    /// Throws DataError on duplicate ids. Citation edges naming unknown ids,
    /// self-loops and repeated pairs are dropped and counted in `report`.
    Corpus(std::vector<PaperRecord> papers, const std::vector<CitationEdge>& citations,
           DropReport* report = nullptr);

    std::size_t size() const noexcept { return papers_.size(); }
    const std::vector<PaperRecord>& papers() const noexcept { return papers_; }
    const PaperRecord& paper(Row row) const { return papers_.at(row); }
    std::optional<Row> find(std::string_view id) const;
    Row row_of(std::string_view id) const;  // throws DataError when absent

    const std::vector<Edge>& citations() const noexcept { return citations_; }
    std::vector<CitationEdge> citation_records() const;

    std::size_t ai_count() const noexcept;
    /// Year span actually covered by the papers (empty corpus: {0, -1}).
    YearRange observed_years() const noexcept;

    bool operator==(const Corpus& other) const {
        return papers_ == other.papers_ && citations_ == other.citations_;
    }

  private:
    friend Corpus tag_ai(Corpus corpus, const AIKeywordList& keywords);

    std::vector<PaperRecord> papers_;
    std::unordered_map<std::string, Row> index_;
    std::vector<Edge> citations_;
};

struct LoadResult {
    Corpus corpus;
    DropReport drops;
};

// --- record formats -------------------------------------------------------

/// Parses one JSON line of papers.jsonl. `line_no` is used in error messages.
PaperRecord parse_paper_line(std::string_view line, std::size_t line_no);
std::string format_paper_line(const PaperRecord& paper);

std::vector<PaperRecord> read_papers_jsonl(const std::filesystem::path& path);
std::vector<CitationEdge> read_citations_csv(const std::filesystem::path& path);
void write_papers_jsonl(const std::filesystem::path& path, const std::vector<PaperRecord>& papers);
void write_citations_csv(const std::filesystem::path& path, const Corpus& corpus);
void write_citations_csv(const std::filesystem::path& path, const std::vector<CitationEdge>& edges);

std::set<std::string> read_venues_file(const std::filesystem::path& path);

// --- operations -----------------------------------------------------------

/// Applies the year window, venue set and reference/citation thresholds.
/// Citations are restricted to the surviving ids.
LoadResult filter_corpus(std::vector<PaperRecord> papers, const std::vector<CitationEdge>& citations,
                         const IngestionConfig& config);

LoadResult load_corpus(const std::filesystem::path& papers_path,
                       const std::filesystem::path& citations_path, const IngestionConfig& config);

/// Sets ai_flag on every paper from title + abstract; previous flags are
/// replaced.
Corpus tag_ai(Corpus corpus, const AIKeywordList& keywords);

/// Concept ids interned in lexicographic order, one occurrence list per paper.
struct ConceptOccurrenceTable {
    std::vector<std::string> names;             // concept index -> concept id
    std::vector<std::vector<std::uint32_t>> per_paper;  // multiset, in label order
    std::vector<bool> eligible;                 // >= 2 distinct concepts

    std::optional<std::uint32_t> find(std::string_view name) const;
    std::size_t eligible_count() const;
};

ConceptOccurrenceTable concept_view(const Corpus& corpus, const std::set<int>& levels);

}  // namespace carto
