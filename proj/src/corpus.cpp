#include "carto/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace carto {

using nlohmann::json;

namespace {

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

std::string json_id(const json& value, const char* what) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
    throw DataError(std::string(what) + " must be a string or integer");
}

}  // namespace

// --- AIKeywordList ----------------------------------------------------------

AIKeywordList::AIKeywordList(std::vector<std::string> phrases) {
    std::unordered_set<std::string> seen;
    for (auto& raw : phrases) {
        std::string phrase = to_lower_ascii(trim(raw));
        if (phrase.empty()) throw DataError("AI keyword list contains an empty phrase");
        if (!seen.insert(phrase).second) {
            throw DataError("AI keyword list repeats phrase '" + phrase + "'");
        }
        phrases_.push_back(std::move(phrase));
    }
    if (phrases_.empty()) throw DataError("AI keyword list is empty");
}

AIKeywordList AIKeywordList::from_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<std::string> phrases;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        phrases.push_back(t);
    }
    return AIKeywordList(std::move(phrases));
}

bool AIKeywordList::matches(std::string_view text) const {
    const std::string lowered = to_lower_ascii(text);
    for (const auto& phrase : phrases_) {
        std::size_t pos = lowered.find(phrase);
        while (pos != std::string::npos) {
            const bool left_ok = pos == 0 || !is_word_char(lowered[pos - 1]);
            const std::size_t end = pos + phrase.size();
            const bool right_ok = end == lowered.size() || !is_word_char(lowered[end]);
            if (left_ok && right_ok) return true;
            pos = lowered.find(phrase, pos + 1);
        }
    }
    return false;
}

// --- Corpus -----------------------------------------------------------------

Corpus::Corpus(std::vector<PaperRecord> papers, const std::vector<CitationEdge>& citations,
               DropReport* report)
    : papers_(std::move(papers)) {
    index_.reserve(papers_.size());
    for (std::size_t i = 0; i < papers_.size(); ++i) {
        if (!index_.emplace(papers_[i].id, static_cast<Row>(i)).second) {
            throw DataError("duplicate paper id '" + papers_[i].id + "'");
        }
    }
    DropReport local;
    citations_.reserve(citations.size());
    for (const auto& edge : citations) {
        const auto citer = find(edge.citer);
        const auto cited = find(edge.cited);
        if (!citer || !cited) {
            ++local.dangling_citations;
        } else if (*citer == *cited) {
            ++local.self_citations;
        } else {
            citations_.emplace_back(*citer, *cited);
        }
    }
    std::sort(citations_.begin(), citations_.end());
    const auto last = std::unique(citations_.begin(), citations_.end());
    local.duplicate_citations = static_cast<std::size_t>(citations_.end() - last);
    citations_.erase(last, citations_.end());
    if (report) {
        report->dangling_citations += local.dangling_citations;
        report->self_citations += local.self_citations;
        report->duplicate_citations += local.duplicate_citations;
    }
}

std::optional<Corpus::Row> Corpus::find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Corpus::Row Corpus::row_of(std::string_view id) const {
    if (auto row = find(id)) return *row;
    throw DataError("unknown paper id '" + std::string(id) + "'");
}

std::vector<CitationEdge> Corpus::citation_records() const {
    std::vector<CitationEdge> out;
    out.reserve(citations_.size());
    for (const auto& [a, b] : citations_) out.push_back({papers_[a].id, papers_[b].id});
    return out;
}

std::size_t Corpus::ai_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(papers_.begin(), papers_.end(), [](const auto& p) { return p.ai_flag; }));
}

YearRange Corpus::observed_years() const noexcept {
    if (papers_.empty()) return {0, -1};
    const auto [lo, hi] = std::minmax_element(
        papers_.begin(), papers_.end(), [](const auto& a, const auto& b) { return a.year < b.year; });
    return {lo->year, hi->year};
}

// --- record formats -----------------------------------------------------------

PaperRecord parse_paper_line(std::string_view line, std::size_t line_no) {
    const std::string where = "papers.jsonl line " + std::to_string(line_no) + ": ";
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DataError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw DataError(where + "record is not an object");
    try {
        PaperRecord p;
        p.id = json_id(obj.at("id"), "id");
        p.title = obj.at("title").get<std::string>();
        if (auto it = obj.find("abstract"); it != obj.end() && !it->is_null()) {
            p.abstract = it->get<std::string>();
        }
        p.year = obj.at("year").get<int>();
        p.venue_id = json_id(obj.at("venue"), "venue");
        p.ref_count = obj.at("refs").get<int>();
        p.citation_count = obj.at("cites").get<int>();
        if (p.ref_count < 0 || p.citation_count < 0) {
            throw DataError("refs/cites must be non-negative");
        }
        for (const auto& label : obj.at("fos")) {
            if (!label.is_array() || label.size() != 2) {
                throw DataError("fos entries must be [concept_id, level]");
            }
            FosLabel fos{json_id(label[0], "concept id"), label[1].get<int>()};
            if (fos.level < 0 || fos.level > 5) {
                throw DataError("fos level " + std::to_string(fos.level) + " outside 0..5");
            }
            p.fos_labels.push_back(std::move(fos));
        }
        if (auto it = obj.find("topic"); it != obj.end() && !it->is_null()) {
            p.topic = Topic{json_id(it->at("topic"), "topic"), json_id(it->at("subfield"), "subfield"),
                            json_id(it->at("field"), "field"), json_id(it->at("domain"), "domain")};
        }
        if (auto it = obj.find("keywords"); it != obj.end() && !it->is_null()) {
            p.keywords = it->get<std::vector<std::string>>();
        }
        if (auto it = obj.find("ai"); it != obj.end()) p.ai_flag = it->get<bool>();
        return p;
    } catch (const DataError& e) {
        throw DataError(where + e.what());
    } catch (const json::exception& e) {
        throw DataError(where + e.what());
    }
}

std::string format_paper_line(const PaperRecord& p) {
    json obj = json::object();
    obj["id"] = p.id;
    obj["title"] = p.title;
    obj["abstract"] = p.abstract ? json(*p.abstract) : json(nullptr);
    obj["year"] = p.year;
    obj["venue"] = p.venue_id;
    obj["refs"] = p.ref_count;
    obj["cites"] = p.citation_count;
    json fos = json::array();
    for (const auto& f : p.fos_labels) fos.push_back(json::array({f.concept_id, f.level}));
    obj["fos"] = std::move(fos);
    if (p.topic) {
        obj["topic"] = {{"topic", p.topic->topic_id},
                        {"subfield", p.topic->subfield_id},
                        {"field", p.topic->field_id},
                        {"domain", p.topic->domain_id}};
    } else {
        obj["topic"] = nullptr;
    }
    obj["keywords"] = p.keywords;
    obj["ai"] = p.ai_flag;
    return obj.dump();
}

std::vector<PaperRecord> read_papers_jsonl(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<PaperRecord> papers;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        papers.push_back(parse_paper_line(line, line_no));
    }
    return papers;
}

std::vector<CitationEdge> read_citations_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "citer,cited") {
        throw DataError(path.string() + ": missing 'citer,cited' header");
    }
    std::vector<CitationEdge> edges;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cols = split(trim(line), ',');
        if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": expected two columns");
        }
        edges.push_back({std::move(cols[0]), std::move(cols[1])});
    }
    return edges;
}

void write_papers_jsonl(const std::filesystem::path& path, const std::vector<PaperRecord>& papers) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    for (const auto& p : papers) out << format_paper_line(p) << '\n';
}

void write_citations_csv(const std::filesystem::path& path, const std::vector<CitationEdge>& edges) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "citer,cited\n";
    for (const auto& e : edges) out << e.citer << ',' << e.cited << '\n';
}

void write_citations_csv(const std::filesystem::path& path, const Corpus& corpus) {
    write_citations_csv(path, corpus.citation_records());
}

std::set<std::string> read_venues_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::set<std::string> venues;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (!t.empty() && t.front() != '#') venues.insert(t);
    }
    return venues;
}

// --- operations -------------------------------------------------------------

LoadResult filter_corpus(std::vector<PaperRecord> papers, const std::vector<CitationEdge>& citations,
                         const IngestionConfig& config) {
    DropReport drops;
    std::vector<PaperRecord> kept;
    kept.reserve(papers.size());
    for (auto& p : papers) {
        if (p.year < config.year_min || p.year > config.year_max) {
            ++drops.year;
        } else if (config.venues && !config.venues->contains(p.venue_id)) {
            ++drops.venue;
        } else if (p.ref_count < config.min_refs) {
            ++drops.min_refs;
        } else if (p.citation_count < config.min_cites) {
            ++drops.min_cites;
        } else {
            kept.push_back(std::move(p));
        }
    }
    Corpus corpus(std::move(kept), citations, &drops);
    return {std::move(corpus), drops};
}

LoadResult load_corpus(const std::filesystem::path& papers_path,
                       const std::filesystem::path& citations_path, const IngestionConfig& config) {
    auto papers = read_papers_jsonl(papers_path);
    // Duplicate ids are an input error even when the filters would drop one copy.
    std::unordered_set<std::string> ids;
    for (const auto& p : papers) {
        if (!ids.insert(p.id).second) throw DataError("duplicate paper id '" + p.id + "'");
    }
    return filter_corpus(std::move(papers), read_citations_csv(citations_path), config);
}

Corpus tag_ai(Corpus corpus, const AIKeywordList& keywords) {
    for (auto& p : corpus.papers_) {
        std::string text = p.title;
        if (p.abstract) {
            text += ' ';
            text += *p.abstract;
        }
        p.ai_flag = keywords.matches(text);
    }
    return corpus;
}

std::optional<std::uint32_t> ConceptOccurrenceTable::find(std::string_view name) const {
    const auto it = std::lower_bound(names.begin(), names.end(), name);
    if (it == names.end() || *it != name) return std::nullopt;
    return static_cast<std::uint32_t>(it - names.begin());
}

std::size_t ConceptOccurrenceTable::eligible_count() const {
    return static_cast<std::size_t>(std::count(eligible.begin(), eligible.end(), true));
}

ConceptOccurrenceTable concept_view(const Corpus& corpus, const std::set<int>& levels) {
    for (int level : levels) {
        if (level < 0 || level > 5) {
            throw std::invalid_argument("concept level " + std::to_string(level) + " outside 0..5");
        }
    }
    ConceptOccurrenceTable table;
    std::set<std::string> names;
    for (const auto& p : corpus.papers()) {
        for (const auto& f : p.fos_labels) {
            if (levels.contains(f.level)) names.insert(f.concept_id);
        }
    }
    table.names.assign(names.begin(), names.end());
    table.per_paper.resize(corpus.size());
    table.eligible.resize(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto& concepts = table.per_paper[i];
        for (const auto& f : corpus.papers()[i].fos_labels) {
            if (levels.contains(f.level)) concepts.push_back(*table.find(f.concept_id));
        }
        std::vector<std::uint32_t> distinct = concepts;
        std::sort(distinct.begin(), distinct.end());
        table.eligible[i] = std::unique(distinct.begin(), distinct.end()) - distinct.begin() >= 2;
    }
    return table;
}

}  // namespace carto
