#pragma once
// ATOMIC-style if-then knowledge base: the nine inferential dimensions with
// their natural-language templates, triple storage, phrase indexing and the
// text normalization applied before NLI scoring.

#include <array>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "chunker.hpp"
#include "error.hpp"
#include "text.hpp"

namespace storysense {

enum class Dim : int {
    xIntent = 0,
    xNeed,
    xAttr,
    xEffect,
    xWant,
    xReact,
    oEffect,
    oWant,
    oReact,
};

constexpr int kNumDims = 9;

constexpr std::array<Dim, kNumDims> kAllDims = {
    Dim::xIntent, Dim::xNeed, Dim::xAttr,  Dim::xEffect, Dim::xWant,
    Dim::xReact,  Dim::oEffect, Dim::oWant, Dim::oReact};

enum class DimGroup { cause, effect };

struct DimInfo {
    Dim dim;
    const char* name;
    const char* tmpl;        // natural-language prefix, ends in ": "
    DimGroup group;
    const char* nli_prefix;  // declarative form used for NLI normalization
};

// Causes are xNeed/xIntent/xAttr; everything else is an effect.
inline const std::array<DimInfo, kNumDims>& dim_table() {
    static const std::array<DimInfo, kNumDims> table = {{
        {Dim::xIntent, "xIntent", "PersonX wanted: ", DimGroup::cause, "they wanted"},
        {Dim::xNeed, "xNeed", "PersonX needed: ", DimGroup::cause, "they needed"},
        {Dim::xAttr, "xAttr", "PersonX is seen as: ", DimGroup::cause, "they are seen as"},
        {Dim::xEffect, "xEffect", "PersonX is likely: ", DimGroup::effect, "they are likely"},
        {Dim::xWant, "xWant", "PersonX wants: ", DimGroup::effect, "they want"},
        {Dim::xReact, "xReact", "PersonX then feels: ", DimGroup::effect, "they then feel"},
        {Dim::oEffect, "oEffect", "PersonY is likely: ", DimGroup::effect, "they are likely"},
        {Dim::oWant, "oWant", "PersonY wants: ", DimGroup::effect, "they want"},
        {Dim::oReact, "oReact", "Others then feel: ", DimGroup::effect, "they then feel"},
    }};
    return table;
}

inline const DimInfo& dim_info(Dim d) { return dim_table()[static_cast<size_t>(d)]; }
inline const char* dim_name(Dim d) { return dim_info(d).name; }
inline DimGroup dim_group(Dim d) { return dim_info(d).group; }

inline std::optional<Dim> dim_from_name(const std::string& name) {
    for (const auto& info : dim_table())
        if (name == info.name) return info.dim;
    return std::nullopt;
}

// Template prefixes are a constant table but overridable for other KBs.
struct TemplateTable {
    std::array<std::string, kNumDims> prefix;

    static TemplateTable standard() {
        TemplateTable t;
        for (int i = 0; i < kNumDims; ++i) t.prefix[static_cast<size_t>(i)] = dim_table()[static_cast<size_t>(i)].tmpl;
        return t;
    }

    void validate() const {
        for (const auto& p : prefix)
            if (p.size() < 3 || p.substr(p.size() - 2) != ": ")
                throw ConfigError("template prefix must be non-empty and end in ': ': '" + p + "'");
    }
};

inline const TemplateTable& standard_templates() {
    static const TemplateTable t = TemplateTable::standard();
    return t;
}

// "PersonX wants: " ++ tail, exactly one space after the colon.
inline std::string render_template(Dim d, const std::string& tail,
                                   const TemplateTable& templates = standard_templates()) {
    auto cleaned = trim(tail);
    if (cleaned.empty()) throw std::invalid_argument("render_template: empty tail");
    return templates.prefix[static_cast<size_t>(d)] + cleaned;
}

// Normalization chain applied before handing an inference to an NLI
// classifier: declarative per-dimension prefix, colon removed, lowercased,
// PersonX replaced by "they", terminal period appended.
inline std::string normalize_for_nli(Dim d, const std::string& tail) {
    auto cleaned = trim(tail);
    if (cleaned.empty()) throw std::invalid_argument("normalize_for_nli: empty tail");
    std::string s = std::string(dim_info(d).nli_prefix) + " " + cleaned;
    s = to_lower(s);
    std::string no_colon;
    no_colon.reserve(s.size());
    for (char c : s)
        if (c != ':') no_colon += c;
    s = std::move(no_colon);
    // replace every personx occurrence
    const std::string needle = "personx";
    for (size_t pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos))
        s.replace(pos, needle.size(), "they");
    s = normalize_ws(s);
    if (s.empty() || s.back() != '.') s += '.';
    return s;
}

struct AtomicTriple {
    std::string head;   // e1: event phrase
    Dim dim;            // d
    std::string tail;   // e2: inference text
    bool none_tail = false;  // "none" tails stay in the KB, metrics skip them
};

struct KnowledgeBase {
    std::vector<AtomicTriple> triples;
    // normalized noun/verb phrase of a head -> indices of triples containing it
    std::unordered_map<std::string, std::vector<size_t>> phrase_index;
    // unique head events in first-seen order (novelty comparison set)
    std::vector<std::string> events;
    std::unordered_map<std::string, std::vector<size_t>> head_to_triples;
    size_t skipped = 0;

    const std::vector<size_t>& triples_for_head(const std::string& head) const {
        static const std::vector<size_t> empty;
        auto it = head_to_triples.find(head);
        return it == head_to_triples.end() ? empty : it->second;
    }
};

enum class KbFormat { tsv, jsonl };

inline std::optional<KbFormat> kb_format_from_name(const std::string& name) {
    if (name == "tsv") return KbFormat::tsv;
    if (name == "jsonl") return KbFormat::jsonl;
    return std::nullopt;
}

namespace detail {

inline void kb_add_triple(KnowledgeBase& kb, std::string head, Dim d, std::string tail) {
    AtomicTriple t;
    t.head = std::move(head);
    t.dim = d;
    t.tail = std::move(tail);
    t.none_tail = to_lower(trim(t.tail)) == "none";
    size_t idx = kb.triples.size();
    auto it = kb.head_to_triples.find(t.head);
    if (it == kb.head_to_triples.end()) {
        kb.events.push_back(t.head);
        kb.head_to_triples[t.head] = {idx};
    } else {
        it->second.push_back(idx);
    }
    kb.triples.push_back(std::move(t));
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

} // namespace detail

// TSV: UTF-8, tab separated, no header, one head/dimension/tail per line.
// JSONL: one object per line with keys "head", "dim", "tail". Header lines
// carrying a "config_hash" (our own artifacts) are ignored. Records with an
// unknown dimension or empty fields are counted and skipped; zero valid
// records is fatal.
inline KnowledgeBase load_knowledge_base(const std::string& path, KbFormat format) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open knowledge base file: " + path);
    KnowledgeBase kb;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::string head, dim_name_str, tail;
        if (format == KbFormat::tsv) {
            auto cols = detail::split_tabs(line);
            if (cols.size() != 3) {
                kb.skipped++;
                continue;
            }
            head = trim(cols[0]);
            dim_name_str = trim(cols[1]);
            tail = trim(cols[2]);
        } else {
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                kb.skipped++;
                continue;
            }
            if (j.contains("config_hash") && !j.contains("head")) continue;
            if (!j.contains("head") || !j.contains("dim") || !j.contains("tail") ||
                !j["head"].is_string() || !j["dim"].is_string() || !j["tail"].is_string()) {
                kb.skipped++;
                continue;
            }
            head = trim(j["head"].get<std::string>());
            dim_name_str = trim(j["dim"].get<std::string>());
            tail = trim(j["tail"].get<std::string>());
        }
        auto d = dim_from_name(dim_name_str);
        if (!d || head.empty() || tail.empty()) {
            kb.skipped++;
            continue;
        }
        detail::kb_add_triple(kb, std::move(head), *d, std::move(tail));
    }
    if (kb.triples.empty())
        throw FatalError("no valid knowledge-base records in " + path + " (" +
                         std::to_string(kb.skipped) + " skipped)");
    return kb;
}

// Canonical JSONL serialization; loading the same file twice produces
// byte-identical output.
inline void save_knowledge_base(const KnowledgeBase& kb, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("cannot write knowledge base file: " + path);
    for (const auto& t : kb.triples) {
        nlohmann::json j;
        j["head"] = t.head;
        j["dim"] = dim_name(t.dim);
        j["tail"] = t.tail;
        out << j.dump() << "\n";
    }
}

// Map every normalized noun/verb phrase of every head event to the triples
// containing it. Deterministic given kb order.
inline void index_phrases(KnowledgeBase& kb, const PhraseChunker& chunker, PhraseCache* cache = nullptr) {
    kb.phrase_index.clear();
    for (size_t i = 0; i < kb.triples.size(); ++i) {
        auto phrases = cache ? cache->get_or_compute(kb.triples[i].head, chunker)
                             : chunker.phrases(kb.triples[i].head);
        std::unordered_set<std::string> seen;
        for (const auto& p : phrases) {
            auto key = normalize_ws(to_lower(p));
            if (key.empty() || !seen.insert(key).second) continue;
            kb.phrase_index[key].push_back(i);
        }
    }
}

} // namespace storysense
