#pragma once
// Narrative ingestion: stories as ordered sentence lists, deterministic
// train/dev/test splitting and window truncation for longer narratives.

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "text.hpp"

namespace storysense {

struct Story {
    std::string id;
    std::vector<std::string> sentences;
    size_t length() const { return sentences.size(); }
};

struct StoryLoadStats {
    size_t loaded = 0;
    size_t skipped = 0;
};

enum class StoryFormat { jsonl, text, auto_detect };

struct StoryLoadOptions {
    StoryFormat format = StoryFormat::auto_detect;
    // when nonzero, rows must have exactly this many sentences
    size_t strict_length = 0;
    // when nonzero, rows longer than this are skipped (use truncate_to_window
    // to adapt long narratives instead of dropping them)
    size_t max_length = 0;
};

// JSONL: {"id": "...", "sentences": ["...", ...]} per line, extra fields
// ignored. Text: one story per line, rule-based sentence splitting applied.
inline std::vector<Story> load_stories(const std::string& path,
                                       StoryLoadOptions opt = {},
                                       StoryLoadStats* stats = nullptr) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open stories file: " + path);
    StoryFormat fmt = opt.format;
    if (fmt == StoryFormat::auto_detect) {
        fmt = (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl") ||
                      (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
                  ? StoryFormat::jsonl
                  : StoryFormat::text;
    }
    std::vector<Story> stories;
    StoryLoadStats local;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        Story s;
        if (fmt == StoryFormat::jsonl) {
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                local.skipped++;
                continue;
            }
            if (j.contains("config_hash") && !j.contains("sentences")) continue;
            if (!j.contains("id") || !j.contains("sentences") || !j["id"].is_string() ||
                !j["sentences"].is_array()) {
                local.skipped++;
                continue;
            }
            s.id = j["id"].get<std::string>();
            bool ok = true;
            for (const auto& item : j["sentences"]) {
                if (!item.is_string() || trim(item.get<std::string>()).empty()) {
                    ok = false;
                    break;
                }
                s.sentences.push_back(trim(item.get<std::string>()));
            }
            if (!ok || s.id.empty()) {
                local.skipped++;
                continue;
            }
        } else {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "story%05zu", line_no);
            s.id = buf;
            s.sentences = split_sentences(line);
        }
        if (s.sentences.empty() ||
            (opt.strict_length && s.sentences.size() != opt.strict_length) ||
            (opt.max_length && s.sentences.size() > opt.max_length)) {
            local.skipped++;
            continue;
        }
        stories.push_back(std::move(s));
        local.loaded++;
    }
    if (stories.empty()) throw FatalError("no valid stories in " + path);
    if (stats) *stats = local;
    return stories;
}

struct SplitRatios {
    double train = 0.90;
    double dev = 0.05;
    double test = 0.05;
};

struct CorpusSplit {
    std::vector<Story> train, dev, test;
    uint64_t seed = 0;
};

// Deterministic shuffle by seed, then contiguous slicing. Dev and test get
// floor(n * ratio) stories each; the remainder goes to train.
inline CorpusSplit split_corpus(const std::vector<Story>& stories, SplitRatios ratios, uint64_t seed) {
    double sum = ratios.train + ratios.dev + ratios.test;
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1, got " + std::to_string(sum));
    if (stories.empty()) throw ConfigError("split_corpus requires at least one story");
    std::vector<size_t> order(stories.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    deterministic_shuffle(order, seed);
    size_t n = stories.size();
    size_t n_dev = static_cast<size_t>(std::floor(static_cast<double>(n) * ratios.dev));
    size_t n_test = static_cast<size_t>(std::floor(static_cast<double>(n) * ratios.test));
    size_t n_train = n - n_dev - n_test;
    CorpusSplit split;
    split.seed = seed;
    for (size_t i = 0; i < n; ++i) {
        const Story& s = stories[order[i]];
        if (i < n_train) split.train.push_back(s);
        else if (i < n_train + n_dev) split.dev.push_back(s);
        else split.test.push_back(s);
    }
    return split;
}

// Keep the first T sentences; shorter stories come back unchanged.
inline Story truncate_to_window(const Story& story, int window) {
    if (window <= 0) throw ConfigError("truncation window must be positive");
    Story out;
    out.id = story.id;
    size_t keep = std::min(story.sentences.size(), static_cast<size_t>(window));
    out.sentences.assign(story.sentences.begin(), story.sentences.begin() + static_cast<long>(keep));
    return out;
}

inline void save_stories(const std::vector<Story>& stories, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("cannot write stories file: " + path);
    for (const auto& s : stories) {
        nlohmann::json j;
        j["id"] = s.id;
        j["sentences"] = s.sentences;
        out << j.dump() << "\n";
    }
}

} // namespace storysense
