#pragma once
// Noun/verb phrase extraction used to match story sentences against
// knowledge-base event heads. The default chunker is rule-based over a small
// POS lexicon; anything smarter (a real parser, a remote service) plugs in
// behind the PhraseChunker interface.

#include <array>
#include <mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "text.hpp"

namespace storysense {

struct PhraseChunker {
    virtual ~PhraseChunker() = default;
    // Noun phrases and verb phrases of the text, lowercased, in reading order,
    // deduplicated. Every phrase is a substring of the input modulo case,
    // punctuation and whitespace normalization.
    virtual std::vector<std::string> phrases(const std::string& text) const = 0;
};

namespace detail {

inline const std::unordered_set<std::string>& determiners() {
    static const std::unordered_set<std::string> s = {
        "a",  "an",  "the",  "this", "that",  "these", "those", "my", "your",
        "his", "her", "its", "our",  "their", "some",  "any",   "no", "every",
        "each", "another"};
    return s;
}

inline const std::unordered_set<std::string>& pronouns() {
    static const std::unordered_set<std::string> s = {
        "i",    "you",  "he",   "she",    "it",      "we",       "they",
        "me",   "him",  "us",   "them",   "myself",  "himself",  "herself",
        "itself", "ourselves", "themselves", "someone", "anyone", "everyone",
        "nobody", "personx", "persony"};
    return s;
}

inline const std::unordered_set<std::string>& function_words() {
    static const std::unordered_set<std::string> s = {
        "and", "or",   "but",   "if",    "when",   "while", "because", "so",
        "then", "than", "as",    "at",    "by",     "for",  "from",    "in",
        "into", "of",   "off",   "on",    "out",    "over", "to",      "under",
        "up",   "with", "about", "after", "before", "during", "not",   "very",
        "really", "too", "also", "just",  "now",    "here", "there",   "again",
        "always", "never", "often", "soon", "yesterday", "today", "tomorrow",
        "down", "away", "back", "around", "along"};
    return s;
}

inline const std::unordered_set<std::string>& adjectives() {
    static const std::unordered_set<std::string> s = {
        "happy", "sad",   "angry",  "scared", "afraid", "tired",  "hungry",
        "thirsty", "big", "small",  "little", "large",  "good",   "bad",
        "great", "new",   "old",    "young",  "long",   "short",  "high",
        "low",   "hot",   "cold",   "warm",   "cool",   "nice",   "mean",
        "kind",  "friendly", "beautiful", "ugly", "fast", "slow", "quick",
        "busy",  "free",  "full",   "empty",  "clean",  "dirty",  "wet",
        "dry",   "loud",  "quiet",  "bright", "dark",   "heavy",  "light",
        "strong", "weak", "rich",   "poor",   "easy",   "hard",   "soft",
        "favorite", "excited", "nervous", "proud", "brave", "smart", "funny",
        "serious", "careful", "delicious", "fresh", "broken", "whole"};
    return s;
}

inline const std::unordered_set<std::string>& verb_stems() {
    static const std::unordered_set<std::string> s = {
        "be",    "have",  "do",     "say",   "go",     "get",    "make",
        "know",  "think", "take",   "see",   "come",   "want",   "look",
        "use",   "find",  "give",   "tell",  "work",   "call",   "try",
        "ask",   "need",  "feel",   "become", "leave", "put",    "mean",
        "keep",  "let",   "begin",  "seem",  "help",   "talk",   "turn",
        "start", "show",  "hear",   "play",  "run",    "move",   "like",
        "live",  "believe", "hold", "bring", "happen", "write",  "sit",
        "stand", "lose",  "pay",    "meet",  "include", "continue", "set",
        "learn", "change", "lead",  "understand", "watch", "follow", "stop",
        "create", "speak", "read",  "allow", "add",    "spend",  "grow",
        "open",  "walk",  "win",    "offer", "remember", "love", "consider",
        "appear", "buy",  "wait",   "serve", "send",   "expect", "build",
        "stay",  "fall",  "cut",    "reach", "remain", "suggest", "raise",
        "pass",  "sell",  "require", "report", "decide", "pull", "eat",
        "teach", "visit", "travel", "miss",  "cancel", "finish", "enjoy",
        "grab",  "realize", "rescue", "bake", "cook",  "clean",  "drive",
        "ride",  "jump",  "climb",  "smile", "laugh",  "cry",    "shout",
        "plant", "water", "paint",  "fix",   "wash",   "brush",  "pack",
        "order", "practice", "study", "save", "earn",  "borrow", "lend",
        "plan",  "wake",  "sleep",  "drop",  "throw",  "catch",  "race",
        "swim",  "sing",  "dance",  "drink", "forget", "wish",   "hope"};
    return s;
}

inline const std::unordered_map<std::string, std::string>& irregular_verbs() {
    static const std::unordered_map<std::string, std::string> m = {
        {"is", "be"},     {"am", "be"},     {"are", "be"},    {"was", "be"},
        {"were", "be"},   {"been", "be"},   {"being", "be"},  {"has", "have"},
        {"had", "have"},  {"does", "do"},   {"did", "do"},    {"done", "do"},
        {"went", "go"},   {"gone", "go"},   {"got", "get"},   {"gotten", "get"},
        {"made", "make"}, {"knew", "know"}, {"known", "know"},
        {"thought", "think"}, {"took", "take"}, {"taken", "take"},
        {"saw", "see"},   {"seen", "see"},  {"came", "come"}, {"found", "find"},
        {"gave", "give"}, {"given", "give"}, {"told", "tell"},
        {"wrote", "write"}, {"written", "write"}, {"ran", "run"},
        {"ate", "eat"},   {"eaten", "eat"}, {"bought", "buy"},
        {"felt", "feel"}, {"left", "leave"}, {"kept", "keep"},
        {"met", "meet"},  {"paid", "pay"},  {"sold", "sell"}, {"sat", "sit"},
        {"stood", "stand"}, {"lost", "lose"}, {"heard", "hear"},
        {"held", "hold"}, {"brought", "bring"}, {"spoke", "speak"},
        {"spoken", "speak"}, {"fell", "fall"}, {"fallen", "fall"},
        {"drove", "drive"}, {"driven", "drive"}, {"rode", "ride"},
        {"ridden", "ride"}, {"won", "win"}, {"sent", "send"},
        {"built", "build"}, {"taught", "teach"}, {"slept", "sleep"},
        {"woke", "wake"}, {"woken", "wake"}, {"threw", "throw"},
        {"thrown", "throw"}, {"caught", "catch"}, {"sang", "sing"},
        {"sung", "sing"}, {"swam", "swim"}, {"drank", "drink"},
        {"drunk", "drink"}, {"forgot", "forget"}, {"began", "begin"},
        {"begun", "begin"}, {"grew", "grow"}, {"grown", "grow"},
        {"let", "let"},   {"cut", "cut"},   {"put", "put"},   {"read", "read"},
        {"said", "say"},  {"led", "lead"},  {"spent", "spend"}};
    return m;
}

inline const std::unordered_set<std::string>& particles() {
    static const std::unordered_set<std::string> s = {
        "up", "down", "out", "off", "on", "in", "over", "away", "back",
        "around", "along"};
    return s;
}

// Undo regular inflection: tries / tried / watching / baked -> stem candidates.
inline bool is_verb_form(const std::string& tok) {
    const auto& stems = verb_stems();
    const auto& irr = irregular_verbs();
    if (stems.count(tok) || irr.count(tok)) return true;
    auto try_stem = [&](const std::string& st) { return stems.count(st) > 0; };
    size_t n = tok.size();
    if (n > 3 && tok.compare(n - 3, 3, "ies") == 0 && try_stem(tok.substr(0, n - 3) + "y")) return true;
    if (n > 2 && tok.compare(n - 2, 2, "es") == 0 && try_stem(tok.substr(0, n - 2))) return true;
    if (n > 1 && tok.back() == 's' && try_stem(tok.substr(0, n - 1))) return true;
    if (n > 3 && tok.compare(n - 3, 3, "ied") == 0 && try_stem(tok.substr(0, n - 3) + "y")) return true;
    if (n > 2 && tok.compare(n - 2, 2, "ed") == 0) {
        auto base = tok.substr(0, n - 2);
        if (try_stem(base) || try_stem(base + "e")) return true;
        if (base.size() > 1 && base[base.size() - 1] == base[base.size() - 2] &&
            try_stem(base.substr(0, base.size() - 1)))
            return true;
    }
    if (n > 4 && tok.compare(n - 3, 3, "ing") == 0) {
        auto base = tok.substr(0, n - 3);
        if (try_stem(base) || try_stem(base + "e")) return true;
        if (base.size() > 1 && base[base.size() - 1] == base[base.size() - 2] &&
            try_stem(base.substr(0, base.size() - 1)))
            return true;
    }
    return false;
}

// Lowercase word tokens with punctuation stripped.
inline std::vector<std::string> chunk_tokens(const std::string& text) {
    std::vector<std::string> out;
    for (auto& tok : word_tokens(text)) {
        std::string clean;
        for (char c : tok)
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-') clean += c;
        if (!clean.empty()) out.push_back(clean);
    }
    return out;
}

} // namespace detail

class RuleChunker final : public PhraseChunker {
public:
    std::vector<std::string> phrases(const std::string& text) const override {
        using namespace detail;
        auto toks = chunk_tokens(text);
        size_t n = toks.size();
        enum class Tag { Det, Pron, Func, Verb, Adj, Noun };
        std::vector<Tag> tags(n, Tag::Noun);
        for (size_t i = 0; i < n; ++i) {
            const auto& t = toks[i];
            if (determiners().count(t)) tags[i] = Tag::Det;
            else if (function_words().count(t)) tags[i] = Tag::Func;
            else if (pronouns().count(t)) tags[i] = Tag::Pron;
            else if (is_verb_form(t)) tags[i] = Tag::Verb;
            else if (adjectives().count(t)) tags[i] = Tag::Adj;
        }
        // A verb-listed token right after a determiner or adjective is a noun
        // ("a fire", "the big race").
        for (size_t i = 1; i < n; ++i)
            if (tags[i] == Tag::Verb && (tags[i - 1] == Tag::Det || tags[i - 1] == Tag::Adj))
                tags[i] = Tag::Noun;

        std::vector<std::string> out;
        std::unordered_set<std::string> seen;
        auto emit = [&](const std::string& p) {
            if (seen.insert(p).second) out.push_back(p);
        };
        size_t i = 0;
        while (i < n) {
            if (tags[i] == Tag::Verb) {
                size_t j = i + 1;
                std::string vp = toks[i];
                while (j < n && particles().count(toks[j])) {
                    vp += " " + toks[j];
                    ++j;
                }
                emit(vp);
                i = j;
                continue;
            }
            if (tags[i] == Tag::Det || tags[i] == Tag::Adj || tags[i] == Tag::Noun) {
                size_t j = i;
                if (tags[j] == Tag::Det) ++j;
                while (j < n && tags[j] == Tag::Adj) ++j;
                size_t noun_begin = j;
                while (j < n && tags[j] == Tag::Noun) ++j;
                if (j > noun_begin) {
                    std::string np = toks[i];
                    for (size_t k = i + 1; k < j; ++k) np += " " + toks[k];
                    emit(np);
                    i = j;
                    continue;
                }
            }
            ++i;
        }
        return out;
    }
};

// In-memory phrase cache keyed by sentence hash, with a JSONL sidecar format
// so repeated supervision runs skip re-extraction. Thread safe.
class PhraseCache {
public:
    std::vector<std::string> get_or_compute(const std::string& sentence, const PhraseChunker& chunker) {
        uint64_t key = fnv1a64(normalize_ws(to_lower(sentence)));
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = map_.find(key);
            if (it != map_.end()) {
                ++hits_;
                return it->second;
            }
        }
        auto computed = chunker.phrases(sentence);
        std::lock_guard<std::mutex> lock(mu_);
        ++misses_;
        map_.emplace(key, computed);
        return computed;
    }

    size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return map_.size();
    }
    size_t hits() const { return hits_; }
    size_t misses() const { return misses_; }

    // Sidecar persistence lives in jsonl.hpp-free form: each entry serialized
    // by the caller. Expose the raw table for that.
    std::unordered_map<uint64_t, std::vector<std::string>> snapshot() const {
        std::lock_guard<std::mutex> lock(mu_);
        return map_;
    }
    void insert_raw(uint64_t key, std::vector<std::string> phrases) {
        std::lock_guard<std::mutex> lock(mu_);
        map_.emplace(key, std::move(phrases));
    }

private:
    mutable std::mutex mu_;
    std::unordered_map<uint64_t, std::vector<std::string>> map_;
    size_t hits_ = 0, misses_ = 0;
};

} // namespace storysense
