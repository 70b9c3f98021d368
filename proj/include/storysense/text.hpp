#pragma once
// String primitives shared across the toolkit: whitespace tokenization,
// normalization, deterministic hashing/shuffling, sentence splitting and
// ROUGE-1 F1. Everything here is pure and deterministic.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "error.hpp"

namespace storysense {

inline std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::string to_lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

// Trim + collapse runs of internal whitespace to a single space.
inline std::string normalize_ws(const std::string& s) {
    return join(split_ws(s), " ");
}

// Lowercased whitespace tokens. The word-level tokenization used by the
// metrics, the reference LM and the generation model's vocabulary.
inline std::vector<std::string> word_tokens(const std::string& s) {
    return split_ws(to_lower(s));
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// Deterministic PRNG. Not std::mt19937 distributions because their output is
// implementation-defined; artifacts must be reproducible across toolchains.
struct SplitMix64 {
    uint64_t state;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // [0, n)
    uint64_t below(uint64_t n) { return n ? next() % n : 0; }
    // [0, 1)
    double unit() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }
};

template <typename T>
inline void deterministic_shuffle(std::vector<T>& v, uint64_t seed) {
    SplitMix64 rng(seed);
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// Rule-based sentence splitter for raw-text story ingestion. Splits after
// . ! ? when followed by an upper-case/digit start, with an abbreviation guard.
inline std::vector<std::string> split_sentences(const std::string& text) {
    static const std::unordered_set<std::string> kAbbrev = {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "vs.", "etc.",
        "e.g.", "i.e.", "jr.", "sr.", "no.", "inc.", "u.s."};
    std::vector<std::string> out;
    std::string cur;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        cur += c;
        if (c != '.' && c != '!' && c != '?') continue;
        if (c == '.') {
            auto toks = split_ws(cur);
            if (!toks.empty() && kAbbrev.count(to_lower(toks.back()))) continue;
        }
        size_t j = i + 1;
        while (j < text.size() && (text[j] == '"' || text[j] == '\'')) {
            cur += text[j];
            ++j;
        }
        size_t k = j;
        while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
        bool boundary = k >= text.size() ||
                        std::isupper(static_cast<unsigned char>(text[k])) ||
                        std::isdigit(static_cast<unsigned char>(text[k])) ||
                        text[k] == '"' || text[k] == '\'';
        if (boundary) {
            auto piece = trim(cur);
            if (!piece.empty()) out.push_back(piece);
            cur.clear();
        }
        i = j - 1;
    }
    auto piece = trim(cur);
    if (!piece.empty()) out.push_back(piece);
    return out;
}

// ROUGE-1 F1 between a candidate and a reference text over lowercased
// whitespace unigrams with clipped counts. Empty tokenization scores 0.
inline double rouge1_f1(const std::string& cand, const std::string& ref) {
    auto c = word_tokens(cand);
    auto r = word_tokens(ref);
    if (c.empty() || r.empty()) return 0.0;
    std::unordered_map<std::string, int> ref_counts;
    for (const auto& t : r) ref_counts[t]++;
    std::unordered_map<std::string, int> used;
    int overlap = 0;
    for (const auto& t : c) {
        auto it = ref_counts.find(t);
        if (it != ref_counts.end() && used[t] < it->second) {
            used[t]++;
            overlap++;
        }
    }
    if (overlap == 0) return 0.0;
    double p = static_cast<double>(overlap) / static_cast<double>(c.size());
    double rr = static_cast<double>(overlap) / static_cast<double>(r.size());
    return 2.0 * p * rr / (p + rr);
}

} // namespace storysense
