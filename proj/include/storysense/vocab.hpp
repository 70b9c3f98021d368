#pragma once
// Word-level vocabulary for the generation model, including the control
// tokens: per-sentence tokens <|sent0|>..<|sentT-1|>, one token per ATOMIC
// dimension, <|PAD|>, <|endoftext|> and <|unk|>. Control tokens are single
// vocabulary entries and are never split.

#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "corpus.hpp"
#include "kb.hpp"
#include "text.hpp"

namespace storysense {

struct SpecialTokens {
    static std::string pad() { return "<|PAD|>"; }
    static std::string eos() { return "<|endoftext|>"; }
    static std::string unk() { return "<|unk|>"; }
    static std::string sent(int i) { return "<|sent" + std::to_string(i) + "|>"; }
    static std::string dim(Dim d) { return std::string("<|") + dim_name(d) + "|>"; }
};

struct Vocab {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> index;
    int pad_id = 0, eos_id = 1, unk_id = 2;
    int first_sent_id = 3;
    int window = 5;  // number of sentence tokens (T)
    std::array<int, kNumDims> dim_ids{};

    size_t size() const { return tokens.size(); }

    int sent_token_id(int i) const {
        if (i < 0 || i >= window) throw std::invalid_argument("sentence token index out of range");
        return first_sent_id + i;
    }
    int dim_token_id(Dim d) const { return dim_ids[static_cast<size_t>(d)]; }

    int id_of(const std::string& tok) const {
        auto it = index.find(tok);
        return it == index.end() ? unk_id : it->second;
    }
    const std::string& token(int id) const { return tokens[static_cast<size_t>(id)]; }

    // whitespace tokens; control tokens match verbatim, words lowercased
    std::vector<int> encode_words(const std::string& text) const {
        std::vector<int> out;
        for (const auto& t : split_ws(text)) {
            auto it = index.find(t);
            if (it != index.end()) {
                out.push_back(it->second);
                continue;
            }
            out.push_back(id_of(to_lower(t)));
        }
        return out;
    }

    std::string decode(const std::vector<int>& ids) const {
        std::vector<std::string> words;
        for (int id : ids) {
            if (id == pad_id || id == eos_id) continue;
            words.push_back(token(id));
        }
        return join(words, " ");
    }

    // Word types collected from the texts, ordered by (frequency desc, token
    // asc) after the fixed control-token block. Deterministic.
    static Vocab build(const std::vector<std::string>& texts, int window, size_t max_words = 0) {
        if (window < 1) throw ConfigError("vocabulary window must be >= 1");
        Vocab v;
        v.window = window;
        auto push = [&](const std::string& tok) {
            v.index.emplace(tok, static_cast<int>(v.tokens.size()));
            v.tokens.push_back(tok);
        };
        push(SpecialTokens::pad());
        push(SpecialTokens::eos());
        push(SpecialTokens::unk());
        v.first_sent_id = static_cast<int>(v.tokens.size());
        for (int i = 0; i < window; ++i) push(SpecialTokens::sent(i));
        // control-token block order follows the added-token table
        static const std::array<Dim, kNumDims> kDimTokenOrder = {
            Dim::xNeed, Dim::xIntent, Dim::xWant,   Dim::oEffect, Dim::xReact,
            Dim::oWant, Dim::oReact,  Dim::xEffect, Dim::xAttr};
        for (Dim d : kDimTokenOrder) {
            v.dim_ids[static_cast<size_t>(d)] = static_cast<int>(v.tokens.size());
            push(SpecialTokens::dim(d));
        }
        std::unordered_map<std::string, size_t> counts;
        for (const auto& text : texts)
            for (const auto& tok : word_tokens(text)) counts[tok]++;
        std::vector<std::pair<std::string, size_t>> sorted(counts.begin(), counts.end());
        std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        for (const auto& [tok, count] : sorted) {
            (void)count;
            if (v.index.count(tok)) continue;
            if (max_words && v.tokens.size() >= max_words) break;
            push(tok);
        }
        return v;
    }
};

struct EncodeStats {
    size_t truncated_inputs = 0;
};

// Model input per Eq. 1: all story sentences, the selected-sentence token,
// then the dimension token. When the sequence exceeds max_len, story tokens
// are dropped from the front; control tokens are never dropped.
inline std::vector<int> encode_input(const Story& story, int sentence_idx, Dim dim,
                                     const Vocab& vocab, size_t max_len,
                                     EncodeStats* stats = nullptr) {
    if (sentence_idx < 0 || static_cast<size_t>(sentence_idx) >= story.sentences.size())
        throw std::invalid_argument("encode_input: sentence index out of range");
    if (sentence_idx >= vocab.window)
        throw std::invalid_argument("encode_input: sentence index exceeds vocabulary window");
    if (max_len < 3) throw FatalError("encode_input: context budget too small for control tokens");
    std::vector<int> story_ids;
    for (const auto& s : story.sentences) {
        auto ids = vocab.encode_words(s);
        story_ids.insert(story_ids.end(), ids.begin(), ids.end());
    }
    size_t budget = max_len - 2;
    if (story_ids.size() > budget) {
        story_ids.erase(story_ids.begin(),
                        story_ids.begin() + static_cast<long>(story_ids.size() - budget));
        if (stats) stats->truncated_inputs++;
    }
    story_ids.push_back(vocab.sent_token_id(sentence_idx));
    story_ids.push_back(vocab.dim_token_id(dim));
    return story_ids;
}

} // namespace storysense
