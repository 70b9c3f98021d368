#pragma once
// Language-model scoring interface and the tiny reference scorers that let
// the whole pipeline run without external model weights. Cross entropy is
// measured in bits per token (base-2 logs throughout).

#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "text.hpp"

namespace storysense {

struct TokenSequence {
    std::vector<std::string> tokens;
    std::string text;
};

// Whitespace split; tokens keep their original form so detokenize only
// normalizes whitespace. Scorers lowercase internally as needed.
inline TokenSequence lm_tokenize(const std::string& text) {
    return TokenSequence{split_ws(text), text};
}

inline std::string lm_detokenize(const TokenSequence& seq) {
    return join(seq.tokens, " ");
}

// CE(t1..tn) = -(1/n) * sum_i log2 p(t_i | t_1..t_{i-1}), in bits per token.
// A zero-probability token yields +inf, never NaN.
class LmScorer {
public:
    virtual ~LmScorer() = default;
    virtual size_t vocab_size() const = 0;
    virtual double cross_entropy_bits(const TokenSequence& seq) const = 0;
};

inline double cross_entropy(const LmScorer& scorer, const TokenSequence& seq) {
    if (seq.tokens.empty()) throw std::invalid_argument("cross_entropy: empty token sequence");
    return scorer.cross_entropy_bits(seq);
}

class UniformScorer final : public LmScorer {
public:
    explicit UniformScorer(size_t vocab) : vocab_(vocab) {
        if (vocab == 0) throw ConfigError("uniform scorer needs a positive vocabulary size");
    }
    size_t vocab_size() const override { return vocab_; }
    double cross_entropy_bits(const TokenSequence& seq) const override {
        if (seq.tokens.empty()) throw std::invalid_argument("cross_entropy: empty token sequence");
        double bits = std::log2(static_cast<double>(vocab_));
        double total = bits * static_cast<double>(seq.tokens.size());
        return total / static_cast<double>(seq.tokens.size());
    }

private:
    size_t vocab_;
};

// Add-one smoothed n-gram scorer over lowercased whitespace tokens. Contexts
// at sequence start are padded with BOS; unknown words map to UNK, so every
// sequence has finite cross entropy.
class NgramLm final : public LmScorer {
public:
    NgramLm(const std::vector<std::string>& train_texts, int order) : order_(order) {
        if (order < 1) throw ConfigError("n-gram order must be >= 1");
        if (train_texts.empty()) throw FatalError("n-gram LM needs a non-empty training corpus");
        for (const auto& text : train_texts) {
            for (const auto& tok : word_tokens(text)) {
                auto it = vocab_.find(tok);
                if (it == vocab_.end()) vocab_.emplace(tok, static_cast<int>(vocab_.size()) + kFirstWordId);
            }
        }
        for (const auto& text : train_texts) {
            auto ids = encode(text);
            std::vector<int> padded(static_cast<size_t>(order_ - 1), kBosId);
            padded.insert(padded.end(), ids.begin(), ids.end());
            for (size_t i = 0; i < ids.size(); ++i) {
                std::string ctx = pack(padded, i, static_cast<size_t>(order_ - 1));
                ctx_count_[ctx]++;
                ctx_tok_count_[ctx + pack_id(padded[i + static_cast<size_t>(order_ - 1)])]++;
            }
        }
    }

    size_t vocab_size() const override { return vocab_.size() + 1; }  // + UNK

    // p(token | context) with the context truncated to the last order-1 tokens.
    double prob(const std::vector<std::string>& context, const std::string& token) const {
        std::vector<int> ids;
        size_t need = static_cast<size_t>(order_ - 1);
        ids.reserve(need + 1);
        if (context.size() < need)
            ids.assign(need - context.size(), kBosId);
        for (size_t i = context.size() > need ? context.size() - need : 0; i < context.size(); ++i)
            ids.push_back(lookup(context[i]));
        ids.push_back(lookup(token));
        std::string ctx = pack(ids, 0, need);
        auto ci = ctx_count_.find(ctx);
        int64_t ctx_total = ci == ctx_count_.end() ? 0 : ci->second;
        auto ti = ctx_tok_count_.find(ctx + pack_id(ids[need]));
        int64_t tok_count = ti == ctx_tok_count_.end() ? 0 : ti->second;
        double v = static_cast<double>(vocab_size());
        return (static_cast<double>(tok_count) + 1.0) / (static_cast<double>(ctx_total) + v);
    }

    double log2_prob(const std::vector<std::string>& context, const std::string& token) const {
        return std::log2(prob(context, token));
    }

    double cross_entropy_bits(const TokenSequence& seq) const override {
        if (seq.tokens.empty()) throw std::invalid_argument("cross_entropy: empty token sequence");
        std::vector<std::string> lowered;
        lowered.reserve(seq.tokens.size());
        for (const auto& t : seq.tokens) lowered.push_back(to_lower(t));
        double total = 0.0;
        std::vector<std::string> context;
        for (const auto& tok : lowered) {
            double p = prob(context, tok);
            if (p <= 0.0) return std::numeric_limits<double>::infinity();
            total += -std::log2(p);
            context.push_back(tok);
        }
        return total / static_cast<double>(lowered.size());
    }

private:
    static constexpr int kUnkId = 0;
    static constexpr int kBosId = 1;
    static constexpr int kFirstWordId = 2;

    int lookup(const std::string& tok) const {
        auto it = vocab_.find(to_lower(tok));
        return it == vocab_.end() ? kUnkId : it->second;
    }

    static std::string pack_id(int id) {
        std::string s(sizeof(int), '\0');
        std::memcpy(s.data(), &id, sizeof(int));
        return s;
    }

    static std::string pack(const std::vector<int>& ids, size_t start, size_t len) {
        std::string s(len * sizeof(int), '\0');
        if (len) std::memcpy(s.data(), ids.data() + start, len * sizeof(int));
        return s;
    }

    std::vector<int> encode(const std::string& text) const {
        std::vector<int> ids;
        for (const auto& tok : word_tokens(text)) ids.push_back(lookup(tok));
        return ids;
    }

    int order_;
    std::unordered_map<std::string, int> vocab_;
    std::unordered_map<std::string, int64_t> ctx_count_;
    std::unordered_map<std::string, int64_t> ctx_tok_count_;
};

// Stand-in for a trained transformer scorer.
inline NgramLm reference_tiny_lm(const std::vector<std::string>& train_texts, int order) {
    return NgramLm(train_texts, order);
}

} // namespace storysense
