#pragma once
// Pluggable model interfaces (sentence-level inference generation, text
// embedding, NLI classification) with deterministic reference
// implementations, plus line-delimited JSON adapters for wrapping external
// model servers behind the same interfaces.
//
// Wire protocol (one JSON object per line, request -> response):
//   {"op":"score","text":T}                        -> {"bits_per_token":X}
//   {"op":"generate","sentence":S,"dim":D,"beam":N} -> {"inferences":[...]}
//   {"op":"embed","text":T}                        -> {"vector":[...]}
//   {"op":"nli","premise":P,"hypothesis":H}        -> {"label":"entailment"}
// Errors come back as {"error":"message"}. The transport is pluggable; any
// object that can send a request line and return the response line works.

#include <algorithm>
#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "kb.hpp"
#include "lm.hpp"
#include "text.hpp"

namespace storysense {

// ---------------------------------------------------------------------------
// Interfaces

class SentenceInferenceGenerator {
public:
    virtual ~SentenceInferenceGenerator() = default;
    // Ranked distinct inference tails for one sentence and dimension, at most
    // `beam` of them.
    virtual std::vector<std::string> generate(const std::string& sentence, Dim dim, int beam) const = 0;
};

class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    virtual size_t dim() const = 0;
    virtual std::vector<double> embed(const std::string& text) const = 0;
    virtual std::string id() const = 0;
};

enum class NliLabel { entailment, neutral, contradiction };

inline const char* nli_label_name(NliLabel l) {
    switch (l) {
        case NliLabel::entailment: return "entailment";
        case NliLabel::neutral: return "neutral";
        default: return "contradiction";
    }
}

inline std::optional<NliLabel> nli_label_from_name(const std::string& name) {
    if (name == "entailment") return NliLabel::entailment;
    if (name == "neutral") return NliLabel::neutral;
    if (name == "contradiction") return NliLabel::contradiction;
    return std::nullopt;
}

class NliClassifier {
public:
    virtual ~NliClassifier() = default;
    virtual NliLabel classify(const std::string& premise, const std::string& hypothesis) const = 0;
};

// ---------------------------------------------------------------------------
// Reference implementations

// Retrieval-backed generator: returns the top-beam KB tails of the requested
// dimension whose heads best ROUGE-1-match the sentence. Exercises the
// model-based supervision path without neural weights.
class RetrievalGenerator final : public SentenceInferenceGenerator {
public:
    explicit RetrievalGenerator(const KnowledgeBase& kb) : kb_(&kb) {
        by_dim_.resize(kNumDims);
        for (size_t i = 0; i < kb.triples.size(); ++i)
            by_dim_[static_cast<size_t>(kb.triples[i].dim)].push_back(i);
    }

    std::vector<std::string> generate(const std::string& sentence, Dim dim, int beam) const override {
        if (beam <= 0) return {};
        const auto& idxs = by_dim_[static_cast<size_t>(dim)];
        std::vector<std::pair<double, size_t>> scored;
        scored.reserve(idxs.size());
        for (size_t idx : idxs)
            scored.emplace_back(rouge1_f1(kb_->triples[idx].head, sentence), idx);
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::vector<std::string> out;
        std::unordered_set<std::string> seen;
        for (const auto& [score, idx] : scored) {
            (void)score;
            const auto& tail = kb_->triples[idx].tail;
            if (!seen.insert(tail).second) continue;
            out.push_back(tail);
            if (out.size() == static_cast<size_t>(beam)) break;
        }
        return out;
    }

private:
    const KnowledgeBase* kb_;
    std::vector<std::vector<size_t>> by_dim_;
};

// Hashed bag-of-words embedding; deterministic stand-in for a sentence encoder.
class HashEmbedder final : public TextEmbedder {
public:
    explicit HashEmbedder(size_t dim = 256) : dim_(dim) {
        if (dim == 0) throw ConfigError("embedding dimension must be positive");
    }
    size_t dim() const override { return dim_; }
    std::vector<double> embed(const std::string& text) const override {
        std::vector<double> v(dim_, 0.0);
        for (const auto& tok : word_tokens(text)) {
            uint64_t h = fnv1a64(tok);
            size_t slot = static_cast<size_t>(h % dim_);
            v[slot] += ((h >> 32) & 1) ? 1.0 : -1.0;
        }
        return v;
    }
    std::string id() const override { return "hashbow-" + std::to_string(dim_); }

private:
    size_t dim_;
};

class FixedNli final : public NliClassifier {
public:
    explicit FixedNli(NliLabel label) : label_(label) {}
    NliLabel classify(const std::string&, const std::string&) const override { return label_; }

private:
    NliLabel label_;
};

// Toy lexical-overlap NLI stand-in: high content-word overlap with matching
// polarity reads as entailment, matching content with flipped negation as
// contradiction, anything else as neutral.
class OverlapNli final : public NliClassifier {
public:
    NliLabel classify(const std::string& premise, const std::string& hypothesis) const override {
        auto p = content_words(premise);
        auto h = content_words(hypothesis);
        if (h.empty() || p.empty()) return NliLabel::neutral;
        size_t shared = 0;
        for (const auto& w : h)
            if (p.count(w)) ++shared;
        double overlap = static_cast<double>(shared) / static_cast<double>(h.size());
        bool pn = has_negation(premise), hn = has_negation(hypothesis);
        if (overlap >= 0.6 && pn != hn) return NliLabel::contradiction;
        if (overlap >= 0.75) return NliLabel::entailment;
        return NliLabel::neutral;
    }

private:
    static bool has_negation(const std::string& text) {
        for (const auto& t : word_tokens(text))
            if (t == "not" || t == "never" || t == "no" || t == "n't" ||
                (t.size() > 3 && t.compare(t.size() - 3, 3, "n't") == 0))
                return true;
        return false;
    }
    static std::unordered_set<std::string> content_words(const std::string& text) {
        static const std::unordered_set<std::string> kStop = {
            "a", "an", "the", "they", "to", "of", "in", "is", "are", "was",
            "were", "be", "and", "or", "then", "as", "at", "it", "he", "she"};
        std::unordered_set<std::string> out;
        for (auto& t : word_tokens(text)) {
            std::string clean;
            for (char c : t)
                if (std::isalnum(static_cast<unsigned char>(c))) clean += c;
            if (!clean.empty() && !kStop.count(clean)) out.insert(clean);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Remote adapters

class LineTransport {
public:
    virtual ~LineTransport() = default;
    // Send one request line, return the matching response line.
    virtual std::string roundtrip(const std::string& request_line) = 0;
};

class CallbackTransport final : public LineTransport {
public:
    explicit CallbackTransport(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
    std::string roundtrip(const std::string& request_line) override { return fn_(request_line); }

private:
    std::function<std::string(const std::string&)> fn_;
};

namespace wire {

inline nlohmann::json parse_response(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw FatalError("malformed model-server response: " + line);
    if (j.contains("error"))
        throw FatalError("model server error: " + j["error"].get<std::string>());
    return j;
}

inline std::string score_request(const std::string& text) {
    nlohmann::json j;
    j["op"] = "score";
    j["text"] = text;
    return j.dump();
}

inline std::string generate_request(const std::string& sentence, Dim dim, int beam) {
    nlohmann::json j;
    j["op"] = "generate";
    j["sentence"] = sentence;
    j["dim"] = dim_name(dim);
    j["beam"] = beam;
    return j.dump();
}

inline std::string embed_request(const std::string& text) {
    nlohmann::json j;
    j["op"] = "embed";
    j["text"] = text;
    return j.dump();
}

inline std::string nli_request(const std::string& premise, const std::string& hypothesis) {
    nlohmann::json j;
    j["op"] = "nli";
    j["premise"] = premise;
    j["hypothesis"] = hypothesis;
    return j.dump();
}

} // namespace wire

class RemoteScorer final : public LmScorer {
public:
    RemoteScorer(LineTransport& transport, size_t vocab) : transport_(&transport), vocab_(vocab) {}
    size_t vocab_size() const override { return vocab_; }
    double cross_entropy_bits(const TokenSequence& seq) const override {
        if (seq.tokens.empty()) throw std::invalid_argument("cross_entropy: empty token sequence");
        auto text = seq.text.empty() ? lm_detokenize(seq) : seq.text;
        auto j = wire::parse_response(transport_->roundtrip(wire::score_request(text)));
        if (!j.contains("bits_per_token") || !j["bits_per_token"].is_number())
            throw FatalError("score response missing bits_per_token");
        return j["bits_per_token"].get<double>();
    }

private:
    LineTransport* transport_;
    size_t vocab_;
};

class RemoteGenerator final : public SentenceInferenceGenerator {
public:
    explicit RemoteGenerator(LineTransport& transport) : transport_(&transport) {}
    std::vector<std::string> generate(const std::string& sentence, Dim dim, int beam) const override {
        auto j = wire::parse_response(transport_->roundtrip(wire::generate_request(sentence, dim, beam)));
        if (!j.contains("inferences") || !j["inferences"].is_array())
            throw FatalError("generate response missing inferences");
        std::vector<std::string> out;
        std::unordered_set<std::string> seen;
        for (const auto& item : j["inferences"]) {
            if (!item.is_string()) throw FatalError("generate response has a non-string inference");
            auto s = item.get<std::string>();
            if (!seen.insert(s).second) continue;
            out.push_back(s);
            if (out.size() == static_cast<size_t>(std::max(beam, 0))) break;
        }
        return out;
    }

private:
    LineTransport* transport_;
};

class RemoteEmbedder final : public TextEmbedder {
public:
    RemoteEmbedder(LineTransport& transport, size_t dim, std::string ident = "remote")
        : transport_(&transport), dim_(dim), id_(std::move(ident)) {}
    size_t dim() const override { return dim_; }
    std::vector<double> embed(const std::string& text) const override {
        auto j = wire::parse_response(transport_->roundtrip(wire::embed_request(text)));
        if (!j.contains("vector") || !j["vector"].is_array())
            throw FatalError("embed response missing vector");
        auto v = j["vector"].get<std::vector<double>>();
        if (v.size() != dim_)
            throw FatalError("embed response has dimension " + std::to_string(v.size()) +
                             ", expected " + std::to_string(dim_));
        return v;
    }
    std::string id() const override { return id_; }

private:
    LineTransport* transport_;
    size_t dim_;
    std::string id_;
};

class RemoteNli final : public NliClassifier {
public:
    explicit RemoteNli(LineTransport& transport) : transport_(&transport) {}
    NliLabel classify(const std::string& premise, const std::string& hypothesis) const override {
        auto j = wire::parse_response(transport_->roundtrip(wire::nli_request(premise, hypothesis)));
        if (!j.contains("label") || !j["label"].is_string())
            throw FatalError("nli response missing label");
        auto l = nli_label_from_name(j["label"].get<std::string>());
        if (!l) throw FatalError("unknown nli label: " + j["label"].get<std::string>());
        return *l;
    }

private:
    LineTransport* transport_;
};

} // namespace storysense
