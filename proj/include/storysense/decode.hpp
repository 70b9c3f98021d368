#pragma once
// Beam-search decoding. Candidates are pruned on cumulative log probability;
// finished hypotheses are ranked by length-normalized log probability. At
// most max_decode_len new tokens, generation stops at the end-of-text token,
// PAD is never emitted. Beam 1 reproduces greedy decoding token for token.
//
// Decoding a story walks sentences in order and dimensions in enum order.
// The memory variant appends each pair's top hypothesis to the bank before
// the next pair; the bank starts empty and is only consulted once it holds
// at least one inference.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "kb.hpp"
#include "memory.hpp"
#include "model.hpp"
#include "vocab.hpp"

namespace storysense {

struct BeamHypothesis {
    std::vector<int> ids;  // generated tokens, eos excluded
    double log_prob = 0.0;
    bool finished = false;
    bool length_truncated = false;  // hit max length without eos

    double normalized_score() const {
        return log_prob / static_cast<double>(std::max<size_t>(1, ids.size() + (finished ? 1 : 0)));
    }
};

inline std::vector<BeamHypothesis> beam_search(TransformerModel& model,
                                               const std::vector<int>& prefix,
                                               size_t beam, size_t max_new_tokens,
                                               const MemoryBank* bank = nullptr) {
    if (beam == 0) throw ConfigError("beam size must be positive");
    const auto& vocab = model.vocab;
    std::vector<BeamHypothesis> active(1);
    std::vector<BeamHypothesis> finished;

    for (size_t step = 0; step < max_new_tokens && !active.empty(); ++step) {
        if (finished.size() >= beam) break;
        struct Expansion {
            size_t parent;
            int token;
            double log_prob;
        };
        std::vector<Expansion> expansions;
        for (size_t hi = 0; hi < active.size(); ++hi) {
            std::vector<int> ids = prefix;
            ids.insert(ids.end(), active[hi].ids.begin(), active[hi].ids.end());
            auto log_probs = model.next_token_log_probs(ids, bank);
            for (size_t tok = 0; tok < log_probs.size(); ++tok) {
                if (static_cast<int>(tok) == vocab.pad_id) continue;
                expansions.push_back(
                    {hi, static_cast<int>(tok), active[hi].log_prob + log_probs[tok]});
            }
        }
        // cumulative log-prob ordering; ties resolved by parent then token id
        // so beam 1 matches a strictly-greater argmax
        std::stable_sort(expansions.begin(), expansions.end(), [](const Expansion& a, const Expansion& b) {
            if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
            if (a.parent != b.parent) return a.parent < b.parent;
            return a.token < b.token;
        });
        // only the top (beam - finished) expansions survive; an eos expansion
        // retires its slot, so beam 1 follows the greedy argmax exactly
        size_t take = std::min(expansions.size(), beam - finished.size());
        std::vector<BeamHypothesis> next;
        for (size_t e = 0; e < take; ++e) {
            BeamHypothesis h = active[expansions[e].parent];
            h.log_prob = expansions[e].log_prob;
            if (expansions[e].token == vocab.eos_id) {
                h.finished = true;
                finished.push_back(std::move(h));
            } else {
                h.ids.push_back(expansions[e].token);
                next.push_back(std::move(h));
            }
        }
        active = std::move(next);
    }
    // beam exhausted without eos: keep length-truncated hypotheses, flagged
    for (auto& h : active) {
        h.length_truncated = true;
        finished.push_back(std::move(h));
    }
    std::stable_sort(finished.begin(), finished.end(), [](const BeamHypothesis& a, const BeamHypothesis& b) {
        double na = a.normalized_score(), nb = b.normalized_score();
        if (na != nb) return na > nb;
        return a.ids < b.ids;
    });
    if (finished.size() > beam) finished.resize(beam);
    return finished;
}

struct DecodedInference {
    std::string story_id;
    int sentence_idx = 0;
    Dim dim = Dim::xIntent;
    std::vector<std::string> beam;  // ranked hypothesis texts
    std::vector<double> scores;     // length-normalized log probs
    bool any_length_truncated = false;
};

// All (sentence, dimension) pairs of one story: T x 9 outputs.
inline std::vector<DecodedInference> decode_story(TransformerModel& model, const Story& story,
                                                  EncodeStats* stats = nullptr) {
    const auto& cfg = model.cfg;
    const auto& vocab = model.vocab;
    if (story.sentences.empty()) throw std::invalid_argument("decode_story: empty story");
    if (static_cast<int>(story.sentences.size()) > vocab.window)
        throw std::invalid_argument("decode_story: story longer than the model window; truncate first");
    if (cfg.context_len <= cfg.max_decode_len + 3)
        throw ConfigError("context length too small for decoding budget");

    bool use_memory = cfg.variant == ModelVariant::memory &&
                      cfg.memory_mode == MemoryMode::train_and_decode;
    MemoryBank bank(cfg.memory_len, 0, vocab.pad_id);  // dynamic size while decoding

    std::vector<DecodedInference> out;
    for (int i = 0; i < static_cast<int>(story.sentences.size()); ++i) {
        for (Dim d : kAllDims) {
            auto prefix = encode_input(story, i, d, vocab, cfg.context_len - cfg.max_decode_len, stats);
            // memory is initially empty; consult it only once something is in it
            const MemoryBank* bank_ptr = (use_memory && bank.occupancy() > 0) ? &bank : nullptr;
            auto hyps = beam_search(model, prefix, cfg.beam, cfg.max_decode_len, bank_ptr);
            DecodedInference rec;
            rec.story_id = story.id;
            rec.sentence_idx = i;
            rec.dim = d;
            for (const auto& h : hyps) {
                rec.beam.push_back(vocab.decode(h.ids));
                rec.scores.push_back(h.normalized_score());
                rec.any_length_truncated |= h.length_truncated;
            }
            if (use_memory && !hyps.empty()) bank.push(hyps.front().ids);
            out.push_back(std::move(rec));
        }
    }
    return out;
}

} // namespace storysense
