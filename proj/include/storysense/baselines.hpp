#pragma once
// Reference comparison systems: nearest-neighbor retrieval over embedded KB
// events (brute-force cosine scan) and a sentence-level generator applied to
// each sentence independently of the rest of the story.

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adapters.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "kb.hpp"
#include "memory.hpp"
#include "supervision.hpp"

namespace storysense {

struct EmbeddedIndex {
    std::vector<std::string> events;               // unique heads, kb order
    std::vector<std::vector<double>> vectors;
    uint64_t embedder_hash = 0;
};

// Embeds each unique head event once. Deterministic.
inline EmbeddedIndex build_index(const KnowledgeBase& kb, const TextEmbedder& embedder) {
    EmbeddedIndex index;
    index.embedder_hash = fnv1a64(embedder.id());
    for (const auto& head : kb.events) {
        auto vec = embedder.embed(head);
        if (vec.size() != embedder.dim()) throw FatalError("embedder returned a wrong-size vector");
        for (double x : vec)
            if (!std::isfinite(x)) throw FatalError("embedder returned a non-finite vector");
        index.events.push_back(head);
        index.vectors.push_back(std::move(vec));
    }
    return index;
}

// Top-k nearest events by cosine, ties to the lower index.
inline std::vector<size_t> knn_events(const std::string& sentence, const EmbeddedIndex& index,
                                      const TextEmbedder& embedder, size_t k) {
    if (index.events.empty()) throw FatalError("knn: empty index");
    return top_k_rows_by_cosine(embedder.embed(sentence), index.vectors, k);
}

// All triples of the k nearest event(s), as candidates across dimensions.
// match_score carries the cosine similarity of the selected event.
inline std::vector<Candidate> knn_inferences(const std::string& sentence, const EmbeddedIndex& index,
                                             const KnowledgeBase& kb, const TextEmbedder& embedder,
                                             size_t k = 1) {
    auto query = embedder.embed(sentence);
    auto picked = top_k_rows_by_cosine(query, index.vectors, k);
    std::vector<Candidate> out;
    for (size_t ei : picked) {
        double sim = cosine_similarity(query, index.vectors[ei]);
        for (size_t ti : kb.triples_for_head(index.events[ei])) {
            Candidate c;
            c.sentence_idx = 0;
            c.dim = kb.triples[ti].dim;
            c.inference = kb.triples[ti].tail;
            c.source = CandidateSource::heuristic;
            c.match_score = sim;
            out.push_back(std::move(c));
        }
    }
    return out;
}

// Sentence-level baseline: the generator sees one sentence at a time, so the
// output for a sentence is independent of the rest of the story.
inline std::vector<Candidate> sentence_level_generate(const Story& story,
                                                      const SentenceInferenceGenerator& generator,
                                                      int beam,
                                                      std::vector<std::string>* errors = nullptr) {
    std::vector<Candidate> out;
    for (int i = 0; i < static_cast<int>(story.sentences.size()); ++i) {
        auto cands = model_candidates(story, i, generator, beam, errors);
        out.insert(out.end(), cands.begin(), cands.end());
    }
    return out;
}

inline void save_index(const EmbeddedIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("cannot write index: " + path);
    nlohmann::json header;
    header["embedder_hash"] = hex64(index.embedder_hash);
    header["count"] = index.events.size();
    out << header.dump() << "\n";
    for (size_t i = 0; i < index.events.size(); ++i) {
        nlohmann::json j;
        j["event"] = index.events[i];
        j["vector"] = index.vectors[i];
        out << j.dump() << "\n";
    }
}

} // namespace storysense
