#pragma once
// Silver supervision pipeline: discourse-agnostic candidate inferences per
// sentence (heuristic phrase matching or a sentence-level generator), scored
// for narrative coherence by language-model cross entropy, then filtered to
// the top 5 per sentence and dimension. Lower cross entropy = more coherent.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "chunker.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "kb.hpp"
#include "lm.hpp"
#include "adapters.hpp"
#include "text.hpp"

namespace storysense {

enum class CandidateSource { heuristic, model };

inline const char* candidate_source_name(CandidateSource s) {
    return s == CandidateSource::heuristic ? "heuristic" : "model";
}

struct Candidate {
    std::string story_id;
    int sentence_idx = 0;
    Dim dim = Dim::xIntent;
    std::string inference;  // raw tail, untemplated
    CandidateSource source = CandidateSource::heuristic;
    double match_score = 0.0;  // heuristic: ROUGE-1 F1 of head vs sentence
    int rank = -1;             // model: beam rank
    double coherence_ce = std::numeric_limits<double>::quiet_NaN();
    bool scored = false;
    bool score_failed = false;
};

inline nlohmann::json candidate_to_json(const Candidate& c) {
    nlohmann::json j;
    j["story_id"] = c.story_id;
    j["sentence_idx"] = c.sentence_idx;
    j["dim"] = dim_name(c.dim);
    j["inference"] = c.inference;
    j["source"] = candidate_source_name(c.source);
    if (c.source == CandidateSource::heuristic) j["match_score"] = c.match_score;
    else j["rank"] = c.rank;
    if (c.scored && std::isfinite(c.coherence_ce)) j["coherence_ce"] = c.coherence_ce;
    return j;
}

inline Candidate candidate_from_json(const nlohmann::json& j) {
    Candidate c;
    c.story_id = j.at("story_id").get<std::string>();
    c.sentence_idx = j.at("sentence_idx").get<int>();
    auto d = dim_from_name(j.at("dim").get<std::string>());
    if (!d) throw FatalError("unknown dimension in candidate record: " + j.at("dim").get<std::string>());
    c.dim = *d;
    c.inference = j.at("inference").get<std::string>();
    c.source = j.at("source").get<std::string>() == "model" ? CandidateSource::model
                                                            : CandidateSource::heuristic;
    if (j.contains("match_score")) c.match_score = j["match_score"].get<double>();
    if (j.contains("rank")) c.rank = j["rank"].get<int>();
    if (j.contains("coherence_ce")) {
        c.coherence_ce = j["coherence_ce"].get<double>();
        c.scored = true;
    }
    return c;
}

// Candidate pool for one sentence: triples whose head shares at least one
// noun/verb phrase with the sentence, ranked per dimension by ROUGE-1 F1 of
// the head against the sentence. Ties keep knowledge-base order.
inline std::vector<Candidate> heuristic_candidates(const Story& story, int sentence_idx,
                                                   const KnowledgeBase& kb,
                                                   const PhraseChunker& chunker, size_t top_n,
                                                   PhraseCache* cache = nullptr) {
    if (sentence_idx < 0 || static_cast<size_t>(sentence_idx) >= story.sentences.size())
        throw std::invalid_argument("heuristic_candidates: sentence index out of range");
    const auto& sentence = story.sentences[static_cast<size_t>(sentence_idx)];
    auto phrases = cache ? cache->get_or_compute(sentence, chunker) : chunker.phrases(sentence);

    std::vector<size_t> pool;
    {
        std::unordered_set<size_t> seen;
        for (const auto& p : phrases) {
            auto key = normalize_ws(to_lower(p));
            auto it = kb.phrase_index.find(key);
            if (it == kb.phrase_index.end()) continue;
            for (size_t idx : it->second)
                if (seen.insert(idx).second) pool.push_back(idx);
        }
    }
    std::sort(pool.begin(), pool.end());

    std::array<std::vector<std::pair<double, size_t>>, kNumDims> per_dim;
    for (size_t idx : pool) {
        double f1 = rouge1_f1(kb.triples[idx].head, sentence);
        per_dim[static_cast<size_t>(kb.triples[idx].dim)].emplace_back(f1, idx);
    }
    std::vector<Candidate> out;
    for (Dim d : kAllDims) {
        auto& scored = per_dim[static_cast<size_t>(d)];
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        size_t keep = std::min(top_n, scored.size());
        for (size_t i = 0; i < keep; ++i) {
            Candidate c;
            c.story_id = story.id;
            c.sentence_idx = sentence_idx;
            c.dim = d;
            c.inference = kb.triples[scored[i].second].tail;
            c.source = CandidateSource::heuristic;
            c.match_score = scored[i].first;
            out.push_back(std::move(c));
        }
    }
    return out;
}

// Generator-backed candidates: up to `beam` ranked inferences per dimension.
// A failing dimension is logged and left empty; the others proceed.
inline std::vector<Candidate> model_candidates(const Story& story, int sentence_idx,
                                               const SentenceInferenceGenerator& generator,
                                               int beam,
                                               std::vector<std::string>* errors = nullptr) {
    if (sentence_idx < 0 || static_cast<size_t>(sentence_idx) >= story.sentences.size())
        throw std::invalid_argument("model_candidates: sentence index out of range");
    const auto& sentence = story.sentences[static_cast<size_t>(sentence_idx)];
    std::vector<Candidate> out;
    for (Dim d : kAllDims) {
        std::vector<std::string> tails;
        try {
            tails = generator.generate(sentence, d, beam);
        } catch (const std::exception& e) {
            if (errors)
                errors->push_back(std::string("generator failed for ") + dim_name(d) + ": " + e.what());
            continue;
        }
        std::unordered_set<std::string> seen;
        int rank = 0;
        for (const auto& tail : tails) {
            if (trim(tail).empty() || !seen.insert(tail).second) continue;
            if (rank >= beam) break;
            Candidate c;
            c.story_id = story.id;
            c.sentence_idx = sentence_idx;
            c.dim = d;
            c.inference = tail;
            c.source = CandidateSource::model;
            c.rank = rank++;
            out.push_back(std::move(c));
        }
    }
    return out;
}

// Scoring context for CE(S_1...S_i, <d,e2>, ...S_T). Cause dimensions see the
// previous and current sentences plus the templated inference; effect
// dimensions see the full story with the inference inserted after S_i.
inline std::string coherence_context(const Story& story, int sentence_idx, Dim dim,
                                     const std::string& templated_inference) {
    if (sentence_idx < 0 || static_cast<size_t>(sentence_idx) >= story.sentences.size())
        throw std::invalid_argument("coherence_context: sentence index out of range");
    std::string out;
    for (int i = 0; i <= sentence_idx; ++i) {
        if (i) out += ' ';
        out += story.sentences[static_cast<size_t>(i)];
    }
    out += ' ';
    out += templated_inference;
    if (dim_group(dim) == DimGroup::effect) {
        for (size_t i = static_cast<size_t>(sentence_idx) + 1; i < story.sentences.size(); ++i) {
            out += ' ';
            out += story.sentences[i];
        }
    }
    return out;
}

// Sets coherence_ce on every candidate. Batching is a throughput contract
// only; scores are independent of batch size. Returns the number of scoring
// failures (flagged candidates that filtering will skip).
inline size_t score_candidates(std::vector<Candidate>& candidates, const Story& story,
                               const LmScorer& scorer, size_t batch = 130,
                               const TemplateTable& templates = standard_templates()) {
    if (batch == 0) throw ConfigError("scoring batch size must be positive");
    size_t failures = 0;
    for (size_t begin = 0; begin < candidates.size(); begin += batch) {
        size_t end = std::min(candidates.size(), begin + batch);
        for (size_t i = begin; i < end; ++i) {
            auto& c = candidates[i];
            try {
                auto templated = render_template(c.dim, c.inference, templates);
                auto context = coherence_context(story, c.sentence_idx, c.dim, templated);
                c.coherence_ce = cross_entropy(scorer, lm_tokenize(context));
                c.scored = true;
            } catch (const std::exception&) {
                c.score_failed = true;
                ++failures;
            }
        }
    }
    return failures;
}

// Keep the k most coherent (lowest CE) candidates per (story, sentence,
// dimension), ties resolved by input order. Unscored or failed candidates are
// dropped. Output keys are sorted; records within a key ascend by CE.
inline std::vector<Candidate> filter_top_k(const std::vector<Candidate>& candidates, size_t k) {
    using Key = std::tuple<std::string, int, int>;
    std::map<Key, std::vector<size_t>> groups;
    for (size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (!c.scored || c.score_failed) continue;
        groups[Key(c.story_id, c.sentence_idx, static_cast<int>(c.dim))].push_back(i);
    }
    std::vector<Candidate> out;
    for (auto& [key, idxs] : groups) {
        (void)key;
        std::stable_sort(idxs.begin(), idxs.end(), [&](size_t a, size_t b) {
            return candidates[a].coherence_ce < candidates[b].coherence_ce;
        });
        size_t keep = std::min(k, idxs.size());
        for (size_t i = 0; i < keep; ++i) out.push_back(candidates[idxs[i]]);
    }
    return out;
}

enum class SupervisionMode { heuristic, model, both };

inline const char* supervision_mode_name(SupervisionMode m) {
    switch (m) {
        case SupervisionMode::heuristic: return "heuristic";
        case SupervisionMode::model: return "model";
        default: return "both";
    }
}

inline std::optional<SupervisionMode> supervision_mode_from_name(const std::string& s) {
    if (s == "heuristic") return SupervisionMode::heuristic;
    if (s == "model") return SupervisionMode::model;
    if (s == "both") return SupervisionMode::both;
    return std::nullopt;
}

struct SupervisionConfig {
    SupervisionMode mode = SupervisionMode::heuristic;
    size_t top_n = 10;   // candidates kept per sentence/dimension before scoring
    size_t keep = 5;     // survivors per sentence/dimension after scoring
    size_t batch = 130;  // scoring batch size
    size_t workers = 1;
};

struct SilverBuildStats {
    size_t stories = 0;
    size_t heuristic_candidates = 0;
    size_t model_candidates = 0;
    size_t scored = 0;
    size_t score_failures = 0;
    size_t kept = 0;
    std::vector<std::string> generator_errors;
};

struct SilverDataset {
    std::vector<Candidate> records;
    std::string config_hash;
    uint64_t seed = 0;
    SupervisionConfig config;
};

// Full pipeline over a story set. Stories are independent work units;
// results are gathered by story index and then sorted, so the output is
// identical for any worker count.
inline SilverDataset build_supervision(const std::vector<Story>& stories, const KnowledgeBase& kb,
                                       const PhraseChunker& chunker,
                                       const SentenceInferenceGenerator* generator,
                                       const LmScorer& scorer, const SupervisionConfig& config,
                                       uint64_t seed, const std::string& config_hash,
                                       SilverBuildStats* stats = nullptr,
                                       PhraseCache* cache = nullptr,
                                       const TemplateTable& templates = standard_templates()) {
    bool want_heuristic = config.mode != SupervisionMode::model;
    bool want_model = config.mode != SupervisionMode::heuristic;
    if (want_model && !generator)
        throw ConfigError("supervision mode requires a sentence-level generator");
    if (want_heuristic && kb.phrase_index.empty() && !kb.triples.empty())
        throw ConfigError("knowledge base has no phrase index; run index_phrases first");

    std::vector<std::vector<Candidate>> per_story(stories.size());
    std::vector<SilverBuildStats> per_story_stats(stories.size());

    auto process_story = [&](size_t si) {
        const Story& story = stories[si];
        auto& st = per_story_stats[si];
        std::vector<Candidate> pool;
        for (int i = 0; i < static_cast<int>(story.sentences.size()); ++i) {
            if (want_heuristic) {
                auto h = heuristic_candidates(story, i, kb, chunker, config.top_n, cache);
                st.heuristic_candidates += h.size();
                pool.insert(pool.end(), h.begin(), h.end());
            }
            if (want_model) {
                auto m = model_candidates(story, i, *generator, static_cast<int>(config.top_n),
                                          &st.generator_errors);
                st.model_candidates += m.size();
                pool.insert(pool.end(), m.begin(), m.end());
            }
        }
        st.score_failures += score_candidates(pool, story, scorer, config.batch, templates);
        st.scored += pool.size() - st.score_failures;
        per_story[si] = filter_top_k(pool, config.keep);
        st.kept += per_story[si].size();
    };

    size_t workers = std::max<size_t>(1, config.workers);
    if (workers == 1 || stories.size() <= 1) {
        for (size_t si = 0; si < stories.size(); ++si) process_story(si);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> threads;
        for (size_t w = 0; w < std::min(workers, stories.size()); ++w) {
            threads.emplace_back([&]() {
                while (true) {
                    size_t si = next.fetch_add(1);
                    if (si >= stories.size()) break;
                    process_story(si);
                }
            });
        }
        for (auto& t : threads) t.join();
    }

    SilverDataset silver;
    silver.seed = seed;
    silver.config = config;
    silver.config_hash = config_hash;
    for (auto& recs : per_story)
        silver.records.insert(silver.records.end(), recs.begin(), recs.end());
    std::stable_sort(silver.records.begin(), silver.records.end(),
                     [](const Candidate& a, const Candidate& b) {
                         if (a.story_id != b.story_id) return a.story_id < b.story_id;
                         if (a.sentence_idx != b.sentence_idx) return a.sentence_idx < b.sentence_idx;
                         if (a.dim != b.dim) return static_cast<int>(a.dim) < static_cast<int>(b.dim);
                         return a.coherence_ce < b.coherence_ce;
                     });
    if (stats) {
        stats->stories = stories.size();
        for (const auto& st : per_story_stats) {
            stats->heuristic_candidates += st.heuristic_candidates;
            stats->model_candidates += st.model_candidates;
            stats->scored += st.scored;
            stats->score_failures += st.score_failures;
            stats->kept += st.kept;
            stats->generator_errors.insert(stats->generator_errors.end(),
                                           st.generator_errors.begin(), st.generator_errors.end());
        }
    }
    return silver;
}

// JSONL with a header line carrying the config hash and provenance.
inline void save_silver(const SilverDataset& silver, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("cannot write silver dataset: " + path);
    nlohmann::json header;
    header["config_hash"] = silver.config_hash;
    header["seed"] = silver.seed;
    header["mode"] = supervision_mode_name(silver.config.mode);
    header["top_n"] = silver.config.top_n;
    header["keep"] = silver.config.keep;
    header["batch"] = silver.config.batch;
    out << header.dump() << "\n";
    for (const auto& c : silver.records) out << candidate_to_json(c).dump() << "\n";
}

inline SilverDataset load_silver(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open silver dataset: " + path);
    SilverDataset silver;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw FatalError("malformed silver record: " + line);
        if (first && j.contains("config_hash") && !j.contains("story_id")) {
            silver.config_hash = j["config_hash"].get<std::string>();
            if (j.contains("seed")) silver.seed = j["seed"].get<uint64_t>();
            if (j.contains("mode"))
                if (auto m = supervision_mode_from_name(j["mode"].get<std::string>())) silver.config.mode = *m;
            if (j.contains("top_n")) silver.config.top_n = j["top_n"].get<size_t>();
            if (j.contains("keep")) silver.config.keep = j["keep"].get<size_t>();
            if (j.contains("batch")) silver.config.batch = j["batch"].get<size_t>();
            first = false;
            continue;
        }
        first = false;
        silver.records.push_back(candidate_from_json(j));
    }
    return silver;
}

} // namespace storysense
