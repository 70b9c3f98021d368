#pragma once
// Automatic metrics: corpus BLEU with brevity penalty, character-level edit
// distance ratio, novelty against the knowledge base, NLI-proxy narrative
// coherence, and the human-annotation aggregation math.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "adapters.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "kb.hpp"
#include "text.hpp"

namespace storysense {

// ---------------------------------------------------------------------------
// Edit distance

inline size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// 1 - levenshtein(a,b) / max(|a|,|b|); two empty strings are identical (1).
inline double edit_distance_ratio(std::string_view a, std::string_view b) {
    size_t mx = std::max(a.size(), b.size());
    if (mx == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(mx);
}

// ---------------------------------------------------------------------------
// BLEU

struct BleuSegment {
    std::vector<std::string> hyp;
    std::vector<std::vector<std::string>> refs;
};

namespace detail {

inline std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& toks,
                                                            size_t n) {
    std::map<std::vector<std::string>, int> counts;
    if (toks.size() < n) return counts;
    for (size_t i = 0; i + n <= toks.size(); ++i)
        counts[std::vector<std::string>(toks.begin() + static_cast<long>(i),
                                        toks.begin() + static_cast<long>(i + n))]++;
    return counts;
}

} // namespace detail

// Corpus BLEU-n: geometric mean of clipped n-gram precisions times the
// brevity penalty. Zero match counts are replaced by epsilon; the effective
// reference length is the closest reference length per segment (ties toward
// the shorter one).
inline double corpus_bleu(const std::vector<BleuSegment>& segments, int max_n,
                          double epsilon = 1e-9) {
    if (max_n < 1) throw ConfigError("bleu order must be >= 1");
    if (segments.empty()) return 0.0;
    std::vector<double> matches(static_cast<size_t>(max_n), 0.0);
    std::vector<double> totals(static_cast<size_t>(max_n), 0.0);
    double hyp_len = 0.0, ref_len = 0.0;
    for (const auto& seg : segments) {
        hyp_len += static_cast<double>(seg.hyp.size());
        if (!seg.refs.empty()) {
            size_t best = seg.refs[0].size();
            for (const auto& r : seg.refs) {
                size_t len = r.size();
                auto diff = [&](size_t l) {
                    return l > seg.hyp.size() ? l - seg.hyp.size() : seg.hyp.size() - l;
                };
                if (diff(len) < diff(best) || (diff(len) == diff(best) && len < best)) best = len;
            }
            ref_len += static_cast<double>(best);
        }
        for (int n = 1; n <= max_n; ++n) {
            auto hyp_counts = detail::ngram_counts(seg.hyp, static_cast<size_t>(n));
            std::map<std::vector<std::string>, int> max_ref;
            for (const auto& r : seg.refs)
                for (const auto& [gram, count] : detail::ngram_counts(r, static_cast<size_t>(n)))
                    max_ref[gram] = std::max(max_ref[gram], count);
            for (const auto& [gram, count] : hyp_counts) {
                totals[static_cast<size_t>(n - 1)] += count;
                auto it = max_ref.find(gram);
                if (it != max_ref.end())
                    matches[static_cast<size_t>(n - 1)] += std::min(count, it->second);
            }
        }
    }
    double log_prec = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        double m = matches[static_cast<size_t>(n - 1)];
        double h = totals[static_cast<size_t>(n - 1)];
        double p = h > 0.0 ? (m > 0.0 ? m / h : epsilon / h) : epsilon;
        log_prec += std::log(p);
    }
    log_prec /= static_cast<double>(max_n);
    if (hyp_len == 0.0) return 0.0;
    double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
    return bp * std::exp(log_prec);
}

struct EvalKey {
    std::string story_id;
    int sentence_idx = 0;
    Dim dim = Dim::xIntent;

    bool operator<(const EvalKey& o) const {
        if (story_id != o.story_id) return story_id < o.story_id;
        if (sentence_idx != o.sentence_idx) return sentence_idx < o.sentence_idx;
        return static_cast<int>(dim) < static_cast<int>(o.dim);
    }
    bool operator==(const EvalKey& o) const {
        return story_id == o.story_id && sentence_idx == o.sentence_idx && dim == o.dim;
    }
};

// Keyed corpus BLEU: every beam hypothesis of a key becomes one segment
// scored against that key's pooled references. Keys without references are
// skipped and counted. Texts are expected to be templated already.
inline double keyed_corpus_bleu(const std::map<EvalKey, std::vector<std::string>>& hyps_by_key,
                                const std::map<EvalKey, std::vector<std::string>>& refs_by_key,
                                int max_n, size_t* skipped_keys = nullptr) {
    std::vector<BleuSegment> segments;
    size_t skipped = 0;
    for (const auto& [key, hyps] : hyps_by_key) {
        auto rit = refs_by_key.find(key);
        if (rit == refs_by_key.end() || rit->second.empty()) {
            ++skipped;
            continue;
        }
        std::vector<std::vector<std::string>> refs;
        for (const auto& r : rit->second) refs.push_back(word_tokens(r));
        for (const auto& h : hyps) segments.push_back({word_tokens(h), refs});
    }
    if (skipped_keys) *skipped_keys = skipped;
    return corpus_bleu(segments, max_n);
}

// ---------------------------------------------------------------------------
// Novelty

struct NoveltyResult {
    double pct = 0.0;
    size_t novel = 0;
    size_t total = 0;
    size_t excluded_none = 0;
};

// A generated inference is novel when its maximum similarity over the
// comparison set stays below the threshold. The comparison set is the KB
// tails of the item's dimension (non-"none"), plus every head event when
// include_head_events is set. Everything is lowercased; "none" items are
// excluded from the generated side.
inline NoveltyResult novelty(const std::vector<std::pair<Dim, std::string>>& generated,
                             const KnowledgeBase& kb, double threshold = 0.95,
                             bool include_head_events = false) {
    if (generated.empty()) throw FatalError("novelty: empty generated list");
    std::array<std::vector<std::string>, kNumDims> tails_by_dim;
    for (const auto& t : kb.triples)
        if (!t.none_tail) tails_by_dim[static_cast<size_t>(t.dim)].push_back(to_lower(trim(t.tail)));
    std::vector<std::string> heads;
    if (include_head_events)
        for (const auto& h : kb.events) heads.push_back(to_lower(trim(h)));

    NoveltyResult result;
    for (const auto& [dim, raw] : generated) {
        auto text = to_lower(trim(raw));
        if (text == "none" || text.empty()) {
            result.excluded_none++;
            continue;
        }
        result.total++;
        auto similar = [&](const std::string& entry) {
            size_t mx = std::max(text.size(), entry.size());
            if (mx == 0) return true;
            size_t diff = text.size() > entry.size() ? text.size() - entry.size()
                                                     : entry.size() - text.size();
            // ratio is at most 1 - diff/mx; skip the DP when it cannot reach
            // the threshold
            if (1.0 - static_cast<double>(diff) / static_cast<double>(mx) < threshold) return false;
            return edit_distance_ratio(text, entry) >= threshold;
        };
        bool is_novel = true;
        for (const auto& entry : tails_by_dim[static_cast<size_t>(dim)]) {
            if (similar(entry)) {
                is_novel = false;
                break;
            }
        }
        if (is_novel)
            for (const auto& entry : heads) {
                if (similar(entry)) {
                    is_novel = false;
                    break;
                }
            }
        if (is_novel) result.novel++;
    }
    if (result.total == 0) throw FatalError("novelty: no scoreable generated inferences");
    result.pct = 100.0 * static_cast<double>(result.novel) / static_cast<double>(result.total);
    return result;
}

// ---------------------------------------------------------------------------
// NLI-proxy coherence

// Per-inference aggregation over per-sentence labels: contradiction if any
// sentence contradicts, else entailment if any sentence entails, else neutral.
inline NliLabel aggregate_nli_labels(const std::vector<NliLabel>& per_sentence) {
    if (per_sentence.empty()) throw std::invalid_argument("aggregate_nli_labels: empty input");
    bool any_entail = false;
    for (auto l : per_sentence) {
        if (l == NliLabel::contradiction) return NliLabel::contradiction;
        if (l == NliLabel::entailment) any_entail = true;
    }
    return any_entail ? NliLabel::entailment : NliLabel::neutral;
}

struct NliDistribution {
    size_t entailment = 0, neutral = 0, contradiction = 0;
    size_t classifier_failures = 0;

    size_t total() const { return entailment + neutral + contradiction; }
    double pct(NliLabel l) const {
        if (total() == 0) return 0.0;
        size_t n = l == NliLabel::entailment ? entailment
                   : l == NliLabel::neutral  ? neutral
                                             : contradiction;
        return 100.0 * static_cast<double>(n) / static_cast<double>(total());
    }
};

// Each story sentence is a premise, the normalized inference the hypothesis.
// A classifier failure on a pair counts as neutral for that pair, flagged.
inline NliDistribution nli_coherence(const Story& story,
                                     const std::vector<std::string>& normalized_hypotheses,
                                     const NliClassifier& classifier) {
    NliDistribution dist;
    for (const auto& hyp : normalized_hypotheses) {
        std::vector<NliLabel> labels;
        for (const auto& premise : story.sentences) {
            try {
                labels.push_back(classifier.classify(premise, hyp));
            } catch (const std::exception&) {
                labels.push_back(NliLabel::neutral);
                dist.classifier_failures++;
            }
        }
        switch (aggregate_nli_labels(labels)) {
            case NliLabel::entailment: dist.entailment++; break;
            case NliLabel::neutral: dist.neutral++; break;
            case NliLabel::contradiction: dist.contradiction++; break;
        }
    }
    return dist;
}

// ---------------------------------------------------------------------------
// Human-annotation aggregation

struct AnnotationRecord {
    std::string item_id;
    std::vector<int> ratings;  // Likert 1..5
};

// Mode of the ratings; ties go to the lower score.
inline int majority_vote(const std::vector<int>& ratings) {
    if (ratings.empty()) throw std::invalid_argument("majority_vote: no ratings");
    std::array<int, 6> counts{};
    for (int r : ratings) {
        if (r < 1 || r > 5) throw std::invalid_argument("majority_vote: rating out of 1..5");
        counts[static_cast<size_t>(r)]++;
    }
    int best = 1;
    for (int s = 2; s <= 5; ++s)
        if (counts[static_cast<size_t>(s)] > counts[static_cast<size_t>(best)]) best = s;
    return best;
}

struct AnnotationAggregate {
    size_t items = 0;
    double pct_3to5 = 0.0;       // majority label in 3..5
    double pct_3 = 0.0;          // majority label exactly 3
    double avg_rating = 0.0;     // mean over items of the mean rater score
    double avg_majority = 0.0;   // mean of majority labels
};

inline AnnotationAggregate aggregate_annotations(const std::vector<AnnotationRecord>& records) {
    if (records.empty()) throw std::invalid_argument("aggregate_annotations: no records");
    AnnotationAggregate agg;
    agg.items = records.size();
    size_t plausible = 0, exactly3 = 0;
    double mean_sum = 0.0, majority_sum = 0.0;
    for (const auto& rec : records) {
        int mv = majority_vote(rec.ratings);
        if (mv >= 3) plausible++;
        if (mv == 3) exactly3++;
        majority_sum += mv;
        double s = 0.0;
        for (int r : rec.ratings) s += r;
        mean_sum += s / static_cast<double>(rec.ratings.size());
    }
    double n = static_cast<double>(records.size());
    agg.pct_3to5 = 100.0 * static_cast<double>(plausible) / n;
    agg.pct_3 = 100.0 * static_cast<double>(exactly3) / n;
    agg.avg_rating = mean_sum / n;
    agg.avg_majority = majority_sum / n;
    return agg;
}

// Fleiss' kappa over categorical ratings 1..num_categories. Requires the same
// number of ratings per item.
inline double fleiss_kappa(const std::vector<AnnotationRecord>& records, int num_categories = 5) {
    if (records.empty()) throw std::invalid_argument("fleiss_kappa: no records");
    size_t raters = records[0].ratings.size();
    if (raters < 2) throw ConfigError("fleiss_kappa: need at least two raters");
    for (const auto& rec : records)
        if (rec.ratings.size() != raters)
            throw ConfigError("fleiss_kappa: all items need the same number of ratings");
    double n = static_cast<double>(raters);
    double N = static_cast<double>(records.size());
    std::vector<double> category_p(static_cast<size_t>(num_categories), 0.0);
    double pbar = 0.0;
    for (const auto& rec : records) {
        std::vector<int> counts(static_cast<size_t>(num_categories), 0);
        for (int r : rec.ratings) {
            if (r < 1 || r > num_categories) throw std::invalid_argument("fleiss_kappa: rating out of range");
            counts[static_cast<size_t>(r - 1)]++;
        }
        double sum_sq = 0.0;
        for (size_t c = 0; c < counts.size(); ++c) {
            sum_sq += static_cast<double>(counts[c]) * static_cast<double>(counts[c]);
            category_p[c] += static_cast<double>(counts[c]);
        }
        pbar += (sum_sq - n) / (n * (n - 1.0));
    }
    pbar /= N;
    double pe = 0.0;
    for (double& p : category_p) {
        p /= N * n;
        pe += p * p;
    }
    if (1.0 - pe < 1e-12) return pbar >= 1.0 - 1e-12 ? 1.0 : 0.0;
    return (pbar - pe) / (1.0 - pe);
}

// ---------------------------------------------------------------------------
// Report

struct EvalReport {
    double bleu1 = 0.0, bleu2 = 0.0;
    size_t bleu_keys = 0, bleu_skipped_keys = 0;
    NoveltyResult novelty;
    bool has_nli = false;
    NliDistribution nli;
    bool has_annotations = false;
    AnnotationAggregate annotations;
    size_t hypotheses = 0;
    std::string config_hash;
};

inline nlohmann::json eval_report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["config_hash"] = r.config_hash;
    j["bleu1"] = r.bleu1;
    j["bleu2"] = r.bleu2;
    j["bleu_keys"] = r.bleu_keys;
    j["bleu_skipped_keys"] = r.bleu_skipped_keys;
    j["hypotheses"] = r.hypotheses;
    j["novelty_pct"] = r.novelty.pct;
    j["novelty_counts"] = {{"novel", r.novelty.novel},
                           {"total", r.novelty.total},
                           {"excluded_none", r.novelty.excluded_none}};
    if (r.has_nli) {
        j["nli_pct"] = {{"entailment", r.nli.pct(NliLabel::entailment)},
                        {"neutral", r.nli.pct(NliLabel::neutral)},
                        {"contradiction", r.nli.pct(NliLabel::contradiction)}};
        j["nli_counts"] = {{"entailment", r.nli.entailment},
                           {"neutral", r.nli.neutral},
                           {"contradiction", r.nli.contradiction},
                           {"failures", r.nli.classifier_failures}};
    }
    if (r.has_annotations) {
        j["annotations"] = {{"items", r.annotations.items},
                            {"pct_3to5", r.annotations.pct_3to5},
                            {"pct_3", r.annotations.pct_3},
                            {"avg_rating", r.annotations.avg_rating},
                            {"avg_majority", r.annotations.avg_majority}};
    }
    return j;
}

inline std::string render_report_table(const EvalReport& r) {
    char buf[256];
    std::string out;
    out += "metric                 value\n";
    out += "---------------------  ---------\n";
    std::snprintf(buf, sizeof(buf), "%-22s %9.4f\n", "BLEU-1", r.bleu1);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-22s %9.4f\n", "BLEU-2", r.bleu2);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-22s %8.2f%%\n", "novelty", r.novelty.pct);
    out += buf;
    if (r.has_nli) {
        std::snprintf(buf, sizeof(buf), "%-22s %8.2f%%\n", "nli entailment", r.nli.pct(NliLabel::entailment));
        out += buf;
        std::snprintf(buf, sizeof(buf), "%-22s %8.2f%%\n", "nli neutral", r.nli.pct(NliLabel::neutral));
        out += buf;
        std::snprintf(buf, sizeof(buf), "%-22s %8.2f%%\n", "nli contradiction", r.nli.pct(NliLabel::contradiction));
        out += buf;
    }
    if (r.has_annotations) {
        std::snprintf(buf, sizeof(buf), "%-22s %8.2f%%\n", "judged 3-5", r.annotations.pct_3to5);
        out += buf;
        std::snprintf(buf, sizeof(buf), "%-22s %9.4f\n", "avg rating", r.annotations.avg_rating);
        out += buf;
    }
    return out;
}

} // namespace storysense
