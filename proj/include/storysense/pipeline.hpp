#pragma once
// Orchestration behind the CLI subcommands. Every function here is callable
// from tests as well; the CLI is a thin flag-parsing layer on top. All output
// artifacts embed the config hash and are written atomically (temp file +
// rename), so a failing run never leaves a partial artifact behind.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adapters.hpp"
#include "baselines.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "decode.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "kb.hpp"
#include "lm.hpp"
#include "model.hpp"
#include "supervision.hpp"
#include "train.hpp"

namespace storysense {

// ---------------------------------------------------------------------------
// File helpers

class AtomicFile {
public:
    explicit AtomicFile(const std::string& path) : path_(path), tmp_(path + ".tmp") {
        out_.open(tmp_, std::ios::binary);
        if (!out_) throw FatalError("cannot write " + tmp_);
    }
    ~AtomicFile() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }
    std::ofstream& stream() { return out_; }
    void commit() {
        out_.close();
        if (!out_) throw FatalError("write failed: " + tmp_);
        std::filesystem::rename(tmp_, path_);
        committed_ = true;
    }

private:
    std::string path_, tmp_;
    std::ofstream out_;
    bool committed_ = false;
};

inline std::string cache_file_path() {
    const char* dir = std::getenv("STORYSENSE_CACHE_DIR");
    if (!dir || !*dir) return "";
    return std::string(dir) + "/phrase_cache.jsonl";
}

inline void load_phrase_cache(PhraseCache& cache, const std::string& path) {
    std::ifstream in(path);
    if (!in) return;  // cold cache
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("h") || !j.contains("p")) continue;
        cache.insert_raw(std::stoull(j["h"].get<std::string>(), nullptr, 16),
                         j["p"].get<std::vector<std::string>>());
    }
}

inline void save_phrase_cache(const PhraseCache& cache, const std::string& path) {
    auto table = cache.snapshot();
    std::vector<std::pair<uint64_t, std::vector<std::string>>> sorted(table.begin(), table.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    AtomicFile file(path);
    for (const auto& [key, phrases] : sorted) {
        nlohmann::json j;
        j["h"] = hex64(key);
        j["p"] = phrases;
        file.stream() << j.dump() << "\n";
    }
    file.commit();
}

// ---------------------------------------------------------------------------
// Shared loading

inline KnowledgeBase load_kb_from_config(const RunConfig& cfg, bool with_index = true,
                                         PhraseCache* cache = nullptr) {
    auto fmt = kb_format_from_name(cfg.kb_format);
    if (!fmt) throw ConfigError("unknown kb format: " + cfg.kb_format);
    auto kb = load_knowledge_base(cfg.kb_path, *fmt);
    if (with_index) {
        RuleChunker chunker;
        index_phrases(kb, chunker, cache);
    }
    return kb;
}

inline std::vector<Story> select_split(const std::vector<Story>& stories, const RunConfig& cfg,
                                       const std::string& which) {
    if (which == "all") return stories;
    auto split = split_corpus(stories, cfg.ratios, cfg.seed);
    if (which == "train") return split.train;
    if (which == "dev") return split.dev;
    if (which == "test") return split.test;
    throw ConfigError("unknown split: " + which + " (expected train|dev|test|all)");
}

// ---------------------------------------------------------------------------
// build-kb

struct BuildKbResult {
    size_t triples = 0;
    size_t skipped = 0;
    size_t unique_events = 0;
    size_t phrases = 0;
    std::string out_path;
};

inline BuildKbResult cmd_build_kb(const RunConfig& cfg) {
    if (cfg.kb_path.empty()) throw ConfigError("build-kb requires --kb");
    PhraseCache cache;
    auto cache_path = cache_file_path();
    if (!cache_path.empty()) load_phrase_cache(cache, cache_path);
    auto kb = load_kb_from_config(cfg, true, cache_path.empty() ? nullptr : &cache);
    BuildKbResult result;
    result.triples = kb.triples.size();
    result.skipped = kb.skipped;
    result.unique_events = kb.events.size();
    result.phrases = kb.phrase_index.size();
    result.out_path = cfg.out_dir + "/kb.jsonl";
    AtomicFile file(result.out_path);
    nlohmann::json header;
    header["config_hash"] = config_hash(cfg);
    header["triples"] = result.triples;
    header["skipped"] = result.skipped;
    header["events"] = result.unique_events;
    file.stream() << header.dump() << "\n";
    for (const auto& t : kb.triples) {
        nlohmann::json j;
        j["head"] = t.head;
        j["dim"] = dim_name(t.dim);
        j["tail"] = t.tail;
        file.stream() << j.dump() << "\n";
    }
    file.commit();
    if (!cache_path.empty()) save_phrase_cache(cache, cache_path);
    return result;
}

// ---------------------------------------------------------------------------
// build-supervision

struct BuildSupervisionResult {
    SilverBuildStats stats;
    std::string out_path;
    std::string config_hash;
};

inline BuildSupervisionResult cmd_build_supervision(const RunConfig& cfg) {
    if (cfg.kb_path.empty() || cfg.stories_path.empty())
        throw ConfigError("build-supervision requires --kb and --stories");
    PhraseCache cache;
    auto cache_path = cache_file_path();
    if (!cache_path.empty()) load_phrase_cache(cache, cache_path);

    auto kb = load_kb_from_config(cfg, true, cache_path.empty() ? nullptr : &cache);
    auto stories = load_stories(cfg.stories_path);
    auto which = cfg.split.empty() ? std::string("train") : cfg.split;
    auto selected = select_split(stories, cfg, which);
    for (auto& s : selected) s = truncate_to_window(s, cfg.window);

    // coherence scorer: reference n-gram LM fit on the selected stories
    std::vector<std::string> corpus_texts;
    for (const auto& s : selected) corpus_texts.push_back(join(s.sentences, " "));
    NgramLm scorer(corpus_texts, static_cast<int>(cfg.lm_order));

    RuleChunker chunker;
    RetrievalGenerator generator(kb);
    BuildSupervisionResult result;
    result.config_hash = config_hash(cfg);
    auto silver = build_supervision(selected, kb, chunker,
                                    cfg.sup.mode == SupervisionMode::heuristic ? nullptr : &generator,
                                    scorer, cfg.sup, cfg.seed, result.config_hash, &result.stats,
                                    &cache, cfg.templates);
    result.out_path = cfg.silver_path.empty() ? cfg.out_dir + "/silver.jsonl" : cfg.silver_path;
    {
        AtomicFile file(result.out_path);
        nlohmann::json header;
        header["config_hash"] = silver.config_hash;
        header["seed"] = silver.seed;
        header["mode"] = supervision_mode_name(silver.config.mode);
        header["top_n"] = silver.config.top_n;
        header["keep"] = silver.config.keep;
        header["batch"] = silver.config.batch;
        file.stream() << header.dump() << "\n";
        for (const auto& c : silver.records) file.stream() << candidate_to_json(c).dump() << "\n";
        file.commit();
    }
    if (!cache_path.empty()) save_phrase_cache(cache, cache_path);
    return result;
}

// ---------------------------------------------------------------------------
// train

struct TrainResult {
    TrainReport report;
    std::string checkpoint_path;
    std::string loss_log_path;
    size_t optimizer_step = 0;
};

inline TrainResult cmd_train(const RunConfig& cfg) {
    if (cfg.silver_path.empty() || cfg.stories_path.empty())
        throw ConfigError("train requires --silver and --stories");
    auto silver = load_silver(cfg.silver_path);
    if (silver.records.empty()) throw FatalError("silver dataset has no records: " + cfg.silver_path);
    auto stories = load_stories(cfg.stories_path);
    std::map<std::string, Story> story_map;
    for (const auto& s : stories) story_map[s.id] = truncate_to_window(s, cfg.window);

    ModelConfig mc = cfg.model;
    if (mc.seed == 0) mc.seed = cfg.seed;

    TrainResult result;
    AdamState opt;
    std::optional<TransformerModel> model;
    if (!cfg.resume_path.empty()) {
        CheckpointExtras extras;
        model.emplace(load_checkpoint(cfg.resume_path, &extras));
        model->cfg.epochs = mc.epochs;  // train for this many more epochs
        opt.step = extras.optimizer_step;
        if (!extras.adam_m.empty()) {
            opt.m = std::move(extras.adam_m);
            opt.v = std::move(extras.adam_v);
        }
    } else {
        std::vector<std::string> vocab_texts;
        for (const auto& [id, s] : story_map) {
            (void)id;
            vocab_texts.push_back(join(s.sentences, " "));
        }
        for (const auto& rec : silver.records)
            vocab_texts.push_back(render_template(rec.dim, rec.inference, cfg.templates));
        auto vocab = Vocab::build(vocab_texts, cfg.window);
        model.emplace(mc, vocab);
    }

    ExampleBuildStats ex_stats;
    auto examples = build_training_examples(silver, story_map, *model, &ex_stats, cfg.templates);
    if (examples.empty()) throw FatalError("no trainable examples built from the silver dataset");

    result.loss_log_path = cfg.out_dir + "/train_loss.tsv";
    std::ostringstream loss_log;
    result.report = train_model(*model, examples, opt, &loss_log);
    {
        AtomicFile file(result.loss_log_path);
        file.stream() << "# config_hash\t" << config_hash(cfg) << "\n";
        file.stream() << loss_log.str();
        file.commit();
    }
    result.checkpoint_path =
        cfg.checkpoint_path.empty() ? cfg.out_dir + "/model.ckpt" : cfg.checkpoint_path;
    CheckpointExtras extras;
    extras.optimizer_step = opt.step;
    extras.epochs_done = result.report.epoch_losses.size();
    extras.config_hash = config_hash(cfg);
    extras.adam_m = opt.m;
    extras.adam_v = opt.v;
    save_checkpoint(*model, result.checkpoint_path, extras);
    result.optimizer_step = opt.step;
    return result;
}

// ---------------------------------------------------------------------------
// generate

inline nlohmann::json decoded_to_json(const DecodedInference& d) {
    nlohmann::json j;
    j["story_id"] = d.story_id;
    j["sentence_idx"] = d.sentence_idx;
    j["dimension"] = dim_name(d.dim);
    j["beam"] = d.beam;
    j["scores"] = d.scores;
    if (d.any_length_truncated) j["length_truncated"] = true;
    return j;
}

struct GenerateResult {
    size_t stories = 0;
    size_t records = 0;
    size_t truncated_inputs = 0;
    size_t skipped_stories = 0;
    std::string out_path;
};

inline GenerateResult cmd_generate(const RunConfig& cfg) {
    if (cfg.checkpoint_path.empty() || cfg.stories_path.empty())
        throw ConfigError("generate requires --checkpoint and --stories");
    auto model = load_checkpoint(cfg.checkpoint_path);
    if (cfg.model.beam != model.cfg.beam) model.cfg.beam = cfg.model.beam;
    if (!cfg.variant_override.empty()) {
        auto v = model_variant_from_name(cfg.variant_override);
        if (!v) throw ConfigError("unknown variant: " + cfg.variant_override);
        model.cfg.variant = *v;
    }
    model.cfg.validate();
    StoryLoadStats load_stats;
    auto stories = load_stories(cfg.stories_path, {}, &load_stats);
    auto which = cfg.split.empty() ? std::string("all") : cfg.split;
    auto selected = select_split(stories, cfg, which);

    GenerateResult result;
    result.skipped_stories = load_stats.skipped;
    result.out_path = cfg.inferences_path.empty() ? cfg.out_dir + "/inferences.jsonl" : cfg.inferences_path;
    AtomicFile file(result.out_path);
    nlohmann::json header;
    header["config_hash"] = config_hash(cfg);
    header["variant"] = model_variant_name(model.cfg.variant);
    header["beam"] = model.cfg.beam;
    file.stream() << header.dump() << "\n";
    int window = std::min(cfg.window, model.vocab.window);
    EncodeStats enc_stats;
    for (const auto& story : selected) {
        auto windowed = truncate_to_window(story, window);
        auto decoded = decode_story(model, windowed, &enc_stats);
        for (const auto& d : decoded) file.stream() << decoded_to_json(d).dump() << "\n";
        result.records += decoded.size();
        result.stories++;
    }
    result.truncated_inputs = enc_stats.truncated_inputs;
    file.commit();
    return result;
}

// ---------------------------------------------------------------------------
// baseline

struct BaselineResult {
    size_t records = 0;
    std::string out_path;
};

inline BaselineResult cmd_baseline(const RunConfig& cfg) {
    if (cfg.kb_path.empty() || cfg.stories_path.empty())
        throw ConfigError("baseline requires --kb and --stories");
    if (cfg.baseline_method != "knn" && cfg.baseline_method != "sentgen")
        throw ConfigError("unknown baseline method: " + cfg.baseline_method);
    auto kb = load_kb_from_config(cfg, cfg.baseline_method == "sentgen");
    auto stories = load_stories(cfg.stories_path);
    auto which = cfg.split.empty() ? std::string("all") : cfg.split;
    auto selected = select_split(stories, cfg, which);

    BaselineResult result;
    result.out_path = cfg.out_dir + "/baseline_" + cfg.baseline_method + ".jsonl";
    AtomicFile file(result.out_path);
    nlohmann::json header;
    header["config_hash"] = config_hash(cfg);
    header["method"] = cfg.baseline_method;
    file.stream() << header.dump() << "\n";

    if (cfg.baseline_method == "knn") {
        HashEmbedder embedder(cfg.embed_dim);
        auto index = build_index(kb, embedder);
        for (const auto& story : selected) {
            auto windowed = truncate_to_window(story, cfg.window);
            for (int i = 0; i < static_cast<int>(windowed.sentences.size()); ++i) {
                auto cands = knn_inferences(windowed.sentences[static_cast<size_t>(i)], index, kb,
                                            embedder, cfg.knn_k);
                for (auto& c : cands) {
                    c.story_id = story.id;
                    c.sentence_idx = i;
                    file.stream() << candidate_to_json(c).dump() << "\n";
                    result.records++;
                }
            }
        }
    } else {
        RetrievalGenerator generator(kb);
        for (const auto& story : selected) {
            auto windowed = truncate_to_window(story, cfg.window);
            auto cands = sentence_level_generate(windowed, generator,
                                                 static_cast<int>(cfg.model.beam));
            for (const auto& c : cands) {
                file.stream() << candidate_to_json(c).dump() << "\n";
                result.records++;
            }
        }
    }
    file.commit();
    return result;
}

// ---------------------------------------------------------------------------
// evaluate

// Drop the dimension's template prefix from a generated text, yielding the
// raw tail. Falls back to the whole text when the prefix is absent.
inline std::string strip_template_prefix(Dim d, const std::string& text,
                                         const TemplateTable& templates = standard_templates()) {
    const auto& prefix = templates.prefix[static_cast<size_t>(d)];
    auto lowered = to_lower(text);
    auto lowered_prefix = to_lower(prefix);
    if (lowered.size() >= lowered_prefix.size() &&
        lowered.compare(0, lowered_prefix.size(), lowered_prefix) == 0)
        return trim(text.substr(prefix.size()));
    return trim(text);
}

// Ranked raw tails per key from either record shape: decode records with a
// "beam" array (template prefixes stripped) or candidate records with an
// "inference" field. Unknown or malformed lines are skipped with a count.
inline std::map<EvalKey, std::vector<std::string>> load_hypotheses(
    const std::string& path, size_t beam_limit, size_t* skipped = nullptr,
    const TemplateTable& templates = standard_templates()) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open inferences file: " + path);
    std::map<EvalKey, std::vector<std::string>> out;
    std::string line;
    size_t bad = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            bad++;
            continue;
        }
        if (j.contains("config_hash") && !j.contains("story_id")) continue;  // header
        auto dim_key = j.contains("dimension") ? "dimension" : "dim";
        if (!j.contains("story_id") || !j.contains("sentence_idx") || !j.contains(dim_key)) {
            bad++;
            continue;
        }
        auto d = dim_from_name(j[dim_key].get<std::string>());
        if (!d) {
            bad++;
            continue;
        }
        EvalKey key{j["story_id"].get<std::string>(), j["sentence_idx"].get<int>(), *d};
        auto& bucket = out[key];
        if (j.contains("beam") && j["beam"].is_array()) {
            for (const auto& t : j["beam"]) {
                if (bucket.size() >= beam_limit) break;
                bucket.push_back(strip_template_prefix(*d, t.get<std::string>(), templates));
            }
        } else if (j.contains("inference")) {
            if (bucket.size() < beam_limit) bucket.push_back(trim(j["inference"].get<std::string>()));
        } else {
            bad++;
        }
    }
    if (skipped) *skipped = bad;
    return out;
}

// Gold references: {"story_id", "sentence_idx", "dimension", "references":[tails]}.
inline std::map<EvalKey, std::vector<std::string>> load_gold(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open gold file: " + path);
    std::map<EvalKey, std::vector<std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) continue;
        if (j.contains("config_hash") && !j.contains("story_id")) continue;
        if (!j.contains("story_id") || !j.contains("sentence_idx") || !j.contains("dimension") ||
            !j.contains("references"))
            continue;
        auto d = dim_from_name(j["dimension"].get<std::string>());
        if (!d) continue;
        EvalKey key{j["story_id"].get<std::string>(), j["sentence_idx"].get<int>(), *d};
        for (const auto& r : j["references"]) out[key].push_back(r.get<std::string>());
    }
    return out;
}

inline std::vector<AnnotationRecord> load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open annotations file: " + path);
    std::vector<AnnotationRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("item") || !j.contains("ratings")) continue;
        AnnotationRecord rec;
        rec.item_id = j["item"].get<std::string>();
        rec.ratings = j["ratings"].get<std::vector<int>>();
        if (!rec.ratings.empty()) out.push_back(std::move(rec));
    }
    return out;
}

inline void write_label_bar_svg(const std::string& path, const std::string& title,
                                const std::vector<std::pair<std::string, double>>& bars) {
    AtomicFile file(path);
    auto& out = file.stream();
    const int height = 260, base = 210, bar_w = 90, gap = 30, left = 40;
    const int width = 2 * left + static_cast<int>(bars.size()) * (bar_w + gap) - gap;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\">\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    double mx = 0.0;
    for (const auto& [label, value] : bars) mx = std::max(mx, value);
    if (mx <= 0.0) mx = 1.0;
    int x = left;
    for (const auto& [label, value] : bars) {
        int h = static_cast<int>(150.0 * value / mx);
        out << "<rect x=\"" << x << "\" y=\"" << base - h << "\" width=\"" << bar_w
            << "\" height=\"" << h << "\" fill=\"#4a7fb5\"/>\n";
        out << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << base + 18
            << "\" text-anchor=\"middle\" font-size=\"12\">" << label << "</text>\n";
        char pct[32];
        std::snprintf(pct, sizeof(pct), "%.1f%%", value);
        out << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << base - h - 6
            << "\" text-anchor=\"middle\" font-size=\"12\">" << pct << "</text>\n";
        x += bar_w + gap;
    }
    out << "</svg>\n";
    file.commit();
}

struct EvaluateResult {
    EvalReport report;
    std::string report_path;
    std::vector<std::string> plot_paths;
};

inline EvaluateResult cmd_evaluate(const RunConfig& cfg) {
    if (cfg.inferences_path.empty() || cfg.gold_path.empty() || cfg.kb_path.empty())
        throw ConfigError("evaluate requires --inferences, --gold and --kb");
    auto kb = load_kb_from_config(cfg, false);
    auto hyps = load_hypotheses(cfg.inferences_path, cfg.metric_beam, nullptr, cfg.templates);
    auto gold = load_gold(cfg.gold_path);
    if (hyps.empty()) throw FatalError("no hypotheses found in " + cfg.inferences_path);

    EvalReport report;
    report.config_hash = config_hash(cfg);

    // BLEU over templated texts, full beam
    std::map<EvalKey, std::vector<std::string>> hyp_texts, ref_texts;
    for (const auto& [key, tails] : hyps) {
        for (const auto& t : tails)
            if (!trim(t).empty())
                hyp_texts[key].push_back(render_template(key.dim, t, cfg.templates));
        report.hypotheses += tails.size();
    }
    for (const auto& [key, tails] : gold)
        for (const auto& t : tails)
            if (!trim(t).empty())
                ref_texts[key].push_back(render_template(key.dim, t, cfg.templates));
    report.bleu_keys = hyp_texts.size();
    report.bleu1 = keyed_corpus_bleu(hyp_texts, ref_texts, 1, &report.bleu_skipped_keys);
    report.bleu2 = keyed_corpus_bleu(hyp_texts, ref_texts, 2, nullptr);

    // novelty over the full beam
    std::vector<std::pair<Dim, std::string>> generated;
    for (const auto& [key, tails] : hyps)
        for (const auto& t : tails) generated.emplace_back(key.dim, t);
    report.novelty = novelty(generated, kb, cfg.novelty_threshold, cfg.novelty_include_heads);

    // NLI over the top relation per key, premises from the stories
    if (cfg.nli != "none" && !cfg.stories_path.empty()) {
        std::unique_ptr<NliClassifier> classifier;
        if (cfg.nli == "overlap") classifier = std::make_unique<OverlapNli>();
        else if (auto fixed = nli_label_from_name(cfg.nli))
            classifier = std::make_unique<FixedNli>(*fixed);
        else throw ConfigError("unknown nli classifier: " + cfg.nli);
        auto stories = load_stories(cfg.stories_path);
        std::map<std::string, Story> story_map;
        for (const auto& s : stories) story_map[s.id] = truncate_to_window(s, cfg.window);
        for (const auto& [key, tails] : hyps) {
            auto sit = story_map.find(key.story_id);
            if (sit == story_map.end() || tails.empty() || trim(tails.front()).empty()) continue;
            auto normalized = normalize_for_nli(key.dim, tails.front());
            auto dist = nli_coherence(sit->second, {normalized}, *classifier);
            report.nli.entailment += dist.entailment;
            report.nli.neutral += dist.neutral;
            report.nli.contradiction += dist.contradiction;
            report.nli.classifier_failures += dist.classifier_failures;
        }
        report.has_nli = true;
    }

    std::vector<AnnotationRecord> annotation_records;
    if (!cfg.annotations_path.empty()) {
        annotation_records = load_annotations(cfg.annotations_path);
        if (!annotation_records.empty()) {
            report.annotations = aggregate_annotations(annotation_records);
            report.has_annotations = true;
        }
    }

    EvaluateResult result;
    result.report = report;
    result.report_path = cfg.out_dir + "/report.json";
    {
        AtomicFile file(result.report_path);
        file.stream() << eval_report_to_json(report).dump(2) << "\n";
        file.commit();
    }
    if (!cfg.plot_dir.empty()) {
        std::filesystem::create_directories(cfg.plot_dir);
        if (report.has_nli) {
            auto path = cfg.plot_dir + "/nli_labels.svg";
            write_label_bar_svg(path, "NLI label distribution",
                                {{"entailment", report.nli.pct(NliLabel::entailment)},
                                 {"neutral", report.nli.pct(NliLabel::neutral)},
                                 {"contradiction", report.nli.pct(NliLabel::contradiction)}});
            result.plot_paths.push_back(path);
        }
        if (report.has_annotations) {
            std::array<size_t, 5> counts{};
            for (const auto& rec : annotation_records)
                counts[static_cast<size_t>(majority_vote(rec.ratings) - 1)]++;
            std::vector<std::pair<std::string, double>> bars;
            for (int s = 1; s <= 5; ++s)
                bars.emplace_back(std::to_string(s),
                                  100.0 * static_cast<double>(counts[static_cast<size_t>(s - 1)]) /
                                      static_cast<double>(annotation_records.size()));
            auto path = cfg.plot_dir + "/likert_majority.svg";
            write_label_bar_svg(path, "Majority Likert label distribution", bars);
            result.plot_paths.push_back(path);
        }
    }
    return result;
}

} // namespace storysense
