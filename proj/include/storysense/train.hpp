#pragma once
// Training loop: Adam with linear warmup, micro-batches of 4 with 4x gradient
// accumulation (simulated batch 16), token cross-entropy over the entire
// sequence with PAD masked out. For the memory variant, each example's bank
// holds the story's silver inferences whose (sentence, dimension) key
// precedes the example's in decode order, FIFO-capped at the memory capacity.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "memory.hpp"
#include "model.hpp"
#include "supervision.hpp"
#include "tensor.hpp"
#include "vocab.hpp"

namespace storysense {

struct TrainingExample {
    std::string story_id;
    int sentence_idx = 0;
    Dim dim = Dim::xIntent;
    std::vector<int> ids;  // input + templated target + eos
    std::vector<std::vector<int>> memory_rows;
};

struct ExampleBuildStats {
    size_t built = 0;
    size_t skipped_missing_story = 0;
    size_t truncated_inputs = 0;
    size_t truncated_memory_rows = 0;
};

// Silver records to training sequences. Targets are the templated inference
// plus the end-of-text token.
inline std::vector<TrainingExample> build_training_examples(
    const SilverDataset& silver, const std::map<std::string, Story>& stories,
    const TransformerModel& model, ExampleBuildStats* stats = nullptr,
    const TemplateTable& templates = standard_templates()) {
    const auto& cfg = model.cfg;
    const auto& vocab = model.vocab;
    ExampleBuildStats local;

    // group records per story in decode order (records arrive sorted already;
    // sort again so callers can pass anything)
    std::map<std::string, std::vector<const Candidate*>> by_story;
    for (const auto& rec : silver.records) by_story[rec.story_id].push_back(&rec);
    for (auto& [id, recs] : by_story) {
        (void)id;
        std::stable_sort(recs.begin(), recs.end(), [](const Candidate* a, const Candidate* b) {
            if (a->sentence_idx != b->sentence_idx) return a->sentence_idx < b->sentence_idx;
            return static_cast<int>(a->dim) < static_cast<int>(b->dim);
        });
    }

    std::vector<TrainingExample> out;
    for (auto& [story_id, recs] : by_story) {
        auto sit = stories.find(story_id);
        if (sit == stories.end()) {
            local.skipped_missing_story += recs.size();
            continue;
        }
        const Story& story = sit->second;
        // token rows for the whole story, in decode order
        std::vector<std::vector<int>> rows;
        std::vector<std::pair<int, int>> row_keys;  // (sentence, dim)
        for (const Candidate* rec : recs) {
            auto row = vocab.encode_words(render_template(rec->dim, rec->inference, templates));
            if (row.size() > cfg.memory_len) {
                row.resize(cfg.memory_len);
                local.truncated_memory_rows++;
            }
            rows.push_back(std::move(row));
            row_keys.emplace_back(rec->sentence_idx, static_cast<int>(rec->dim));
        }
        for (size_t ri = 0; ri < recs.size(); ++ri) {
            const Candidate* rec = recs[ri];
            if (rec->sentence_idx < 0 ||
                static_cast<size_t>(rec->sentence_idx) >= story.sentences.size() ||
                rec->sentence_idx >= vocab.window)
                continue;
            auto target = vocab.encode_words(render_template(rec->dim, rec->inference, templates));
            target.push_back(vocab.eos_id);
            if (target.size() + 3 > cfg.context_len)
                throw FatalError("target sequence exceeds context length for story " + story_id);
            EncodeStats es;
            auto ids = encode_input(story, rec->sentence_idx, rec->dim, vocab,
                                    cfg.context_len - target.size(), &es);
            local.truncated_inputs += es.truncated_inputs;
            ids.insert(ids.end(), target.begin(), target.end());

            TrainingExample ex;
            ex.story_id = story_id;
            ex.sentence_idx = rec->sentence_idx;
            ex.dim = rec->dim;
            ex.ids = std::move(ids);
            if (cfg.variant == ModelVariant::memory) {
                // rows whose key strictly precedes this record's key, most
                // recent memory_rows of them
                std::pair<int, int> key(rec->sentence_idx, static_cast<int>(rec->dim));
                std::vector<std::vector<int>> bank_rows;
                for (size_t rj = 0; rj < rows.size(); ++rj)
                    if (row_keys[rj] < key) bank_rows.push_back(rows[rj]);
                if (bank_rows.size() > cfg.memory_rows)
                    bank_rows.erase(bank_rows.begin(),
                                    bank_rows.begin() +
                                        static_cast<long>(bank_rows.size() - cfg.memory_rows));
                ex.memory_rows = std::move(bank_rows);
            }
            out.push_back(std::move(ex));
            local.built++;
        }
    }
    if (stats) *stats = local;
    return out;
}

struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    size_t step = 0;
    std::vector<Mat> m, v;

    void init(const std::vector<std::pair<std::string, Var>>& params) {
        m.clear();
        v.clear();
        for (const auto& [name, p] : params) {
            (void)name;
            m.emplace_back(p->val.rows, p->val.cols);
            v.emplace_back(p->val.rows, p->val.cols);
        }
    }
};

inline void zero_grads(const std::vector<std::pair<std::string, Var>>& params) {
    for (const auto& [name, p] : params) {
        (void)name;
        std::fill(p->grad.v.begin(), p->grad.v.end(), 0.0);
    }
}

// One Adam update. grad_scale folds the 1/batch factor into the raw
// accumulated gradients; lr ramps linearly over the warmup steps.
inline void adam_step(const std::vector<std::pair<std::string, Var>>& params, AdamState& opt,
                      double base_lr, size_t warmup_steps, double grad_scale) {
    opt.step++;
    double t = static_cast<double>(opt.step);
    double lr = base_lr;
    if (warmup_steps > 0) lr = base_lr * std::min(1.0, t / static_cast<double>(warmup_steps));
    double bc1 = 1.0 - std::pow(opt.beta1, t);
    double bc2 = 1.0 - std::pow(opt.beta2, t);
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi].second;
        auto& m = opt.m[pi];
        auto& v = opt.v[pi];
        for (size_t i = 0; i < p->val.size(); ++i) {
            double g = p->grad.v[i] * grad_scale;
            m.v[i] = opt.beta1 * m.v[i] + (1.0 - opt.beta1) * g;
            v.v[i] = opt.beta2 * v.v[i] + (1.0 - opt.beta2) * g * g;
            double mhat = m.v[i] / bc1;
            double vhat = v.v[i] / bc2;
            p->val.v[i] -= lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    }
}

struct TrainReport {
    std::vector<double> epoch_losses;  // mean nats per epoch
    size_t optimizer_steps = 0;
    size_t examples = 0;
};

// Deterministic epoch loop: per-epoch seeded shuffle, per-sequence backward,
// optimizer step every micro_batch * grad_accum sequences (partial flush at
// epoch end). Non-finite loss aborts with a diagnostic.
inline TrainReport train_model(TransformerModel& model, const std::vector<TrainingExample>& examples,
                               AdamState& opt, std::ostream* loss_log = nullptr) {
    if (examples.empty()) throw FatalError("train: no training examples");
    const auto& cfg = model.cfg;
    auto params = model.parameters();
    if (opt.m.empty()) opt.init(params);
    size_t flush_every = cfg.micro_batch * cfg.grad_accum;

    TrainReport report;
    report.examples = examples.size();
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    zero_grads(params);
    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        deterministic_shuffle(order, cfg.seed + 0x9e37ull * (epoch + 1));
        double epoch_loss = 0.0;
        size_t accumulated = 0;
        for (size_t oi = 0; oi < order.size(); ++oi) {
            const auto& ex = examples[order[oi]];
            MemoryBank bank(cfg.memory_len, cfg.memory_rows, model.vocab.pad_id);
            const MemoryBank* bank_ptr = nullptr;
            if (cfg.variant == ModelVariant::memory && !ex.memory_rows.empty()) {
                bank.push_all(ex.memory_rows);
                bank_ptr = &bank;
            }
            Var loss = model.loss(ex.ids, bank_ptr);
            double loss_val = loss->val.v[0];
            if (!std::isfinite(loss_val))
                throw FatalError("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", example " + std::to_string(order[oi]));
            backward(loss);
            epoch_loss += loss_val;
            accumulated++;
            if (accumulated == flush_every || oi + 1 == order.size()) {
                adam_step(params, opt, cfg.lr, cfg.warmup_steps,
                          1.0 / static_cast<double>(accumulated));
                zero_grads(params);
                report.optimizer_steps++;
                accumulated = 0;
            }
        }
        double mean_loss = epoch_loss / static_cast<double>(order.size());
        report.epoch_losses.push_back(mean_loss);
        if (loss_log) (*loss_log) << epoch << "\t" << mean_loss << "\n";
    }
    return report;
}

} // namespace storysense
