#pragma once
// The discourse-aware controlled-generation model: a small from-scratch
// causal transformer (pre-LN, learned positions, GELU MLP) in two variants.
// The memory variant embeds stored inference rows with a dedicated embedding
// table, averages them over the token axis, retrieves the top-k rows by
// cosine similarity against the mean context state, and adds the projected
// result onto every position of the final hidden state before the LM head.
// With an empty memory bank the two variants are identical by construction.

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "memory.hpp"
#include "tensor.hpp"
#include "text.hpp"
#include "vocab.hpp"

namespace storysense {

enum class ModelVariant { memoryless, memory };

inline const char* model_variant_name(ModelVariant v) {
    return v == ModelVariant::memoryless ? "memoryless" : "memory";
}
inline std::optional<ModelVariant> model_variant_from_name(const std::string& s) {
    if (s == "memoryless") return ModelVariant::memoryless;
    if (s == "memory") return ModelVariant::memory;
    return std::nullopt;
}

// Whether memory augmentation applies at both training and decoding time or
// at training time only.
enum class MemoryMode { train_and_decode, train_only };

inline const char* memory_mode_name(MemoryMode m) {
    return m == MemoryMode::train_and_decode ? "train+decode" : "train-only";
}
inline std::optional<MemoryMode> memory_mode_from_name(const std::string& s) {
    if (s == "train+decode") return MemoryMode::train_and_decode;
    if (s == "train-only") return MemoryMode::train_only;
    return std::nullopt;
}

struct ModelConfig {
    size_t hidden = 128;
    size_t layers = 2;
    size_t heads = 2;
    size_t mlp_mult = 4;
    size_t context_len = 512;    // L^c maximum
    size_t memory_rows = 45;     // R^m
    size_t memory_len = 100;     // L^r
    size_t retrieve_k = 1;       // top-k memory rows
    ModelVariant variant = ModelVariant::memoryless;
    MemoryMode memory_mode = MemoryMode::train_and_decode;
    size_t max_decode_len = 50;
    size_t beam = 1;             // b in {1, 10}
    size_t epochs = 20;
    size_t micro_batch = 4;      // actual batch
    size_t grad_accum = 4;       // simulated batch = micro_batch * grad_accum
    double lr = 2e-5;
    size_t warmup_steps = 100;
    uint64_t seed = 0;

    static constexpr std::array<size_t, 2> kBeamOptions = {1, 10};

    void validate() const {
        if (!hidden || !layers || !heads || !mlp_mult || !context_len || !memory_rows ||
            !memory_len || !retrieve_k || !max_decode_len || !epochs || !micro_batch || !grad_accum)
            throw ConfigError("model config values must be positive");
        if (hidden % heads != 0) throw ConfigError("hidden size must be divisible by heads");
        if (retrieve_k > memory_rows) throw ConfigError("retrieve_k must be <= memory_rows");
        if (beam != kBeamOptions[0] && beam != kBeamOptions[1])
            throw ConfigError("beam must be 1 or 10");
        if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    }
};

class TransformerModel {
public:
    ModelConfig cfg;
    Vocab vocab;

    struct Block {
        Var ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
        Var ln2_g, ln2_b, w1, b1, w2, b2;
    };

    Var tok_emb, pos_emb;
    std::vector<Block> blocks;
    Var lnf_g, lnf_b, lm_head;
    Var mem_emb;          // f_emb, trained jointly, distinct from tok_emb
    Var proj_w, proj_b;   // proj: H -> H

    TransformerModel(ModelConfig config, Vocab v) : cfg(std::move(config)), vocab(std::move(v)) {
        cfg.validate();
        SplitMix64 rng(cfg.seed ^ 0x5eedf00dull);
        size_t H = cfg.hidden, V = vocab.size();
        tok_emb = normal_leaf(rng, V, H);
        pos_emb = normal_leaf(rng, cfg.context_len, H);
        for (size_t l = 0; l < cfg.layers; ++l) {
            Block b;
            b.ln1_g = ones_leaf(1, H);
            b.ln1_b = zeros_leaf(1, H);
            b.wq = normal_leaf(rng, H, H);
            b.bq = zeros_leaf(1, H);
            b.wk = normal_leaf(rng, H, H);
            b.bk = zeros_leaf(1, H);
            b.wv = normal_leaf(rng, H, H);
            b.bv = zeros_leaf(1, H);
            b.wo = normal_leaf(rng, H, H);
            b.bo = zeros_leaf(1, H);
            b.ln2_g = ones_leaf(1, H);
            b.ln2_b = zeros_leaf(1, H);
            b.w1 = normal_leaf(rng, H, H * cfg.mlp_mult);
            b.b1 = zeros_leaf(1, H * cfg.mlp_mult);
            b.w2 = normal_leaf(rng, H * cfg.mlp_mult, H);
            b.b2 = zeros_leaf(1, H);
            blocks.push_back(std::move(b));
        }
        lnf_g = ones_leaf(1, H);
        lnf_b = zeros_leaf(1, H);
        lm_head = normal_leaf(rng, H, V);
        mem_emb = normal_leaf(rng, V, H);
        proj_w = normal_leaf(rng, H, H);
        proj_b = zeros_leaf(1, H);
    }

    std::vector<std::pair<std::string, Var>> parameters() {
        std::vector<std::pair<std::string, Var>> out;
        out.emplace_back("tok_emb", tok_emb);
        out.emplace_back("pos_emb", pos_emb);
        for (size_t l = 0; l < blocks.size(); ++l) {
            auto pre = "block" + std::to_string(l) + ".";
            auto& b = blocks[l];
            out.emplace_back(pre + "ln1_g", b.ln1_g);
            out.emplace_back(pre + "ln1_b", b.ln1_b);
            out.emplace_back(pre + "wq", b.wq);
            out.emplace_back(pre + "bq", b.bq);
            out.emplace_back(pre + "wk", b.wk);
            out.emplace_back(pre + "bk", b.bk);
            out.emplace_back(pre + "wv", b.wv);
            out.emplace_back(pre + "bv", b.bv);
            out.emplace_back(pre + "wo", b.wo);
            out.emplace_back(pre + "bo", b.bo);
            out.emplace_back(pre + "ln2_g", b.ln2_g);
            out.emplace_back(pre + "ln2_b", b.ln2_b);
            out.emplace_back(pre + "w1", b.w1);
            out.emplace_back(pre + "b1", b.b1);
            out.emplace_back(pre + "w2", b.w2);
            out.emplace_back(pre + "b2", b.b2);
        }
        out.emplace_back("lnf_g", lnf_g);
        out.emplace_back("lnf_b", lnf_b);
        out.emplace_back("lm_head", lm_head);
        out.emplace_back("mem_emb", mem_emb);
        out.emplace_back("proj_w", proj_w);
        out.emplace_back("proj_b", proj_b);
        return out;
    }

    // C^o: final hidden state (L x H).
    Var forward_hidden(const std::vector<int>& ids) {
        if (ids.empty()) throw FatalError("forward: empty input");
        if (ids.size() > cfg.context_len)
            throw FatalError("forward: sequence length " + std::to_string(ids.size()) +
                             " exceeds context length " + std::to_string(cfg.context_len));
        std::vector<int> positions(ids.size());
        for (size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
        Var x = add(embedding(tok_emb, ids), embedding(pos_emb, positions));
        size_t dh = cfg.hidden / cfg.heads;
        double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        for (auto& b : blocks) {
            Var a = layer_norm(x, b.ln1_g, b.ln1_b);
            Var q = add_rowvec(matmul(a, b.wq), b.bq);
            Var k = add_rowvec(matmul(a, b.wk), b.bk);
            Var v = add_rowvec(matmul(a, b.wv), b.bv);
            std::vector<Var> head_outs;
            for (size_t h = 0; h < cfg.heads; ++h) {
                Var qh = col_slice(q, h * dh, dh);
                Var kh = col_slice(k, h * dh, dh);
                Var vh = col_slice(v, h * dh, dh);
                Var att = causal_softmax(mul_scalar(matmul_nt(qh, kh), scale));
                head_outs.push_back(matmul(att, vh));
            }
            Var attn = add_rowvec(matmul(concat_cols(head_outs), b.wo), b.bo);
            x = add(x, attn);
            Var m = layer_norm(x, b.ln2_g, b.ln2_b);
            Var mlp = add_rowvec(matmul(gelu(add_rowvec(matmul(m, b.w1), b.b1)), b.w2), b.b2);
            x = add(x, mlp);
        }
        return layer_norm(x, lnf_g, lnf_b);
    }

    // Logits over the vocabulary per position. A non-empty memory bank
    // triggers the retrieval/reweighing path; a null or empty bank is exactly
    // the memoryless model.
    Var forward_logits(const std::vector<int>& ids, const MemoryBank* bank = nullptr) {
        Var ctx = forward_hidden(ids);
        if (bank && bank->occupancy() > 0) ctx = apply_memory(ctx, *bank);
        return matmul(ctx, lm_head);
    }

    // Mean next-token cross entropy over the entire sequence; positions whose
    // target is PAD contribute exactly zero.
    Var loss(const std::vector<int>& ids, const MemoryBank* bank = nullptr) {
        if (ids.size() < 2) throw FatalError("loss: need at least two tokens");
        Var logits = forward_logits(ids, bank);
        std::vector<int> targets(ids.size(), vocab.pad_id);
        for (size_t i = 0; i + 1 < ids.size(); ++i) targets[i] = ids[i + 1];
        return cross_entropy_loss(logits, targets, vocab.pad_id);
    }

    // Log-softmax over the next-token distribution at the last position.
    // Graph-free; used by decoding.
    std::vector<double> next_token_log_probs(const std::vector<int>& ids, const MemoryBank* bank = nullptr) {
        NoGradGuard ng;
        Var logits = forward_logits(ids, bank);
        size_t last = logits->val.rows - 1;
        const double* z = logits->val.row(last);
        size_t V = logits->val.cols;
        double mx = z[0];
        for (size_t c = 1; c < V; ++c) mx = std::max(mx, z[c]);
        double denom = 0.0;
        for (size_t c = 0; c < V; ++c) denom += std::exp(z[c] - mx);
        double log_denom = std::log(denom);
        std::vector<double> out(V);
        for (size_t c = 0; c < V; ++c) out[c] = z[c] - mx - log_denom;
        return out;
    }

private:
    static Var zeros_leaf(size_t r, size_t c) { return make_leaf(Mat(r, c), true); }
    static Var ones_leaf(size_t r, size_t c) {
        Mat m(r, c);
        for (auto& x : m.v) x = 1.0;
        return make_leaf(std::move(m), true);
    }
    static Var normal_leaf(SplitMix64& rng, size_t r, size_t c, double stddev = 0.02) {
        Mat m(r, c);
        for (auto& x : m.v) {
            double u1 = 1.0 - rng.unit();
            double u2 = rng.unit();
            x = stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        }
        return make_leaf(std::move(m), true);
    }

    Var apply_memory(const Var& ctx, const MemoryBank& bank) {
        // theta_mem rows: mean of f_emb over the token axis, PAD included
        std::vector<Var> theta_rows;
        theta_rows.reserve(bank.occupancy());
        for (const auto& row : bank.rows) theta_rows.push_back(mean_over_rows(embedding(mem_emb, row)));
        // top-k selection runs on plain values; gradients flow through the
        // selected rows only
        Var theta_ctx = mean_over_rows(ctx);
        std::vector<std::vector<double>> theta_mem_vals;
        theta_mem_vals.reserve(theta_rows.size());
        for (const auto& t : theta_rows) theta_mem_vals.push_back(t->val.v);
        auto picked = top_k_rows_by_cosine(theta_ctx->val.v, theta_mem_vals, cfg.retrieve_k);
        Var acc = theta_rows[picked[0]];
        for (size_t i = 1; i < picked.size(); ++i) acc = add(acc, theta_rows[picked[i]]);
        Var mem_out = mul_scalar(acc, 1.0 / static_cast<double>(picked.size()));
        Var projected = add_rowvec(matmul(mem_out, proj_w), proj_b);
        return add_rowvec(ctx, projected);
    }
};

// ---------------------------------------------------------------------------
// Checkpoints: magic + version, a JSON header describing config, vocabulary
// and tensor shapes, then raw little-endian doubles in header order.

namespace detail {
constexpr char kCheckpointMagic[8] = {'S', 'S', 'C', 'K', 'P', 'T', '0', '1'};
}

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
    nlohmann::json j;
    j["hidden"] = c.hidden;
    j["layers"] = c.layers;
    j["heads"] = c.heads;
    j["mlp_mult"] = c.mlp_mult;
    j["context_len"] = c.context_len;
    j["memory_rows"] = c.memory_rows;
    j["memory_len"] = c.memory_len;
    j["retrieve_k"] = c.retrieve_k;
    j["variant"] = model_variant_name(c.variant);
    j["memory_mode"] = memory_mode_name(c.memory_mode);
    j["max_decode_len"] = c.max_decode_len;
    j["beam"] = c.beam;
    j["epochs"] = c.epochs;
    j["micro_batch"] = c.micro_batch;
    j["grad_accum"] = c.grad_accum;
    j["lr"] = c.lr;
    j["warmup_steps"] = c.warmup_steps;
    j["seed"] = c.seed;
    return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.hidden = j.at("hidden").get<size_t>();
    c.layers = j.at("layers").get<size_t>();
    c.heads = j.at("heads").get<size_t>();
    c.mlp_mult = j.at("mlp_mult").get<size_t>();
    c.context_len = j.at("context_len").get<size_t>();
    c.memory_rows = j.at("memory_rows").get<size_t>();
    c.memory_len = j.at("memory_len").get<size_t>();
    c.retrieve_k = j.at("retrieve_k").get<size_t>();
    c.variant = *model_variant_from_name(j.at("variant").get<std::string>());
    c.memory_mode = *memory_mode_from_name(j.at("memory_mode").get<std::string>());
    c.max_decode_len = j.at("max_decode_len").get<size_t>();
    c.beam = j.at("beam").get<size_t>();
    c.epochs = j.at("epochs").get<size_t>();
    c.micro_batch = j.at("micro_batch").get<size_t>();
    c.grad_accum = j.at("grad_accum").get<size_t>();
    c.lr = j.at("lr").get<double>();
    c.warmup_steps = j.at("warmup_steps").get<size_t>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

struct CheckpointExtras {
    size_t optimizer_step = 0;
    size_t epochs_done = 0;
    std::string config_hash;
    // Adam moments in parameter order, empty when not saved
    std::vector<Mat> adam_m, adam_v;
};

inline void save_checkpoint(TransformerModel& model, const std::string& path,
                            const CheckpointExtras& extras = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("cannot write checkpoint: " + path);
    auto params = model.parameters();
    nlohmann::json header;
    header["format"] = 1;
    header["config"] = model_config_to_json(model.cfg);
    header["vocab"] = model.vocab.tokens;
    header["window"] = model.vocab.window;
    header["optimizer_step"] = extras.optimizer_step;
    header["epochs_done"] = extras.epochs_done;
    header["config_hash"] = extras.config_hash;
    header["has_moments"] = !extras.adam_m.empty();
    nlohmann::json shapes = nlohmann::json::array();
    for (auto& [name, var] : params) {
        nlohmann::json s;
        s["name"] = name;
        s["rows"] = var->val.rows;
        s["cols"] = var->val.cols;
        shapes.push_back(s);
    }
    header["params"] = shapes;
    std::string header_str = header.dump();
    out.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
    uint64_t len = header_str.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    auto write_mat = [&](const Mat& m) {
        out.write(reinterpret_cast<const char*>(m.v.data()),
                  static_cast<std::streamsize>(m.v.size() * sizeof(double)));
    };
    for (auto& [name, var] : params) {
        (void)name;
        write_mat(var->val);
    }
    if (!extras.adam_m.empty()) {
        if (extras.adam_m.size() != params.size() || extras.adam_v.size() != params.size())
            throw FatalError("checkpoint: moment count does not match parameter count");
        for (const auto& m : extras.adam_m) write_mat(m);
        for (const auto& v : extras.adam_v) write_mat(v);
    }
    if (!out) throw FatalError("checkpoint write failed: " + path);
}

inline TransformerModel load_checkpoint(const std::string& path, CheckpointExtras* extras = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, detail::kCheckpointMagic, sizeof(magic)) != 0)
        throw FatalError("not a checkpoint file: " + path);
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string header_str(len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(len));
    if (!in) throw FatalError("truncated checkpoint header: " + path);
    nlohmann::json header = nlohmann::json::parse(header_str);
    ModelConfig cfg = model_config_from_json(header.at("config"));
    // rebuild the full vocabulary exactly as stored
    Vocab vocab;
    vocab.window = header.at("window").get<int>();
    vocab.tokens = header.at("vocab").get<std::vector<std::string>>();
    for (size_t i = 0; i < vocab.tokens.size(); ++i)
        vocab.index.emplace(vocab.tokens[i], static_cast<int>(i));
    auto require = [&](const std::string& tok) {
        auto it = vocab.index.find(tok);
        if (it == vocab.index.end()) throw FatalError("checkpoint vocabulary missing " + tok);
        return it->second;
    };
    vocab.pad_id = require(SpecialTokens::pad());
    vocab.eos_id = require(SpecialTokens::eos());
    vocab.unk_id = require(SpecialTokens::unk());
    vocab.first_sent_id = require(SpecialTokens::sent(0));
    for (Dim d : kAllDims) vocab.dim_ids[static_cast<size_t>(d)] = require(SpecialTokens::dim(d));
    TransformerModel model(cfg, vocab);
    auto params = model.parameters();
    const auto& shapes = header.at("params");
    if (shapes.size() != params.size()) throw FatalError("checkpoint parameter layout mismatch");
    auto read_mat = [&](Mat& m) {
        in.read(reinterpret_cast<char*>(m.v.data()),
                static_cast<std::streamsize>(m.v.size() * sizeof(double)));
    };
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& s = shapes[i];
        if (s.at("name").get<std::string>() != params[i].first ||
            s.at("rows").get<size_t>() != params[i].second->val.rows ||
            s.at("cols").get<size_t>() != params[i].second->val.cols)
            throw FatalError("checkpoint shape mismatch at " + params[i].first);
        read_mat(params[i].second->val);
    }
    if (extras) {
        extras->optimizer_step = header.value("optimizer_step", size_t{0});
        extras->epochs_done = header.value("epochs_done", size_t{0});
        extras->config_hash = header.value("config_hash", std::string());
        if (header.value("has_moments", false)) {
            extras->adam_m.clear();
            extras->adam_v.clear();
            for (auto& [name, var] : params) {
                (void)name;
                Mat m(var->val.rows, var->val.cols);
                read_mat(m);
                extras->adam_m.push_back(std::move(m));
            }
            for (auto& [name, var] : params) {
                (void)name;
                Mat v(var->val.rows, var->val.cols);
                read_mat(v);
                extras->adam_v.push_back(std::move(v));
            }
        }
    }
    if (!in) throw FatalError("truncated checkpoint tensors: " + path);
    return model;
}

} // namespace storysense
