#pragma once
// Run configuration shared by the CLI subcommands. Values merge in order:
// built-in defaults, then a key=value config file, then command-line flags.
// Every output artifact embeds the canonical config hash.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "kb.hpp"
#include "model.hpp"
#include "supervision.hpp"
#include "text.hpp"

namespace storysense {

struct RunConfig {
    // paths
    std::string kb_path;
    std::string kb_format = "tsv";  // tsv | jsonl
    std::string stories_path;
    std::string out_dir = ".";
    std::string silver_path;
    std::string checkpoint_path;
    std::string resume_path;
    std::string inferences_path;
    std::string gold_path;
    std::string annotations_path;
    std::string plot_dir;
    std::string nli = "overlap";  // overlap | neutral | entailment | contradiction

    SupervisionConfig sup;
    SplitRatios ratios;
    int window = 5;
    ModelConfig model;
    size_t lm_order = 3;  // reference coherence scorer
    double novelty_threshold = 0.95;
    bool novelty_include_heads = false;
    size_t metric_beam = 10;  // beam depth consumed by evaluation
    std::string baseline_method = "knn";  // knn | sentgen
    size_t knn_k = 1;
    size_t embed_dim = 256;
    // corpus slice a command works on: train|dev|test|all; empty means the
    // command default (train for build-supervision, all elsewhere)
    std::string split;
    // decode-time override of the checkpoint's variant; empty keeps it
    std::string variant_override;
    // dimension template prefixes; standard table unless overridden for
    // another knowledge base
    TemplateTable templates = TemplateTable::standard();
    uint64_t seed = 0;
};

inline nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["kb_path"] = c.kb_path;
    j["kb_format"] = c.kb_format;
    j["stories_path"] = c.stories_path;
    j["out_dir"] = c.out_dir;
    j["silver_path"] = c.silver_path;
    j["checkpoint_path"] = c.checkpoint_path;
    j["supervision"] = {{"mode", supervision_mode_name(c.sup.mode)},
                        {"top_n", c.sup.top_n},
                        {"keep", c.sup.keep},
                        {"batch", c.sup.batch},
                        {"workers", c.sup.workers}};
    j["ratios"] = {c.ratios.train, c.ratios.dev, c.ratios.test};
    j["window"] = c.window;
    j["model"] = model_config_to_json(c.model);
    j["lm_order"] = c.lm_order;
    j["novelty_threshold"] = c.novelty_threshold;
    j["novelty_include_heads"] = c.novelty_include_heads;
    j["metric_beam"] = c.metric_beam;
    j["baseline_method"] = c.baseline_method;
    j["knn_k"] = c.knn_k;
    j["embed_dim"] = c.embed_dim;
    j["nli"] = c.nli;
    j["split"] = c.split;
    j["variant_override"] = c.variant_override;
    nlohmann::json templates;
    for (Dim d : kAllDims) templates[dim_name(d)] = c.templates.prefix[static_cast<size_t>(d)];
    j["templates"] = templates;
    j["seed"] = c.seed;
    return j;
}

// Worker count is a throughput knob and must not change artifact bytes, so it
// stays out of the hash.
inline std::string config_hash(const RunConfig& c) {
    auto j = run_config_to_json(c);
    j["supervision"].erase("workers");
    return hex64(fnv1a64(j.dump()));
}

// key=value lines, '#' comments. Keys are dotted paths matching the CLI
// flags; unknown keys are rejected.
inline void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    auto parse_u64 = [&](const std::string& v) -> uint64_t {
        try {
            return std::stoull(v);
        } catch (...) {
            throw ConfigError("invalid integer for " + key + ": " + v);
        }
    };
    auto parse_f = [&](const std::string& v) -> double {
        try {
            return std::stod(v);
        } catch (...) {
            throw ConfigError("invalid number for " + key + ": " + v);
        }
    };
    if (key == "kb_path") c.kb_path = value;
    else if (key == "kb_format") c.kb_format = value;
    else if (key == "stories_path") c.stories_path = value;
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "silver_path") c.silver_path = value;
    else if (key == "checkpoint_path") c.checkpoint_path = value;
    else if (key == "supervision.mode") {
        auto m = supervision_mode_from_name(value);
        if (!m) throw ConfigError("unknown supervision mode: " + value);
        c.sup.mode = *m;
    } else if (key == "supervision.top_n") c.sup.top_n = parse_u64(value);
    else if (key == "supervision.keep") c.sup.keep = parse_u64(value);
    else if (key == "supervision.batch") c.sup.batch = parse_u64(value);
    else if (key == "supervision.workers") c.sup.workers = parse_u64(value);
    else if (key == "window") c.window = static_cast<int>(parse_u64(value));
    else if (key == "ratios.train") c.ratios.train = parse_f(value);
    else if (key == "ratios.dev") c.ratios.dev = parse_f(value);
    else if (key == "ratios.test") c.ratios.test = parse_f(value);
    else if (key == "model.hidden") c.model.hidden = parse_u64(value);
    else if (key == "model.layers") c.model.layers = parse_u64(value);
    else if (key == "model.heads") c.model.heads = parse_u64(value);
    else if (key == "model.context_len") c.model.context_len = parse_u64(value);
    else if (key == "model.memory_rows") c.model.memory_rows = parse_u64(value);
    else if (key == "model.memory_len") c.model.memory_len = parse_u64(value);
    else if (key == "model.retrieve_k") c.model.retrieve_k = parse_u64(value);
    else if (key == "model.variant") {
        auto v = model_variant_from_name(value);
        if (!v) throw ConfigError("unknown model variant: " + value);
        c.model.variant = *v;
    } else if (key == "model.memory_mode") {
        auto m = memory_mode_from_name(value);
        if (!m) throw ConfigError("unknown memory mode: " + value);
        c.model.memory_mode = *m;
    } else if (key == "model.max_decode_len") c.model.max_decode_len = parse_u64(value);
    else if (key == "model.beam") c.model.beam = parse_u64(value);
    else if (key == "model.epochs") c.model.epochs = parse_u64(value);
    else if (key == "model.micro_batch") c.model.micro_batch = parse_u64(value);
    else if (key == "model.grad_accum") c.model.grad_accum = parse_u64(value);
    else if (key == "model.lr") c.model.lr = parse_f(value);
    else if (key == "model.warmup_steps") c.model.warmup_steps = parse_u64(value);
    else if (key == "lm_order") c.lm_order = parse_u64(value);
    else if (key == "novelty_threshold") c.novelty_threshold = parse_f(value);
    else if (key == "novelty_include_heads") c.novelty_include_heads = (value == "true" || value == "1");
    else if (key == "metric_beam") c.metric_beam = parse_u64(value);
    else if (key == "baseline_method") c.baseline_method = value;
    else if (key == "knn_k") c.knn_k = parse_u64(value);
    else if (key == "embed_dim") c.embed_dim = parse_u64(value);
    else if (key == "nli") c.nli = value;
    else if (key == "split") c.split = value;
    else if (key == "variant_override") c.variant_override = value;
    else if (key.rfind("template.", 0) == 0) {
        auto d = dim_from_name(key.substr(9));
        if (!d) throw ConfigError("unknown dimension in " + key);
        // a template prefix must end in ": "; the file format strips trailing
        // whitespace, so accept a bare colon and restore the space
        auto prefix = value;
        if (!prefix.empty() && prefix.back() == ':') prefix += ' ';
        c.templates.prefix[static_cast<size_t>(*d)] = prefix;
        c.templates.validate();
    } else if (key == "seed") c.seed = parse_u64(value);
    else throw ConfigError("unknown config key: " + key);
}

inline void apply_config_file(const std::string& path, RunConfig& c) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        auto stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed config line: " + line);
        apply_config_entry(c, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
}

// Constant conformance self-test over the documented defaults. Returns
// violation descriptions; empty means conformant.
inline std::vector<std::string> default_constant_violations() {
    std::vector<std::string> bad;
    RunConfig c;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) bad.push_back(what);
    };
    expect(c.sup.top_n == 10, "supervision top_n default must be 10");
    expect(c.sup.keep == 5, "supervision keep default must be 5");
    expect(c.sup.batch == 130, "scoring batch default must be 130");
    expect(c.model.memory_rows == 45, "memory rows default must be 45");
    expect(c.model.memory_len == 100, "memory sequence length default must be 100");
    expect(c.model.retrieve_k == 1, "memory retrieve_k default must be 1");
    expect(ModelConfig::kBeamOptions[0] == 1 && ModelConfig::kBeamOptions[1] == 10,
           "beam options must be {1, 10}");
    expect(c.model.max_decode_len == 50, "max decode length default must be 50");
    expect(c.model.micro_batch == 4, "actual batch default must be 4");
    expect(c.model.micro_batch * c.model.grad_accum == 16, "simulated batch default must be 16");
    expect(c.model.epochs == 20, "maximum epochs default must be 20");
    expect(c.ratios.train == 0.90 && c.ratios.dev == 0.05 && c.ratios.test == 0.05,
           "split ratios default must be 90/5/5");
    expect(c.novelty_threshold == 0.95, "novelty threshold default must be 0.95");
    expect(c.window == 5, "story window default must be 5");
    // both documented beam values must validate
    for (size_t b : ModelConfig::kBeamOptions) {
        ModelConfig m;
        m.beam = b;
        try {
            m.validate();
        } catch (...) {
            bad.push_back("beam " + std::to_string(b) + " must validate");
        }
    }
    return bad;
}

} // namespace storysense
