// storysense command-line front end.
//
// Subcommands: build-kb, build-supervision, train, generate, baseline,
// evaluate. Options merge over an optional key=value config file; flags win.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <storysense/storysense.hpp>

namespace ss = storysense;

namespace {

void add_common(CLI::App* cmd, ss::RunConfig& cfg, std::string& config_file) {
    cmd->add_option("--config", config_file, "key=value config file (flags override it)");
    cmd->add_option("--seed", cfg.seed, "run seed");
    cmd->add_option("--out-dir", cfg.out_dir, "output directory");
    cmd->add_option("--window", cfg.window, "story window T (sentences)");
    cmd->add_option("--split", cfg.split, "corpus slice: train|dev|test|all");
}

int run(int argc, char** argv) {
    CLI::App app{"discourse-aware commonsense inference toolkit"};
    app.require_subcommand(1);

    ss::RunConfig cfg;
    std::string config_file;

    auto* build_kb = app.add_subcommand("build-kb", "load, validate and index a knowledge base");
    build_kb->add_option("--kb", cfg.kb_path, "knowledge base file")->required();
    build_kb->add_option("--kb-format", cfg.kb_format, "tsv or jsonl");
    add_common(build_kb, cfg, config_file);

    auto* build_sup = app.add_subcommand("build-supervision", "build the silver training corpus");
    build_sup->add_option("--kb", cfg.kb_path, "knowledge base file")->required();
    build_sup->add_option("--kb-format", cfg.kb_format, "tsv or jsonl");
    build_sup->add_option("--stories", cfg.stories_path, "stories file")->required();
    std::string mode;
    build_sup->add_option("--mode", mode, "heuristic, model or both")
        ->check(CLI::IsMember({"heuristic", "model", "both"}));
    build_sup->add_option("--top-n", cfg.sup.top_n, "candidates per sentence/dimension");
    build_sup->add_option("--keep", cfg.sup.keep, "survivors per sentence/dimension");
    build_sup->add_option("--batch", cfg.sup.batch, "scoring batch size");
    build_sup->add_option("--workers", cfg.sup.workers, "parallel story workers");
    build_sup->add_option("--lm-order", cfg.lm_order, "reference scorer n-gram order");
    build_sup->add_option("--silver", cfg.silver_path, "output silver file");
    add_common(build_sup, cfg, config_file);

    auto* train = app.add_subcommand("train", "train the generation model on silver data");
    train->add_option("--silver", cfg.silver_path, "silver dataset")->required();
    train->add_option("--stories", cfg.stories_path, "stories file")->required();
    train->add_option("--checkpoint", cfg.checkpoint_path, "output checkpoint");
    train->add_option("--resume", cfg.resume_path, "checkpoint to resume from");
    std::string variant;
    train->add_option("--variant", variant, "memoryless or memory")
        ->check(CLI::IsMember({"memoryless", "memory"}));
    std::string memory_mode;
    train->add_option("--memory-mode", memory_mode, "train+decode or train-only")
        ->check(CLI::IsMember({"train+decode", "train-only"}));
    train->add_option("--epochs", cfg.model.epochs, "training epochs");
    train->add_option("--lr", cfg.model.lr, "learning rate");
    train->add_option("--warmup", cfg.model.warmup_steps, "linear warmup steps");
    train->add_option("--hidden", cfg.model.hidden, "hidden size");
    train->add_option("--layers", cfg.model.layers, "transformer layers");
    train->add_option("--heads", cfg.model.heads, "attention heads");
    train->add_option("--context-len", cfg.model.context_len, "max context length");
    train->add_option("--memory-rows", cfg.model.memory_rows, "memory capacity R^m");
    train->add_option("--memory-len", cfg.model.memory_len, "memory row length L^r");
    train->add_option("--retrieve-k", cfg.model.retrieve_k, "memory retrieval k");
    add_common(train, cfg, config_file);

    auto* generate = app.add_subcommand("generate", "decode inferences for every sentence and dimension");
    generate->add_option("--checkpoint", cfg.checkpoint_path, "trained checkpoint")->required();
    generate->add_option("--stories", cfg.stories_path, "stories file")->required();
    generate->add_option("--beam", cfg.model.beam, "beam size (1 or 10)");
    generate->add_option("--variant", cfg.variant_override, "override the checkpoint variant")
        ->check(CLI::IsMember({"memoryless", "memory"}));
    generate->add_option("--inferences", cfg.inferences_path, "output inferences file");
    add_common(generate, cfg, config_file);

    auto* baseline = app.add_subcommand("baseline", "run a reference comparison system");
    baseline->add_option("--kb", cfg.kb_path, "knowledge base file")->required();
    baseline->add_option("--kb-format", cfg.kb_format, "tsv or jsonl");
    baseline->add_option("--stories", cfg.stories_path, "stories file")->required();
    baseline->add_option("--method", cfg.baseline_method, "knn or sentgen")
        ->check(CLI::IsMember({"knn", "sentgen"}));
    baseline->add_option("--knn-k", cfg.knn_k, "nearest neighbors");
    baseline->add_option("--beam", cfg.model.beam, "sentgen beam size");
    baseline->add_option("--embed-dim", cfg.embed_dim, "embedding dimension");
    add_common(baseline, cfg, config_file);

    auto* evaluate = app.add_subcommand("evaluate", "score generated inferences");
    evaluate->add_option("--inferences", cfg.inferences_path, "decode or baseline output")->required();
    evaluate->add_option("--gold", cfg.gold_path, "gold references")->required();
    evaluate->add_option("--kb", cfg.kb_path, "knowledge base file")->required();
    evaluate->add_option("--kb-format", cfg.kb_format, "tsv or jsonl");
    evaluate->add_option("--stories", cfg.stories_path, "stories file (enables NLI)");
    evaluate->add_option("--annotations", cfg.annotations_path, "human annotation file");
    evaluate->add_option("--nli", cfg.nli, "overlap, neutral, entailment, contradiction or none");
    evaluate->add_option("--metric-beam", cfg.metric_beam, "beam depth consumed by metrics");
    evaluate->add_option("--novelty-threshold", cfg.novelty_threshold, "similarity threshold");
    evaluate->add_flag("--novelty-include-heads", cfg.novelty_include_heads,
                       "compare against head events too");
    evaluate->add_option("--plot", cfg.plot_dir, "emit label-distribution charts to this directory");
    add_common(evaluate, cfg, config_file);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!config_file.empty()) {
            // file first, then re-apply flags on top
            ss::RunConfig merged;
            ss::apply_config_file(config_file, merged);
            std::swap(cfg, merged);
            app.clear();
            app.parse(argc, argv);
        }
        if (build_sup->parsed() && !mode.empty()) cfg.sup.mode = *ss::supervision_mode_from_name(mode);
        if (train->parsed() && !variant.empty())
            cfg.model.variant = *ss::model_variant_from_name(variant);
        if (train->parsed() && !memory_mode.empty())
            cfg.model.memory_mode = *ss::memory_mode_from_name(memory_mode);

        if (build_kb->parsed()) {
            auto r = ss::cmd_build_kb(cfg);
            std::cout << "kb: " << r.triples << " triples (" << r.skipped << " skipped), "
                      << r.unique_events << " unique events, " << r.phrases
                      << " indexed phrases -> " << r.out_path << "\n";
        } else if (build_sup->parsed()) {
            auto r = ss::cmd_build_supervision(cfg);
            std::cout << "supervision: " << r.stats.stories << " stories, "
                      << r.stats.heuristic_candidates << " heuristic + " << r.stats.model_candidates
                      << " model candidates, " << r.stats.scored << " scored ("
                      << r.stats.score_failures << " failures), " << r.stats.kept << " kept -> "
                      << r.out_path << "\n";
            for (const auto& err : r.stats.generator_errors) std::cerr << "warning: " << err << "\n";
        } else if (train->parsed()) {
            auto r = ss::cmd_train(cfg);
            std::cout << "train: " << r.report.examples << " examples, "
                      << r.report.epoch_losses.size() << " epochs, " << r.report.optimizer_steps
                      << " steps (total " << r.optimizer_step << "), final loss "
                      << (r.report.epoch_losses.empty() ? 0.0 : r.report.epoch_losses.back())
                      << " -> " << r.checkpoint_path << "\n";
        } else if (generate->parsed()) {
            auto r = ss::cmd_generate(cfg);
            if (r.skipped_stories)
                std::cerr << "warning: skipped " << r.skipped_stories << " malformed stories\n";
            std::cout << "generate: " << r.stories << " stories, " << r.records << " records";
            if (r.truncated_inputs) std::cout << " (" << r.truncated_inputs << " truncated inputs)";
            std::cout << " -> " << r.out_path << "\n";
        } else if (baseline->parsed()) {
            auto r = ss::cmd_baseline(cfg);
            std::cout << "baseline(" << cfg.baseline_method << "): " << r.records << " records -> "
                      << r.out_path << "\n";
        } else if (evaluate->parsed()) {
            auto r = ss::cmd_evaluate(cfg);
            std::cout << ss::render_report_table(r.report);
            std::cout << "report -> " << r.report_path << "\n";
            for (const auto& p : r.plot_paths) std::cout << "plot -> " << p << "\n";
        }
    } catch (const ss::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CLI::ParseError&) {
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
