#include "promptsearch/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Prompt optimization for two-class news verification: searches the space of "
                 "task prompts with model-generated critiques and rewrites, scoring candidates "
                 "by validation accuracy."};
    app.require_subcommand(1);

    // optimize
    std::string opt_config;
    std::optional<std::uint64_t> opt_seed;
    std::optional<std::string> opt_out;
    CLI::App* optimize = app.add_subcommand("optimize", "Run the prompt search");
    optimize->add_option("--config", opt_config, "Run configuration JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    optimize->add_option("--seed", opt_seed, "Override search.rng_seed");
    optimize->add_option("--out", opt_out, "Override output_dir");

    // eval
    std::string eval_prompt, eval_dataset;
    std::optional<double> eval_fraction;
    std::optional<std::uint64_t> eval_seed;
    std::optional<std::string> eval_config;
    CLI::App* eval = app.add_subcommand("eval", "Score one prompt on a dataset");
    eval->add_option("--prompt", eval_prompt, "Prompt text file")->required();
    eval->add_option("--dataset", eval_dataset, "Dataset JSONL file")->required();
    eval->add_option("--fraction", eval_fraction, "Evaluate a sampled fraction (0,1]");
    eval->add_option("--seed", eval_seed, "Sampling seed (with --fraction)");
    eval->add_option("--config", eval_config, "Run configuration JSON for model roles");

    // comment
    std::string com_prompt, com_dataset, com_out;
    std::optional<std::string> com_config;
    CLI::App* comment = app.add_subcommand("comment", "Write verdict+reason records");
    comment->add_option("--prompt", com_prompt, "Prompt text file")->required();
    comment->add_option("--dataset", com_dataset, "Dataset JSONL file")->required();
    comment->add_option("--out", com_out, "Output JSONL path")->required();
    comment->add_option("--config", com_config, "Run configuration JSON for model roles");

    // report
    std::string rep_tree;
    CLI::App* report = app.add_subcommand("report", "Print a checkpoint summary");
    report->add_option("--tree", rep_tree, "Checkpoint tree.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return promptsearch::cli::kExitUsage;
    }

    if (optimize->parsed())
        return promptsearch::cli::cmd_optimize(opt_config, opt_seed, opt_out);
    if (eval->parsed())
        return promptsearch::cli::cmd_eval(eval_prompt, eval_dataset, eval_fraction, eval_seed,
                                           eval_config);
    if (comment->parsed())
        return promptsearch::cli::cmd_comment(com_prompt, com_dataset, com_out, com_config);
    if (report->parsed()) return promptsearch::cli::cmd_report(rep_tree);
    return promptsearch::cli::kExitUsage;
}
