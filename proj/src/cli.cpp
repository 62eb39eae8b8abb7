#include "promptsearch/cli.hpp"

#include "promptsearch/checkpoint.hpp"
#include "promptsearch/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

namespace promptsearch::cli {

namespace {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const TemplateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DatasetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CheckpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

std::string read_prompt_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("(prompt)", "cannot open prompt file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    if (text.empty()) throw ConfigError("(prompt)", "prompt file is empty: " + path);
    return text;
}

/// Roles for eval/comment without a config file: the deterministic
/// affirmative stand-in, so the commands work offline out of the box.
RunConfig standalone_config() {
    RunConfig config;
    for (Role role : {Role::base, Role::actor, Role::optimizer}) {
        LLMRoleConfig rc = default_role_config(role);
        rc.backend = BackendKind::scripted;
        rc.script = "always_true";
        config.roles[role] = rc;
    }
    return config;
}

RunConfig config_or_standalone(const std::optional<std::string>& config_path) {
    return config_path ? load_run_config(*config_path) : standalone_config();
}

std::string fixed6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << content;
    if (!out) throw Error("write failed: " + path);
}

std::string render_report_md(const SearchResult& result) {
    std::string md;
    md += "# Prompt search report\n\n";
    md += "- validation samples: " + std::to_string(result.validation_ids.size()) + "\n";
    md += "- nodes: " + std::to_string(result.tree.node_count()) + "\n";
    md += "- completed iterations: " + std::to_string(result.tree.trajectories.size()) + "\n";
    md += "- best reward: " + fixed6(result.best.cached_reward.value_or(0.0)) +
          " (state " + std::to_string(result.best.state_id) + ", depth " +
          std::to_string(result.best.depth) + ")\n";
    if (result.aborted) md += "- aborted: " + result.abort_reason + "\n";
    md += "\n## Epochs\n\n";
    md += "| epoch | path reward | best reward | nodes | max depth |\n";
    md += "|---|---|---|---|---|\n";
    for (const EpochLog& log : result.epoch_log)
        md += "| " + std::to_string(log.epoch) + " | " + fixed6(log.path_final_reward) +
              " | " + fixed6(log.best_reward) + " | " + std::to_string(log.node_count) +
              " | " + std::to_string(log.max_depth) + " |\n";
    md += "\n## Model calls\n\n";
    md += "| role | requests | backend calls | cache hits |\n";
    md += "|---|---|---|---|\n";
    for (const auto& [role, stats] : result.call_stats)
        md += "| " + role + " | " + std::to_string(stats.requests) + " | " +
              std::to_string(stats.backend_calls) + " | " + std::to_string(stats.cache_hits) +
              " |\n";
    md += "\n## Best prompt\n\n";
    md += result.best.text + "\n";
    return md;
}

}  // namespace

int cmd_optimize(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::optional<std::string>& out_dir) {
    return guarded([&] {
        RunConfig config = load_run_config(config_path);
        if (seed) config.search.rng_seed = *seed;
        if (out_dir) config.output_dir = *out_dir;
        if (config.dataset_path.empty())
            throw ConfigError("dataset_path", "required for optimize");
        config.search.validate();

        const Dataset dataset = load_dataset(config.dataset_path);
        const TemplateSet templates = templates_for(config);
        std::unique_ptr<Gateway> gateway = make_gateway(config);

        std::error_code ec;
        fs::create_directories(config.output_dir, ec);
        if (ec)
            throw ConfigError("output_dir",
                              "cannot create '" + config.output_dir + "': " + ec.message());

        SearchResult result = run_search(config.search, dataset, *gateway, templates);

        const fs::path out(config.output_dir);
        write_text_file((out / "best_prompt.txt").string(), result.best.text + "\n");
        save_checkpoint(result, (out / "tree.json").string());
        write_text_file((out / "report.md").string(), render_report_md(result));

        if (result.aborted) {
            std::cerr << "search aborted: " << result.abort_reason << "\n"
                      << "partial checkpoint written to " << (out / "tree.json").string()
                      << "\n";
            return kExitRuntime;
        }
        std::cout << "best reward " << fixed6(result.best.cached_reward.value_or(0.0))
                  << " after " << result.tree.trajectories.size() << " iterations; artifacts in "
                  << config.output_dir << "\n";
        return kExitOk;
    });
}

int cmd_eval(const std::string& prompt_path, const std::string& dataset_path,
             std::optional<double> fraction, std::optional<std::uint64_t> seed,
             const std::optional<std::string>& config_path) {
    return guarded([&] {
        const std::string prompt = read_prompt_file(prompt_path);
        Dataset dataset = load_dataset(dataset_path);
        if (fraction) dataset = sample_validation(dataset, *fraction, seed.value_or(0));

        RunConfig config = config_or_standalone(config_path);
        const TemplateSet templates = templates_for(config);
        std::unique_ptr<Gateway> gateway = make_gateway(config);

        EvalOptions options;
        options.mode = EvalMode::single;
        options.collect_errors = false;
        EvalReport report =
            evaluate_prompt(*gateway, templates, prompt, dataset.samples, options);

        ordered_json out;
        out["accuracy"] = report.accuracy;
        out["correct"] = report.correct;
        out["total"] = report.total;
        out["malformed"] = report.malformed_count;
        std::cout << out.dump() << "\n";
        return kExitOk;
    });
}

int cmd_comment(const std::string& prompt_path, const std::string& dataset_path,
                const std::string& out_path, const std::optional<std::string>& config_path) {
    return guarded([&] {
        const std::string prompt = read_prompt_file(prompt_path);
        const Dataset dataset = load_dataset(dataset_path);

        RunConfig config = config_or_standalone(config_path);
        const TemplateSet templates = templates_for(config);
        std::unique_ptr<Gateway> gateway = make_gateway(config);

        std::vector<CommentRecord> records;
        try {
            records = generate_comments(*gateway, templates, prompt, dataset.samples,
                                        static_cast<std::size_t>(config.search.batch_size));
        } catch (...) {
            std::error_code ec;
            fs::remove(out_path, ec);  // never leave a truncated export behind
            throw;
        }

        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw ConfigError("(out)", "cannot write comment file: " + out_path);
        for (const CommentRecord& record : records) {
            ordered_json line;
            line["id"] = record.id;
            line["result"] = record.result;
            line["reason"] = record.reason;
            out << line.dump() << "\n";
        }
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(out_path, ec);
            throw Error("write failed: " + out_path);
        }
        std::cout << records.size() << " comment records written to " << out_path << "\n";
        return kExitOk;
    });
}

int cmd_report(const std::string& tree_path) {
    return guarded([&] {
        const SearchResult result = load_checkpoint(tree_path);

        std::cout << "tree: " << result.tree.node_count() << " nodes, "
                  << result.tree.trajectories.size() << " trajectories, seed "
                  << result.config.rng_seed << "\n";
        std::cout << "best state: id " << result.best.state_id << ", depth "
                  << result.best.depth << ", reward "
                  << fixed6(result.best.cached_reward.value_or(0.0)) << "\n";

        // Chain from the root down to the best state.
        const SearchNode* best = result.tree.find(result.best.state_id);
        std::vector<const SearchNode*> chain;
        for (const SearchNode* cur = best; cur != nullptr; cur = cur->parent)
            chain.push_back(cur);
        std::reverse(chain.begin(), chain.end());

        std::cout << "path:\n";
        std::cout << "  depth 0: root (visits " << chain.front()->visit_count << ", reward "
                  << fixed6(chain.front()->state.cached_reward.value_or(0.0)) << ")\n";
        for (std::size_t i = 1; i < chain.size(); ++i) {
            const SearchNode* child = chain[i];
            const ChildEdge* edge = chain[i - 1]->edge(*child->state.parent_action);
            std::cout << "  depth " << child->state.depth << ": action "
                      << edge->action.action_id << " Q " << fixed6(edge->q) << " r "
                      << fixed6(edge->reward) << " visits " << child->visit_count << "\n";
        }
        std::cout << "best prompt:\n" << result.best.text << "\n";
        return kExitOk;
    });
}

}  // namespace promptsearch::cli
