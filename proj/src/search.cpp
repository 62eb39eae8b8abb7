#include "promptsearch/search.hpp"

#include <algorithm>
#include <cmath>

namespace promptsearch {

namespace {

std::string join_blocks(const std::vector<std::string>& blocks) {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) out += "\n\n";
        out += blocks[i];
    }
    return out;
}

std::vector<std::string> path_prompts(const SearchNode& node) {
    std::vector<std::string> prompts;
    for (const SearchNode* cur = &node; cur != nullptr; cur = cur->parent)
        prompts.push_back(cur->state.text);
    std::reverse(prompts.begin(), prompts.end());
    return prompts;
}

}  // namespace

void SearchConfig::validate() const {
    if (depth_limit < 1) throw ConfigError("search.depth_limit", "must be >= 1");
    if (epochs < 1) throw ConfigError("search.epochs", "must be >= 1");
    if (expand_width < 1) throw ConfigError("search.expand_width", "must be >= 1");
    if (resample_width < 0) throw ConfigError("search.resample_width", "must be >= 0");
    if (!(exploration_weight >= 0.0) || !std::isfinite(exploration_weight))
        throw ConfigError("search.exploration_weight", "must be a finite value >= 0");
    if (early_stop_reward &&
        (!(*early_stop_reward >= 0.0) || !(*early_stop_reward <= 1.0)))
        throw ConfigError("search.early_stop_reward", "must lie in [0, 1]");
    if (summarize_threshold < 1) throw ConfigError("search.summarize_threshold", "must be >= 1");
    if (batch_size < 1) throw ConfigError("search.batch_size", "must be >= 1");
    if (!(validation_fraction > 0.0) || !(validation_fraction <= 1.0))
        throw ConfigError("search.validation_fraction", "must lie in (0, 1]");
}

const ChildEdge* SearchNode::edge(std::uint64_t action_id) const {
    for (const ChildEdge& e : children)
        if (e.action.action_id == action_id) return &e;
    return nullptr;
}

ChildEdge* SearchNode::edge(std::uint64_t action_id) {
    return const_cast<ChildEdge*>(static_cast<const SearchNode*>(this)->edge(action_id));
}

SearchNode* SearchTree::find(std::uint64_t state_id) {
    auto it = index_.find(state_id);
    return it == index_.end() ? nullptr : it->second;
}

const SearchNode* SearchTree::find(std::uint64_t state_id) const {
    auto it = index_.find(state_id);
    return it == index_.end() ? nullptr : it->second;
}

void SearchTree::index_node(SearchNode* node) { index_[node->state.state_id] = node; }

std::vector<SearchNode*> SearchTree::nodes_in_order() {
    std::vector<SearchNode*> nodes;
    nodes.reserve(index_.size());
    for (auto& [id, node] : index_) nodes.push_back(node);
    std::sort(nodes.begin(), nodes.end(), [](const SearchNode* a, const SearchNode* b) {
        return a->state.state_id < b->state.state_id;
    });
    return nodes;
}

std::vector<const SearchNode*> SearchTree::nodes_in_order() const {
    std::vector<const SearchNode*> nodes;
    nodes.reserve(index_.size());
    for (const auto& [id, node] : index_) nodes.push_back(node);
    std::sort(nodes.begin(), nodes.end(), [](const SearchNode* a, const SearchNode* b) {
        return a->state.state_id < b->state.state_id;
    });
    return nodes;
}

SearchTree SearchTree::with_root(PromptState root_state) {
    SearchTree tree;
    tree.root = std::make_unique<SearchNode>();
    tree.root->state = std::move(root_state);
    tree.ids.next_state = tree.root->state.state_id + 1;
    tree.index_node(tree.root.get());
    return tree;
}

std::uint64_t uct_select(const SearchNode& node, double k) {
    if (node.children.empty())
        throw SearchError("uct_select: node " + std::to_string(node.state.state_id) +
                          " has no children");
    // Unvisited children outrank every scored child, earliest first.
    for (const ChildEdge& e : node.children)
        if (e.child->visit_count == 0) return e.action.action_id;

    const double log_n = std::log(static_cast<double>(node.visit_count));
    const ChildEdge* best = nullptr;
    double best_score = 0.0;
    for (const ChildEdge& e : node.children) {
        const double score =
            e.q + k * std::sqrt(log_n / static_cast<double>(e.child->visit_count));
        if (best == nullptr || score > best_score) {
            best = &e;
            best_score = score;
        }
    }
    return best->action.action_id;
}

SearchNode* greedy_advance(const std::vector<SearchNode*>& children) {
    if (children.empty()) throw SearchError("greedy_advance: no children");
    SearchNode* best = nullptr;
    for (SearchNode* child : children) {
        if (!child->state.cached_reward)
            throw SearchError("greedy_advance: child " +
                              std::to_string(child->state.state_id) + " is unevaluated");
        if (best == nullptr || *child->state.cached_reward > *best->state.cached_reward)
            best = child;
    }
    return best;
}

std::optional<double> recompute_edge_q(const SearchTree& tree, std::uint64_t state_id,
                                       std::uint64_t action_id) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Trajectory& trajectory : tree.trajectories) {
        for (std::size_t t = 0; t < trajectory.size(); ++t) {
            if (trajectory[t].state_id != state_id || trajectory[t].action_id != action_id)
                continue;
            double suffix = 0.0;
            for (std::size_t u = t; u < trajectory.size(); ++u) suffix += trajectory[u].reward;
            sum += suffix;
            ++count;
            break;  // an edge occurs at most once per root-to-leaf path
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

void backpropagate(SearchTree& tree, Trajectory trajectory) {
    if (trajectory.empty()) throw SearchError("backpropagate: empty trajectory");
    for (const TrajectoryStep& step : trajectory) {
        SearchNode* node = tree.find(step.state_id);
        if (node == nullptr)
            throw SearchError("backpropagate: unknown state " + std::to_string(step.state_id));
        if (node->edge(step.action_id) == nullptr)
            throw SearchError("backpropagate: state " + std::to_string(step.state_id) +
                              " has no action " + std::to_string(step.action_id));
    }

    tree.trajectories.push_back(std::move(trajectory));
    const Trajectory& added = tree.trajectories.back();
    for (const TrajectoryStep& step : added) {
        SearchNode* node = tree.find(step.state_id);
        node->visit_count += 1;
        node->edge(step.action_id)->q = *recompute_edge_q(tree, step.state_id, step.action_id);
    }
}

const SearchNode* select_best_prompt(const SearchTree& tree) {
    const SearchNode* best = nullptr;
    for (const SearchNode* node : tree.nodes_in_order()) {
        if (!node->state.cached_reward) continue;
        if (best == nullptr) {
            best = node;
            continue;
        }
        const double r = *node->state.cached_reward;
        const double best_r = *best->state.cached_reward;
        if (r > best_r || (r == best_r && node->state.depth < best->state.depth)) best = node;
    }
    if (best == nullptr) throw SearchError("select_best_prompt: no evaluated state");
    return best;
}

RewardCache::RewardCache(Gateway& gateway, const TemplateSet& templates,
                         std::vector<LabeledSample> samples, std::size_t batch_size)
    : gateway_(gateway), templates_(templates), samples_(std::move(samples)),
      batch_size_(batch_size) {}

const EvalReport& RewardCache::report_for(const std::string& prompt_text) {
    auto it = reports_.find(prompt_text);
    if (it != reports_.end()) return it->second;
    EvalOptions options;
    options.mode = EvalMode::batch_eval;
    options.batch_size = batch_size_;
    options.collect_errors = true;
    options.error_cap = batch_size_;
    EvalReport report = evaluate_prompt(gateway_, templates_, prompt_text, samples_, options);
    return reports_.emplace(prompt_text, std::move(report)).first->second;
}

double RewardCache::reward_for(const std::string& prompt_text) {
    return report_for(prompt_text).accuracy;
}

std::vector<SearchNode*> expand_node(SearchTree& tree, SearchNode& node,
                                     const SearchConfig& config, MemoryBank& memory,
                                     Gateway& gateway, const TemplateSet& templates,
                                     RewardCache& rewards, int epoch) {
    if (!node.children.empty())
        throw SearchError("expand_node: node " + std::to_string(node.state.state_id) +
                          " is not a leaf");
    if (node.state.depth >= config.depth_limit)
        throw SearchError("expand_node: node " + std::to_string(node.state.state_id) +
                          " is at the depth limit");

    const EvalReport& report = rewards.report_for(node.state.text);
    node.state.cached_reward = report.accuracy;
    if (report.error_strings.empty()) {
        node.terminal = true;  // nothing left to criticize
        return {};
    }

    std::vector<ActionEdge> actions = generate_actions(
        node.state, report.error_strings, config.expand_width, gateway, templates, tree.ids);

    if (config.use_memory) {
        for (const ActionEdge& action : actions)
            memory.record_feedback(action.feedback_text, epoch);
        memory.maybe_summarize(gateway, Role::actor, templates,
                               static_cast<std::size_t>(config.summarize_threshold));
    }

    TransitionContext ctx;
    ctx.trajectory_prompts = path_prompts(node);
    ctx.memory_guidance =
        config.use_memory
            ? memory.guidance_text(static_cast<std::size_t>(config.summarize_threshold))
            : "";
    ctx.steps_per_gradient = 1;
    ctx.error_strings_text = join_blocks(report.error_strings);

    // Children are fully built before the first tree mutation, so a backend
    // failure part-way leaves the tree as it was.
    struct Pending {
        ActionEdge action;
        PromptState state;
        double reward = 0.0;
    };
    std::vector<Pending> pending;
    for (ActionEdge& action : actions) {
        std::vector<PromptState> states;
        try {
            states = apply_transition(node.state, action, ctx, gateway, templates, tree.ids);
        } catch (const ExpansionError&) {
            continue;  // this action yielded nothing parseable; try the others
        }
        Pending p;
        p.state = std::move(states.front());
        p.reward = rewards.reward_for(p.state.text);
        p.state.cached_reward = p.reward;
        p.action = std::move(action);
        pending.push_back(std::move(p));
    }
    if (pending.empty())
        throw ExpansionError("expansion of state " + std::to_string(node.state.state_id) +
                             ": no action produced a parseable prompt");

    std::vector<SearchNode*> created;
    created.reserve(pending.size());
    for (Pending& p : pending) {
        ChildEdge edge;
        edge.action = std::move(p.action);
        edge.reward = p.reward;
        edge.q = 0.0;
        edge.child = std::make_unique<SearchNode>();
        edge.child->state = std::move(p.state);
        edge.child->parent = &node;
        node.children.push_back(std::move(edge));
        SearchNode* child = node.children.back().child.get();
        tree.index_node(child);
        created.push_back(child);
    }
    return created;
}

SearchResult run_search(const SearchConfig& config, const Dataset& dataset, Gateway& gateway,
                        const TemplateSet& templates) {
    config.validate();

    Dataset validation =
        sample_validation(dataset, config.validation_fraction, config.rng_seed);

    SearchResult result;
    result.config = config;
    for (const LabeledSample& sample : validation.samples)
        result.validation_ids.push_back(sample.id);

    RewardCache rewards(gateway, templates, validation.samples,
                        static_cast<std::size_t>(config.batch_size));

    PromptState root_state;
    root_state.state_id = 1;
    root_state.text = config.initial_prompt.empty()
                          ? templates.render(TemplateName::initial, {})
                          : config.initial_prompt;
    root_state.depth = 0;
    result.tree = SearchTree::with_root(std::move(root_state));
    SearchNode* root = result.tree.root.get();

    const RewardFn reward_fn = [&rewards](const std::string& text) {
        return rewards.reward_for(text);
    };

    try {
        root->state.cached_reward = rewards.reward_for(root->state.text);

        for (int epoch = 1; epoch <= config.epochs; ++epoch) {
            SearchNode* node = root;
            Trajectory trajectory;

            while (true) {
                const double reward = *node->state.cached_reward;
                if (config.early_stop_reward && reward >= *config.early_stop_reward) break;
                if (node->terminal) break;
                if (node->state.depth >= config.depth_limit) break;

                if (!node->children.empty()) {
                    const std::uint64_t action_id =
                        uct_select(*node, config.exploration_weight);
                    ChildEdge* edge = node->edge(action_id);
                    trajectory.push_back(
                        {node->state.state_id, action_id, edge->reward});
                    node = edge->child.get();
                    continue;
                }

                std::vector<SearchNode*> children = expand_node(
                    result.tree, *node, config, result.memory, gateway, templates, rewards,
                    epoch);
                if (children.empty()) break;  // the node turned out terminal

                SearchNode* advanced = greedy_advance(children);
                if (config.resample_width > 0) {
                    ResampleOutcome outcome =
                        resample_state(advanced->state, config.resample_width, gateway,
                                       templates, reward_fn);
                    if (outcome.variants_tried == 0) ++result.warning_count;
                    if (outcome.replaced) {
                        advanced->state = outcome.state;
                        node->edge(*advanced->state.parent_action)->reward =
                            *advanced->state.cached_reward;
                    }
                }
                const std::uint64_t action_id = *advanced->state.parent_action;
                trajectory.push_back(
                    {node->state.state_id, action_id, node->edge(action_id)->reward});
                node = advanced;
            }

            if (trajectory.empty()) break;  // the root itself stops the search

            backpropagate(result.tree, std::move(trajectory));

            EpochLog log;
            log.epoch = epoch;
            log.path_final_reward = result.tree.trajectories.back().back().reward;
            log.node_count = result.tree.node_count();
            const SearchNode* best_node = select_best_prompt(result.tree);
            log.best_reward = *best_node->state.cached_reward;
            for (const SearchNode* n : result.tree.nodes_in_order())
                log.max_depth = std::max(log.max_depth, n->state.depth);
            result.epoch_log.push_back(log);
        }
    } catch (const ExpansionError& e) {
        result.aborted = true;
        result.abort_reason = e.what();
    } catch (const GatewayError& e) {
        result.aborted = true;
        result.abort_reason = e.what();
    }

    try {
        result.best = select_best_prompt(result.tree)->state;
    } catch (const SearchError&) {
        result.best = root->state;  // nothing was evaluated; surface the root
    }

    for (Role role : {Role::base, Role::actor, Role::optimizer})
        result.call_stats[to_string(role)] = gateway.stats(role);
    result.warning_count += result.memory.warning_count();
    return result;
}

}  // namespace promptsearch
