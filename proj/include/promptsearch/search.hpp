#pragma once

#include "promptsearch/dataset.hpp"
#include "promptsearch/eval.hpp"
#include "promptsearch/memory.hpp"
#include "promptsearch/transitions.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace promptsearch {

struct SearchConfig {
    int depth_limit = 10;                     // L: maximum tree depth
    int epochs = 16;                          // e: search iterations
    int expand_width = 3;                     // d: children per expansion
    int resample_width = 2;                   // d1: variants per resampling
    double exploration_weight = 2.5;          // k in the UCT bonus
    std::optional<double> early_stop_reward;  // stop descending at this reward
    int summarize_threshold = 8;              // memory entries before summarizing
    int batch_size = 32;
    double validation_fraction = 0.3;
    std::uint64_t rng_seed = 0;
    bool use_memory = true;   // false: no feedback recording, empty guidance
    std::string initial_prompt;  // empty: use the stock initial prompt

    /// Throws ConfigError naming the first violated field
    /// ("search.<field>" paths).
    void validate() const;
};

struct ChildEdge {
    ActionEdge action;
    double reward = 0.0;  // r(s,a): immediate reward of the child state
    double q = 0.0;       // Q(s,a): mean suffix reward over trajectories
    std::unique_ptr<struct SearchNode> child;
};

struct SearchNode {
    PromptState state;
    SearchNode* parent = nullptr;
    std::uint64_t visit_count = 0;  // N(s)
    std::vector<ChildEdge> children;  // creation order
    bool terminal = false;  // evaluated perfectly; no errors to act on

    const ChildEdge* edge(std::uint64_t action_id) const;
    ChildEdge* edge(std::uint64_t action_id);
};

struct TrajectoryStep {
    std::uint64_t state_id = 0;  // s_t (the node the step leaves from)
    std::uint64_t action_id = 0; // a_t
    double reward = 0.0;         // r(s_t, a_t) at traversal time
};

using Trajectory = std::vector<TrajectoryStep>;

struct SearchTree {
    std::unique_ptr<SearchNode> root;
    std::vector<Trajectory> trajectories;
    IdGen ids;

    SearchNode* find(std::uint64_t state_id);
    const SearchNode* find(std::uint64_t state_id) const;
    void index_node(SearchNode* node);
    std::size_t node_count() const { return index_.size(); }

    /// All nodes in creation (state_id) order.
    std::vector<const SearchNode*> nodes_in_order() const;
    std::vector<SearchNode*> nodes_in_order();

    static SearchTree with_root(PromptState root_state);

private:
    std::unordered_map<std::uint64_t, SearchNode*> index_;
};

/// The Upper-Confidence selection rule over a node's children: any unvisited
/// child wins first (earliest-created), otherwise
/// argmax_a Q(s,a) + k * sqrt(ln N(s) / N(ch(s,a))), ties to the
/// earliest-created child. Throws SearchError on a childless node.
std::uint64_t uct_select(const SearchNode& node, double k);

/// The child with maximal immediate reward; ties break to the
/// earliest-created. Throws SearchError on empty input.
SearchNode* greedy_advance(const std::vector<SearchNode*>& children);

/// Appends the trajectory, recomputes Q for every edge on its path as the
/// mean over all stored trajectories through that edge of the suffix reward
/// sum (suffix includes the edge's own reward), and increments the visit
/// count of every node the trajectory steps out of. Throws SearchError on an
/// empty trajectory or references to unknown nodes/edges.
void backpropagate(SearchTree& tree, Trajectory trajectory);

/// Reference recomputation of one edge's Q from the trajectory store;
/// nullopt when no trajectory traverses the edge.
std::optional<double> recompute_edge_q(const SearchTree& tree, std::uint64_t state_id,
                                       std::uint64_t action_id);

/// The evaluated state with maximal cached reward; ties break to smaller
/// depth, then earlier creation. Throws SearchError when nothing was
/// evaluated.
const SearchNode* select_best_prompt(const SearchTree& tree);

struct EpochLog {
    int epoch = 0;
    double path_final_reward = 0.0;  // reward of the descent's last step
    double best_reward = 0.0;        // best evaluated reward so far
    std::size_t node_count = 0;
    int max_depth = 0;
};

struct SearchResult {
    SearchTree tree;
    PromptState best;
    std::vector<EpochLog> epoch_log;
    std::map<std::string, RoleCallStats> call_stats;  // by role name
    MemoryBank memory;
    std::vector<std::string> validation_ids;
    SearchConfig config;
    bool aborted = false;          // backend gave out; partial result
    std::string abort_reason;
    std::size_t warning_count = 0;
};

/// Shared reward machinery: evaluates prompts on a fixed sample set through
/// the gateway, caching one report per distinct prompt text per run.
class RewardCache {
public:
    RewardCache(Gateway& gateway, const TemplateSet& templates,
                std::vector<LabeledSample> samples, std::size_t batch_size);

    /// The cached-or-computed evaluation report for a prompt.
    const EvalReport& report_for(const std::string& prompt_text);
    double reward_for(const std::string& prompt_text);

private:
    Gateway& gateway_;
    const TemplateSet& templates_;
    std::vector<LabeledSample> samples_;
    std::size_t batch_size_;
    std::unordered_map<std::string, EvalReport> reports_;
};

/// Expands a leaf: ensures the state is evaluated, derives actions from its
/// error strings (recording them into memory when enabled), applies one
/// transition per action, scores each child, and attaches the children in
/// creation order. Returns the attached children; empty means the state is
/// terminal. The tree is untouched when every action fails or the backend
/// gives out mid-expansion.
std::vector<SearchNode*> expand_node(SearchTree& tree, SearchNode& node,
                                     const SearchConfig& config, MemoryBank& memory,
                                     Gateway& gateway, const TemplateSet& templates,
                                     RewardCache& rewards, int epoch);

/// Runs the full search: `epochs` descents from the root (UCT at internal
/// nodes; expand + greedy advance + resample at leaves) down to the depth
/// limit or a terminal/early-stopping state, each followed by
/// backpropagation. A mid-run backend failure aborts with the consistent
/// partial result flagged instead of thrown away.
SearchResult run_search(const SearchConfig& config, const Dataset& dataset, Gateway& gateway,
                        const TemplateSet& templates);

}  // namespace promptsearch
