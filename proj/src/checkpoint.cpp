#include "promptsearch/checkpoint.hpp"

#include <fstream>
#include <unordered_map>

namespace promptsearch {

namespace {
using nlohmann::ordered_json;

constexpr const char* kFormatTag = "prompt-tree/1";

ordered_json config_json(const SearchConfig& config) {
    ordered_json out;
    out["depth_limit"] = config.depth_limit;
    out["epochs"] = config.epochs;
    out["expand_width"] = config.expand_width;
    out["resample_width"] = config.resample_width;
    out["exploration_weight"] = config.exploration_weight;
    out["early_stop_reward"] =
        config.early_stop_reward ? ordered_json(*config.early_stop_reward) : ordered_json();
    out["summarize_threshold"] = config.summarize_threshold;
    out["batch_size"] = config.batch_size;
    out["validation_fraction"] = config.validation_fraction;
    out["rng_seed"] = config.rng_seed;
    out["use_memory"] = config.use_memory;
    out["initial_prompt"] = config.initial_prompt;
    return out;
}

SearchConfig config_from_json(const ordered_json& doc) {
    SearchConfig config;
    config.depth_limit = doc.at("depth_limit").get<int>();
    config.epochs = doc.at("epochs").get<int>();
    config.expand_width = doc.at("expand_width").get<int>();
    config.resample_width = doc.at("resample_width").get<int>();
    config.exploration_weight = doc.at("exploration_weight").get<double>();
    if (!doc.at("early_stop_reward").is_null())
        config.early_stop_reward = doc.at("early_stop_reward").get<double>();
    config.summarize_threshold = doc.at("summarize_threshold").get<int>();
    config.batch_size = doc.at("batch_size").get<int>();
    config.validation_fraction = doc.at("validation_fraction").get<double>();
    config.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    config.use_memory = doc.at("use_memory").get<bool>();
    config.initial_prompt = doc.at("initial_prompt").get<std::string>();
    return config;
}

}  // namespace

ordered_json checkpoint_json(const SearchResult& result) {
    ordered_json doc;
    doc["format"] = kFormatTag;
    doc["seed"] = result.config.rng_seed;
    doc["config"] = config_json(result.config);

    ordered_json nodes = ordered_json::array();
    ordered_json edges = ordered_json::array();
    for (const SearchNode* node : result.tree.nodes_in_order()) {
        ordered_json n;
        n["state_id"] = node->state.state_id;
        n["text"] = node->state.text;
        n["depth"] = node->state.depth;
        n["cached_reward"] = node->state.cached_reward
                                 ? ordered_json(*node->state.cached_reward)
                                 : ordered_json();
        n["parent_action"] = node->state.parent_action
                                 ? ordered_json(*node->state.parent_action)
                                 : ordered_json();
        n["visit_count"] = node->visit_count;
        n["terminal"] = node->terminal;
        nodes.push_back(std::move(n));

        for (const ChildEdge& edge : node->children) {
            ordered_json e;
            e["parent_state_id"] = node->state.state_id;
            e["action_id"] = edge.action.action_id;
            e["feedback_text"] = edge.action.feedback_text;
            e["source_error_digest"] = edge.action.source_error_digest;
            e["q"] = edge.q;
            e["r"] = edge.reward;
            e["child_state_id"] = edge.child->state.state_id;
            edges.push_back(std::move(e));
        }
    }
    doc["nodes"] = std::move(nodes);
    doc["edges"] = std::move(edges);

    ordered_json trajectories = ordered_json::array();
    for (const Trajectory& trajectory : result.tree.trajectories) {
        ordered_json steps = ordered_json::array();
        for (const TrajectoryStep& step : trajectory) {
            ordered_json s;
            s["state_id"] = step.state_id;
            s["action_id"] = step.action_id;
            s["reward"] = step.reward;
            steps.push_back(std::move(s));
        }
        trajectories.push_back(std::move(steps));
    }
    doc["trajectories"] = std::move(trajectories);

    ordered_json entries = ordered_json::array();
    for (const FeedbackEntry& entry : result.memory.entries()) {
        ordered_json e;
        e["index"] = entry.index;
        e["text"] = entry.text;
        e["epoch"] = entry.epoch;
        entries.push_back(std::move(e));
    }
    doc["memory"] = {{"entries", std::move(entries)},
                     {"summary", result.memory.summary()},
                     {"summarized_through", result.memory.summarized_through()}};

    doc["validation_ids"] = result.validation_ids;
    doc["best_state_id"] = result.best.state_id;
    return doc;
}

void save_checkpoint(const SearchResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint file: " + path);
    out << checkpoint_json(result).dump(2) << '\n';
    if (!out) throw CheckpointError("write failed for checkpoint file: " + path);
}

SearchResult checkpoint_from_json(const ordered_json& doc) {
    if (!doc.is_object() || doc.value("format", "") != kFormatTag)
        throw CheckpointError("not a recognized checkpoint document");

    SearchResult result;
    try {
        result.config = config_from_json(doc.at("config"));
        result.validation_ids =
            doc.at("validation_ids").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }

    // Nodes first; edges then wire up ownership.
    std::unordered_map<std::uint64_t, std::unique_ptr<SearchNode>> nodes;
    std::uint64_t max_state_id = 0;
    std::uint64_t max_action_id = 0;
    for (const auto& n : doc.at("nodes")) {
        auto node = std::make_unique<SearchNode>();
        try {
            node->state.state_id = n.at("state_id").get<std::uint64_t>();
            node->state.text = n.at("text").get<std::string>();
            node->state.depth = n.at("depth").get<int>();
            if (!n.at("cached_reward").is_null())
                node->state.cached_reward = n.at("cached_reward").get<double>();
            if (!n.at("parent_action").is_null())
                node->state.parent_action = n.at("parent_action").get<std::uint64_t>();
            node->visit_count = n.at("visit_count").get<std::uint64_t>();
            node->terminal = n.at("terminal").get<bool>();
        } catch (const nlohmann::json::exception& e) {
            throw CheckpointError(std::string("malformed node record: ") + e.what());
        }
        const std::uint64_t id = node->state.state_id;
        max_state_id = std::max(max_state_id, id);
        if (!nodes.emplace(id, std::move(node)).second)
            throw CheckpointError("duplicate node state_id " + std::to_string(id));
    }
    if (nodes.empty()) throw CheckpointError("checkpoint has no nodes");

    // Raw pointers stay valid while ownership moves into parent edges.
    std::unordered_map<std::uint64_t, SearchNode*> raw;
    for (const auto& [id, node] : nodes) raw[id] = node.get();

    std::size_t edge_count = 0;
    for (const auto& e : doc.at("edges")) {
        std::uint64_t parent_id, child_id;
        ChildEdge edge;
        try {
            parent_id = e.at("parent_state_id").get<std::uint64_t>();
            child_id = e.at("child_state_id").get<std::uint64_t>();
            edge.action.action_id = e.at("action_id").get<std::uint64_t>();
            edge.action.feedback_text = e.at("feedback_text").get<std::string>();
            edge.action.source_error_digest = e.at("source_error_digest").get<std::string>();
            edge.q = e.at("q").get<double>();
            edge.reward = e.at("r").get<double>();
        } catch (const nlohmann::json::exception& ex) {
            throw CheckpointError(std::string("malformed edge record: ") + ex.what());
        }
        auto parent_it = raw.find(parent_id);
        if (parent_it == raw.end())
            throw CheckpointError("edge " + std::to_string(edge.action.action_id) +
                                  " references unknown parent node " +
                                  std::to_string(parent_id));
        auto child_slot = nodes.find(child_id);
        if (child_slot == nodes.end())
            throw CheckpointError("edge " + std::to_string(edge.action.action_id) +
                                  " references unknown child node " + std::to_string(child_id));
        if (child_slot->second == nullptr)
            throw CheckpointError("node " + std::to_string(child_id) +
                                  " is claimed by two edges");
        if (raw[child_id]->state.depth != parent_it->second->state.depth + 1)
            throw CheckpointError("edge to node " + std::to_string(child_id) +
                                  " breaks the depth invariant");
        max_action_id = std::max(max_action_id, edge.action.action_id);
        edge.child = std::move(child_slot->second);
        edge.child->parent = parent_it->second;
        parent_it->second->children.push_back(std::move(edge));
        ++edge_count;
    }

    // Exactly one node must remain unclaimed: the root.
    SearchTree tree;
    for (auto& [id, node] : nodes) {
        if (node == nullptr) continue;
        if (tree.root)
            throw CheckpointError("multiple roots: nodes " +
                                  std::to_string(tree.root->state.state_id) + " and " +
                                  std::to_string(id));
        tree.root = std::move(node);
    }
    if (!tree.root) throw CheckpointError("checkpoint tree has a reference cycle");
    if (tree.root->state.depth != 0 || tree.root->state.parent_action)
        throw CheckpointError("node " + std::to_string(tree.root->state.state_id) +
                              " is an invalid root");

    // Re-index through the owning structure.
    std::vector<SearchNode*> stack = {tree.root.get()};
    std::size_t reached = 0;
    while (!stack.empty()) {
        SearchNode* node = stack.back();
        stack.pop_back();
        tree.index_node(node);
        ++reached;
        for (ChildEdge& edge : node->children) stack.push_back(edge.child.get());
    }
    if (reached != edge_count + 1)
        throw CheckpointError("checkpoint is not a tree: " + std::to_string(reached) +
                              " reachable nodes, " + std::to_string(edge_count) + " edges");
    tree.ids.next_state = max_state_id + 1;
    tree.ids.next_action = max_action_id + 1;

    for (const auto& steps : doc.at("trajectories")) {
        Trajectory trajectory;
        for (const auto& s : steps) {
            TrajectoryStep step;
            try {
                step.state_id = s.at("state_id").get<std::uint64_t>();
                step.action_id = s.at("action_id").get<std::uint64_t>();
                step.reward = s.at("reward").get<double>();
            } catch (const nlohmann::json::exception& e) {
                throw CheckpointError(std::string("malformed trajectory step: ") + e.what());
            }
            const SearchNode* node = tree.find(step.state_id);
            if (node == nullptr || node->edge(step.action_id) == nullptr)
                throw CheckpointError("trajectory references unknown edge (state " +
                                      std::to_string(step.state_id) + ", action " +
                                      std::to_string(step.action_id) + ")");
            trajectory.push_back(step);
        }
        tree.trajectories.push_back(std::move(trajectory));
    }
    result.tree = std::move(tree);

    try {
        const auto& m = doc.at("memory");
        std::vector<FeedbackEntry> entries;
        for (const auto& e : m.at("entries")) {
            FeedbackEntry entry;
            entry.index = e.at("index").get<std::size_t>();
            entry.text = e.at("text").get<std::string>();
            entry.epoch = e.at("epoch").get<int>();
            entries.push_back(std::move(entry));
        }
        result.memory = MemoryBank::restore(std::move(entries),
                                            m.at("summary").get<std::string>(),
                                            m.at("summarized_through").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed memory dump: ") + e.what());
    }

    std::uint64_t best_id;
    try {
        best_id = doc.at("best_state_id").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
    const SearchNode* best = result.tree.find(best_id);
    if (best == nullptr)
        throw CheckpointError("best_state_id " + std::to_string(best_id) +
                              " references an unknown node");
    result.best = best->state;
    return result;
}

SearchResult load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint file: " + path);
    ordered_json doc = ordered_json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded())
        throw CheckpointError("checkpoint file is not valid JSON: " + path);
    return checkpoint_from_json(doc);
}

}  // namespace promptsearch
