#include "promptsearch/transitions.hpp"

#include "promptsearch/digest.hpp"

#include <cctype>
#include <sstream>

namespace promptsearch {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

/// True when the line opens with an ordinal marker ("12.", "3)", "4:");
/// `rest` receives the text after the marker.
bool ordinal_line(std::string_view line, std::string_view& rest) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t digits = i;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits])))
        ++digits;
    if (digits == i || digits >= line.size()) return false;
    char sep = line[digits];
    if (sep != '.' && sep != ')' && sep != ':') return false;
    rest = line.substr(digits + 1);
    return true;
}

std::string join_blocks(const std::vector<std::string>& blocks) {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) out += "\n\n";
        out += blocks[i];
    }
    return out;
}

std::string numbered_list(const std::vector<std::string>& items) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out << "\n";
        out << (i + 1) << ". " << items[i];
    }
    return out.str();
}

}  // namespace

std::vector<std::string> split_numbered_suggestions(const std::string& text) {
    std::vector<std::string> blocks;
    std::string current;
    bool in_block = false;

    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::string_view rest;
        if (ordinal_line(line, rest)) {
            if (in_block && !trim(current).empty()) blocks.push_back(trim(current));
            current = std::string(rest);
            in_block = true;
        } else if (in_block) {
            current += "\n" + line;
        }
        // Prose before the first ordinal is preamble and is dropped.
    }
    if (in_block && !trim(current).empty()) blocks.push_back(trim(current));

    if (blocks.empty()) {
        std::string whole = trim(text);
        if (!whole.empty()) blocks.push_back(std::move(whole));
    }
    return blocks;
}

std::vector<ActionEdge> generate_actions(const PromptState& state,
                                         const std::vector<std::string>& error_strings,
                                         int d, Gateway& gateway,
                                         const TemplateSet& templates, IdGen& ids) {
    if (d < 1) throw SearchError("generate_actions: d must be >= 1");
    if (error_strings.empty()) return {};  // perfect prompt; nothing to fix

    const std::string joined = join_blocks(error_strings);
    const std::string request = templates.render(
        TemplateName::error_feedback, {{"prompt", state.text}, {"error strings", joined}});
    GenerationResponse response = gateway.generate(Role::actor, request);

    std::vector<std::string> suggestions = split_numbered_suggestions(response.text);
    if (suggestions.empty())
        throw ExpansionError("actor produced no parseable suggestions for state " +
                             std::to_string(state.state_id));
    if (suggestions.size() > static_cast<std::size_t>(d)) suggestions.resize(d);

    const std::string batch_digest = sha256_hex(joined);
    std::vector<ActionEdge> actions;
    actions.reserve(suggestions.size());
    for (auto& text : suggestions) {
        ActionEdge action;
        action.action_id = ids.action_id();
        action.feedback_text = std::move(text);
        action.source_error_digest = batch_digest;
        actions.push_back(std::move(action));
    }
    return actions;
}

std::vector<PromptState> apply_transition(const PromptState& state, const ActionEdge& action,
                                          const TransitionContext& ctx, Gateway& gateway,
                                          const TemplateSet& templates, IdGen& ids) {
    if (ctx.steps_per_gradient < 1)
        throw SearchError("apply_transition: steps_per_gradient must be >= 1");
    if (ctx.trajectory_prompts.empty())
        throw SearchError("apply_transition: trajectory_prompts must be non-empty");

    const std::string request = templates.render(
        TemplateName::state_transit,
        {{"prompt", state.text},
         {"error strings", ctx.error_strings_text},
         {"error feedback", action.feedback_text},
         {"trajectory prompts", numbered_list(ctx.trajectory_prompts)},
         {"Memory", ctx.memory_guidance},
         {"steps_per_gradient", std::to_string(ctx.steps_per_gradient)}});

    GenerationResponse response = gateway.generate(Role::optimizer, request);
    PromptBlocks parsed = parse_prompt_blocks(response.text);
    if (parsed.blocks.empty() && !gateway.deterministic(Role::optimizer)) {
        response = gateway.generate(Role::optimizer, request, /*attempt=*/2,
                                    /*bypass_cache=*/true);
        parsed = parse_prompt_blocks(response.text);
    }
    if (parsed.blocks.empty())
        throw ExpansionError("transition for action " + std::to_string(action.action_id) +
                             " produced no wrapped prompts");

    std::vector<PromptState> states;
    states.reserve(parsed.blocks.size());
    for (auto& block : parsed.blocks) {
        if (block.empty()) continue;
        PromptState next;
        next.state_id = ids.state_id();
        next.text = std::move(block);
        next.depth = state.depth + 1;
        next.parent_action = action.action_id;
        states.push_back(std::move(next));
    }
    if (states.empty())
        throw ExpansionError("transition for action " + std::to_string(action.action_id) +
                             " produced only empty prompts");
    return states;
}

ResampleOutcome resample_state(const PromptState& state, int d1, Gateway& gateway,
                               const TemplateSet& templates, const RewardFn& reward_fn) {
    ResampleOutcome outcome;
    outcome.state = state;
    if (d1 <= 0) return outcome;
    if (!state.cached_reward)
        throw SearchError("resample_state: state must be evaluated first");

    const std::string request = templates.render(
        TemplateName::resample, {{"num", std::to_string(d1)}, {"prompt", state.text}});

    PromptBlocks parsed;
    try {
        GenerationResponse response = gateway.generate(Role::optimizer, request);
        parsed = parse_prompt_blocks(response.text);
    } catch (const GatewayError&) {
        outcome.variants_dropped = static_cast<std::size_t>(d1);
        return outcome;  // resampling is best-effort; the original survives
    }

    double best_reward = *state.cached_reward;
    for (const std::string& variant : parsed.blocks) {
        if (variant.empty()) {
            ++outcome.variants_dropped;
            continue;
        }
        ++outcome.variants_tried;
        double reward;
        try {
            reward = reward_fn(variant);
        } catch (const GatewayError&) {
            ++outcome.variants_dropped;
            continue;
        }
        if (reward > best_reward) {  // strict: the original wins ties
            best_reward = reward;
            outcome.state.text = variant;
            outcome.state.cached_reward = reward;
            outcome.replaced = true;
        }
    }
    if (parsed.blocks.empty())
        outcome.variants_dropped += static_cast<std::size_t>(d1);
    return outcome;
}

}  // namespace promptsearch
