#pragma once

#include "promptsearch/gateway.hpp"
#include "promptsearch/templates.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace promptsearch {

/// A candidate prompt in the search tree.
struct PromptState {
    std::uint64_t state_id = 0;
    std::string text;
    int depth = 0;
    std::optional<double> cached_reward;           // validation accuracy, in [0,1]
    std::optional<std::uint64_t> parent_action;    // absent only at the root
};

/// An error-feedback action: the critique that turns one prompt into the next.
struct ActionEdge {
    std::uint64_t action_id = 0;
    std::string feedback_text;
    std::string source_error_digest;  // digest of the error batch that produced it
};

/// Monotone id source; state and action ids are both creation-ordered.
struct IdGen {
    std::uint64_t next_state = 1;
    std::uint64_t next_action = 1;
    std::uint64_t state_id() { return next_state++; }
    std::uint64_t action_id() { return next_action++; }
};

/// Context carried into a state transition.
struct TransitionContext {
    std::vector<std::string> trajectory_prompts;  // root to current state, in order
    std::string memory_guidance;                  // rendered {Memory} text, possibly empty
    int steps_per_gradient = 1;
    std::string error_strings_text;               // joined error blocks for {error strings}
};

/// Splits model feedback into numbered suggestion blocks (lines starting
/// with "1." / "2)" / "3:"); leading prose before the first ordinal is
/// dropped and the ordinal prefix is stripped. Text without ordinals
/// falls back to a single block (the trimmed whole).
std::vector<std::string> split_numbered_suggestions(const std::string& text);

/// Generates up to `d` error-feedback actions for an evaluated state with one
/// actor call. Empty error_strings means a perfect prompt: returns the empty
/// list (the caller marks the state terminal). Fewer parsed suggestions than
/// `d` yields a shorter list; duplicates are never invented. Throws
/// ExpansionError when a non-empty response yields zero suggestions.
std::vector<ActionEdge> generate_actions(const PromptState& state,
                                         const std::vector<std::string>& error_strings,
                                         int d, Gateway& gateway,
                                         const TemplateSet& templates, IdGen& ids);

/// Applies one transition: renders the rewrite prompt for `action`, calls the
/// optimizer once, and returns the wrapped new prompts as states at
/// depth + 1 with parent_action = action. One retry on a blockless response
/// (skipped for deterministic backends); still blockless -> ExpansionError.
std::vector<PromptState> apply_transition(const PromptState& state, const ActionEdge& action,
                                          const TransitionContext& ctx, Gateway& gateway,
                                          const TemplateSet& templates, IdGen& ids);

using RewardFn = std::function<double(const std::string& prompt_text)>;

struct ResampleOutcome {
    PromptState state;          // the kept state (original or best variant)
    bool replaced = false;      // a variant beat the original
    std::size_t variants_tried = 0;
    std::size_t variants_dropped = 0;  // unparseable or failed evaluation
};

/// Generates d1 meaning-preserving variants of an evaluated state, scores
/// each with `reward_fn`, and keeps the maximum-reward member of
/// {original, variants}; the original wins ties. The kept variant reuses the
/// original's state_id, depth and parent_action (in-place replacement).
/// Never fatal: backend or parse failures drop variants, and when all drop
/// the original comes back with variants_dropped set.
ResampleOutcome resample_state(const PromptState& state, int d1, Gateway& gateway,
                               const TemplateSet& templates, const RewardFn& reward_fn);

}  // namespace promptsearch
