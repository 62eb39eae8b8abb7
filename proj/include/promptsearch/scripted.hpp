#pragma once

#include "promptsearch/gateway.hpp"

#include <string>
#include <vector>

namespace promptsearch {

/// Builds the named deterministic handler for a scripted-backend role.
/// The script field selects the handler; an optional parameter follows a
/// colon ("constant:<text>", "keyword_landscape:<kw1|kw2|...>").
///
/// Known scripts:
///   digest_echo        - unique response text derived from (digest, seed)
///   constant           - the parameter text, verbatim, for every request
///   always_true        - answers every question "authentic", in whatever
///                        response format the prompt asks for
///   keyword_landscape  - a benchmark stand-in for all three roles whose
///                        classification skill equals the fraction of target
///                        keywords present in the task prompt; critiques name
///                        missing keywords and rewrites insert them
ScriptHandler make_script(const LLMRoleConfig& config);

/// The default keyword set of the keyword_landscape script.
const std::vector<std::string>& landscape_keywords();

/// Fraction of `keywords` contained (case-insensitive) in `prompt_text`.
double keyword_fraction(const std::string& prompt_text,
                        const std::vector<std::string>& keywords);

}  // namespace promptsearch
