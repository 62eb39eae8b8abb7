#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace promptsearch {

/// The nine meta-prompt roles used across evaluation, action generation,
/// state transition, memory summarization and resampling.
enum class TemplateName {
    initial,
    input_format,
    error_string,
    error_feedback,
    state_transit,
    memory_summarize,
    batch_eval,
    batch_comment,
    resample,
};

const char* to_string(TemplateName name);
TemplateName template_name_from_string(std::string_view s);

/// All placeholder tokens a template body may contain, brace-delimited in the
/// body text ("{prompt}", "{error strings}", ...). Anything else inside braces
/// is treated as literal text; override files may only use these.
const std::vector<std::string>& allowed_placeholders();

using Bindings = std::map<std::string, std::string>;

/// Result of scanning optimizer output for <START>...<END> wrapped prompts.
struct PromptBlocks {
    std::vector<std::string> blocks;  // trimmed, in order of appearance
    bool malformed = false;           // unterminated or nested opening seen
};

/// Extracts every maximal substring strictly between a "<START>" marker and
/// the next "<END>" marker. Unterminated or nested openings contribute no
/// block and set the malformed flag. Total: never throws on arbitrary input.
PromptBlocks parse_prompt_blocks(std::string_view text);

/// Immutable set of meta-prompt bodies. Defaults ship the stock wording;
/// a JSON override file ({"name": "body", ...}) may replace individual
/// bodies after placeholder validation.
class TemplateSet {
public:
    /// The built-in bodies.
    static TemplateSet defaults();

    /// Defaults with overrides from a JSON file applied on top.
    /// Throws TemplateError on unknown names or disallowed placeholders.
    static TemplateSet with_overrides(const std::string& override_path);

    const std::string& body(TemplateName name) const;

    /// Substitutes placeholders in a single pass. Every placeholder occurring
    /// in the body must be present in `bindings` (TemplateError otherwise);
    /// substituted text is never rescanned.
    std::string render(TemplateName name, const Bindings& bindings) const;

    /// Placeholders occurring in the named body, in order of first occurrence.
    std::vector<std::string> placeholders_of(TemplateName name) const;

private:
    TemplateSet() = default;
    std::map<TemplateName, std::string> bodies_;
};

}  // namespace promptsearch
