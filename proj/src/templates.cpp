#include "promptsearch/templates.hpp"

#include "promptsearch/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>

namespace promptsearch {

namespace {

// ---------------------------------------------------------------------------
// Default meta-prompt bodies
// ---------------------------------------------------------------------------

constexpr const char* kInitial =
    R"(Please use your knowledge of journalism to determine the authenticity of the input news or social media message, and briefly explain the reason for your judgment.)";

constexpr const char* kInputFormat =
    R"({prompt}

News or social media message: {news}.

Options:

A:True

B. False

At the end show the answer option between <answer> and </answer>.)";

// {prompt} here carries the full model input (the rendered input_format),
// not the bare task prompt.
constexpr const char* kErrorString =
    R"(The index of error news or social media message is: {index}

The model's input is: {prompt}

The model's response is: {response}

The correct label is: {label}

The model's prediction is: {prediction})";

constexpr const char* kErrorFeedback =
    R"(I am writing prompts for a large language model designed to detect fake news.

My current prompt is: {prompt}

But this prompt gets the following examples wrong: {error strings}

Please carefully examine each wrong example and its incorrect answer. Provide detailed reasons explaining why the prompt leads to the incorrect answer.

Finally, based on these reasons, summarize and list specific suggestions for improving the prompt according to the following guidelines:

1.The suggestions should focus on how to modify the prompt to help the model classify better, without relying on external knowledge or inputting more information.

2.The suggestions should avoid overfitting specific incorrect examples, ensuring generalizability to different news examples.)";

constexpr const char* kStateTransit =
    R"(I am writing prompts for a large language model designed to detect fake news.

My current prompt is: {prompt}

But this prompt gets the following examples wrong: {error strings}

Based on these errors, the problems with this prompt and the reasons are: {error feedback}

There is a list of former prompts including the current prompt, and each prompt is modified from its former prompts: {trajectory prompts}

Please consider the following potential causes of model classification errors and suggestions: {Memory}

Based on the above information, please write {steps_per_gradient} new prompts following these guidelines:

1. The new prompts should solve the current prompt's problems.

2. The new prompts should consider the list of prompts and evolve based on the current prompt.

3. Each new prompt should be wrapped with <START> and <END>.

The new prompts are:)";

// Header only; the numbered "Number N: / Reasons and Suggestions: ..." entry
// blocks are appended by the memory bank when it summarizes.
constexpr const char* kMemorySummarize =
    R"(Summarize the following reasons and suggestions concisely, focusing on key information. If there are multiple key points, summarize them in bullet points. The reason for the error and recommendation is:)";

// Headers only; the numbered per-sample sections are appended by the
// evaluation prompt builder.
constexpr const char* kBatchEval =
    R"({prompt}

You will receive {batch_size} questions as input. The format of the provided questions is as follows:

Question 1: xxxxxx

Question 2: xxxxxx

...

Please generate the output according to the following format, with the answer enclosed in []:

For Question 1: [xxxxxx]

For Question 2: [xxxxxx]

...

Ensure that you generate {batch_size} answers, with each question receiving a separate response. Do not combine the answers for each question. Ensure that only one answer is provided for each question.)";

constexpr const char* kBatchComment =
    R"({prompt}

You will receive {batch_size} sentences from the news and social media message dataset as input. The format of the provided sentences is as follows:

Text 1: xxxxxx

Text 2: xxxxxx

...

Please generate the output according to the following format, with the result and reason enclosed in []:

For Text 1: [Result: X. Reason: xxxxxx]

For Text 2: [Result: X. Reason: xxxxxx]

...

Where X is 'True' or 'False,' and 'xxxxxx' is your reasoning for determining the authenticity of the news or social media message.

Ensure that you generate {batch_size} evaluations. Make sure to output {batch_size} lines of text, with each line containing a separate evaluation. Do not combine the evaluation results for each text. Ensure that each sentence receives an individual evaluation.)";

constexpr const char* kResample =
    R"(Generate {num} variants of the prompt {prompt} while preserving the original meaning. Each new prompt should be wrapped with <START> and <END>.)";

struct NameEntry {
    TemplateName name;
    const char* text;
    const char* body;
};

constexpr std::array<NameEntry, 9> kEntries{{
    {TemplateName::initial, "initial", kInitial},
    {TemplateName::input_format, "input_format", kInputFormat},
    {TemplateName::error_string, "error_string", kErrorString},
    {TemplateName::error_feedback, "error_feedback", kErrorFeedback},
    {TemplateName::state_transit, "state_transit", kStateTransit},
    {TemplateName::memory_summarize, "memory_summarize", kMemorySummarize},
    {TemplateName::batch_eval, "batch_eval", kBatchEval},
    {TemplateName::batch_comment, "batch_comment", kBatchComment},
    {TemplateName::resample, "resample", kResample},
}};

bool is_allowed(const std::string& token) {
    const auto& allowed = allowed_placeholders();
    return std::find(allowed.begin(), allowed.end(), token) != allowed.end();
}

// Walks `body` once, calling on_placeholder for each "{token}" whose token is
// in the allow-list and on_literal for everything else.
template <typename PlaceholderFn, typename LiteralFn>
void scan_body(std::string_view body, PlaceholderFn&& on_placeholder, LiteralFn&& on_literal) {
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t open = body.find('{', pos);
        if (open == std::string_view::npos) {
            on_literal(body.substr(pos));
            return;
        }
        std::size_t close = body.find('}', open + 1);
        if (close == std::string_view::npos) {
            on_literal(body.substr(pos));
            return;
        }
        std::string token(body.substr(open + 1, close - open - 1));
        if (is_allowed(token)) {
            on_literal(body.substr(pos, open - pos));
            on_placeholder(token);
            pos = close + 1;
        } else {
            // Unknown brace content stays literal.
            on_literal(body.substr(pos, open + 1 - pos));
            pos = open + 1;
        }
    }
}

}  // namespace

const char* to_string(TemplateName name) {
    for (const auto& e : kEntries)
        if (e.name == name) return e.text;
    return "?";
}

TemplateName template_name_from_string(std::string_view s) {
    for (const auto& e : kEntries)
        if (s == e.text) return e.name;
    throw TemplateError("unknown template name '" + std::string(s) + "'");
}

const std::vector<std::string>& allowed_placeholders() {
    static const std::vector<std::string> kAllowed = {
        "prompt",        "news",   "error strings",      "error feedback",
        "trajectory prompts", "Memory", "steps_per_gradient", "batch_size",
        "num",           "index",  "response",           "label",
        "prediction",
    };
    return kAllowed;
}

PromptBlocks parse_prompt_blocks(std::string_view text) {
    static constexpr std::string_view kStart = "<START>";
    static constexpr std::string_view kEnd = "<END>";

    PromptBlocks out;
    std::size_t cursor = 0;
    while (true) {
        std::size_t open = text.find(kStart, cursor);
        if (open == std::string_view::npos) break;
        std::size_t body_begin = open + kStart.size();
        std::size_t close = text.find(kEnd, body_begin);
        std::size_t next_open = text.find(kStart, body_begin);
        if (close == std::string_view::npos) {
            out.malformed = true;  // unterminated opening
            break;
        }
        if (next_open != std::string_view::npos && next_open < close) {
            out.malformed = true;  // nested opening; outer yields no block
            cursor = next_open;
            continue;
        }
        std::string_view block = text.substr(body_begin, close - body_begin);
        while (!block.empty() && std::isspace(static_cast<unsigned char>(block.front()))) block.remove_prefix(1);
        while (!block.empty() && std::isspace(static_cast<unsigned char>(block.back()))) block.remove_suffix(1);
        out.blocks.emplace_back(block);
        cursor = close + kEnd.size();
    }
    return out;
}

TemplateSet TemplateSet::defaults() {
    TemplateSet set;
    for (const auto& e : kEntries) set.bodies_[e.name] = e.body;
    return set;
}

TemplateSet TemplateSet::with_overrides(const std::string& override_path) {
    std::ifstream in(override_path);
    if (!in) throw TemplateError("cannot open template override file: " + override_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw TemplateError("template override file is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw TemplateError("template override file must be a JSON object");

    TemplateSet set = defaults();
    for (const auto& [key, value] : doc.items()) {
        TemplateName name = template_name_from_string(key);  // throws on unknown
        if (!value.is_string())
            throw TemplateError("override body for '" + key + "' must be a string");
        std::string body = value.get<std::string>();
        // Reject brace tokens outside the allow-list so typos fail loudly
        // instead of silently becoming literal text.
        std::size_t pos = 0;
        while ((pos = body.find('{', pos)) != std::string::npos) {
            std::size_t close = body.find('}', pos + 1);
            if (close == std::string::npos) break;
            std::string token = body.substr(pos + 1, close - pos - 1);
            if (!is_allowed(token))
                throw TemplateError("override for '" + key + "' uses disallowed placeholder '{" +
                                    token + "}'");
            pos = close + 1;
        }
        set.bodies_[name] = std::move(body);
    }
    return set;
}

const std::string& TemplateSet::body(TemplateName name) const {
    auto it = bodies_.find(name);
    if (it == bodies_.end()) throw TemplateError("template set has no body for requested name");
    return it->second;
}

std::string TemplateSet::render(TemplateName name, const Bindings& bindings) const {
    const std::string& tpl = body(name);
    std::string out;
    out.reserve(tpl.size());
    scan_body(
        tpl,
        [&](const std::string& token) {
            auto it = bindings.find(token);
            if (it == bindings.end())
                throw TemplateError("template '" + std::string(to_string(name)) +
                                    "': unbound placeholder '{" + token + "}'");
            out += it->second;
        },
        [&](std::string_view literal) { out += literal; });
    return out;
}

std::vector<std::string> TemplateSet::placeholders_of(TemplateName name) const {
    std::vector<std::string> seen;
    scan_body(
        body(name),
        [&](const std::string& token) {
            if (std::find(seen.begin(), seen.end(), token) == seen.end()) seen.push_back(token);
        },
        [](std::string_view) {});
    return seen;
}

}  // namespace promptsearch
