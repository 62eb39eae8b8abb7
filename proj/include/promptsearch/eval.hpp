#pragma once

#include "promptsearch/dataset.hpp"
#include "promptsearch/gateway.hpp"
#include "promptsearch/templates.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace promptsearch {

enum class EvalMode { single, batch_eval, batch_comment };

const char* to_string(EvalMode mode);

enum class ParseStatus { ok, malformed, missing };

const char* to_string(ParseStatus status);

struct Prediction {
    std::string sample_id;                 // bound by the orchestration layer
    std::optional<Label> predicted;        // present iff parse_status == ok
    std::string rationale;                 // per-sample response fragment / comment reason
    ParseStatus parse_status = ParseStatus::missing;
};

struct EvalReport {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0.0;                 // real value of the exact ratio correct/total
    std::size_t real_total = 0;
    std::size_t real_correct = 0;
    std::size_t fake_total = 0;
    std::size_t fake_correct = 0;
    std::size_t malformed_count = 0;       // predictions with status != ok
    std::vector<std::string> error_strings;
};

/// Renders the model input for one sample (single) or a numbered batch
/// (batch_eval / batch_comment, data lines "question i: ..." / "text i: ..."
/// with {batch_size} bound to the sample count). Throws EvalError when the
/// sample count does not fit the mode.
std::string build_eval_prompt(const TemplateSet& templates, const std::string& prompt,
                              const std::vector<LabeledSample>& samples, EvalMode mode);

/// Total response parser: always returns exactly n predictions with
/// well-formed statuses, never throws on arbitrary input. Option A / "True"
/// asserts authentic news (real); option B / "False" asserts fabricated
/// (fake); matching is case-insensitive, first recognized token wins.
std::vector<Prediction> parse_eval_response(const std::string& text, EvalMode mode,
                                            std::size_t n);

/// Copies sample ids onto predictions positionally. Sizes must match.
void bind_prediction_ids(std::vector<Prediction>& predictions,
                         const std::vector<LabeledSample>& samples);

/// Exact accuracy scoring: correct counts ok-status predictions matching the
/// gold label; malformed/missing count as incorrect. accuracy * total ==
/// correct holds exactly. Throws EvalError on empty input or id mismatch.
/// error_strings is left empty; see collect_error_strings.
EvalReport score_accuracy(const std::vector<Prediction>& predictions,
                          const std::vector<LabeledSample>& samples);

/// One formatted block per misclassified or unparsed sample, in sample
/// order, truncated at `cap` blocks. Each block carries the sample's full
/// single-mode model input, the response fragment, the gold label and the
/// prediction ("unparsed" when none).
std::vector<std::string> collect_error_strings(const TemplateSet& templates,
                                               const std::vector<Prediction>& predictions,
                                               const std::vector<LabeledSample>& samples,
                                               const std::string& prompt, std::size_t cap);

struct EvalOptions {
    EvalMode mode = EvalMode::batch_eval;
    std::size_t batch_size = 32;   // batches larger than this are split and re-joined
    bool collect_errors = true;
    std::size_t error_cap = 32;
};

/// Scores `prompt` over `samples` through the gateway's base role. Batch
/// modes split the samples into ceil(n/batch_size) calls; a chunk with any
/// unparsed prediction is re-asked once (skipped for deterministic backends,
/// where a byte-identical re-ask cannot differ). Predictions are assembled
/// in sample order before scoring.
EvalReport evaluate_prompt(Gateway& gateway, const TemplateSet& templates,
                           const std::string& prompt,
                           const std::vector<LabeledSample>& samples,
                           const EvalOptions& options = {});

/// Per-sample comment records for the export command.
struct CommentRecord {
    std::string id;
    std::string result;   // "real", "fake" or "unparsed"
    std::string reason;
};

/// Runs batch_comment evaluation over all samples and returns one record per
/// sample, order preserved.
std::vector<CommentRecord> generate_comments(Gateway& gateway, const TemplateSet& templates,
                                             const std::string& prompt,
                                             const std::vector<LabeledSample>& samples,
                                             std::size_t batch_size = 32);

}  // namespace promptsearch
