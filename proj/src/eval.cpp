#include "promptsearch/eval.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace promptsearch {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

/// First recognized verdict token in `text`, scanning alphanumeric words:
/// a/true -> real, b/false -> fake.
std::optional<Label> first_verdict_token(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            std::string word = lower(text.substr(i, j - i));
            if (word == "a" || word == "true") return Label::real;
            if (word == "b" || word == "false") return Label::fake;
        }
        i = j + 1;
    }
    return std::nullopt;
}

/// Case-insensitive find.
std::size_t find_ci(const std::string& hay_lower, const std::string& needle_lower,
                    std::size_t from = 0) {
    return hay_lower.find(needle_lower, from);
}

std::vector<Prediction> parse_single(const std::string& text) {
    Prediction pred;
    pred.rationale = trim(text);
    const std::string hay = lower(text);
    std::size_t open = hay.find("<answer>");
    std::size_t close = open == std::string::npos ? std::string::npos
                                                  : hay.find("</answer>", open + 8);
    if (open != std::string::npos && close != std::string::npos) {
        std::string inner = text.substr(open + 8, close - (open + 8));
        if (auto verdict = first_verdict_token(inner)) {
            pred.predicted = *verdict;
            pred.parse_status = ParseStatus::ok;
            return {pred};
        }
    }
    pred.parse_status = ParseStatus::malformed;
    return {pred};
}

std::vector<Prediction> parse_batch(const std::string& text, EvalMode mode, std::size_t n) {
    const bool comment = mode == EvalMode::batch_comment;
    const std::string hay = lower(text);
    std::vector<Prediction> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Prediction& pred = out[i];
        const std::string marker =
            std::string(comment ? "for text " : "for question ") + std::to_string(i + 1) + ":";
        std::size_t at = find_ci(hay, marker);
        if (at == std::string::npos) {
            pred.parse_status = ParseStatus::missing;
            continue;
        }
        std::size_t open = text.find('[', at + marker.size());
        std::size_t close = open == std::string::npos ? std::string::npos
                                                      : text.find(']', open + 1);
        if (open == std::string::npos || close == std::string::npos) {
            pred.parse_status = ParseStatus::malformed;
            pred.rationale = trim(text.substr(at, std::min(text.size(), at + 160) - at));
            continue;
        }
        std::string inner = text.substr(open + 1, close - open - 1);
        if (!comment) {
            pred.rationale = trim(text.substr(at, close + 1 - at));
            if (auto verdict = first_verdict_token(inner)) {
                pred.predicted = *verdict;
                pred.parse_status = ParseStatus::ok;
            } else {
                pred.parse_status = ParseStatus::malformed;
            }
            continue;
        }
        // Comment bracket: "Result: X. Reason: ...".
        const std::string inner_lower = lower(inner);
        std::size_t result_at = inner_lower.find("result");
        std::size_t reason_at = inner_lower.find("reason");
        std::string verdict_zone = result_at == std::string::npos
                                       ? inner
                                       : inner.substr(result_at,
                                                      (reason_at == std::string::npos
                                                           ? inner.size()
                                                           : reason_at) -
                                                          result_at);
        if (reason_at != std::string::npos) {
            std::string reason = inner.substr(reason_at + 6);
            if (!reason.empty() && (reason[0] == ':' || reason[0] == '.')) reason.erase(0, 1);
            pred.rationale = trim(reason);
        } else {
            pred.rationale = trim(inner);
        }
        if (auto verdict = first_verdict_token(verdict_zone)) {
            pred.predicted = *verdict;
            pred.parse_status = ParseStatus::ok;
        } else {
            pred.parse_status = ParseStatus::malformed;
        }
    }
    return out;
}

std::size_t unparsed_count(const std::vector<Prediction>& preds) {
    std::size_t c = 0;
    for (const auto& p : preds)
        if (p.parse_status != ParseStatus::ok) ++c;
    return c;
}

}  // namespace

const char* to_string(EvalMode mode) {
    switch (mode) {
        case EvalMode::single: return "single";
        case EvalMode::batch_eval: return "batch_eval";
        case EvalMode::batch_comment: return "batch_comment";
    }
    return "?";
}

const char* to_string(ParseStatus status) {
    switch (status) {
        case ParseStatus::ok: return "ok";
        case ParseStatus::malformed: return "malformed";
        case ParseStatus::missing: return "missing";
    }
    return "?";
}

std::string build_eval_prompt(const TemplateSet& templates, const std::string& prompt,
                              const std::vector<LabeledSample>& samples, EvalMode mode) {
    if (samples.empty()) throw EvalError("build_eval_prompt: no samples");
    if (mode == EvalMode::single) {
        if (samples.size() != 1)
            throw EvalError("single mode takes exactly 1 sample, got " +
                            std::to_string(samples.size()));
        return templates.render(TemplateName::input_format,
                                {{"prompt", prompt}, {"news", samples[0].text}});
    }
    const bool comment = mode == EvalMode::batch_comment;
    std::string out = templates.render(
        comment ? TemplateName::batch_comment : TemplateName::batch_eval,
        {{"prompt", prompt}, {"batch_size", std::to_string(samples.size())}});
    const char* kind = comment ? "text" : "question";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out += "\n\n";
        out += kind;
        out += " " + std::to_string(i + 1) + ": " + samples[i].text;
    }
    return out;
}

std::vector<Prediction> parse_eval_response(const std::string& text, EvalMode mode,
                                            std::size_t n) {
    if (n == 0) return {};
    if (mode == EvalMode::single) {
        auto preds = parse_single(text);
        preds.resize(n);  // n is 1 by contract; stay total regardless
        return preds;
    }
    return parse_batch(text, mode, n);
}

void bind_prediction_ids(std::vector<Prediction>& predictions,
                         const std::vector<LabeledSample>& samples) {
    if (predictions.size() != samples.size())
        throw EvalError("prediction/sample count mismatch: " +
                        std::to_string(predictions.size()) + " vs " +
                        std::to_string(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) predictions[i].sample_id = samples[i].id;
}

EvalReport score_accuracy(const std::vector<Prediction>& predictions,
                          const std::vector<LabeledSample>& samples) {
    if (samples.empty()) throw EvalError("score_accuracy: empty input");
    if (predictions.size() != samples.size())
        throw EvalError("score_accuracy: prediction/sample count mismatch");
    EvalReport report;
    report.total = samples.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Prediction& pred = predictions[i];
        const LabeledSample& sample = samples[i];
        if (pred.sample_id != sample.id)
            throw EvalError("score_accuracy: id mismatch at position " + std::to_string(i) +
                            " ('" + pred.sample_id + "' vs '" + sample.id + "')");
        const bool gold_real = sample.label == Label::real;
        (gold_real ? report.real_total : report.fake_total)++;
        if (pred.parse_status != ParseStatus::ok) {
            report.malformed_count++;
            continue;
        }
        if (*pred.predicted == sample.label) {
            report.correct++;
            (gold_real ? report.real_correct : report.fake_correct)++;
        }
    }
    report.accuracy =
        static_cast<double>(report.correct) / static_cast<double>(report.total);
    return report;
}

std::vector<std::string> collect_error_strings(const TemplateSet& templates,
                                               const std::vector<Prediction>& predictions,
                                               const std::vector<LabeledSample>& samples,
                                               const std::string& prompt, std::size_t cap) {
    std::vector<std::string> blocks;
    if (predictions.size() != samples.size())
        throw EvalError("collect_error_strings: prediction/sample count mismatch");
    for (std::size_t i = 0; i < samples.size() && blocks.size() < cap; ++i) {
        const Prediction& pred = predictions[i];
        const LabeledSample& sample = samples[i];
        const bool wrong =
            pred.parse_status != ParseStatus::ok || *pred.predicted != sample.label;
        if (!wrong) continue;
        const std::string model_input =
            build_eval_prompt(templates, prompt, {sample}, EvalMode::single);
        // Label vocabulary follows the options list: True = authentic, False = fabricated.
        const char* gold = sample.label == Label::real ? "True" : "False";
        std::string predicted = "unparsed";
        if (pred.parse_status == ParseStatus::ok)
            predicted = *pred.predicted == Label::real ? "True" : "False";
        blocks.push_back(templates.render(
            TemplateName::error_string,
            {{"index", std::to_string(i + 1)},
             {"prompt", model_input},
             {"response", pred.rationale.empty() ? "(no parseable response)" : pred.rationale},
             {"label", gold},
             {"prediction", predicted}}));
    }
    return blocks;
}

namespace {

/// One transport call for a chunk, with a single re-ask when any prediction
/// fails to parse and the backend could answer differently.
std::vector<Prediction> eval_chunk(Gateway& gateway, const TemplateSet& templates,
                                   const std::string& prompt,
                                   const std::vector<LabeledSample>& chunk, EvalMode mode) {
    const std::string request = build_eval_prompt(templates, prompt, chunk, mode);
    GenerationResponse response = gateway.generate(Role::base, request);
    auto preds = parse_eval_response(response.text, mode, chunk.size());
    if (unparsed_count(preds) > 0 && !gateway.deterministic(Role::base)) {
        GenerationResponse retry =
            gateway.generate(Role::base, request, /*attempt=*/2, /*bypass_cache=*/true);
        auto retry_preds = parse_eval_response(retry.text, mode, chunk.size());
        if (unparsed_count(retry_preds) < unparsed_count(preds)) preds = std::move(retry_preds);
    }
    return preds;
}

}  // namespace

EvalReport evaluate_prompt(Gateway& gateway, const TemplateSet& templates,
                           const std::string& prompt,
                           const std::vector<LabeledSample>& samples,
                           const EvalOptions& options) {
    if (samples.empty()) throw EvalError("evaluate_prompt: no samples");
    if (options.mode != EvalMode::single && options.batch_size == 0)
        throw EvalError("evaluate_prompt: batch_size must be positive");

    std::vector<Prediction> predictions;
    predictions.reserve(samples.size());
    const std::size_t chunk_size =
        options.mode == EvalMode::single ? 1 : options.batch_size;
    for (std::size_t begin = 0; begin < samples.size(); begin += chunk_size) {
        const std::size_t end = std::min(samples.size(), begin + chunk_size);
        std::vector<LabeledSample> chunk(samples.begin() + static_cast<long>(begin),
                                         samples.begin() + static_cast<long>(end));
        auto preds = eval_chunk(gateway, templates, prompt, chunk, options.mode);
        predictions.insert(predictions.end(), preds.begin(), preds.end());
    }
    bind_prediction_ids(predictions, samples);
    EvalReport report = score_accuracy(predictions, samples);
    if (options.collect_errors)
        report.error_strings =
            collect_error_strings(templates, predictions, samples, prompt, options.error_cap);
    return report;
}

std::vector<CommentRecord> generate_comments(Gateway& gateway, const TemplateSet& templates,
                                             const std::string& prompt,
                                             const std::vector<LabeledSample>& samples,
                                             std::size_t batch_size) {
    if (samples.empty()) throw EvalError("generate_comments: no samples");
    if (batch_size == 0) throw EvalError("generate_comments: batch_size must be positive");
    std::vector<CommentRecord> records;
    records.reserve(samples.size());
    for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
        const std::size_t end = std::min(samples.size(), begin + batch_size);
        std::vector<LabeledSample> chunk(samples.begin() + static_cast<long>(begin),
                                         samples.begin() + static_cast<long>(end));
        auto preds = eval_chunk(gateway, templates, prompt, chunk, EvalMode::batch_comment);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            CommentRecord record;
            record.id = chunk[i].id;
            record.result = preds[i].parse_status == ParseStatus::ok
                                ? to_string(*preds[i].predicted)
                                : "unparsed";
            record.reason = preds[i].rationale;
            records.push_back(std::move(record));
        }
    }
    return records;
}

}  // namespace promptsearch
