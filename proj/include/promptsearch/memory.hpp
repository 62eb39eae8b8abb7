#pragma once

#include "promptsearch/gateway.hpp"
#include "promptsearch/templates.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace promptsearch {

struct FeedbackEntry {
    std::size_t index = 0;  // 1-based, unique, increasing in insertion order
    std::string text;
    int epoch = 0;          // iteration that produced the feedback
};

/// Append-only store of historical error feedback plus a compressed summary
/// injected as global guidance into state transitions.
class MemoryBank {
public:
    const std::vector<FeedbackEntry>& entries() const { return entries_; }
    const std::string& summary() const { return summary_; }
    std::size_t summarized_through() const { return summarized_through_; }
    std::size_t unsummarized_count() const { return entries_.size() - summarized_through_; }

    /// Appends a feedback entry with the next index. Throws on empty text.
    void record_feedback(const std::string& entry_text, int epoch);

    /// When the unsummarized entry count has reached `threshold`, renders the
    /// summarization prompt over ALL entries, issues one call on `role`, and
    /// replaces the summary. Backend failure leaves memory unchanged and
    /// bumps the warning counter. Returns true when a summary was produced.
    bool maybe_summarize(Gateway& gateway, Role role, const TemplateSet& templates,
                         std::size_t threshold);

    /// Guidance for the {Memory} placeholder: the summary when one exists,
    /// otherwise a numbered list of at most `max_raw` most recent entries
    /// (oldest of those first). Empty memory yields "".
    std::string guidance_text(std::size_t max_raw) const;

    std::size_t warning_count() const { return warnings_; }

    /// Checkpoint support: restores a previously dumped state.
    static MemoryBank restore(std::vector<FeedbackEntry> entries, std::string summary,
                              std::size_t summarized_through);

private:
    std::vector<FeedbackEntry> entries_;
    std::string summary_;
    std::size_t summarized_through_ = 0;  // 0 = never summarized
    std::size_t warnings_ = 0;
};

}  // namespace promptsearch
