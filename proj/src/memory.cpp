#include "promptsearch/memory.hpp"

#include <sstream>

namespace promptsearch {

void MemoryBank::record_feedback(const std::string& entry_text, int epoch) {
    if (entry_text.empty()) throw Error("memory: feedback text must be non-empty");
    FeedbackEntry entry;
    entry.index = entries_.size() + 1;
    entry.text = entry_text;
    entry.epoch = epoch;
    entries_.push_back(std::move(entry));
}

bool MemoryBank::maybe_summarize(Gateway& gateway, Role role, const TemplateSet& templates,
                                 std::size_t threshold) {
    if (threshold == 0) throw Error("memory: threshold must be >= 1");
    if (unsummarized_count() < threshold) return false;

    // The summarization prompt enumerates ALL entries, not just new ones.
    std::ostringstream request;
    request << templates.render(TemplateName::memory_summarize, {});
    for (const FeedbackEntry& entry : entries_) {
        request << "\n\nNumber " << entry.index << ":\n\nReasons and Suggestions: "
                << entry.text;
    }
    try {
        GenerationResponse response = gateway.generate(role, request.str());
        summary_ = response.text;
        summarized_through_ = entries_.size();
        return true;
    } catch (const GatewayError&) {
        ++warnings_;  // memory unchanged; search continues with raw guidance
        return false;
    }
}

std::string MemoryBank::guidance_text(std::size_t max_raw) const {
    if (!summary_.empty()) return summary_;
    if (entries_.empty() || max_raw == 0) return "";
    std::size_t first = entries_.size() > max_raw ? entries_.size() - max_raw : 0;
    std::ostringstream out;
    for (std::size_t i = first; i < entries_.size(); ++i) {
        if (i > first) out << "\n";
        out << (i - first + 1) << ". " << entries_[i].text;
    }
    return out.str();
}

MemoryBank MemoryBank::restore(std::vector<FeedbackEntry> entries, std::string summary,
                               std::size_t summarized_through) {
    MemoryBank bank;
    bank.entries_ = std::move(entries);
    bank.summary_ = std::move(summary);
    bank.summarized_through_ = summarized_through;
    if (bank.summarized_through_ > bank.entries_.size())
        throw CheckpointError("memory: summarized_through exceeds entry count");
    return bank;
}

}  // namespace promptsearch
