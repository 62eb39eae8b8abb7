#include "promptsearch/scripted.hpp"

#include "promptsearch/digest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>

namespace promptsearch {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool contains_ci(const std::string& hay, const std::string& needle) {
    return lower(hay).find(lower(needle)) != std::string::npos;
}

// Substring between the end of `from` (first occurrence at/after `start`) and
// the start of `to` (first occurrence after that); empty string when either
// marker is absent. `to` empty means "to the end".
std::string slice_between(const std::string& text, const std::string& from,
                          const std::string& to, std::size_t start = 0) {
    std::size_t a = text.find(from, start);
    if (a == std::string::npos) return "";
    a += from.size();
    if (to.empty()) return text.substr(a);
    std::size_t b = text.find(to, a);
    if (b == std::string::npos) return "";
    return text.substr(a, b - a);
}

// First unsigned integer appearing right after `marker`, or -1.
long first_int_after(const std::string& text, const std::string& marker) {
    std::size_t pos = text.find(marker);
    if (pos == std::string::npos) return -1;
    pos += marker.size();
    std::size_t end = pos;
    while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
    if (end == pos) return -1;
    return std::stol(text.substr(pos, end - pos));
}

// Platform-stable pseudo-random 64-bit value for (digest, seed, salt).
std::uint64_t mix64(const std::string& digest, std::uint64_t seed, std::uint64_t salt) {
    std::string h =
        sha256_hex(digest + "|" + std::to_string(seed) + "|" + std::to_string(salt));
    return std::stoull(h.substr(0, 16), nullptr, 16);
}

// ---------------------------------------------------------------------------
// Prompt-shape probes (coupled to the stock template wording; scripted
// handlers are test and demo stand-ins, not production parsers)
// ---------------------------------------------------------------------------

bool looks_like_batch_eval(const std::string& p) {
    return p.find("questions as input") != std::string::npos;
}
bool looks_like_batch_comment(const std::string& p) {
    return p.find("sentences from the news and social media message dataset") != std::string::npos;
}
bool looks_like_single_eval(const std::string& p) {
    return p.find("News or social media message: ") != std::string::npos &&
           p.find("<answer>") != std::string::npos;
}
bool looks_like_feedback(const std::string& p) {
    return p.find("summarize and list specific suggestions") != std::string::npos;
}
bool looks_like_transit(const std::string& p) {
    return p.find("The new prompts are:") != std::string::npos;
}
bool looks_like_resample(const std::string& p) {
    return p.rfind("Generate ", 0) == 0 && p.find("variants of the prompt") != std::string::npos;
}
bool looks_like_summarize(const std::string& p) {
    return p.rfind("Summarize the following reasons and suggestions", 0) == 0;
}

std::string batch_task_prompt(const std::string& p) {
    std::size_t cut = p.find("\n\nYou will receive ");
    return cut == std::string::npos ? p : p.substr(0, cut);
}

long batch_count(const std::string& p) { return first_int_after(p, "You will receive "); }

// The text of numbered data line i ("question 7: ..." / "text 7: ...");
// data lines are lowercase, which separates them from the uppercase format
// examples inside the batch header.
std::string batch_item(const std::string& p, const char* kind, long i) {
    std::string tag = "\n" + std::string(kind) + " " + std::to_string(i) + ": ";
    std::string next = "\n" + std::string(kind) + " " + std::to_string(i + 1) + ": ";
    std::size_t a = p.find(tag);
    if (a == std::string::npos) return "";
    a += tag.size();
    std::size_t b = p.find(next, a);
    return b == std::string::npos ? p.substr(a) : p.substr(a, b - a);
}

// The landscape treats "hoax" as the planted fabrication marker of its
// synthetic datasets: samples containing it are labeled fake.
bool marked_fake(const std::string& sample_text) { return contains_ci(sample_text, "hoax"); }

// ---------------------------------------------------------------------------
// Scripts
// ---------------------------------------------------------------------------

ScriptHandler make_digest_echo(std::uint64_t seed) {
    return [seed](const GenerationRequest&, const std::string& digest) {
        return "scripted:" + sha256_hex(digest + "|" + std::to_string(seed)).substr(0, 40);
    };
}

ScriptHandler make_constant(std::string text) {
    return [text = std::move(text)](const GenerationRequest&, const std::string&) { return text; };
}

ScriptHandler make_always_true() {
    return [](const GenerationRequest& request, const std::string&) -> std::string {
        const std::string& p = request.prompt;
        if (looks_like_batch_eval(p)) {
            long n = std::max(1L, batch_count(p));
            std::ostringstream out;
            for (long i = 1; i <= n; ++i) {
                if (i > 1) out << '\n';
                out << "For Question " << i << ": [A]";
            }
            return out.str();
        }
        if (looks_like_batch_comment(p)) {
            long n = std::max(1L, batch_count(p));
            std::ostringstream out;
            for (long i = 1; i <= n; ++i) {
                if (i > 1) out << '\n';
                out << "For Text " << i << ": [Result: True. Reason: scripted affirmative.]";
            }
            return out.str();
        }
        return "<answer>A</answer>";
    };
}

class KeywordLandscape {
public:
    KeywordLandscape(std::vector<std::string> keywords, std::uint64_t seed)
        : keywords_(std::move(keywords)), seed_(seed) {}

    std::string respond(const GenerationRequest& request, const std::string& digest) const {
        const std::string& p = request.prompt;
        // Instruction-anchored shapes first: rewrite prompts embed error
        // blocks that quote eval-template fragments, so the eval probes
        // would otherwise shadow them.
        if (looks_like_summarize(p)) return summarize(p);
        if (looks_like_resample(p)) return resample(p, digest);
        if (looks_like_feedback(p)) return feedback(p);
        if (looks_like_transit(p)) return transit(p);
        if (looks_like_batch_eval(p)) return batch_eval(p);
        if (looks_like_batch_comment(p)) return batch_comment(p);
        if (looks_like_single_eval(p)) return single_eval(p, digest);
        return "Unrecognized request shape.";
    }

private:
    std::vector<std::string> present_in(const std::string& text) const {
        std::vector<std::string> out;
        for (const auto& kw : keywords_)
            if (contains_ci(text, kw)) out.push_back(kw);
        return out;
    }

    std::vector<std::string> missing_from(const std::string& text) const {
        std::vector<std::string> out;
        for (const auto& kw : keywords_)
            if (!contains_ci(text, kw)) out.push_back(kw);
        return out;
    }

    // Number of items the stand-in answers correctly out of n: the first
    // round(fraction*n), where fraction is the task prompt's keyword coverage.
    long correct_count(const std::string& task_prompt, long n) const {
        double frac = keyword_fraction(task_prompt, keywords_);
        return std::lround(frac * static_cast<double>(n));
    }

    std::string batch_eval(const std::string& p) const {
        long n = std::max(1L, batch_count(p));
        long k = correct_count(batch_task_prompt(p), n);
        std::ostringstream out;
        for (long i = 1; i <= n; ++i) {
            bool fake = marked_fake(batch_item(p, "question", i));
            bool correct = i <= k;
            const char* letter = (fake == correct) ? "B" : "A";
            if (i > 1) out << '\n';
            out << "For Question " << i << ": [" << letter << "]";
        }
        return out.str();
    }

    std::string batch_comment(const std::string& p) const {
        long n = std::max(1L, batch_count(p));
        long k = correct_count(batch_task_prompt(p), n);
        auto present = present_in(batch_task_prompt(p));
        std::string basis = present.empty() ? "surface plausibility" : present.front();
        std::ostringstream out;
        for (long i = 1; i <= n; ++i) {
            bool fake = marked_fake(batch_item(p, "text", i));
            bool correct = i <= k;
            const char* verdict = (fake == correct) ? "False" : "True";
            if (i > 1) out << '\n';
            out << "For Text " << i << ": [Result: " << verdict << ". Reason: judged by the "
                << basis << " of the message.]";
        }
        return out.str();
    }

    std::string single_eval(const std::string& p, const std::string& digest) const {
        std::string task = p.substr(0, p.find("\n\nNews or social media message: "));
        std::string news = slice_between(p, "News or social media message: ", "\n\nOptions:");
        bool fake = marked_fake(news);
        double frac = keyword_fraction(task, keywords_);
        bool correct = (mix64(digest, seed_, 1) % 1000) < std::llround(frac * 1000.0);
        const char* letter = (fake == correct) ? "B" : "A";
        return "Judged by the available signals.\n<answer>" + std::string(letter) + "</answer>";
    }

    std::string feedback(const std::string& p) const {
        std::string task = slice_between(p, "My current prompt is: ", "\n\nBut this prompt");
        auto missing = missing_from(task);
        if (missing.empty())
            return "The prompt already covers the key checks; keep its wording stable.";
        std::ostringstream out;
        out << "The prompt gives the model no concrete checks, so borderline items are "
               "guessed. Suggestions:";
        for (std::size_t i = 0; i < missing.size(); ++i)
            out << '\n' << (i + 1) << ". The prompt should direct the model to weigh the "
                << missing[i] << " of the message before judging.";
        return out.str();
    }

    std::string transit(const std::string& p) const {
        std::string task = slice_between(p, "My current prompt is: ", "\n\nBut this prompt");
        std::string fb = slice_between(p, "the problems with this prompt and the reasons are: ",
                                       "\n\nThere is a list");
        std::string mem =
            slice_between(p, "potential causes of model classification errors and suggestions: ",
                          "\n\nBased on the above information");
        long steps = std::max(1L, first_int_after(p, "please write "));

        std::string improved = task;
        for (const auto& kw : present_in(fb)) {
            if (contains_ci(improved, kw)) continue;
            improved += " When judging, weigh the " + kw + " of the message.";
            break;
        }
        for (const auto& kw : present_in(mem)) {
            if (contains_ci(improved, kw)) continue;
            improved += " Also audit the " + kw + " signals it presents.";
            break;
        }

        std::ostringstream out;
        for (long j = 1; j <= steps; ++j) {
            if (j > 1) out << "\n\n";
            out << "<START>" << improved;
            if (j > 1) out << " (Alternative phrasing " << j << ".)";
            out << "<END>";
        }
        return out.str();
    }

    std::string resample(const std::string& p, const std::string& digest) const {
        static const std::string kTail = " while preserving the original meaning.";
        long num = std::max(1L, first_int_after(p, "Generate "));
        std::size_t a = p.find("variants of the prompt ");
        std::size_t b = p.rfind(kTail);
        std::string task;
        if (a != std::string::npos && b != std::string::npos) {
            a += std::string("variants of the prompt ").size();
            if (b > a) task = p.substr(a, b - a);
        }
        auto missing = missing_from(task);
        std::ostringstream out;
        for (long j = 1; j <= num; ++j) {
            std::uint64_t r = mix64(digest, seed_, static_cast<std::uint64_t>(j));
            std::string variant = task;
            if (!missing.empty() && r % 3 == 0) {
                variant +=
                    " In addition, examine the " + missing[(r / 3) % missing.size()] +
                    " of the claim.";
            } else {
                variant += " (Restated form " + std::to_string(j) + ".)";
            }
            if (j > 1) out << "\n\n";
            out << "<START>" << variant << "<END>";
        }
        return out.str();
    }

    std::string summarize(const std::string& p) const {
        auto present = present_in(p);
        if (present.empty()) return "No recurring failure patterns identified.";
        std::ostringstream out;
        out << "Recurring guidance: direct the model to weigh";
        for (std::size_t i = 0; i < present.size(); ++i)
            out << (i == 0 ? " the " : "; the ") << present[i];
        out << " of each message.";
        return out.str();
    }

    std::vector<std::string> keywords_;
    std::uint64_t seed_;
};

std::vector<std::string> split_params(const std::string& params) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= params.size()) {
        std::size_t bar = params.find('|', pos);
        std::string item =
            bar == std::string::npos ? params.substr(pos) : params.substr(pos, bar - pos);
        if (!item.empty()) out.push_back(item);
        if (bar == std::string::npos) break;
        pos = bar + 1;
    }
    return out;
}

}  // namespace

const std::vector<std::string>& landscape_keywords() {
    static const std::vector<std::string> kKeywords = {
        "source credibility", "emotional exaggeration", "logical consistency",
        "corroborating evidence", "publication motive",
    };
    return kKeywords;
}

double keyword_fraction(const std::string& prompt_text,
                        const std::vector<std::string>& keywords) {
    if (keywords.empty()) return 0.0;
    std::size_t present = 0;
    for (const auto& kw : keywords)
        if (contains_ci(prompt_text, kw)) ++present;
    return static_cast<double>(present) / static_cast<double>(keywords.size());
}

ScriptHandler make_script(const LLMRoleConfig& config) {
    std::string name = config.script;
    std::string params;
    if (std::size_t colon = name.find(':'); colon != std::string::npos) {
        params = name.substr(colon + 1);
        name = name.substr(0, colon);
    }
    if (name == "digest_echo") return make_digest_echo(config.script_seed);
    if (name == "constant") return make_constant(params);
    if (name == "always_true") return make_always_true();
    if (name == "keyword_landscape") {
        std::vector<std::string> kws =
            params.empty() ? landscape_keywords() : split_params(params);
        if (kws.empty()) throw GatewayError("keyword_landscape needs at least one keyword");
        auto landscape = std::make_shared<KeywordLandscape>(std::move(kws), config.script_seed);
        return [landscape](const GenerationRequest& request, const std::string& digest) {
            return landscape->respond(request, digest);
        };
    }
    throw GatewayError("unknown script '" + name + "'");
}

}  // namespace promptsearch
