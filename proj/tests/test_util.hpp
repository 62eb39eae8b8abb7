#pragma once

#include "promptsearch/dataset.hpp"
#include "promptsearch/gateway.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace testutil {

/// Self-deleting scratch directory under the system temp root.
class TempDir {
public:
    TempDir() {
        const auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        for (int attempt = 0; attempt < 64; ++attempt) {
            auto candidate = base / ("promptsearch-test-" + std::to_string(rd()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = std::move(candidate);
                return;
            }
        }
        throw std::runtime_error("cannot create a scratch directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Alternating real/fake samples with ids s1..sn. Fake texts carry the
/// "hoax" marker the keyword_landscape script treats as the planted
/// fabrication signal; real texts never contain it.
inline std::vector<promptsearch::LabeledSample> make_samples(std::size_t n) {
    std::vector<promptsearch::LabeledSample> out;
    out.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        promptsearch::LabeledSample s;
        s.id = "s" + std::to_string(i);
        const bool fake = i % 2 == 0;
        s.label = fake ? promptsearch::Label::fake : promptsearch::Label::real;
        s.text = fake ? "Viral hoax claims the city budget item " + std::to_string(i) +
                            " was abolished overnight"
                      : "Transit agency opens line segment " + std::to_string(i) +
                            " after a scheduled inspection";
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string dataset_jsonl(const std::vector<promptsearch::LabeledSample>& samples) {
    // Texts above contain nothing that needs JSON escaping.
    std::ostringstream out;
    for (const auto& s : samples)
        out << R"({"id":")" << s.id << R"(","text":")" << s.text << R"(","label":")"
            << promptsearch::to_string(s.label) << "\"}\n";
    return out.str();
}

inline std::string write_dataset(const TempDir& dir, const std::string& name, std::size_t n) {
    const std::string path = dir.file(name);
    write_file(path, dataset_jsonl(make_samples(n)));
    return path;
}

inline std::map<promptsearch::Role, promptsearch::LLMRoleConfig> scripted_roles(
    const std::string& script, std::uint64_t seed = 0) {
    std::map<promptsearch::Role, promptsearch::LLMRoleConfig> roles;
    for (auto role : {promptsearch::Role::base, promptsearch::Role::actor,
                      promptsearch::Role::optimizer}) {
        auto cfg = promptsearch::default_role_config(role);
        cfg.backend = promptsearch::BackendKind::scripted;
        cfg.script = script;
        cfg.script_seed = seed;
        roles[role] = cfg;
    }
    return roles;
}

/// All three roles played by the keyword-coverage benchmark script.
inline std::map<promptsearch::Role, promptsearch::LLMRoleConfig> landscape_roles(
    std::uint64_t seed = 0) {
    return scripted_roles("keyword_landscape", seed);
}

}  // namespace testutil
