#pragma once

#include "promptsearch/errors.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace promptsearch {

/// The three model roles: base classifies news, actor generates error
/// feedback, optimizer rewrites prompts and produces variants.
enum class Role { base, actor, optimizer };

const char* to_string(Role role);
Role role_from_string(std::string_view s);

enum class BackendKind { http, replay, scripted };

const char* to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view s);

struct LLMRoleConfig {
    Role role = Role::base;
    BackendKind backend = BackendKind::scripted;
    std::string endpoint;      // http: full URL of the chat-completion route
    std::string model_name = "scripted";
    double temperature = 0.01;  // base default; actor/optimizer default to 1.0
    int max_tokens = 1024;
    std::string api_key_env;   // env var holding the bearer token (http only)
    std::string fixtures_path; // replay: JSONL fixture file
    std::string script = "digest_echo";  // scripted: named handler
    std::uint64_t script_seed = 0;       // scripted: handler seed
};

/// Role config with the stock temperature for that role (0.01 base, 1.0 otherwise).
LLMRoleConfig default_role_config(Role role);

struct GenerationRequest {
    Role role = Role::base;
    std::string model_name;
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 1024;
    int attempt = 1;
    bool bypass_cache = false;  // re-ask path: skip lookup, still store result
};

struct GenerationResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t latency_ms = 0;
    std::string backend_tag;
    bool cache_hit = false;
};

/// 64-hex SHA-256 over the canonical serialization of
/// (role, model_name, temperature rounded to 1e-6, prompt bytes).
/// Stable across runs, platforms and processes; attempt and max_tokens are
/// deliberately excluded.
std::string canonical_digest(const GenerationRequest& request);

struct RetryPolicy {
    int max_retries = 5;        // additional attempts after the first
    int base_backoff_ms = 500;  // doubled per retry
    double jitter_frac = 0.25;  // uniform +/- fraction of the backoff
};

struct RoleCallStats {
    std::uint64_t requests = 0;       // complete() invocations
    std::uint64_t backend_calls = 0;  // actual backend generations
    std::uint64_t cache_hits = 0;
};

/// A deterministic stand-in generator: (request, digest) -> response text.
using ScriptHandler = std::function<std::string(const GenerationRequest&, const std::string& digest)>;

/// Uniform boundary to the three model roles. Thread-safe: complete() may be
/// called concurrently; a counting semaphore bounds in-flight backend calls
/// and the response cache takes concurrent reads with serialized writes.
class Gateway {
public:
    struct Options {
        RetryPolicy retry;
        std::string record_path;  // when set, append {"digest","response"} JSONL fixtures
        int max_in_flight = 8;
    };

    explicit Gateway(std::map<Role, LLMRoleConfig> roles);
    Gateway(std::map<Role, LLMRoleConfig> roles, Options options);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Cache-checked completion. Replay misses raise ReplayMissError carrying
    /// the digest; exhausted retries raise GatewayError; malformed wire
    /// responses raise ProtocolError.
    GenerationResponse complete(const GenerationRequest& request);

    /// Builds the request from the role's configuration, then completes it.
    GenerationResponse generate(Role role, const std::string& prompt, int attempt = 1,
                                bool bypass_cache = false);

    const LLMRoleConfig& role_config(Role role) const;

    /// True when the role's backend is a pure function of its inputs
    /// (replay or scripted), so a cache-bypassing re-ask cannot differ.
    bool deterministic(Role role) const;

    RoleCallStats stats(Role role) const;

    /// Replaces the handler of a scripted-backend role.
    void set_script_handler(Role role, ScriptHandler handler);

    /// Registers a replay fixture in memory (in addition to any fixture file).
    void add_replay_fixture(Role role, const std::string& digest, const std::string& response);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Reads a JSONL fixture file ({"digest": <64-hex>, "response": <text>} per
/// line) into a digest -> response map. Throws GatewayError on parse failure.
std::unordered_map<std::string, std::string> load_replay_fixtures(const std::string& path);

}  // namespace promptsearch
