#include "promptsearch/gateway.hpp"

#include "promptsearch/digest.hpp"
#include "promptsearch/scripted.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <semaphore>
#include <thread>

namespace promptsearch {

namespace {
using nlohmann::json;

std::string format_temperature(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", t);
    return buf;
}

// Unambiguous field framing: "<len>:<bytes>" per field.
void append_field(std::string& out, std::string_view field) {
    out += std::to_string(field.size());
    out += ':';
    out.append(field.data(), field.size());
}

struct BackendResult {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct Backend {
    virtual ~Backend() = default;
    virtual BackendResult generate(const GenerationRequest& request, const std::string& digest) = 0;
    virtual const char* tag() const = 0;
};

// ---------------------------------------------------------------------------
// HTTP backend (OpenAI-compatible chat completions)
// ---------------------------------------------------------------------------

class HttpBackend : public Backend {
public:
    HttpBackend(LLMRoleConfig config, RetryPolicy retry)
        : config_(std::move(config)), retry_(retry), jitter_rng_(std::random_device{}()) {
        split_endpoint();
    }

    const char* tag() const override { return "http"; }

    BackendResult generate(const GenerationRequest& request, const std::string&) override {
        json body = {
            {"model", request.model_name},
            {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
        };
        httplib::Headers headers;
        if (!config_.api_key_env.empty()) {
            const char* key = std::getenv(config_.api_key_env.c_str());
            if (key == nullptr || *key == '\0')
                throw GatewayError("api key environment variable '" + config_.api_key_env +
                                   "' is not set");
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        const std::string payload = body.dump();

        int retries_done = 0;
        while (true) {
            httplib::Client client(base_url_);
            client.set_connection_timeout(10, 0);
            client.set_read_timeout(120, 0);
            auto res = client.Post(path_, headers, payload, "application/json");

            bool transient = false;
            std::string failure;
            if (!res) {
                transient = true;  // connection-level failures are retried like 5xx
                failure = "transport error (" + httplib::to_string(res.error()) + ")";
            } else if (res->status == 200) {
                return parse_completion(res->body);
            } else if (res->status == 429 || res->status >= 500) {
                transient = true;
                failure = "http status " + std::to_string(res->status);
            } else {
                throw GatewayError("backend rejected request with http status " +
                                   std::to_string(res->status) + " (non-transient)");
            }

            if (retries_done >= retry_.max_retries)
                throw GatewayError("retries exhausted after " +
                                   std::to_string(retries_done + 1) + " attempts; last: " + failure);
            sleep_backoff(retries_done);
            ++retries_done;
        }
    }

private:
    void split_endpoint() {
        const std::string& url = config_.endpoint;
        auto scheme_end = url.find("://");
        std::size_t host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        auto path_begin = url.find('/', host_begin);
        if (path_begin == std::string::npos) {
            base_url_ = url;
            path_ = "/v1/chat/completions";
        } else {
            base_url_ = url.substr(0, path_begin);
            path_ = url.substr(path_begin);
        }
    }

    BackendResult parse_completion(const std::string& body) {
        json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded()) throw ProtocolError("response body is not valid JSON");
        if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
            throw ProtocolError("response has no choices array");
        const json& msg = doc["choices"][0].value("message", json::object());
        if (!msg.contains("content") || !msg["content"].is_string())
            throw ProtocolError("response choice has no message.content string");
        BackendResult out;
        out.text = msg["content"].get<std::string>();
        if (doc.contains("usage") && doc["usage"].is_object()) {
            out.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
            out.completion_tokens = doc["usage"].value("completion_tokens", 0);
        }
        return out;
    }

    void sleep_backoff(int retries_done) {
        double backoff = retry_.base_backoff_ms * std::pow(2.0, retries_done);
        double jitter = 0.0;
        if (retry_.jitter_frac > 0) {
            std::uniform_real_distribution<double> dist(-retry_.jitter_frac, retry_.jitter_frac);
            jitter = dist(jitter_rng_);
        }
        auto ms = static_cast<std::int64_t>(backoff * (1.0 + jitter));
        if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }

    LLMRoleConfig config_;
    RetryPolicy retry_;
    std::string base_url_;
    std::string path_;
    std::mt19937 jitter_rng_;
};

// ---------------------------------------------------------------------------
// Replay backend
// ---------------------------------------------------------------------------

class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(std::unordered_map<std::string, std::string> fixtures)
        : fixtures_(std::move(fixtures)) {}

    const char* tag() const override { return "replay"; }

    BackendResult generate(const GenerationRequest&, const std::string& digest) override {
        std::lock_guard lock(mutex_);
        auto it = fixtures_.find(digest);
        if (it == fixtures_.end()) throw ReplayMissError(digest);
        return BackendResult{it->second, 0, 0};
    }

    void add(const std::string& digest, const std::string& response) {
        std::lock_guard lock(mutex_);
        fixtures_[digest] = response;
    }

private:
    std::mutex mutex_;
    std::unordered_map<std::string, std::string> fixtures_;
};

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(ScriptHandler handler) : handler_(std::move(handler)) {}

    const char* tag() const override { return "scripted"; }

    BackendResult generate(const GenerationRequest& request, const std::string& digest) override {
        return BackendResult{handler_(request, digest), 0, 0};
    }

    void set_handler(ScriptHandler handler) { handler_ = std::move(handler); }

private:
    ScriptHandler handler_;
};

struct CacheEntry {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::string backend_tag;
};

}  // namespace

const char* to_string(Role role) {
    switch (role) {
        case Role::base: return "base";
        case Role::actor: return "actor";
        case Role::optimizer: return "optimizer";
    }
    return "?";
}

Role role_from_string(std::string_view s) {
    if (s == "base") return Role::base;
    if (s == "actor") return Role::actor;
    if (s == "optimizer") return Role::optimizer;
    throw GatewayError("unknown role '" + std::string(s) + "'");
}

const char* to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::http: return "http";
        case BackendKind::replay: return "replay";
        case BackendKind::scripted: return "scripted";
    }
    return "?";
}

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "http") return BackendKind::http;
    if (s == "replay") return BackendKind::replay;
    if (s == "scripted") return BackendKind::scripted;
    throw GatewayError("unknown backend '" + std::string(s) + "'");
}

LLMRoleConfig default_role_config(Role role) {
    LLMRoleConfig cfg;
    cfg.role = role;
    cfg.temperature = role == Role::base ? 0.01 : 1.0;
    return cfg;
}

std::string canonical_digest(const GenerationRequest& request) {
    std::string canon;
    canon.reserve(request.prompt.size() + 64);
    append_field(canon, to_string(request.role));
    append_field(canon, request.model_name);
    append_field(canon, format_temperature(request.temperature));
    append_field(canon, request.prompt);
    return sha256_hex(canon);
}

std::unordered_map<std::string, std::string> load_replay_fixtures(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GatewayError("cannot open replay fixture file: " + path);
    std::unordered_map<std::string, std::string> fixtures;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("digest") ||
            !doc.contains("response") || !doc["digest"].is_string() ||
            !doc["response"].is_string())
            throw GatewayError("bad fixture at " + path + ":" + std::to_string(line_no));
        fixtures[doc["digest"].get<std::string>()] = doc["response"].get<std::string>();
    }
    return fixtures;
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

struct Gateway::Impl {
    std::map<Role, LLMRoleConfig> roles;
    Options options;
    std::map<Role, std::unique_ptr<Backend>> backends;

    std::shared_mutex cache_mutex;
    std::unordered_map<std::string, CacheEntry> cache;

    std::mutex stats_mutex;
    std::map<Role, RoleCallStats> stats;

    std::mutex record_mutex;
    std::ofstream record_out;
    std::unordered_set<std::string> recorded;

    std::counting_semaphore<4096> in_flight{1};

    explicit Impl(std::map<Role, LLMRoleConfig> role_map, Options opts)
        : roles(std::move(role_map)), options(std::move(opts)),
          in_flight(std::max(1, options.max_in_flight)) {
        for (const auto& [role, cfg] : roles) {
            switch (cfg.backend) {
                case BackendKind::http:
                    backends[role] = std::make_unique<HttpBackend>(cfg, options.retry);
                    break;
                case BackendKind::replay: {
                    std::unordered_map<std::string, std::string> fixtures;
                    if (!cfg.fixtures_path.empty())
                        fixtures = load_replay_fixtures(cfg.fixtures_path);
                    backends[role] = std::make_unique<ReplayBackend>(std::move(fixtures));
                    break;
                }
                case BackendKind::scripted:
                    backends[role] = std::make_unique<ScriptedBackend>(make_script(cfg));
                    break;
            }
        }
        if (!options.record_path.empty()) {
            record_out.open(options.record_path, std::ios::app);
            if (!record_out)
                throw GatewayError("cannot open fixture record file: " + options.record_path);
        }
    }

    void record_fixture(const std::string& digest, const std::string& response) {
        if (!record_out.is_open()) return;
        std::lock_guard lock(record_mutex);
        if (!recorded.insert(digest).second) return;
        json line = {{"digest", digest}, {"response", response}};
        record_out << line.dump() << '\n';
        record_out.flush();
    }
};

Gateway::Gateway(std::map<Role, LLMRoleConfig> roles) : Gateway(std::move(roles), Options{}) {}

Gateway::Gateway(std::map<Role, LLMRoleConfig> roles, Options options)
    : impl_(std::make_unique<Impl>(std::move(roles), std::move(options))) {}

Gateway::~Gateway() = default;

const LLMRoleConfig& Gateway::role_config(Role role) const {
    auto it = impl_->roles.find(role);
    if (it == impl_->roles.end())
        throw GatewayError(std::string("role '") + to_string(role) + "' is not configured");
    return it->second;
}

bool Gateway::deterministic(Role role) const {
    return role_config(role).backend != BackendKind::http;
}

RoleCallStats Gateway::stats(Role role) const {
    std::lock_guard lock(impl_->stats_mutex);
    auto it = impl_->stats.find(role);
    return it == impl_->stats.end() ? RoleCallStats{} : it->second;
}

void Gateway::set_script_handler(Role role, ScriptHandler handler) {
    auto it = impl_->backends.find(role);
    if (it == impl_->backends.end())
        throw GatewayError(std::string("role '") + to_string(role) + "' is not configured");
    auto* scripted = dynamic_cast<ScriptedBackend*>(it->second.get());
    if (scripted == nullptr)
        throw GatewayError(std::string("role '") + to_string(role) + "' is not scripted");
    scripted->set_handler(std::move(handler));
}

void Gateway::add_replay_fixture(Role role, const std::string& digest,
                                 const std::string& response) {
    auto it = impl_->backends.find(role);
    if (it == impl_->backends.end())
        throw GatewayError(std::string("role '") + to_string(role) + "' is not configured");
    auto* replay = dynamic_cast<ReplayBackend*>(it->second.get());
    if (replay == nullptr)
        throw GatewayError(std::string("role '") + to_string(role) + "' is not a replay backend");
    replay->add(digest, response);
}

GenerationResponse Gateway::generate(Role role, const std::string& prompt, int attempt,
                                     bool bypass_cache) {
    const LLMRoleConfig& cfg = role_config(role);
    GenerationRequest request;
    request.role = role;
    request.model_name = cfg.model_name;
    request.prompt = prompt;
    request.temperature = cfg.temperature;
    request.max_tokens = cfg.max_tokens;
    request.attempt = attempt;
    request.bypass_cache = bypass_cache;
    return complete(request);
}

GenerationResponse Gateway::complete(const GenerationRequest& request) {
    if (request.prompt.empty()) throw GatewayError("request prompt is empty");
    auto backend_it = impl_->backends.find(request.role);
    if (backend_it == impl_->backends.end())
        throw GatewayError(std::string("role '") + to_string(request.role) +
                           "' is not configured");
    Backend& backend = *backend_it->second;
    const std::string digest = canonical_digest(request);

    {
        std::lock_guard lock(impl_->stats_mutex);
        impl_->stats[request.role].requests++;
    }

    if (!request.bypass_cache) {
        std::shared_lock lock(impl_->cache_mutex);
        auto it = impl_->cache.find(digest);
        if (it != impl_->cache.end()) {
            {
                std::lock_guard slock(impl_->stats_mutex);
                impl_->stats[request.role].cache_hits++;
            }
            GenerationResponse resp;
            resp.text = it->second.text;
            resp.prompt_tokens = it->second.prompt_tokens;
            resp.completion_tokens = it->second.completion_tokens;
            resp.backend_tag = it->second.backend_tag;
            resp.cache_hit = true;
            return resp;
        }
    }

    impl_->in_flight.acquire();
    BackendResult result;
    std::int64_t latency_ms = 0;
    try {
        auto t0 = std::chrono::steady_clock::now();
        result = backend.generate(request, digest);
        latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    } catch (...) {
        impl_->in_flight.release();
        throw;
    }
    impl_->in_flight.release();

    {
        std::lock_guard lock(impl_->stats_mutex);
        impl_->stats[request.role].backend_calls++;
    }
    impl_->record_fixture(digest, result.text);
    {
        std::unique_lock lock(impl_->cache_mutex);
        impl_->cache[digest] =
            CacheEntry{result.text, result.prompt_tokens, result.completion_tokens, backend.tag()};
    }

    GenerationResponse resp;
    resp.text = std::move(result.text);
    resp.prompt_tokens = result.prompt_tokens;
    resp.completion_tokens = result.completion_tokens;
    resp.latency_ms = latency_ms;
    resp.backend_tag = backend.tag();
    resp.cache_hit = false;
    return resp;
}

}  // namespace promptsearch
