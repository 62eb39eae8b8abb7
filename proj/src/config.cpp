#include "promptsearch/config.hpp"

#include <fstream>
#include <set>

namespace promptsearch {

namespace {
using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path, what);
}

void require_object(const json& doc, const std::string& path) {
    if (!doc.is_object()) fail(path, "must be a JSON object");
}

void reject_unknown_keys(const json& doc, const std::string& path,
                         const std::set<std::string>& known) {
    for (const auto& [key, value] : doc.items())
        if (!known.contains(key)) fail(path + "." + key, "unknown field");
}

template <typename T>
T get_field(const json& doc, const std::string& section, const char* key, T fallback) {
    if (!doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        fail(section + "." + key, "has the wrong type");
    }
}

SearchConfig parse_search(const json& doc) {
    require_object(doc, "search");
    reject_unknown_keys(doc, "search",
                        {"depth_limit", "epochs", "expand_width", "resample_width",
                         "exploration_weight", "early_stop_reward", "summarize_threshold",
                         "batch_size", "validation_fraction", "rng_seed", "use_memory",
                         "initial_prompt"});
    SearchConfig config;
    config.depth_limit = get_field(doc, "search", "depth_limit", config.depth_limit);
    config.epochs = get_field(doc, "search", "epochs", config.epochs);
    config.expand_width = get_field(doc, "search", "expand_width", config.expand_width);
    config.resample_width = get_field(doc, "search", "resample_width", config.resample_width);
    config.exploration_weight =
        get_field(doc, "search", "exploration_weight", config.exploration_weight);
    if (doc.contains("early_stop_reward") && !doc.at("early_stop_reward").is_null())
        config.early_stop_reward = get_field(doc, "search", "early_stop_reward", 0.0);
    config.summarize_threshold =
        get_field(doc, "search", "summarize_threshold", config.summarize_threshold);
    config.batch_size = get_field(doc, "search", "batch_size", config.batch_size);
    config.validation_fraction =
        get_field(doc, "search", "validation_fraction", config.validation_fraction);
    config.rng_seed = get_field(doc, "search", "rng_seed", config.rng_seed);
    config.use_memory = get_field(doc, "search", "use_memory", config.use_memory);
    config.initial_prompt = get_field(doc, "search", "initial_prompt", config.initial_prompt);
    config.validate();
    return config;
}

LLMRoleConfig parse_role(const json& doc, Role role) {
    const std::string section = std::string("roles.") + to_string(role);
    require_object(doc, section);
    reject_unknown_keys(doc, section,
                        {"backend", "endpoint", "model_name", "temperature", "max_tokens",
                         "api_key_env", "fixtures_path", "script", "script_seed"});
    LLMRoleConfig config = default_role_config(role);
    if (doc.contains("backend")) {
        try {
            config.backend =
                backend_kind_from_string(doc.at("backend").get<std::string>());
        } catch (const json::exception&) {
            fail(section + ".backend", "has the wrong type");
        } catch (const GatewayError& e) {
            fail(section + ".backend", e.what());
        }
    }
    config.endpoint = get_field(doc, section, "endpoint", config.endpoint);
    config.model_name = get_field(doc, section, "model_name", config.model_name);
    config.temperature = get_field(doc, section, "temperature", config.temperature);
    config.max_tokens = get_field(doc, section, "max_tokens", config.max_tokens);
    config.api_key_env = get_field(doc, section, "api_key_env", config.api_key_env);
    config.fixtures_path = get_field(doc, section, "fixtures_path", config.fixtures_path);
    config.script = get_field(doc, section, "script", config.script);
    config.script_seed = get_field(doc, section, "script_seed", config.script_seed);

    if (config.temperature < 0.0) fail(section + ".temperature", "must be >= 0");
    if (config.max_tokens < 1) fail(section + ".max_tokens", "must be >= 1");
    if (config.backend == BackendKind::http && config.endpoint.empty())
        fail(section + ".endpoint", "required for the http backend");
    if (config.backend == BackendKind::replay && config.fixtures_path.empty())
        fail(section + ".fixtures_path", "required for the replay backend");
    return config;
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
    require_object(doc, "(root)");
    reject_unknown_keys(doc, "(root)",
                        {"search", "roles", "dataset_path", "output_dir",
                         "template_override_path", "record_fixtures_path", "max_in_flight"});

    RunConfig config;
    if (doc.contains("search")) config.search = parse_search(doc.at("search"));

    if (doc.contains("roles")) {
        require_object(doc.at("roles"), "roles");
        reject_unknown_keys(doc.at("roles"), "roles", {"base", "actor", "optimizer"});
    }
    for (Role role : {Role::base, Role::actor, Role::optimizer}) {
        if (doc.contains("roles") && doc.at("roles").contains(to_string(role)))
            config.roles[role] = parse_role(doc.at("roles").at(to_string(role)), role);
        else
            config.roles[role] = default_role_config(role);
    }

    config.dataset_path = get_field(doc, "(root)", "dataset_path", config.dataset_path);
    config.output_dir = get_field(doc, "(root)", "output_dir", config.output_dir);
    if (doc.contains("template_override_path") && !doc.at("template_override_path").is_null())
        config.template_override_path =
            get_field<std::string>(doc, "(root)", "template_override_path", "");
    if (doc.contains("record_fixtures_path") && !doc.at("record_fixtures_path").is_null())
        config.record_fixtures_path =
            get_field<std::string>(doc, "(root)", "record_fixtures_path", "");
    config.max_in_flight = get_field(doc, "(root)", "max_in_flight", config.max_in_flight);
    if (config.max_in_flight < 1) fail("max_in_flight", "must be >= 1");
    if (config.output_dir.empty()) fail("output_dir", "must be non-empty");
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("(file)", "cannot open config file: " + path);
    json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw ConfigError("(file)", "config file is not valid JSON");
    return run_config_from_json(doc);
}

TemplateSet templates_for(const RunConfig& config) {
    return config.template_override_path
               ? TemplateSet::with_overrides(*config.template_override_path)
               : TemplateSet::defaults();
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& config) {
    Gateway::Options options;
    options.max_in_flight = config.max_in_flight;
    if (config.record_fixtures_path) options.record_path = *config.record_fixtures_path;
    return std::make_unique<Gateway>(config.roles, options);
}

}  // namespace promptsearch
