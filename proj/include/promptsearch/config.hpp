#pragma once

#include "promptsearch/gateway.hpp"
#include "promptsearch/search.hpp"
#include "promptsearch/templates.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>

namespace promptsearch {

/// Top-level run configuration, loaded from a JSON document with nested
/// sections (search.*, roles.base/actor/optimizer.*) plus file paths.
/// Unknown keys are rejected so typos fail loudly.
struct RunConfig {
    SearchConfig search;
    std::map<Role, LLMRoleConfig> roles;   // all three roles always present
    std::string dataset_path;              // required by optimize
    std::string output_dir = "out";
    std::optional<std::string> template_override_path;
    std::optional<std::string> record_fixtures_path;  // gateway recorder target
    int max_in_flight = 8;
};

/// Parses and validates the config file. Missing roles get defaults for
/// their role; field errors raise ConfigError carrying the dotted path.
RunConfig load_run_config(const std::string& path);

RunConfig run_config_from_json(const nlohmann::json& doc);

/// The template set named by the config (defaults, or defaults plus the
/// override file).
TemplateSet templates_for(const RunConfig& config);

/// Gateway wired up from the config's roles and recorder settings.
std::unique_ptr<Gateway> make_gateway(const RunConfig& config);

}  // namespace promptsearch
