#include "promptsearch/config.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

using namespace promptsearch;
using nlohmann::json;

namespace {

std::string failing_field(const json& doc) {
    try {
        run_config_from_json(doc);
    } catch (const ConfigError& e) {
        return e.field;
    }
    return "";
}

std::string failure_message(const json& doc) {
    try {
        run_config_from_json(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("config: the empty document yields the stock run") {
    const RunConfig config = run_config_from_json(json::object());

    CHECK(config.search.depth_limit == 10);
    CHECK(config.search.epochs == 16);
    CHECK(config.search.expand_width == 3);
    CHECK(config.search.resample_width == 2);
    CHECK(config.search.exploration_weight == 2.5);
    CHECK_FALSE(config.search.early_stop_reward.has_value());
    CHECK(config.search.summarize_threshold == 8);
    CHECK(config.search.batch_size == 32);
    CHECK(config.search.validation_fraction == 0.3);
    CHECK(config.search.rng_seed == 0);
    CHECK(config.search.use_memory);
    CHECK(config.search.initial_prompt.empty());

    REQUIRE(config.roles.size() == 3);
    CHECK(config.roles.at(Role::base).backend == BackendKind::scripted);
    CHECK(config.roles.at(Role::base).temperature == 0.01);
    CHECK(config.roles.at(Role::actor).temperature == 1.0);
    CHECK(config.roles.at(Role::optimizer).temperature == 1.0);
    CHECK(config.roles.at(Role::optimizer).script == "digest_echo");

    CHECK(config.dataset_path.empty());
    CHECK(config.output_dir == "out");
    CHECK_FALSE(config.template_override_path.has_value());
    CHECK_FALSE(config.record_fixtures_path.has_value());
    CHECK(config.max_in_flight == 8);
}

TEST_CASE("config: every recognized field lands where it should") {
    const json doc = {
        {"search",
         {{"depth_limit", 5},
          {"epochs", 7},
          {"expand_width", 2},
          {"resample_width", 0},
          {"exploration_weight", 1.5},
          {"early_stop_reward", 0.9},
          {"summarize_threshold", 4},
          {"batch_size", 8},
          {"validation_fraction", 0.5},
          {"rng_seed", 99},
          {"use_memory", false},
          {"initial_prompt", "start here"}}},
        {"roles",
         {{"base",
           {{"backend", "http"},
            {"endpoint", "http://127.0.0.1:9/v1/chat/completions"},
            {"model_name", "gpt-3.5-turbo"},
            {"temperature", 0.25},
            {"max_tokens", 64},
            {"api_key_env", "NEWS_API_KEY"}}},
          {"actor", {{"backend", "replay"}, {"fixtures_path", "fixtures.jsonl"}}},
          {"optimizer", {{"backend", "scripted"}, {"script", "always_true"},
                         {"script_seed", 9}}}}},
        {"dataset_path", "data/news.jsonl"},
        {"output_dir", "runs/a"},
        {"template_override_path", "templates.json"},
        {"record_fixtures_path", "record.jsonl"},
        {"max_in_flight", 3}};

    const RunConfig config = run_config_from_json(doc);
    CHECK(config.search.depth_limit == 5);
    CHECK(config.search.epochs == 7);
    CHECK(config.search.resample_width == 0);
    REQUIRE(config.search.early_stop_reward.has_value());
    CHECK(*config.search.early_stop_reward == 0.9);
    CHECK(config.search.rng_seed == 99);
    CHECK_FALSE(config.search.use_memory);
    CHECK(config.search.initial_prompt == "start here");

    const LLMRoleConfig& base = config.roles.at(Role::base);
    CHECK(base.role == Role::base);
    CHECK(base.backend == BackendKind::http);
    CHECK(base.endpoint == "http://127.0.0.1:9/v1/chat/completions");
    CHECK(base.model_name == "gpt-3.5-turbo");
    CHECK(base.temperature == 0.25);
    CHECK(base.max_tokens == 64);
    CHECK(base.api_key_env == "NEWS_API_KEY");

    CHECK(config.roles.at(Role::actor).backend == BackendKind::replay);
    CHECK(config.roles.at(Role::actor).fixtures_path == "fixtures.jsonl");
    CHECK(config.roles.at(Role::optimizer).script == "always_true");
    CHECK(config.roles.at(Role::optimizer).script_seed == 9);

    CHECK(config.dataset_path == "data/news.jsonl");
    CHECK(config.output_dir == "runs/a");
    CHECK(config.template_override_path == "templates.json");
    CHECK(config.record_fixtures_path == "record.jsonl");
    CHECK(config.max_in_flight == 3);
}

TEST_CASE("config: explicit nulls mean absent") {
    json doc = {{"search", {{"early_stop_reward", nullptr}}},
                {"template_override_path", nullptr},
                {"record_fixtures_path", nullptr}};
    const RunConfig config = run_config_from_json(doc);
    CHECK_FALSE(config.search.early_stop_reward.has_value());
    CHECK_FALSE(config.template_override_path.has_value());
    CHECK_FALSE(config.record_fixtures_path.has_value());
}

TEST_CASE("config: typos are rejected with their dotted path") {
    CHECK(failing_field({{"depht_limit", 10}}) == "(root).depht_limit");
    CHECK(failing_field({{"search", {{"depht_limit", 10}}}}) == "search.depht_limit");
    CHECK(failing_field({{"roles", {{"judge", json::object()}}}}) == "roles.judge");
    CHECK(failing_field({{"roles", {{"base", {{"scriptt", "x"}}}}}}) ==
          "roles.base.scriptt");
    CHECK(failure_message({{"depht_limit", 10}}).find("unknown field") !=
          std::string::npos);
}

TEST_CASE("config: type mismatches name the field") {
    CHECK(failing_field({{"search", {{"epochs", "many"}}}}) == "search.epochs");
    CHECK(failing_field({{"search", "fast"}}) == "search");
    CHECK(failure_message({{"search", "fast"}}).find("must be a JSON object") !=
          std::string::npos);
    CHECK(failing_field({{"roles", "all"}}) == "roles");
    CHECK(failing_field({{"roles", {{"base", {{"temperature", "warm"}}}}}}) ==
          "roles.base.temperature");
    CHECK(failing_field({{"roles", {{"base", {{"backend", 7}}}}}}) ==
          "roles.base.backend");
    CHECK(failing_field({{"dataset_path", 12}}) == "(root).dataset_path");

    const std::string unknown_backend =
        failure_message({{"roles", {{"base", {{"backend", "carrier-pigeon"}}}}}});
    CHECK(unknown_backend.find("unknown backend") != std::string::npos);
}

TEST_CASE("config: out-of-range values fail closed") {
    CHECK(failing_field({{"search", {{"batch_size", 0}}}}) == "search.batch_size");
    CHECK(failing_field({{"search", {{"validation_fraction", 1.5}}}}) ==
          "search.validation_fraction");
    CHECK(failing_field({{"roles", {{"base", {{"temperature", -0.1}}}}}}) ==
          "roles.base.temperature");
    CHECK(failing_field({{"roles", {{"base", {{"max_tokens", 0}}}}}}) ==
          "roles.base.max_tokens");
    CHECK(failing_field({{"roles", {{"base", {{"backend", "http"}}}}}}) ==
          "roles.base.endpoint");
    CHECK(failing_field({{"roles", {{"actor", {{"backend", "replay"}}}}}}) ==
          "roles.actor.fixtures_path");
    CHECK(failing_field({{"max_in_flight", 0}}) == "max_in_flight");
    CHECK(failing_field({{"output_dir", ""}}) == "output_dir");
}

TEST_CASE("config: file loading reports file-level problems") {
    testutil::TempDir dir;

    try {
        load_run_config(dir.file("absent.json"));
        FAIL("expected a missing-file failure");
    } catch (const ConfigError& e) {
        CHECK(e.field == "(file)");
        CHECK(std::string(e.what()).find("cannot open") != std::string::npos);
    }

    const std::string broken = dir.file("broken.json");
    testutil::write_file(broken, "{ definitely not json");
    try {
        load_run_config(broken);
        FAIL("expected a parse failure");
    } catch (const ConfigError& e) {
        CHECK(e.field == "(file)");
        CHECK(std::string(e.what()).find("not valid JSON") != std::string::npos);
    }

    const std::string good = dir.file("good.json");
    testutil::write_file(good, R"({"search": {"epochs": 2}, "dataset_path": "d.jsonl"})");
    const RunConfig config = load_run_config(good);
    CHECK(config.search.epochs == 2);
    CHECK(config.dataset_path == "d.jsonl");
}

TEST_CASE("config: the template override file is honored") {
    testutil::TempDir dir;
    RunConfig config = run_config_from_json(json::object());
    CHECK(templates_for(config).body(TemplateName::resample) ==
          TemplateSet::defaults().body(TemplateName::resample));

    const std::string overrides = dir.file("templates.json");
    const std::string body =
        "Rewrite {prompt} into {num} fresh forms. Wrap each with <START> and <END>.";
    testutil::write_file(overrides, json{{"resample", body}}.dump());
    config.template_override_path = overrides;
    const TemplateSet templates = templates_for(config);
    CHECK(templates.body(TemplateName::resample) == body);
    CHECK(templates.body(TemplateName::initial) ==
          TemplateSet::defaults().body(TemplateName::initial));
}

TEST_CASE("config: the gateway comes out wired as configured") {
    testutil::TempDir dir;
    RunConfig config = run_config_from_json(json::object());
    for (auto& [role, role_config] : config.roles) role_config.script = "always_true";
    config.record_fixtures_path = dir.file("record.jsonl");
    config.max_in_flight = 1;

    {
        const auto gateway = make_gateway(config);
        CHECK(gateway->deterministic(Role::base));
        CHECK(gateway->generate(Role::base, "anything").text == "<answer>A</answer>");
        CHECK(gateway->role_config(Role::optimizer).script == "always_true");
    }
    // The recorder flushed on destruction.
    const std::string recorded = testutil::read_file(*config.record_fixtures_path);
    CHECK(recorded.find("\"digest\"") != std::string::npos);
    CHECK(recorded.find("<answer>A</answer>") != std::string::npos);
}
