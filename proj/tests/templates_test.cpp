#include "promptsearch/templates.hpp"

#include "promptsearch/errors.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace promptsearch;

TEST_CASE("templates: defaults carry all nine bodies") {
    const TemplateSet set = TemplateSet::defaults();
    for (TemplateName name :
         {TemplateName::initial, TemplateName::input_format, TemplateName::error_string,
          TemplateName::error_feedback, TemplateName::state_transit,
          TemplateName::memory_summarize, TemplateName::batch_eval, TemplateName::batch_comment,
          TemplateName::resample}) {
        CHECK_FALSE(set.body(name).empty());
    }
    CHECK(set.body(TemplateName::initial).find("knowledge of journalism") != std::string::npos);
    CHECK(set.body(TemplateName::input_format).find("<answer>") != std::string::npos);
    CHECK(set.body(TemplateName::state_transit).find("The new prompts are:") !=
          std::string::npos);
}

TEST_CASE("templates: name round trip") {
    for (const char* name : {"initial", "input_format", "error_string", "error_feedback",
                             "state_transit", "memory_summarize", "batch_eval", "batch_comment",
                             "resample"}) {
        CHECK(std::string(to_string(template_name_from_string(name))) == name);
    }
    CHECK_THROWS_AS(template_name_from_string("no_such_template"), TemplateError);
}

TEST_CASE("templates: render substitutes every occurrence in one pass") {
    const TemplateSet set = TemplateSet::defaults();
    const std::string out = set.render(
        TemplateName::input_format, {{"prompt", "Check sourcing."}, {"news", "Quiet day."}});
    CHECK(out.find("Check sourcing.") == 0);
    CHECK(out.find("News or social media message: Quiet day..") != std::string::npos);
    CHECK(out.find("{prompt}") == std::string::npos);
    CHECK(out.find("{news}") == std::string::npos);
}

TEST_CASE("templates: substituted text is never rescanned") {
    const TemplateSet set = TemplateSet::defaults();
    const std::string out = set.render(
        TemplateName::input_format, {{"prompt", "X {news} Y"}, {"news", "N"}});
    // The {news} inside the prompt binding stays literal.
    CHECK(out.find("X {news} Y") != std::string::npos);
    CHECK(out.find("message: N.") != std::string::npos);
}

TEST_CASE("templates: unbound placeholder raises") {
    const TemplateSet set = TemplateSet::defaults();
    CHECK_THROWS_AS(set.render(TemplateName::input_format, {{"prompt", "p"}}), TemplateError);
    // Extra bindings are harmless.
    CHECK_NOTHROW(set.render(TemplateName::initial, {{"prompt", "unused"}}));
}

TEST_CASE("templates: placeholders_of reports first-occurrence order") {
    const TemplateSet set = TemplateSet::defaults();
    const auto input = set.placeholders_of(TemplateName::input_format);
    REQUIRE(input.size() == 2);
    CHECK(input[0] == "prompt");
    CHECK(input[1] == "news");

    const auto transit = set.placeholders_of(TemplateName::state_transit);
    REQUIRE(transit.size() == 6);
    CHECK(transit[0] == "prompt");
    CHECK(transit[1] == "error strings");
    CHECK(transit[2] == "error feedback");
    CHECK(transit[3] == "trajectory prompts");
    CHECK(transit[4] == "Memory");
    CHECK(transit[5] == "steps_per_gradient");

    // batch_size occurs several times but is reported once.
    const auto batch = set.placeholders_of(TemplateName::batch_eval);
    REQUIRE(batch.size() == 2);
    CHECK(batch[0] == "prompt");
    CHECK(batch[1] == "batch_size");
}

TEST_CASE("templates: override file replaces individual bodies") {
    testutil::TempDir dir;
    const std::string path = dir.file("overrides.json");
    testutil::write_file(path, R"({"initial": "Be strict about {prompt}."})");
    const TemplateSet set = TemplateSet::with_overrides(path);
    CHECK(set.body(TemplateName::initial) == "Be strict about {prompt}.");
    // Untouched bodies keep their defaults.
    CHECK(set.body(TemplateName::resample) == TemplateSet::defaults().body(TemplateName::resample));
}

TEST_CASE("templates: override validation fails loudly") {
    testutil::TempDir dir;
    const std::string path = dir.file("overrides.json");

    testutil::write_file(path, R"({"no_such": "body"})");
    CHECK_THROWS_AS(TemplateSet::with_overrides(path), TemplateError);

    testutil::write_file(path, R"({"initial": "uses {not_a_placeholder}"})");
    CHECK_THROWS_AS(TemplateSet::with_overrides(path), TemplateError);

    testutil::write_file(path, R"({"initial": 7})");
    CHECK_THROWS_AS(TemplateSet::with_overrides(path), TemplateError);

    testutil::write_file(path, R"(["not", "an", "object"])");
    CHECK_THROWS_AS(TemplateSet::with_overrides(path), TemplateError);

    testutil::write_file(path, "{broken");
    CHECK_THROWS_AS(TemplateSet::with_overrides(path), TemplateError);

    CHECK_THROWS_AS(TemplateSet::with_overrides(dir.file("absent.json")), TemplateError);
}

TEST_CASE("prompt blocks: wrapped prompts are extracted in order") {
    const PromptBlocks one = parse_prompt_blocks("<START>alpha<END>");
    REQUIRE(one.blocks.size() == 1);
    CHECK(one.blocks[0] == "alpha");
    CHECK_FALSE(one.malformed);

    const PromptBlocks two =
        parse_prompt_blocks("pre <START> a <END> mid <START>b<END> post");
    REQUIRE(two.blocks.size() == 2);
    CHECK(two.blocks[0] == "a");
    CHECK(two.blocks[1] == "b");
    CHECK_FALSE(two.malformed);
}

TEST_CASE("prompt blocks: surrounding whitespace is trimmed") {
    const PromptBlocks out = parse_prompt_blocks("<START>\n  keep the core  \n<END>");
    REQUIRE(out.blocks.size() == 1);
    CHECK(out.blocks[0] == "keep the core");
}

TEST_CASE("prompt blocks: unterminated opening sets the malformed flag") {
    const PromptBlocks out = parse_prompt_blocks("<START>never closed");
    CHECK(out.blocks.empty());
    CHECK(out.malformed);

    const PromptBlocks mixed = parse_prompt_blocks("<START>ok<END> tail <START>broken");
    REQUIRE(mixed.blocks.size() == 1);
    CHECK(mixed.blocks[0] == "ok");
    CHECK(mixed.malformed);
}

TEST_CASE("prompt blocks: nested opening yields the inner block only") {
    const PromptBlocks out = parse_prompt_blocks("<START>a<START>b<END>c<END>");
    REQUIRE(out.blocks.size() == 1);
    CHECK(out.blocks[0] == "b");
    CHECK(out.malformed);
}

TEST_CASE("prompt blocks: total on arbitrary text") {
    CHECK(parse_prompt_blocks("").blocks.empty());
    CHECK_FALSE(parse_prompt_blocks("").malformed);
    CHECK(parse_prompt_blocks("no markers at all").blocks.empty());
    CHECK(parse_prompt_blocks("<END> before <START>").blocks.empty());
}
