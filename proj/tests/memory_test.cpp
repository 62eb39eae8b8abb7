#include "promptsearch/memory.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace promptsearch;

TEST_CASE("memory: entries are numbered in insertion order") {
    MemoryBank bank;
    bank.record_feedback("first lesson", 1);
    bank.record_feedback("second lesson", 1);
    bank.record_feedback("third lesson", 2);
    REQUIRE(bank.entries().size() == 3);
    CHECK(bank.entries()[0].index == 1);
    CHECK(bank.entries()[2].index == 3);
    CHECK(bank.entries()[2].epoch == 2);
    CHECK(bank.unsummarized_count() == 3);
    CHECK_THROWS_AS(bank.record_feedback("", 1), Error);
}

TEST_CASE("memory: guidance lists recent raw entries until a summary exists") {
    MemoryBank bank;
    CHECK(bank.guidance_text(8).empty());

    bank.record_feedback("check the sourcing", 1);
    bank.record_feedback("watch for exaggeration", 1);
    bank.record_feedback("verify the evidence", 2);

    CHECK(bank.guidance_text(8) ==
          "1. check the sourcing\n2. watch for exaggeration\n3. verify the evidence");
    // Only the most recent max_raw entries, renumbered from 1.
    CHECK(bank.guidance_text(2) == "1. watch for exaggeration\n2. verify the evidence");
    CHECK(bank.guidance_text(0).empty());
}

TEST_CASE("memory: below the threshold no model call happens") {
    MemoryBank bank;
    Gateway gateway(testutil::scripted_roles("constant:SUMMARY"));
    const TemplateSet templates = TemplateSet::defaults();

    for (int i = 0; i < 7; ++i) bank.record_feedback("entry " + std::to_string(i + 1), 1);
    CHECK_FALSE(bank.maybe_summarize(gateway, Role::actor, templates, 8));
    CHECK(bank.summary().empty());
    CHECK(gateway.stats(Role::actor).requests == 0);
}

TEST_CASE("memory: reaching the threshold summarizes every entry") {
    MemoryBank bank;
    Gateway gateway(testutil::scripted_roles("constant:unused"));
    std::string seen_prompt;
    gateway.set_script_handler(Role::actor,
                               [&](const GenerationRequest& request, const std::string&) {
                                   seen_prompt = request.prompt;
                                   return std::string("COMPRESSED GUIDANCE");
                               });
    const TemplateSet templates = TemplateSet::defaults();

    for (int i = 0; i < 8; ++i) bank.record_feedback("lesson " + std::to_string(i + 1), 1);
    CHECK(bank.maybe_summarize(gateway, Role::actor, templates, 8));
    CHECK(bank.summary() == "COMPRESSED GUIDANCE");
    CHECK(bank.summarized_through() == 8);
    CHECK(bank.unsummarized_count() == 0);

    CHECK(seen_prompt.rfind("Summarize the following reasons and suggestions", 0) == 0);
    CHECK(seen_prompt.find("Number 1:\n\nReasons and Suggestions: lesson 1") !=
          std::string::npos);
    CHECK(seen_prompt.find("Number 8:\n\nReasons and Suggestions: lesson 8") !=
          std::string::npos);

    // The summary replaces raw guidance.
    CHECK(bank.guidance_text(8) == "COMPRESSED GUIDANCE");

    // Re-summarization enumerates the whole history again.
    for (int i = 8; i < 16; ++i) bank.record_feedback("lesson " + std::to_string(i + 1), 2);
    CHECK(bank.maybe_summarize(gateway, Role::actor, templates, 8));
    CHECK(bank.summarized_through() == 16);
    CHECK(seen_prompt.find("Number 1:") != std::string::npos);
    CHECK(seen_prompt.find("Number 16:") != std::string::npos);
}

TEST_CASE("memory: a failed summarization leaves memory unchanged") {
    MemoryBank bank;
    auto roles = testutil::scripted_roles("constant:unused");
    roles[Role::actor].backend = BackendKind::replay;  // no fixtures: every call misses
    Gateway gateway(std::move(roles));
    const TemplateSet templates = TemplateSet::defaults();

    for (int i = 0; i < 8; ++i) bank.record_feedback("lesson " + std::to_string(i + 1), 1);
    CHECK_FALSE(bank.maybe_summarize(gateway, Role::actor, templates, 8));
    CHECK(bank.summary().empty());
    CHECK(bank.summarized_through() == 0);
    CHECK(bank.warning_count() == 1);
    // Raw guidance still works.
    CHECK(bank.guidance_text(8).rfind("1. lesson 1", 0) == 0);
}

TEST_CASE("memory: threshold zero is a contract violation") {
    MemoryBank bank;
    Gateway gateway(testutil::scripted_roles("constant:x"));
    const TemplateSet templates = TemplateSet::defaults();
    CHECK_THROWS_AS(bank.maybe_summarize(gateway, Role::actor, templates, 0), Error);
}

TEST_CASE("memory: restore round-trips the dumped state") {
    std::vector<FeedbackEntry> entries;
    for (std::size_t i = 1; i <= 3; ++i)
        entries.push_back({i, "entry " + std::to_string(i), static_cast<int>(i)});

    const MemoryBank bank = MemoryBank::restore(entries, "old summary", 2);
    CHECK(bank.entries().size() == 3);
    CHECK(bank.summary() == "old summary");
    CHECK(bank.summarized_through() == 2);
    CHECK(bank.unsummarized_count() == 1);

    CHECK_THROWS_AS(MemoryBank::restore(entries, "", 4), CheckpointError);
}
