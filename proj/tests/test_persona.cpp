#include <random>

#include <gtest/gtest.h>

#include "crowdvote/error.hpp"
#include "crowdvote/hash.hpp"
#include "crowdvote/persona.hpp"
#include "crowdvote/util.hpp"
#include "test_support.hpp"

using namespace crowdvote;
using crowdvote::testing::data_dir;
using crowdvote::testing::TempDir;

namespace {

ExemplarEntry exemplar(const std::string& id, const std::string& question, const std::string& response) {
    return {id, "comedic", question, response};
}

PersonaSpec biden_spec() {
    PersonaSpec spec;
    spec.persona_id = "joe_biden";
    spec.display_name = "Joe Biden";
    spec.role_description = "You are Joe Biden, answering questions from the public.";
    return spec;
}

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++count;
    return count;
}

}  // namespace

TEST(CompilePrompt, ZeroExemplarsYieldsOnlyTheRoleBlock) {
    const PersonaSpec spec = biden_spec();
    const CompiledPrompt prompt = compile_prompt(spec);
    EXPECT_EQ(prompt.exemplar_count, 0u);
    EXPECT_EQ(prompt.text, spec.role_description + "\n");
}

TEST(CompilePrompt, ExemplarsKeepInputOrder) {
    PersonaSpec spec = biden_spec();
    spec.exemplars = {exemplar("e1", "First question?", "First answer."),
                      exemplar("e2", "Second question?", "Second answer.")};
    const CompiledPrompt prompt = compile_prompt(spec);
    EXPECT_EQ(prompt.exemplar_count, 2u);
    const auto first = prompt.text.find("First answer.");
    const auto second = prompt.text.find("Second question?");
    ASSERT_NE(first, std::string::npos);
    ASSERT_NE(second, std::string::npos);
    EXPECT_LT(first, second);
}

TEST(CompilePrompt, BundledPersonaContainsSunglassesQuestion) {
    const PersonaSpec spec = load_persona(data_dir() / "personas" / "donald_trump.json");
    const CompiledPrompt prompt = compile_prompt(spec);
    EXPECT_NE(prompt.text.find("Where are your sunglasses?"), std::string::npos);
    EXPECT_EQ(prompt.exemplar_count, spec.exemplars.size());
}

TEST(CompilePrompt, LayoutIsRoleThenStyleNotesThenQaPairs) {
    PersonaSpec spec = biden_spec();
    spec.style_notes = "Warm and rambling.";
    spec.exemplars = {exemplar("e1", "Q one", "A one")};
    const std::string expected = spec.role_description + "\n" +
                                 "\nStyle notes:\nWarm and rambling.\n" +
                                 "\nExamples of how you respond:\n" +
                                 "\nQ: Q one\nA: A one\n";
    const CompiledPrompt prompt = compile_prompt(spec);
    EXPECT_EQ(prompt.text, expected);
    EXPECT_EQ(prompt.content_hash, sha256_hex(expected));
    EXPECT_EQ(prompt.content_hash.size(), 64u);
}

TEST(CompilePrompt, InvalidSpecThrowsWithViolations) {
    PersonaSpec spec = biden_spec();
    spec.role_description.clear();
    try {
        compile_prompt(spec);
        FAIL() << "expected InvalidPersona";
    } catch (const InvalidPersona& e) {
        ASSERT_EQ(e.violations().size(), 1u);
    }
}

TEST(ValidatePersona, ValidSpecHasNoViolations) {
    PersonaSpec spec = biden_spec();
    spec.exemplars = {exemplar("e1", "q", "a")};
    EXPECT_TRUE(validate_persona(spec).empty());
}

TEST(ValidatePersona, DuplicateIdReportedOnceByName) {
    PersonaSpec spec = biden_spec();
    spec.exemplars = {exemplar("e1", "q1", "a1"), exemplar("e1", "q2", "a2")};
    const auto violations = validate_persona(spec);
    ASSERT_EQ(violations.size(), 1u);
    EXPECT_EQ(violations[0].kind, PersonaViolation::Kind::kDuplicateExemplarId);
    EXPECT_EQ(violations[0].subject, "e1");
    EXPECT_NE(violations[0].message.find("e1"), std::string::npos);
}

TEST(ValidatePersona, TripledIdStillOneViolation) {
    PersonaSpec spec = biden_spec();
    spec.exemplars = {exemplar("e1", "q1", "a1"), exemplar("e1", "q2", "a2"), exemplar("e1", "q3", "a3")};
    EXPECT_EQ(validate_persona(spec).size(), 1u);
}

TEST(ValidatePersona, EmptyRoleIsOneViolation) {
    PersonaSpec spec = biden_spec();
    spec.role_description = "";
    const auto violations = validate_persona(spec);
    ASSERT_EQ(violations.size(), 1u);
    EXPECT_EQ(violations[0].kind, PersonaViolation::Kind::kEmptyRole);
}

TEST(ValidatePersona, EmptyExemplarFieldsReported) {
    PersonaSpec spec = biden_spec();
    spec.exemplars = {exemplar("", "q", "a"), exemplar("e2", "", "a"), exemplar("e3", "q", "")};
    const auto violations = validate_persona(spec);
    ASSERT_EQ(violations.size(), 3u);
    EXPECT_EQ(violations[0].kind, PersonaViolation::Kind::kEmptyExemplarId);
    EXPECT_EQ(violations[1].kind, PersonaViolation::Kind::kEmptyQuestion);
    EXPECT_EQ(violations[2].kind, PersonaViolation::Kind::kEmptyResponse);
}

TEST(EstimateSize, CeilingOfQuarterLength) {
    EXPECT_EQ(estimate_size(""), 0u);
    EXPECT_EQ(estimate_size("12345678"), 2u);
    EXPECT_EQ(estimate_size("123456789"), 3u);
    EXPECT_EQ(estimate_size(std::string(1, 'x')), 1u);
}

TEST(EstimateSize, MonotoneUnderConcatenation) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        const std::string a(rng() % 200, 'a');
        const std::string b(rng() % 200, 'b');
        EXPECT_LE(estimate_size(a), estimate_size(a + b));
        EXPECT_LE(estimate_size(b), estimate_size(a + b));
    }
}

TEST(CompilePrompt, PropertyContainmentOrderAndIdempotence) {
    std::mt19937_64 rng(20240601);
    for (int trial = 0; trial < 200; ++trial) {
        PersonaSpec spec = biden_spec();
        const std::size_t n = rng() % 12;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string tag = "<" + std::to_string(trial) + ":" + std::to_string(i) + ">";
            spec.exemplars.push_back(exemplar("id" + std::to_string(i), "question " + tag + "?",
                                              "response " + tag + " " + std::string(rng() % 40, 'z')));
        }
        if (rng() % 2) spec.style_notes = "notes " + std::to_string(trial);
        const CompiledPrompt a = compile_prompt(spec);
        const CompiledPrompt b = compile_prompt(spec);
        EXPECT_EQ(a.text, b.text);
        EXPECT_EQ(a.content_hash, b.content_hash);
        EXPECT_EQ(a.exemplar_count, n);
        EXPECT_EQ(a.text.rfind(spec.role_description, 0), 0u);
        std::size_t previous = 0;
        for (const auto& e : spec.exemplars) {
            EXPECT_EQ(count_occurrences(a.text, e.question), 1u);
            EXPECT_EQ(count_occurrences(a.text, e.response), 1u);
            const auto pos = a.text.find(e.question);
            EXPECT_GT(pos, previous);
            previous = pos;
        }
    }
}

TEST(PersonaJson, RoundTrip) {
    PersonaSpec spec = biden_spec();
    spec.style_notes = "notes";
    spec.exemplars = {exemplar("e1", "q", "a")};
    const nlohmann::json json = spec;
    const PersonaSpec back = json.get<PersonaSpec>();
    EXPECT_EQ(compile_prompt(back).text, compile_prompt(spec).text);
    EXPECT_EQ(back.persona_id, spec.persona_id);
    EXPECT_EQ(back.display_name, spec.display_name);
}

TEST(LoadPersona, MalformedJsonIsAValidationFailure) {
    TempDir dir;
    write_text_file(dir / "bad.json", "{ \"role_description\": ");
    EXPECT_THROW(load_persona(dir / "bad.json"), ValidationFailure);
    EXPECT_THROW(load_persona(dir / "missing.json"), ValidationFailure);
}

TEST(LoadPersona, BundledPersonasAreValid) {
    for (const char* name : {"joe_biden.json", "donald_trump.json"}) {
        const PersonaSpec spec = load_persona(data_dir() / "personas" / name);
        EXPECT_TRUE(validate_persona(spec).empty()) << name;
        EXPECT_GE(spec.exemplars.size(), 3u);
    }
}
