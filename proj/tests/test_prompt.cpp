#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "sense/codec.hpp"
#include "sense/prompt.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace sense;
using sense::testing::data_dir;
using sense::testing::oracle_count;
using sense::testing::shipped_kb;

namespace {

FewShotExample tiny_example() {
  sense::testing::Rng rng(17);
  SensingStrategy s = sense::testing::make_valid_strategy(
      rng, shipped_kb(), BehaviorLevel::Activity, MetricCategory::Temporal);
  FewShotExample e;
  e.inquiry = "How long does this user sleep?";
  e.reasoning = "Walk the five steps.";
  e.strategy_block = encode_canonical(s);
  return e;
}

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("sense-prompt-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }

  std::string file(const std::string& name, const std::string& content) const {
    auto p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

}  // namespace

TEST_CASE("prompt renders prefix, examples, then the input") {
  FewShotExample e = tiny_example();
  Inquiry q = Inquiry::from("INPUT: How stressed is this person?");
  Prompt p = build_prompt("Follow the five design steps.", {e}, q);
  std::string text = p.rendered();

  auto prefix_pos = text.find("Follow the five design steps.");
  auto example_pos = text.find("Inquiry: How long does this user sleep?");
  auto input_pos = text.find("INPUT: How stressed is this person?");
  REQUIRE(prefix_pos != std::string::npos);
  REQUIRE(example_pos != std::string::npos);
  REQUIRE(input_pos != std::string::npos);
  CHECK(prefix_pos < example_pos);
  CHECK(example_pos < input_pos);
  CHECK(text.find(format_instruction()) != std::string::npos);
}

TEST_CASE("example marker count equals the example count") {
  Inquiry q = Inquiry::from("What drains this battery?");
  for (std::size_t k = 0; k <= 3; ++k) {
    std::vector<FewShotExample> examples(k, tiny_example());
    Prompt p = build_prompt("Rules body.", examples, q);
    CHECK(oracle_count(p.rendered(), "Inquiry:") == k);
  }
}

TEST_CASE("rendered examples carry three labeled sections in order") {
  std::string text = render_example(tiny_example());
  auto inquiry_pos = text.find("Inquiry:");
  auto reasoning_pos = text.find("Reasoning:");
  auto strategy_pos = text.find("Mobile Sensing Strategy:");
  REQUIRE(inquiry_pos != std::string::npos);
  REQUIRE(reasoning_pos != std::string::npos);
  REQUIRE(strategy_pos != std::string::npos);
  CHECK(inquiry_pos < reasoning_pos);
  CHECK(reasoning_pos < strategy_pos);
  CHECK(text.find("```strategy") != std::string::npos);
}

TEST_CASE("broken examples and empty inputs are rejected") {
  FewShotExample broken = tiny_example();
  broken.strategy_block = "{\"level\": \"Mood\"}";
  Inquiry q = Inquiry::from("anything");
  CHECK_THROWS_AS(build_prompt("Rules.", {broken}, q), InvalidExampleError);

  CHECK_THROWS_AS(build_prompt("  ", {}, q), std::invalid_argument);
  CHECK_THROWS_AS(build_prompt("Rules.", {}, Inquiry::from("  ")), std::invalid_argument);
}

TEST_CASE("step-scoped prompts name the step and carry prior context") {
  Inquiry q = Inquiry::from("How social is this user?");
  Prompt p = build_prompt("Rules.", {}, q,
                          StepScope::single(StepKind::Features, "\"objective\": \"sociality\""));
  std::string text = p.rendered();
  CHECK(text.find("Feature Construction") != std::string::npos);
  CHECK(text.find("\"objective\": \"sociality\"") != std::string::npos);
  CHECK(text.find("INPUT: How social is this user?") != std::string::npos);
}

TEST_CASE("step titles match the five pipeline steps") {
  CHECK(step_title(StepKind::Extract) == "Information Extraction");
  CHECK(step_title(StepKind::Represent) == "Human Behavior Representation");
  CHECK(step_title(StepKind::Features) == "Feature Construction");
  CHECK(step_title(StepKind::Data) == "Data Selection");
  CHECK(step_title(StepKind::Model) == "Model and its Estimated Performance");
}

TEST_CASE("repair prompts keep everything and add the feedback verbatim") {
  Inquiry q = Inquiry::from("INPUT: Does this user sleep enough?");
  Prompt base = build_prompt("Rules body here.", {tiny_example()}, q);
  const std::string reply1 = "my first, flawed reply";
  const std::string feedback1 = "- [V1-unknown-sensor] sensor 'Heartbeat' is not known";

  Prompt repair1 = repair_prompt(base, reply1, feedback1);
  std::string text1 = repair1.rendered();
  CHECK(text1.find("Rules body here.") == 0);
  CHECK(text1.find(reply1) != std::string::npos);
  CHECK(text1.find(feedback1) != std::string::npos);
  CHECK(oracle_count(text1, "INPUT: Does this user sleep enough?") == 1);
  CHECK(oracle_count(text1, "Inquiry:") == 1);

  const std::string reply2 = "my second, still flawed reply";
  const std::string feedback2 = "- [V4-malformed-timespan] 'whenever' matches no form";
  Prompt repair2 = repair_prompt(repair1, reply2, feedback2);
  std::string text2 = repair2.rendered();
  CHECK(text2.find(reply1) != std::string::npos);
  CHECK(text2.find(feedback1) != std::string::npos);
  CHECK(text2.find(reply2) != std::string::npos);
  CHECK(text2.find(feedback2) != std::string::npos);
  CHECK(text2.find(feedback1) < text2.find(feedback2));
}

TEST_CASE("report-typed repair uses the itemized feedback text") {
  Inquiry q = Inquiry::from("sleep?");
  Prompt base = build_prompt("Rules.", {}, q);
  ValidationReport report;
  report.violations.push_back(
      {ViolationCode::V5UnknownModel, "SuperNet", "model 'SuperNet' is not in the catalog"});
  Prompt repaired = repair_prompt(base, "reply", report, shipped_kb());
  CHECK(repaired.rendered().find(violation_feedback_text(report, shipped_kb())) !=
        std::string::npos);
}

TEST_CASE("shipped examples load in filename order and decode") {
  auto examples = load_examples_dir(data_dir() + "/examples");
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].inquiry.find("mood instability") != std::string::npos);
  CHECK(examples[1].inquiry.find("app usage") != std::string::npos);
  for (const auto& e : examples) {
    CHECK_FALSE(e.reasoning.empty());
    CHECK(decode_canonical(e.strategy_block).ok());
  }
}

TEST_CASE("example directory problems are loud") {
  CHECK_THROWS(load_examples_dir("/nonexistent/examples"));

  TempDir dir;
  dir.file("bad.json", "{ not json");
  CHECK_THROWS_AS(load_examples_dir(dir.path.string()), InvalidExampleError);

  TempDir dir2;
  dir2.file("incomplete.json", R"({"inquiry": "x", "reasoning": ""})");
  CHECK_THROWS_AS(load_examples_dir(dir2.path.string()), InvalidExampleError);
}

TEST_CASE("rules file carries a version header") {
  RulesFile shipped = load_rules_file(data_dir() + "/rules.txt");
  CHECK(shipped.version == "1.0.0");
  CHECK_FALSE(shipped.text.empty());
  CHECK(shipped.text.find("version:") == std::string::npos);
  CHECK(oracle_count(shipped.text, "Inquiry:") == 0);

  TempDir dir;
  std::string headerless = dir.file("rules.txt", "Just the rules.\n");
  RulesFile r = load_rules_file(headerless);
  CHECK(r.version.empty());
  CHECK(r.text == "Just the rules.");

  std::string empty = dir.file("empty.txt", "version: 2\n\n  \n");
  CHECK_THROWS(load_rules_file(empty));
}
