#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "sense/pipeline.hpp"
#include "support/generators.hpp"

using namespace sense;
namespace fs = std::filesystem;

namespace {

SensingStrategy sleep_strategy() {
  SensingStrategy s;
  s.objective = "sleep regularity";
  s.level = BehaviorLevel::Trait;
  s.decomposition.root_id = "sleep-quality";
  s.decomposition.nodes = {
      {"sleep-quality", "sleep quality", BehaviorLevel::Trait, {}},
      {"sleep-schedule", "sleep schedule", BehaviorLevel::Category, {}},
      {"sleep-start-time", "sleep start time", BehaviorLevel::Context,
       {"Accelerometer", "Gyroscope"}}};
  s.decomposition.edges = {{"sleep-quality", "sleep-schedule"},
                           {"sleep-schedule", "sleep-start-time"}};
  FeatureSpec f;
  f.metric = {MetricCategory::Regularity, "regularity"};
  f.time_span = {TimeSpanKind::Duration, "over the past two weeks"};
  f.behavior_id = "sleep-start-time";
  f.display_name = feature_display_name(f, s.decomposition);
  s.features = {f};
  s.data_sources.sensors = {"Accelerometer", "Gyroscope", "Time"};
  s.data_sources.justification = {{f.display_name, {"Accelerometer", "Gyroscope", "Time"}}};
  s.model = {"Random Forest", TaskKind::Classification, "small tabular data"};
  s.performance = {PerformanceTier::Moderate, "observable but noisy behavior"};
  for (StepKind k :
       {StepKind::Extract, StepKind::Represent, StepKind::Features, StepKind::Data,
        StepKind::Model}) {
    s.reasoning.push_back({k, "worked through " + std::string(step_title(k)), ""});
  }
  return s;
}

std::string completion_for(const SensingStrategy& s) {
  return "Step-by-step reasoning lives here.\n\nMobile Sensing Strategy:\n```strategy\n" +
         encode_canonical(s) + "\n```\n";
}

MockScriptEntry turn_entry(int turn, std::string completion) {
  MockScriptEntry e;
  e.turn = turn;
  e.completion = std::move(completion);
  return e;
}

PipelineConfig test_config() {
  PipelineConfig config;
  config.rules_version = "1.0.0";
  config.rules_text = "Design strategies from the known sensors only.";
  return config;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("sense-pipe-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("a clean completion is accepted on the first attempt") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  SensingStrategy s = sleep_strategy();
  MockScript script;
  script.entries = {turn_entry(1, completion_for(s))};
  MockBackend backend(script);

  Inquiry inquiry = Inquiry::from("How regular is the sleep of this user?");
  RunRecord record = generate_strategy(inquiry, test_config(), kb, backend);

  CHECK(record.outcome == RunOutcome::Accepted);
  REQUIRE(record.attempts.size() == 1);
  CHECK(record.attempts[0].report.passed());
  CHECK(record.attempts[0].feedback_text.empty());
  REQUIRE(record.strategy.has_value());
  CHECK(record.strategy->inquiry == inquiry);
  CHECK(record.strategy->level == BehaviorLevel::Trait);
  CHECK(record.canonical_strategy.find("\"normalized\"") != std::string::npos);
  CHECK(record.canonical_strategy.find("Regularity of sleep start time over the past two weeks") !=
        std::string::npos);
  CHECK(record.run_id.size() == 16);
  CHECK(record.run_id.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(record.started_at.size() >= 20);
  CHECK(record.finished_at >= record.started_at);
  for (const auto& t : record.strategy->reasoning) CHECK(t.raw_completion_ref == "attempt-1");
}

TEST_CASE("the shipped demo script reproduces the documented run") {
  KnowledgeBase kb = KnowledgeBase::load_file(sense::testing::data_dir() + "/knowledge_base.json");
  RulesFile rules = load_rules_file(sense::testing::data_dir() + "/rules.txt");
  PipelineConfig config;
  config.rules_version = rules.version;
  config.rules_text = rules.text;
  config.examples = load_examples_dir(sense::testing::data_dir() + "/examples");
  MockBackend backend(
      MockScript::load_file(sense::testing::data_dir() + "/mock/demo_script.json"));

  RunRecord record = generate_strategy(
      Inquiry::from("I wish to understand the mood instability of the user during the night."),
      config, kb, backend);

  CHECK(record.outcome == RunOutcome::Accepted);
  REQUIRE(record.attempts.size() == 1);
  REQUIRE(record.strategy.has_value());
  CHECK(record.strategy->level == BehaviorLevel::Trait);
  ValidationReport report = validate_strategy(*record.strategy, kb);
  CHECK(report.passed());

  bool found = false;
  for (const auto& f : record.strategy->features) {
    if (f.display_name.find("Regularity of sleep start time") != std::string::npos &&
        f.time_span.expression.find("past two weeks") != std::string::npos) {
      found = true;
    }
  }
  CHECK(found);
  const auto& sensors = record.strategy->data_sources.sensors;
  for (const char* name : {"Accelerometer", "Gyroscope", "Time"}) {
    CHECK(std::find(sensors.begin(), sensors.end(), name) != sensors.end());
  }
}

TEST_CASE("an unknown sensor is repaired on the second attempt") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  SensingStrategy good = sleep_strategy();
  SensingStrategy bad = good;
  bad.data_sources.sensors.push_back("Heartbeat");

  MockScript script;
  script.entries = {turn_entry(1, completion_for(bad)), turn_entry(2, completion_for(good))};
  MockBackend backend(script);

  RunRecord record = generate_strategy(Inquiry::from("How regular is this user's sleep?"),
                                       test_config(), kb, backend);

  CHECK(record.outcome == RunOutcome::Accepted);
  REQUIRE(record.attempts.size() == 2);
  const Attempt& first = record.attempts[0];
  REQUIRE(!first.report.violations.empty());
  for (const auto& v : first.report.violations) {
    CHECK(v.code == ViolationCode::V1UnknownSensor);
    CHECK(v.subject == "Heartbeat");
  }
  CHECK(first.feedback_text.find("V1-unknown-sensor") != std::string::npos);
  CHECK(record.attempts[1].prompt_text.find(first.feedback_text) != std::string::npos);
  CHECK(record.attempts[1].prompt_text.find(first.raw_completion) != std::string::npos);
  CHECK(record.attempts[1].report.passed());
}

TEST_CASE("max_repairs zero means a single attempt") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  SensingStrategy bad = sleep_strategy();
  bad.data_sources.sensors.push_back("Heartbeat");
  MockScript script;
  script.entries = {turn_entry(1, completion_for(bad))};
  MockBackend backend(script);

  PipelineConfig config = test_config();
  config.max_repairs = 0;
  RunRecord record = generate_strategy(Inquiry::from("How regular is this user's sleep?"),
                                       config, kb, backend);

  CHECK(record.outcome == RunOutcome::RejectedAfterRepairs);
  CHECK(record.attempts.size() == 1);
  CHECK(!record.strategy.has_value());
  CHECK(record.canonical_strategy.empty());
  CHECK(backend.turns_served() == 1);
}

TEST_CASE("a stubborn backend is cut off after the repair budget") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  MockScriptEntry always;
  always.match = "INPUT:";
  always.completion = "I have no strategy for you today.";
  MockScript script;
  script.entries = {always};
  MockBackend backend(script);

  PipelineConfig config = test_config();
  config.max_repairs = 2;
  RunRecord record = generate_strategy(Inquiry::from("How social is this user?"), config, kb,
                                       backend);

  CHECK(record.outcome == RunOutcome::RejectedAfterRepairs);
  REQUIRE(record.attempts.size() == 3);
  CHECK(backend.turns_served() == 3);
  for (const auto& a : record.attempts) {
    CHECK(!a.feedback_text.empty());
    CHECK(a.feedback_text.find("missing-block") != std::string::npos);
  }
  CHECK(record.attempts[1].prompt_text.find(record.attempts[0].feedback_text) !=
        std::string::npos);
  CHECK(record.attempts[2].prompt_text.find(record.attempts[1].feedback_text) !=
        std::string::npos);
  CHECK(record.attempts[2].prompt_text.find(record.attempts[0].raw_completion) !=
        std::string::npos);
}

TEST_CASE("backend errors end the run without throwing") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  MockScript script;
  MockScriptEntry failing;
  failing.turn = 1;
  failing.fail = "unavailable";
  script.entries = {failing};
  MockBackend backend(script);

  RunRecord record = generate_strategy(Inquiry::from("How active is this user?"),
                                       test_config(), kb, backend);

  CHECK(record.outcome == RunOutcome::BackendFailure);
  CHECK(!record.error_message.empty());
  CHECK(record.attempts.size() == 1);
  CHECK(!record.strategy.has_value());
}

TEST_CASE("config and inquiry preconditions are enforced") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  MockScript script;
  script.entries = {turn_entry(1, "unused")};
  MockBackend backend(script);

  CHECK_THROWS_AS(
      generate_strategy(Inquiry::from("   "), test_config(), kb, backend), ConfigError);

  PipelineConfig config = test_config();
  config.max_repairs = 6;
  CHECK_THROWS_AS(generate_strategy(Inquiry::from("Is this user ok?"), config, kb, backend),
                  ConfigError);

  config = test_config();
  config.rules_text = "  ";
  CHECK_THROWS_AS(generate_strategy(Inquiry::from("Is this user ok?"), config, kb, backend),
                  ConfigError);

  config = test_config();
  config.temperature = 2.5;
  CHECK_THROWS_AS(generate_strategy(Inquiry::from("Is this user ok?"), config, kb, backend),
                  ConfigError);
  CHECK(backend.turns_served() == 0);
}

TEST_CASE("identical runs produce identical canonical strategies") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  const std::string completion = completion_for(sleep_strategy());
  Inquiry inquiry = Inquiry::from("How regular is the sleep of this user?");

  std::vector<RunRecord> records;
  for (int i = 0; i < 2; ++i) {
    MockScript script;
    script.entries = {turn_entry(1, completion)};
    MockBackend backend(script);
    records.push_back(generate_strategy(inquiry, test_config(), kb, backend));
  }
  REQUIRE(records[0].outcome == RunOutcome::Accepted);
  REQUIRE(records[1].outcome == RunOutcome::Accepted);
  CHECK(records[0].canonical_strategy == records[1].canonical_strategy);
  CHECK(strategy_digest(*records[0].strategy) == strategy_digest(*records[1].strategy));
}

TEST_CASE("the per-step mode collects fragments into one strategy") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  const std::string display = "Regularity of sleep start time over the past two weeks";
  auto frag = [](const std::string& body) {
    return "Step reasoning.\n```strategy\n" + body + "\n```\n";
  };
  MockScript script;
  script.entries = {
      turn_entry(1, frag(R"({"objective": "sleep regularity", "level": "Trait"})")),
      turn_entry(2, frag(R"({"behaviors": {
        "root": "sleep-quality",
        "nodes": [
          {"id": "sleep-quality", "label": "sleep quality", "level": "Trait"},
          {"id": "sleep-start-time", "label": "sleep start time", "level": "Context",
           "sensors": ["Accelerometer", "Gyroscope"]}],
        "edges": [["sleep-quality", "sleep-start-time"]]}})")),
      turn_entry(3, frag(R"({"features": [{
        "metric": {"category": "Regularity", "name": "regularity"},
        "time_span": {"kind": "Duration", "expression": "over the past two weeks"},
        "behavior": "sleep-start-time"}]})")),
      turn_entry(4, frag(std::string(R"({"data_sources": {
        "sensors": ["Accelerometer", "Gyroscope", "Time"],
        "justification": {")") +
                            display + R"(": ["Accelerometer", "Gyroscope", "Time"]}}})")),
      turn_entry(5, frag(R"({"model": {"name": "Random Forest", "task": "Classification",
                              "rationale": "robust on tabular features"},
                             "performance": {"tier": "Moderate",
                              "rationale": "behavior is observable but noisy"}})"))};
  MockBackend backend(script);

  PipelineConfig config = test_config();
  config.step_mode = StepMode::PerStep;
  RunRecord record = generate_strategy(Inquiry::from("How regular is the sleep of this user?"),
                                       config, kb, backend);

  CHECK(record.outcome == RunOutcome::Accepted);
  CHECK(record.attempts.size() == 1);
  CHECK(backend.turns_served() == 5);
  REQUIRE(record.strategy.has_value());
  CHECK(record.strategy->objective == "sleep regularity");
  CHECK(record.strategy->level == BehaviorLevel::Trait);
  REQUIRE(record.strategy->features.size() == 1);
  CHECK(record.strategy->features[0].display_name == display);
  REQUIRE(record.strategy->reasoning.size() == 5);
  CHECK(record.strategy->reasoning[0].step == StepKind::Extract);
  CHECK(record.strategy->reasoning[4].step == StepKind::Model);
  for (int i = 0; i < 5; ++i) {
    const std::string title(step_title(record.strategy->reasoning[i].step));
    CHECK(record.attempts[0].prompt_text.find(title) != std::string::npos);
  }
}

TEST_CASE("steps must run in pipeline order, once each") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  MockScript script;
  script.entries = {
      turn_entry(1, "thinking\n```strategy\n{\"objective\": \"pace\", \"level\": "
                    "\"Activity\"}\n```"),
      turn_entry(2, "no fragment this time")};
  MockBackend backend(script);
  PipelineConfig config = test_config();

  StepState state;
  state.inquiry = Inquiry::from("How fast does this user walk?");
  CHECK_THROWS_AS(run_step(StepKind::Features, state, config, kb, backend), StepOrderError);
  CHECK(backend.turns_served() == 0);

  run_step(StepKind::Extract, state, config, kb, backend);
  CHECK(state.objective == "pace");
  CHECK(state.level == BehaviorLevel::Activity);
  CHECK(state.diagnostics.empty());
  CHECK(state.fragment_context.find("Step 1 (Information Extraction)") != std::string::npos);
  CHECK_THROWS_AS(run_step(StepKind::Extract, state, config, kb, backend), StepOrderError);

  run_step(StepKind::Represent, state, config, kb, backend);
  bool missing_block = false;
  for (const auto& d : state.diagnostics) {
    if (d.code == "missing-block" && d.severity == Severity::Error) missing_block = true;
  }
  CHECK(missing_block);
}

TEST_CASE("run records survive the JSON round trip") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  SensingStrategy good = sleep_strategy();
  SensingStrategy bad = good;
  bad.data_sources.sensors.push_back("Heartbeat");
  MockScript script;
  script.entries = {turn_entry(1, completion_for(bad)), turn_entry(2, completion_for(good))};
  MockBackend backend(script);
  RunRecord record = generate_strategy(Inquiry::from("How regular is this user's sleep?"),
                                       test_config(), kb, backend);
  REQUIRE(record.outcome == RunOutcome::Accepted);

  RunRecord reloaded = run_record_from_json(run_record_to_json(record));
  CHECK(reloaded.run_id == record.run_id);
  CHECK(reloaded.inquiry == record.inquiry);
  CHECK(reloaded.config == record.config);
  CHECK(reloaded.outcome == record.outcome);
  CHECK(reloaded.canonical_strategy == record.canonical_strategy);
  CHECK(reloaded.started_at == record.started_at);
  CHECK(reloaded.finished_at == record.finished_at);
  REQUIRE(reloaded.attempts.size() == record.attempts.size());
  for (std::size_t i = 0; i < record.attempts.size(); ++i) {
    CHECK(reloaded.attempts[i] == record.attempts[i]);
  }
  REQUIRE(reloaded.strategy.has_value());
  CHECK(encode_canonical(*reloaded.strategy) == record.canonical_strategy);

  CHECK_THROWS_AS(run_record_from_json("not json"), StoreError);
  CHECK_THROWS_AS(run_record_from_json(R"({"outcome": "wandered-off"})"), StoreError);
}

TEST_CASE("the run store persists and reloads records") {
  const KnowledgeBase& kb = sense::testing::shipped_kb();
  MockScript script;
  script.entries = {turn_entry(1, completion_for(sleep_strategy()))};
  MockBackend backend(script);
  RunRecord record = generate_strategy(Inquiry::from("How regular is the sleep of this user?"),
                                       test_config(), kb, backend);
  REQUIRE(record.outcome == RunOutcome::Accepted);

  TempDir store;
  const fs::path nested = store.path / "runs";
  std::string written = persist_run(record, nested.string());
  CHECK(fs::exists(nested / record.run_id / "record.json"));
  CHECK(written == (nested / record.run_id / "record.json").string());

  RunRecord reloaded = load_run(nested.string(), record.run_id);
  CHECK(reloaded.canonical_strategy == record.canonical_strategy);
  REQUIRE(reloaded.strategy.has_value());
  CHECK(validate_strategy(*reloaded.strategy, kb).passed());

  try {
    persist_run(record, nested.string());
    FAIL("expected a conflict");
  } catch (const StoreError& e) {
    CHECK(e.kind() == StoreError::Kind::Conflict);
  }
  try {
    load_run(nested.string(), "feedfacefeedface");
    FAIL("expected a missing-record error");
  } catch (const StoreError& e) {
    CHECK(e.kind() == StoreError::Kind::Io);
  }
}

TEST_CASE("enum spellings round-trip") {
  CHECK(to_string(RunOutcome::Accepted) == "accepted");
  CHECK(to_string(RunOutcome::RejectedAfterRepairs) == "rejected-after-repairs");
  CHECK(to_string(RunOutcome::BackendFailure) == "backend-failure");
  for (RunOutcome o :
       {RunOutcome::Accepted, RunOutcome::RejectedAfterRepairs, RunOutcome::BackendFailure}) {
    CHECK(run_outcome_from(to_string(o)) == o);
  }
  CHECK(!run_outcome_from("flawless").has_value());
  CHECK(to_string(StepMode::SingleShot) == "single");
  CHECK(to_string(StepMode::PerStep) == "per-step");
  CHECK(step_mode_from("per-step") == StepMode::PerStep);
  CHECK(step_mode_from("SINGLE") == StepMode::SingleShot);
  CHECK(!step_mode_from("triple").has_value());
}
