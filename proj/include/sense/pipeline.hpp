#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sense/codec.hpp"
#include "sense/knowledge_base.hpp"
#include "sense/llm.hpp"
#include "sense/prompt.hpp"
#include "sense/strategy.hpp"
#include "sense/validator.hpp"

namespace sense {

enum class StepMode { SingleShot, PerStep };

std::string_view to_string(StepMode mode);
std::optional<StepMode> step_mode_from(std::string_view s);

struct PipelineConfig {
  int max_repairs = 2;  // 0..5
  StepMode step_mode = StepMode::SingleShot;
  std::string model_name = "gpt-3.5-turbo";
  double temperature = 0.2;
  int max_tokens = 2048;
  std::string backend_kind = "mock";
  std::string rules_version;
  std::string rules_text;
  std::vector<FewShotExample> examples;
};

// What the run record keeps of the config (examples reduced to their
// inquiries; rules to their version).
struct ConfigSnapshot {
  int max_repairs = 2;
  StepMode step_mode = StepMode::SingleShot;
  std::string model_name;
  double temperature = 0.2;
  int max_tokens = 2048;
  std::string backend_kind;
  std::string rules_version;
  std::vector<std::string> example_inquiries;

  static ConfigSnapshot of(const PipelineConfig& config);

  bool operator==(const ConfigSnapshot&) const = default;
};

struct Attempt {
  std::string prompt_text;
  std::string raw_completion;
  std::vector<ParseDiagnostic> diagnostics;
  ValidationReport report;
  std::string feedback_text;  // what the next repair prompt embeds, empty when accepted

  bool operator==(const Attempt&) const = default;
};

enum class RunOutcome { Accepted, RejectedAfterRepairs, BackendFailure };

std::string_view to_string(RunOutcome outcome);
std::optional<RunOutcome> run_outcome_from(std::string_view s);

struct RunRecord {
  std::string run_id;
  Inquiry inquiry;
  ConfigSnapshot config;
  std::vector<Attempt> attempts;  // length <= 1 + max_repairs
  RunOutcome outcome = RunOutcome::RejectedAfterRepairs;
  std::optional<SensingStrategy> strategy;  // set iff outcome == Accepted
  std::string canonical_strategy;           // encode_canonical of the accepted strategy
  std::string error_message;                // backend failure detail
  std::string started_at;                   // ISO-8601 UTC
  std::string finished_at;

  bool operator==(const RunRecord&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs prompt -> completion -> parse -> validate with a bounded repair
// loop, in one shot or step by step, and records every attempt. Backend
// errors end the run with outcome BackendFailure; nothing is thrown.
RunRecord generate_strategy(const Inquiry& inquiry, const PipelineConfig& config,
                            const KnowledgeBase& kb, LlmBackend& backend);

class StepOrderError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Accumulated outputs of the per-step exchanges.
struct StepState {
  Inquiry inquiry;
  std::set<StepKind> completed;
  std::vector<StepTrace> traces;
  std::vector<ParseDiagnostic> diagnostics;
  std::string prompts_text;      // step-marked prompts sent so far
  std::string completions_text;  // step-marked completions received so far
  std::string fragment_context;  // strategy fragments carried into later steps

  // Parsed pieces, populated as steps complete.
  std::string objective;
  BehaviorLevel level = BehaviorLevel::Context;
  BehaviorDecomposition decomposition;
  std::vector<FeatureSpec> features;
  DataSourceSelection data_sources;
  ModelSuggestion model;
  PerformanceEstimate performance;
};

// Executes one of the five steps. Steps must run in order
// Extract -> Represent -> Features -> Data -> Model; anything else throws
// StepOrderError. Parse problems land in state.diagnostics, not exceptions.
void run_step(StepKind step, StepState& state, const PipelineConfig& config,
              const KnowledgeBase& kb, LlmBackend& backend);

// Builds the strategy from a completed StepState.
SensingStrategy assemble_strategy(const StepState& state);

// --- run store ---

class StoreError : public std::runtime_error {
 public:
  enum class Kind { Conflict, Io };

  StoreError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const std::string& text);

// Writes <store>/<run_id>/record.json atomically; creates the store
// directory when absent; refuses to overwrite an existing run.
std::string persist_run(const RunRecord& record, const std::string& store_path);
RunRecord load_run(const std::string& store_path, const std::string& run_id);

}  // namespace sense
