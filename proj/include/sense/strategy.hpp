#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sense/behavior.hpp"
#include "sense/knowledge_base.hpp"

namespace sense {

struct Inquiry {
  std::string raw_text;
  std::string normalized_text;  // trimmed, "INPUT:" prefix stripped

  // Accepts the inquiry with or without the "INPUT:" prefix.
  static Inquiry from(std::string raw);

  bool operator==(const Inquiry&) const = default;
};

struct MetricRef {
  MetricCategory category = MetricCategory::Statistical;
  std::string name;

  bool operator==(const MetricRef&) const = default;
};

struct TimeSpan {
  TimeSpanKind kind = TimeSpanKind::Duration;
  std::string expression;

  bool operator==(const TimeSpan&) const = default;
};

struct FeatureSpec {
  MetricRef metric;
  TimeSpan time_span;
  std::string behavior_id;  // node id in the strategy's decomposition
  std::string display_name;

  bool operator==(const FeatureSpec&) const = default;
};

struct DataSourceSelection {
  std::vector<std::string> sensors;
  // Feature display name -> the sensor subset that feature needs. Kept as an
  // ordered list so the canonical encoding is stable.
  std::vector<std::pair<std::string, std::vector<std::string>>> justification;

  const std::vector<std::string>* justification_for(std::string_view display_name) const;
  bool has_sensor(std::string_view name) const;

  bool operator==(const DataSourceSelection&) const = default;
};

struct ModelSuggestion {
  std::string model_name;
  TaskKind task_kind = TaskKind::Regression;
  std::string rationale;

  bool operator==(const ModelSuggestion&) const = default;
};

enum class PerformanceTier { Low, Moderate, High };

std::string_view to_string(PerformanceTier tier);
std::optional<PerformanceTier> performance_tier_from(std::string_view s);

struct PerformanceEstimate {
  PerformanceTier tier = PerformanceTier::Moderate;
  std::string rationale;

  bool operator==(const PerformanceEstimate&) const = default;
};

// The five pipeline steps, in execution order.
enum class StepKind { Extract, Represent, Features, Data, Model };

std::string_view to_string(StepKind step);
std::optional<StepKind> step_kind_from(std::string_view s);
constexpr int kStepCount = 5;

struct StepTrace {
  StepKind step = StepKind::Extract;
  std::string reasoning_text;
  std::string raw_completion_ref;  // opaque id into the run record, may be empty

  bool operator==(const StepTrace&) const = default;
};

struct SensingStrategy {
  Inquiry inquiry;
  std::string objective;
  BehaviorLevel level = BehaviorLevel::Context;
  BehaviorDecomposition decomposition;
  std::vector<FeatureSpec> features;
  DataSourceSelection data_sources;
  ModelSuggestion model;
  PerformanceEstimate performance;
  std::vector<StepTrace> reasoning;

  bool operator==(const SensingStrategy&) const = default;
};

// "<Metric> of <behavior label> <time-span expression>", e.g.
// "Duration of screen time per weeknight". Empty components are skipped so
// partially filled features still render something stable.
std::string feature_display_name(const FeatureSpec& feature, const BehaviorDecomposition& decomp);
std::string feature_display_name(const FeatureSpec& feature, std::string_view behavior_label);

class IncomputableFeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sensors needed to compute the feature: the behavior node's hints (for a
// coarser node, the hints of every Context leaf below it) plus "Time"
// whenever a time span is present. Sorted, deduplicated, canonical names.
// Throws IncomputableFeatureError when no sensor mapping exists and
// std::invalid_argument when the behavior id is not in the decomposition.
std::vector<std::string> required_sensors(const FeatureSpec& feature,
                                          const BehaviorDecomposition& decomp,
                                          const KnowledgeBase& kb);

// SHA-256 of the canonical encoding; 64 lowercase hex characters.
std::string strategy_digest(const SensingStrategy& strategy);

}  // namespace sense
