#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sense {

enum class SensorCategory { Hardware, Software, Contextual };
enum class MetricCategory {
  Statistical,
  Regularity,
  Relation,
  Diversity,
  Similarity,
  Spatial,
  Temporal,
  Other
};
enum class TimeSpanKind { Duration, Periodicity };
enum class TaskKind { Regression, Classification };

std::string_view to_string(SensorCategory c);
std::string_view to_string(MetricCategory c);
std::string_view to_string(TimeSpanKind k);
std::string_view to_string(TaskKind k);
std::optional<SensorCategory> sensor_category_from(std::string_view s);
std::optional<MetricCategory> metric_category_from(std::string_view s);
std::optional<TimeSpanKind> time_span_kind_from(std::string_view s);
std::optional<TaskKind> task_kind_from(std::string_view s);

struct SensorSpec {
  std::string name;
  SensorCategory category = SensorCategory::Hardware;
  std::vector<std::string> aliases;
  std::string description;
  std::string availability_note;

  bool operator==(const SensorSpec&) const = default;
};

struct MetricSpec {
  MetricCategory category = MetricCategory::Statistical;
  std::string name;
  std::string description;

  bool operator==(const MetricSpec&) const = default;
};

struct TimeSpanForm {
  TimeSpanKind kind = TimeSpanKind::Duration;
  std::string pattern;  // literal text with <placeholder> slots, e.g. "per <epoch>"

  bool operator==(const TimeSpanForm&) const = default;
};

struct ModelSpec {
  std::string name;
  std::vector<TaskKind> task_kinds;
  std::string notes;

  bool supports(TaskKind k) const;
  bool operator==(const ModelSpec&) const = default;
};

class KbError : public std::runtime_error {
 public:
  enum class Kind { Format, Uniqueness, Schema };

  KbError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct KbSummary {
  std::string version;
  std::size_t hardware = 0;
  std::size_t software = 0;
  std::size_t contextual = 0;
  std::size_t metric_categories = 0;
  std::size_t models = 0;

  bool operator==(const KbSummary&) const = default;
};

// Result of a fuzzy lookup. When `spec` is null, `suggestions` carries up to
// three nearest canonical names at edit distance <= 2 (token-aware, see
// name_match_distance).
template <typename SpecT>
struct Lookup {
  const SpecT* spec = nullptr;
  std::vector<std::string> suggestions;

  bool found() const { return spec != nullptr; }
};

// Immutable registry of sensors, metric names, time-span forms, and models.
// Safe to share across threads once loaded.
class KnowledgeBase {
 public:
  static KnowledgeBase load(const std::string& document);
  static KnowledgeBase load_file(const std::string& path);

  const std::string& version() const { return version_; }
  const std::vector<SensorSpec>& sensors() const { return sensors_; }
  const std::vector<MetricSpec>& metrics() const { return metrics_; }
  const std::vector<TimeSpanForm>& time_span_forms() const { return time_span_forms_; }
  const std::vector<ModelSpec>& models() const { return models_; }

  // Exact or alias match after case-folding and trimming.
  Lookup<SensorSpec> lookup_sensor(std::string_view name) const;
  Lookup<MetricSpec> lookup_metric(std::string_view name) const;
  // Prefers a name hit inside `category`; falls back to the first
  // declaration-order match in any category (a few Table-style names, such
  // as "frequency", legitimately live in more than one category).
  Lookup<MetricSpec> lookup_metric_in(MetricCategory category, std::string_view name) const;
  const ModelSpec* find_model(std::string_view name) const;
  std::vector<std::string> model_suggestions(std::string_view name) const;

  std::vector<SensorSpec> sensors_by_category(SensorCategory category) const;
  std::vector<TimeSpanForm> forms_of_kind(TimeSpanKind kind) const;
  bool has_metric_category(MetricCategory category) const;

  KbSummary summary() const;

 private:
  KnowledgeBase() = default;

  std::string version_;
  std::vector<SensorSpec> sensors_;
  std::vector<MetricSpec> metrics_;
  std::vector<TimeSpanForm> time_span_forms_;
  std::vector<ModelSpec> models_;
};

inline KnowledgeBase load_knowledge_base(const std::string& document) {
  return KnowledgeBase::load(document);
}

}  // namespace sense
