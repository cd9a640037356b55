#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sense/knowledge_base.hpp"
#include "sense/strategy.hpp"

namespace sense {

// Closed set of rule codes. A strategy is accepted exactly when the report
// carries none of them.
enum class ViolationCode {
  V1UnknownSensor,
  V2IncompleteFeature,
  V3UnknownMetric,
  V4MalformedTimespan,
  V5UnknownModel,
  V6LevelInversion,
  V7UnanchoredFeature,
  V8UncoveredFeature
};

std::string_view to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  std::string subject;  // offending name; appears verbatim in the canonical encoding
  std::string detail;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool passed() const { return violations.empty(); }
  std::vector<ViolationCode> codes() const;
  bool has(ViolationCode code) const;

  bool operator==(const ValidationReport&) const = default;
};

// Runs every rule; never short-circuits. Violations come out grouped by
// code, V1 first, in a deterministic traversal order within each code.
ValidationReport validate_strategy(const SensingStrategy& strategy, const KnowledgeBase& kb);

// True when the expression instantiates the form's pattern. Placeholders:
// <n> (a number, digits or words), <unit> (time unit), <epoch> (named part
// of day/week), <recurrence> (daily/weekly/...); any other placeholder
// matches one arbitrary token. Matching is case-insensitive and tolerates
// plural 's' on unit and epoch tokens.
bool matches_time_span_form(std::string_view expression, const TimeSpanForm& form);

// Bullet list for the repair prompt, ordered by code then subject. Unknown
// sensor items append the valid sensor names for the likeliest category.
std::string violation_feedback_text(const ValidationReport& report, const KnowledgeBase& kb);

}  // namespace sense
