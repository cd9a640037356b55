#include "sense/strategy.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sense/strings.hpp"

namespace sense {

Inquiry Inquiry::from(std::string raw) {
  Inquiry q;
  q.raw_text = raw;
  std::string text = trim(raw);
  if (starts_with_ci(text, "INPUT:")) {
    text = trim(text.substr(6));
  } else if (starts_with_ci(text, "INPUT ")) {
    text = trim(text.substr(6));
  }
  q.normalized_text = text;
  return q;
}

const std::vector<std::string>* DataSourceSelection::justification_for(
    std::string_view display_name) const {
  for (const auto& [name, sensors] : justification) {
    if (name == display_name) return &sensors;
  }
  return nullptr;
}

bool DataSourceSelection::has_sensor(std::string_view name) const {
  const std::string folded = casefold(name);
  return std::any_of(sensors.begin(), sensors.end(),
                     [&](const std::string& s) { return casefold(s) == folded; });
}

std::string_view to_string(PerformanceTier tier) {
  switch (tier) {
    case PerformanceTier::Low: return "Low";
    case PerformanceTier::Moderate: return "Moderate";
    case PerformanceTier::High: return "High";
  }
  return "?";
}

std::optional<PerformanceTier> performance_tier_from(std::string_view s) {
  const std::string folded = casefold(trim(s));
  for (PerformanceTier t :
       {PerformanceTier::Low, PerformanceTier::Moderate, PerformanceTier::High}) {
    if (folded == casefold(to_string(t))) return t;
  }
  return std::nullopt;
}

std::string_view to_string(StepKind step) {
  switch (step) {
    case StepKind::Extract: return "extract";
    case StepKind::Represent: return "represent";
    case StepKind::Features: return "features";
    case StepKind::Data: return "data";
    case StepKind::Model: return "model";
  }
  return "?";
}

std::optional<StepKind> step_kind_from(std::string_view s) {
  const std::string folded = casefold(trim(s));
  for (StepKind k : {StepKind::Extract, StepKind::Represent, StepKind::Features, StepKind::Data,
                     StepKind::Model}) {
    if (folded == to_string(k)) return k;
  }
  return std::nullopt;
}

std::string feature_display_name(const FeatureSpec& feature, std::string_view behavior_label) {
  std::string metric = trim(feature.metric.name);
  if (!metric.empty()) metric[0] = static_cast<char>(std::toupper(metric[0]));

  std::vector<std::string> parts;
  if (!metric.empty()) parts.push_back(metric);
  std::string label = trim(behavior_label);
  if (!label.empty()) parts.push_back("of " + label);
  std::string span = trim(feature.time_span.expression);
  if (!span.empty()) parts.push_back(span);

  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

std::string feature_display_name(const FeatureSpec& feature, const BehaviorDecomposition& decomp) {
  const BehaviorNode* node = decomp.find(feature.behavior_id);
  return feature_display_name(feature, node ? node->label : "");
}

std::vector<std::string> required_sensors(const FeatureSpec& feature,
                                          const BehaviorDecomposition& decomp,
                                          const KnowledgeBase& kb) {
  const BehaviorNode* node = decomp.find(feature.behavior_id);
  if (!node) {
    throw std::invalid_argument("feature behavior '" + feature.behavior_id +
                                "' is not in the decomposition");
  }

  // Collect hints from the node itself, or from every Context leaf reachable
  // below it when the node sits at a coarser level.
  std::set<std::string> names;
  if (node->level == BehaviorLevel::Context) {
    names.insert(node->sensor_hints.begin(), node->sensor_hints.end());
  } else {
    std::map<std::string, std::vector<std::string>> children;
    for (const auto& [p, c] : decomp.edges) children[p].push_back(c);
    std::set<std::string> visited{node->id};
    std::vector<std::string> queue{node->id};
    while (!queue.empty()) {
      std::string id = std::move(queue.back());
      queue.pop_back();
      const BehaviorNode* n = decomp.find(id);
      if (n && n->level == BehaviorLevel::Context) {
        names.insert(n->sensor_hints.begin(), n->sensor_hints.end());
      }
      for (const auto& c : children[id]) {
        if (visited.insert(c).second) queue.push_back(c);
      }
    }
  }

  if (names.empty()) {
    throw IncomputableFeatureError("behavior '" + (node->label.empty() ? node->id : node->label) +
                                   "' carries no sensor mapping; the feature cannot be computed");
  }

  std::set<std::string> canonical;
  for (const auto& name : names) {
    auto hit = kb.lookup_sensor(name);
    canonical.insert(hit.found() ? hit.spec->name : name);
  }
  if (!trim(feature.time_span.expression).empty()) {
    auto time = kb.lookup_sensor("Time");
    canonical.insert(time.found() ? time.spec->name : "Time");
  }
  return {canonical.begin(), canonical.end()};
}

}  // namespace sense
