#include "sense/validator.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sense/behavior.hpp"
#include "sense/strings.hpp"

namespace sense {

namespace {

const std::set<std::string> kNumberWords = {
    "one", "two",    "three", "four",   "five",   "six",   "seven",
    "eight", "nine", "ten",   "eleven", "twelve", "twenty", "thirty",
    "forty", "fifty", "sixty", "ninety", "hundred"};

const std::set<std::string> kUnits = {"second", "minute", "hour", "day",
                                      "night", "week", "month", "year"};

const std::set<std::string> kEpochs = {"morning",  "afternoon", "evening", "night",
                                       "day",      "weekday",   "weeknight", "weekend",
                                       "week",     "month",     "year",     "hour",
                                       "session"};

const std::set<std::string> kRecurrences = {"hourly",  "daily",     "nightly", "weekly",
                                            "biweekly", "monthly",  "quarterly", "yearly",
                                            "annually"};

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c >= '0' && c <= '9';
  });
}

std::string strip_plural(const std::string& token) {
  if (token.size() > 1 && token.back() == 's') return token.substr(0, token.size() - 1);
  return token;
}

bool matches_placeholder(const std::string& placeholder, const std::string& token) {
  if (placeholder == "n") return all_digits(token) || kNumberWords.count(token) > 0;
  if (placeholder == "unit") return kUnits.count(strip_plural(token)) > 0;
  if (placeholder == "epoch") return kEpochs.count(strip_plural(token)) > 0;
  if (placeholder == "recurrence") return kRecurrences.count(token) > 0;
  return !token.empty();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  for (char c : casefold(collapse_ws(trim(text)))) {
    if (c == ' ') {
      if (!word.empty()) out.push_back(std::move(word));
      word.clear();
    } else {
      word += c;
    }
  }
  if (!word.empty()) out.push_back(std::move(word));
  return out;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::V1UnknownSensor: return "V1-unknown-sensor";
    case ViolationCode::V2IncompleteFeature: return "V2-incomplete-feature";
    case ViolationCode::V3UnknownMetric: return "V3-unknown-metric";
    case ViolationCode::V4MalformedTimespan: return "V4-malformed-timespan";
    case ViolationCode::V5UnknownModel: return "V5-unknown-model";
    case ViolationCode::V6LevelInversion: return "V6-level-inversion";
    case ViolationCode::V7UnanchoredFeature: return "V7-unanchored-feature";
    case ViolationCode::V8UncoveredFeature: return "V8-uncovered-feature";
  }
  return "?";
}

std::vector<ViolationCode> ValidationReport::codes() const {
  std::vector<ViolationCode> out;
  out.reserve(violations.size());
  for (const auto& v : violations) out.push_back(v.code);
  return out;
}

bool ValidationReport::has(ViolationCode code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [code](const Violation& v) { return v.code == code; });
}

bool matches_time_span_form(std::string_view expression, const TimeSpanForm& form) {
  const std::vector<std::string> expr = tokenize(expression);
  const std::vector<std::string> pattern = tokenize(form.pattern);
  if (expr.empty() || expr.size() != pattern.size()) return false;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const std::string& p = pattern[i];
    if (p.size() >= 2 && p.front() == '<' && p.back() == '>') {
      if (!matches_placeholder(p.substr(1, p.size() - 2), expr[i])) return false;
    } else if (p != expr[i]) {
      return false;
    }
  }
  return true;
}

namespace {

std::string display_of(const FeatureSpec& f, const BehaviorDecomposition& decomp) {
  return f.display_name.empty() ? feature_display_name(f, decomp) : f.display_name;
}

class ReportBuilder {
 public:
  explicit ReportBuilder(const KnowledgeBase& kb) : kb_(kb) {}

  void unknown_sensor(const std::string& name, const std::string& where) {
    if (!seen_unknown_.insert(casefold(trim(name))).second) return;
    v1_.push_back({ViolationCode::V1UnknownSensor, name,
                   "sensor '" + name + "' is not in the knowledge base (referenced in " + where +
                       ")"});
  }

  void check_sensor(const std::string& name, const std::string& where) {
    if (!kb_.lookup_sensor(name).found()) unknown_sensor(name, where);
  }

  void add(ViolationCode code, std::string subject, std::string detail) {
    rest_[static_cast<int>(code)].push_back({code, std::move(subject), std::move(detail)});
  }

  ValidationReport finish() {
    ValidationReport report;
    report.violations = std::move(v1_);
    for (auto& [code, group] : rest_) {
      (void)code;
      report.violations.insert(report.violations.end(), group.begin(), group.end());
    }
    return report;
  }

 private:
  const KnowledgeBase& kb_;
  std::set<std::string> seen_unknown_;
  std::vector<Violation> v1_;
  std::map<int, std::vector<Violation>> rest_;
};

}  // namespace

ValidationReport validate_strategy(const SensingStrategy& s, const KnowledgeBase& kb) {
  ReportBuilder b(kb);

  // V1: every sensor name anywhere in the document must resolve. One
  // violation per distinct name, first mention wins.
  for (const auto& n : s.decomposition.nodes) {
    for (const auto& hint : n.sensor_hints) {
      b.check_sensor(hint, "behavior '" + (n.label.empty() ? n.id : n.label) + "'");
    }
  }
  for (const auto& name : s.data_sources.sensors) {
    b.check_sensor(name, "data_sources.sensors");
  }
  for (const auto& [feature, subset] : s.data_sources.justification) {
    for (const auto& name : subset) {
      b.check_sensor(name, "justification of '" + feature + "'");
    }
  }

  // Canonical names actually selected, for the coverage check below.
  std::set<std::string> selected;
  for (const auto& name : s.data_sources.sensors) {
    auto hit = kb.lookup_sensor(name);
    if (hit.found()) selected.insert(hit.spec->name);
  }

  // V2..V4, V7, V8 walk the features in order.
  for (const auto& f : s.features) {
    const std::string display = display_of(f, s.decomposition);
    std::vector<std::string> missing;
    if (trim(f.metric.name).empty()) missing.push_back("metric");
    if (trim(f.time_span.expression).empty()) missing.push_back("time span");
    if (trim(f.behavior_id).empty()) missing.push_back("behavior");
    if (!missing.empty()) {
      b.add(ViolationCode::V2IncompleteFeature, display,
            "feature '" + display + "' is missing its " + join(missing, " and "));
    }

    if (std::find(missing.begin(), missing.end(), "metric") == missing.end()) {
      auto hit = kb.lookup_metric_in(f.metric.category, f.metric.name);
      if (!hit.found()) {
        std::string detail = "metric '" + f.metric.name + "' is not in the knowledge base";
        if (!hit.suggestions.empty()) {
          detail += "; nearest known metrics: " + join(hit.suggestions, ", ");
        }
        b.add(ViolationCode::V3UnknownMetric, f.metric.name, std::move(detail));
      } else if (hit.spec->category != f.metric.category) {
        b.add(ViolationCode::V3UnknownMetric, f.metric.name,
              "metric '" + f.metric.name + "' belongs to the " +
                  std::string(to_string(hit.spec->category)) + " category, not " +
                  std::string(to_string(f.metric.category)));
      }
    }

    if (std::find(missing.begin(), missing.end(), "time span") == missing.end()) {
      bool matched = false;
      std::vector<std::string> patterns;
      for (const auto& form : kb.forms_of_kind(f.time_span.kind)) {
        patterns.push_back(form.pattern);
        if (matches_time_span_form(f.time_span.expression, form)) {
          matched = true;
          break;
        }
      }
      if (!matched) {
        b.add(ViolationCode::V4MalformedTimespan, f.time_span.expression,
              "time span '" + f.time_span.expression + "' matches no " +
                  std::string(to_string(f.time_span.kind)) + " form (known patterns: " +
                  join(patterns, "; ") + ")");
      }
    }

    const bool behavior_named = std::find(missing.begin(), missing.end(), "behavior") == missing.end();
    const BehaviorNode* node = behavior_named ? s.decomposition.find(f.behavior_id) : nullptr;
    if (behavior_named && node == nullptr) {
      b.add(ViolationCode::V7UnanchoredFeature, f.behavior_id,
            "feature '" + display + "' references behavior '" + f.behavior_id +
                "' which is not in the decomposition");
    }

    if (node != nullptr) {
      try {
        std::vector<std::string> required = required_sensors(f, s.decomposition, kb);
        std::vector<std::string> uncovered;
        for (const auto& name : required) {
          if (name != "Time" && !selected.count(name)) uncovered.push_back(name);
        }
        if (!uncovered.empty()) {
          b.add(ViolationCode::V8UncoveredFeature, display,
                "feature '" + display + "' needs " + join(uncovered, ", ") +
                    " which data_sources.sensors does not include");
        }
      } catch (const IncomputableFeatureError& e) {
        b.add(ViolationCode::V8UncoveredFeature, display,
              "feature '" + display + "' cannot be computed: " + e.what());
      } catch (const std::invalid_argument&) {
        // Unresolvable behavior id; already covered by V7.
      }

      if (missing.empty()) {
        const std::vector<std::string>* just = s.data_sources.justification_for(display);
        if (just == nullptr) {
          b.add(ViolationCode::V8UncoveredFeature, display,
                "feature '" + display + "' has no data-source justification entry");
        } else {
          std::vector<std::string> stray;
          for (const auto& name : *just) {
            auto hit = kb.lookup_sensor(name);
            const std::string canonical = hit.found() ? hit.spec->name : name;
            if (canonical != "Time" && !selected.count(canonical)) stray.push_back(name);
          }
          if (!stray.empty()) {
            b.add(ViolationCode::V8UncoveredFeature, display,
                  "justification of '" + display + "' cites " + join(stray, ", ") +
                      " outside the selected sensors");
          }
        }
      }
    }
  }

  // V5: the model must exist and support the declared task.
  const ModelSpec* model = kb.find_model(s.model.model_name);
  if (model == nullptr) {
    std::string detail = "model '" + s.model.model_name + "' is not in the catalogue";
    auto suggestions = kb.model_suggestions(s.model.model_name);
    if (!suggestions.empty()) detail += "; nearest known models: " + join(suggestions, ", ");
    b.add(ViolationCode::V5UnknownModel, s.model.model_name, std::move(detail));
  } else if (!model->supports(s.model.task_kind)) {
    b.add(ViolationCode::V5UnknownModel, s.model.model_name,
          "model '" + s.model.model_name + "' does not support " +
              std::string(to_string(s.model.task_kind)) + " tasks");
  }

  // V6: structural rules of the behavior hierarchy. Unknown sensor hints
  // were already folded into V1 above.
  try {
    for (const auto& v : validate_decomposition(s.decomposition, kb)) {
      if (v.code == DecompositionViolation::Code::UnknownSensorHint) continue;
      b.add(ViolationCode::V6LevelInversion, v.subject,
            std::string(to_string(v.code)) + ": " + v.detail);
    }
  } catch (const DecompositionStructureError& e) {
    b.add(ViolationCode::V6LevelInversion, s.decomposition.root_id,
          std::string("decomposition is not well formed: ") + e.what());
  }

  return b.finish();
}

std::string violation_feedback_text(const ValidationReport& report, const KnowledgeBase& kb) {
  std::vector<Violation> ordered = report.violations;
  std::stable_sort(ordered.begin(), ordered.end(), [](const Violation& a, const Violation& b) {
    if (a.code != b.code) return static_cast<int>(a.code) < static_cast<int>(b.code);
    return a.subject < b.subject;
  });

  std::string out;
  for (const auto& v : ordered) {
    out += "- [" + std::string(to_string(v.code)) + "] " + v.detail;
    if (v.code == ViolationCode::V1UnknownSensor) {
      // Guess the category the model was reaching for; default to Hardware.
      SensorCategory category = SensorCategory::Hardware;
      std::size_t best = static_cast<std::size_t>(-1);
      for (const auto& s : kb.sensors()) {
        std::size_t d = name_match_distance(v.subject, s.name);
        for (const auto& a : s.aliases) d = std::min(d, name_match_distance(v.subject, a));
        if (d < best) {
          best = d;
          category = s.category;
        }
      }
      if (best > 2) category = SensorCategory::Hardware;
      std::vector<std::string> names;
      for (const auto& s : kb.sensors_by_category(category)) names.push_back(s.name);
      out += ". Valid " + std::string(to_string(category)) + " sensors: " + join(names, ", ");
    }
    out += "\n";
  }
  return out;
}

}  // namespace sense
