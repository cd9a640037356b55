#include "sense/knowledge_base.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sense/strings.hpp"

namespace sense {

namespace {

using nlohmann::json;

constexpr std::size_t kSuggestionDistance = 2;
constexpr std::size_t kMaxSuggestions = 3;

std::string type_name(const json& j) { return j.type_name(); }

const json& require_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw KbError(KbError::Kind::Format, where + ": missing field '" + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require_field(obj, key, where);
  if (!v.is_string()) {
    throw KbError(KbError::Kind::Format,
                  where + ": field '" + key + "' must be a string, got " + type_name(v));
  }
  return v.get<std::string>();
}

std::string optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) {
    throw KbError(KbError::Kind::Format,
                  std::string("field '") + key + "' must be a string, got " + type_name(*it));
  }
  return it->get<std::string>();
}

// Generic suggestion scan over (candidate name, canonical result) pairs.
std::vector<std::string> nearest_names(
    std::string_view query, const std::vector<std::pair<std::string, std::string>>& candidates) {
  // (distance, casefolded canonical) ordering keeps the output stable.
  std::map<std::pair<std::size_t, std::string>, std::string> ranked;
  for (const auto& [candidate, canonical] : candidates) {
    std::size_t d = name_match_distance(query, candidate);
    if (d <= kSuggestionDistance) {
      ranked.emplace(std::make_pair(d, casefold(canonical)), canonical);
    }
  }
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& [key, canonical] : ranked) {
    if (seen.insert(canonical).second) {
      out.push_back(canonical);
      if (out.size() == kMaxSuggestions) break;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(SensorCategory c) {
  switch (c) {
    case SensorCategory::Hardware: return "Hardware";
    case SensorCategory::Software: return "Software";
    case SensorCategory::Contextual: return "Contextual";
  }
  return "?";
}

std::string_view to_string(MetricCategory c) {
  switch (c) {
    case MetricCategory::Statistical: return "Statistical";
    case MetricCategory::Regularity: return "Regularity";
    case MetricCategory::Relation: return "Relation";
    case MetricCategory::Diversity: return "Diversity";
    case MetricCategory::Similarity: return "Similarity";
    case MetricCategory::Spatial: return "Spatial";
    case MetricCategory::Temporal: return "Temporal";
    case MetricCategory::Other: return "Other";
  }
  return "?";
}

std::string_view to_string(TimeSpanKind k) {
  return k == TimeSpanKind::Duration ? "Duration" : "Periodicity";
}

std::string_view to_string(TaskKind k) {
  return k == TaskKind::Regression ? "Regression" : "Classification";
}

namespace {
template <typename E>
std::optional<E> enum_from(std::string_view s, std::initializer_list<E> values) {
  const std::string folded = casefold(trim(s));
  for (E v : values) {
    if (folded == casefold(to_string(v))) return v;
  }
  return std::nullopt;
}
}  // namespace

std::optional<SensorCategory> sensor_category_from(std::string_view s) {
  return enum_from(s, {SensorCategory::Hardware, SensorCategory::Software,
                       SensorCategory::Contextual});
}

std::optional<MetricCategory> metric_category_from(std::string_view s) {
  return enum_from(s, {MetricCategory::Statistical, MetricCategory::Regularity,
                       MetricCategory::Relation, MetricCategory::Diversity,
                       MetricCategory::Similarity, MetricCategory::Spatial,
                       MetricCategory::Temporal, MetricCategory::Other});
}

std::optional<TimeSpanKind> time_span_kind_from(std::string_view s) {
  return enum_from(s, {TimeSpanKind::Duration, TimeSpanKind::Periodicity});
}

std::optional<TaskKind> task_kind_from(std::string_view s) {
  return enum_from(s, {TaskKind::Regression, TaskKind::Classification});
}

bool ModelSpec::supports(TaskKind k) const {
  return std::find(task_kinds.begin(), task_kinds.end(), k) != task_kinds.end();
}

KnowledgeBase KnowledgeBase::load(const std::string& document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw KbError(KbError::Kind::Format, std::string("knowledge base document: ") + e.what());
  }
  if (!root.is_object()) {
    throw KbError(KbError::Kind::Format,
                  "knowledge base document: top level must be an object, got " + type_name(root));
  }

  KnowledgeBase kb;
  kb.version_ = require_string(root, "version", "knowledge base");

  const json& sensors = require_field(root, "sensors", "knowledge base");
  if (!sensors.is_array()) {
    throw KbError(KbError::Kind::Format, "'sensors' must be an array");
  }
  std::set<std::string> sensor_names;  // casefolded name plus aliases
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const json& s = sensors[i];
    const std::string where = "sensors[" + std::to_string(i) + "]";
    if (!s.is_object()) throw KbError(KbError::Kind::Format, where + " must be an object");
    SensorSpec spec;
    spec.name = trim(require_string(s, "name", where));
    if (spec.name.empty()) throw KbError(KbError::Kind::Format, where + ": empty name");
    const std::string cat = require_string(s, "category", where);
    auto category = sensor_category_from(cat);
    if (!category) {
      throw KbError(KbError::Kind::Schema,
                    where + ": unknown sensor category '" + cat +
                        "' (expected Hardware, Software, or Contextual)");
    }
    spec.category = *category;
    if (auto it = s.find("aliases"); it != s.end() && !it->is_null()) {
      if (!it->is_array()) throw KbError(KbError::Kind::Format, where + ": 'aliases' must be an array");
      for (const json& a : *it) {
        if (!a.is_string()) throw KbError(KbError::Kind::Format, where + ": alias must be a string");
        spec.aliases.push_back(trim(a.get<std::string>()));
      }
    }
    spec.description = optional_string(s, "description");
    spec.availability_note = optional_string(s, "availability_note");

    if (!sensor_names.insert(casefold(spec.name)).second) {
      throw KbError(KbError::Kind::Uniqueness, "duplicate sensor name '" + spec.name + "'");
    }
    for (const auto& alias : spec.aliases) {
      if (!sensor_names.insert(casefold(alias)).second) {
        throw KbError(KbError::Kind::Uniqueness,
                      "alias '" + alias + "' of sensor '" + spec.name +
                          "' collides with another sensor or alias");
      }
    }
    kb.sensors_.push_back(std::move(spec));
  }

  const json& metrics = require_field(root, "metrics", "knowledge base");
  if (!metrics.is_array()) throw KbError(KbError::Kind::Format, "'metrics' must be an array");
  std::set<std::pair<std::string, std::string>> metric_keys;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const json& m = metrics[i];
    const std::string where = "metrics[" + std::to_string(i) + "]";
    if (!m.is_object()) throw KbError(KbError::Kind::Format, where + " must be an object");
    MetricSpec spec;
    const std::string cat = require_string(m, "category", where);
    auto category = metric_category_from(cat);
    if (!category) {
      throw KbError(KbError::Kind::Schema, where + ": unknown metric category '" + cat + "'");
    }
    spec.category = *category;
    spec.name = trim(require_string(m, "name", where));
    if (spec.name.empty()) throw KbError(KbError::Kind::Format, where + ": empty name");
    spec.description = optional_string(m, "description");
    if (!metric_keys.insert({std::string(to_string(spec.category)), casefold(spec.name)}).second) {
      throw KbError(KbError::Kind::Uniqueness,
                    "duplicate metric '" + spec.name + "' in category " +
                        std::string(to_string(spec.category)));
    }
    kb.metrics_.push_back(std::move(spec));
  }

  const json& forms = require_field(root, "time_span_forms", "knowledge base");
  if (!forms.is_array()) throw KbError(KbError::Kind::Format, "'time_span_forms' must be an array");
  for (std::size_t i = 0; i < forms.size(); ++i) {
    const json& f = forms[i];
    const std::string where = "time_span_forms[" + std::to_string(i) + "]";
    if (!f.is_object()) throw KbError(KbError::Kind::Format, where + " must be an object");
    TimeSpanForm form;
    const std::string kind = require_string(f, "kind", where);
    auto k = time_span_kind_from(kind);
    if (!k) {
      throw KbError(KbError::Kind::Schema,
                    where + ": unknown time span kind '" + kind +
                        "' (expected Duration or Periodicity)");
    }
    form.kind = *k;
    form.pattern = trim(require_string(f, "pattern", where));
    if (form.pattern.empty()) throw KbError(KbError::Kind::Format, where + ": empty pattern");
    kb.time_span_forms_.push_back(std::move(form));
  }

  const json& models = require_field(root, "models", "knowledge base");
  if (!models.is_array()) throw KbError(KbError::Kind::Format, "'models' must be an array");
  std::set<std::string> model_names;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const json& m = models[i];
    const std::string where = "models[" + std::to_string(i) + "]";
    if (!m.is_object()) throw KbError(KbError::Kind::Format, where + " must be an object");
    ModelSpec spec;
    spec.name = trim(require_string(m, "name", where));
    if (spec.name.empty()) throw KbError(KbError::Kind::Format, where + ": empty name");
    const json& kinds = require_field(m, "task_kinds", where);
    if (!kinds.is_array() || kinds.empty()) {
      throw KbError(KbError::Kind::Format, where + ": 'task_kinds' must be a non-empty array");
    }
    for (const json& k : kinds) {
      if (!k.is_string()) throw KbError(KbError::Kind::Format, where + ": task kind must be a string");
      auto task = task_kind_from(k.get<std::string>());
      if (!task) {
        throw KbError(KbError::Kind::Schema,
                      where + ": unknown task kind '" + k.get<std::string>() +
                          "' (expected Regression or Classification)");
      }
      if (!spec.supports(*task)) spec.task_kinds.push_back(*task);
    }
    spec.notes = optional_string(m, "notes");
    if (!model_names.insert(casefold(spec.name)).second) {
      throw KbError(KbError::Kind::Uniqueness, "duplicate model name '" + spec.name + "'");
    }
    kb.models_.push_back(std::move(spec));
  }

  return kb;
}

KnowledgeBase KnowledgeBase::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw KbError(KbError::Kind::Format, "cannot open knowledge base file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load(buf.str());
}

Lookup<SensorSpec> KnowledgeBase::lookup_sensor(std::string_view name) const {
  const std::string folded = casefold(trim(name));
  for (const auto& s : sensors_) {
    if (casefold(s.name) == folded) return {&s, {}};
    for (const auto& a : s.aliases) {
      if (casefold(a) == folded) return {&s, {}};
    }
  }
  std::vector<std::pair<std::string, std::string>> candidates;
  for (const auto& s : sensors_) {
    candidates.emplace_back(s.name, s.name);
    for (const auto& a : s.aliases) candidates.emplace_back(a, s.name);
  }
  return {nullptr, nearest_names(name, candidates)};
}

Lookup<MetricSpec> KnowledgeBase::lookup_metric(std::string_view name) const {
  const std::string folded = casefold(trim(name));
  for (const auto& m : metrics_) {
    if (casefold(m.name) == folded) return {&m, {}};
  }
  std::vector<std::pair<std::string, std::string>> candidates;
  for (const auto& m : metrics_) candidates.emplace_back(m.name, m.name);
  return {nullptr, nearest_names(name, candidates)};
}

Lookup<MetricSpec> KnowledgeBase::lookup_metric_in(MetricCategory category,
                                                   std::string_view name) const {
  const std::string folded = casefold(trim(name));
  for (const auto& m : metrics_) {
    if (m.category == category && casefold(m.name) == folded) return {&m, {}};
  }
  return lookup_metric(name);
}

const ModelSpec* KnowledgeBase::find_model(std::string_view name) const {
  const std::string folded = casefold(trim(name));
  for (const auto& m : models_) {
    if (casefold(m.name) == folded) return &m;
  }
  return nullptr;
}

std::vector<std::string> KnowledgeBase::model_suggestions(std::string_view name) const {
  std::vector<std::pair<std::string, std::string>> candidates;
  for (const auto& m : models_) candidates.emplace_back(m.name, m.name);
  return nearest_names(name, candidates);
}

std::vector<SensorSpec> KnowledgeBase::sensors_by_category(SensorCategory category) const {
  std::vector<SensorSpec> out;
  for (const auto& s : sensors_) {
    if (s.category == category) out.push_back(s);
  }
  return out;
}

std::vector<TimeSpanForm> KnowledgeBase::forms_of_kind(TimeSpanKind kind) const {
  std::vector<TimeSpanForm> out;
  for (const auto& f : time_span_forms_) {
    if (f.kind == kind) out.push_back(f);
  }
  return out;
}

bool KnowledgeBase::has_metric_category(MetricCategory category) const {
  return std::any_of(metrics_.begin(), metrics_.end(),
                     [category](const MetricSpec& m) { return m.category == category; });
}

KbSummary KnowledgeBase::summary() const {
  KbSummary s;
  s.version = version_;
  for (const auto& sensor : sensors_) {
    switch (sensor.category) {
      case SensorCategory::Hardware: ++s.hardware; break;
      case SensorCategory::Software: ++s.software; break;
      case SensorCategory::Contextual: ++s.contextual; break;
    }
  }
  std::set<MetricCategory> cats;
  for (const auto& m : metrics_) cats.insert(m.category);
  s.metric_categories = cats.size();
  s.models = models_.size();
  return s;
}

}  // namespace sense
