#include "sense/codec.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sense/digest.hpp"
#include "sense/strings.hpp"

namespace sense {

namespace {

using ojson = nlohmann::ordered_json;

// Guard against pathological nesting before handing text to the JSON parser.
constexpr int kMaxNestingDepth = 512;

bool nesting_too_deep(const std::string& text) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (char c : text) {
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '{':
      case '[':
        if (++depth > kMaxNestingDepth) return true;
        break;
      case '}':
      case ']':
        if (depth > 0) --depth;
        break;
      default: break;
    }
  }
  return false;
}

class Diagnostics {
 public:
  explicit Diagnostics(std::vector<ParseDiagnostic>& sink) : sink_(sink) {}

  void error(std::string code, std::string location, std::string message,
             std::string subject = "") {
    sink_.push_back({Severity::Error, std::move(code), std::move(location), std::move(message),
                     std::move(subject)});
    ++errors_;
  }

  void warn(std::string code, std::string location, std::string message,
            std::string subject = "") {
    sink_.push_back({Severity::Warning, std::move(code), std::move(location), std::move(message),
                     std::move(subject)});
  }

  int errors() const { return errors_; }

 private:
  std::vector<ParseDiagnostic>& sink_;
  int errors_ = 0;
};

std::string enum_list(std::initializer_list<std::string_view> values) {
  std::string out;
  for (auto v : values) {
    if (!out.empty()) out += ", ";
    out += v;
  }
  return out;
}

void check_unknown_fields(const ojson& obj, std::initializer_list<std::string_view> known,
                          const std::string& path, Diagnostics& diag) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      diag.warn("unknown-field", path.empty() ? key : path + "." + key,
                "unknown field '" + key + "' ignored");
    }
  }
}

std::string get_string(const ojson& obj, const char* key, const std::string& path,
                       Diagnostics& diag, bool required = true) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) diag.error("missing-field", path + "." + key, "missing field '" + std::string(key) + "'");
    return {};
  }
  if (!it->is_string()) {
    diag.error("bad-type", path + "." + key,
               "field '" + std::string(key) + "' must be a string");
    return {};
  }
  return it->get<std::string>();
}

std::vector<std::string> get_string_array(const ojson& obj, const char* key,
                                          const std::string& path, Diagnostics& diag) {
  std::vector<std::string> out;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_array()) {
    diag.error("bad-type", path + "." + key, "field '" + std::string(key) + "' must be an array");
    return out;
  }
  for (std::size_t i = 0; i < it->size(); ++i) {
    const ojson& v = (*it)[i];
    if (!v.is_string()) {
      diag.error("bad-type", path + "." + key + "[" + std::to_string(i) + "]",
                 "expected a string");
      continue;
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

// ---- encoding ----

ojson encode_decomposition(const BehaviorDecomposition& d) {
  ojson out;
  out["root"] = d.root_id;
  ojson nodes = ojson::array();
  for (const auto& n : d.nodes) {
    ojson jn;
    jn["id"] = n.id;
    jn["label"] = n.label;
    jn["level"] = to_string(n.level);
    if (!n.sensor_hints.empty()) jn["sensors"] = n.sensor_hints;
    nodes.push_back(std::move(jn));
  }
  out["nodes"] = std::move(nodes);
  ojson edges = ojson::array();
  for (const auto& [p, c] : d.edges) edges.push_back(ojson::array({p, c}));
  out["edges"] = std::move(edges);
  return out;
}

ojson encode_feature(const FeatureSpec& f) {
  ojson out;
  out["metric"] = {{"category", to_string(f.metric.category)}, {"name", f.metric.name}};
  out["time_span"] = {{"kind", to_string(f.time_span.kind)}, {"expression", f.time_span.expression}};
  out["behavior"] = f.behavior_id;
  out["display_name"] = f.display_name;
  return out;
}

}  // namespace

bool DecodeResult::has_errors() const {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const ParseDiagnostic& d) { return d.severity == Severity::Error; });
}

std::string encode_canonical(const SensingStrategy& s) {
  ojson out;
  if (!s.inquiry.raw_text.empty() || !s.inquiry.normalized_text.empty()) {
    out["inquiry"] = {{"raw", s.inquiry.raw_text}, {"normalized", s.inquiry.normalized_text}};
  }
  out["objective"] = s.objective;
  out["level"] = to_string(s.level);
  out["behaviors"] = encode_decomposition(s.decomposition);
  ojson features = ojson::array();
  for (const auto& f : s.features) features.push_back(encode_feature(f));
  out["features"] = std::move(features);

  ojson sources;
  sources["sensors"] = s.data_sources.sensors;
  ojson just;
  for (const auto& [name, subset] : s.data_sources.justification) just[name] = subset;
  sources["justification"] = std::move(just);
  out["data_sources"] = std::move(sources);

  out["model"] = {{"name", s.model.model_name},
                  {"task", to_string(s.model.task_kind)},
                  {"rationale", s.model.rationale}};
  out["performance"] = {{"tier", to_string(s.performance.tier)},
                        {"rationale", s.performance.rationale}};

  ojson reasoning = ojson::array();
  for (const auto& t : s.reasoning) {
    ojson jt;
    jt["step"] = to_string(t.step);
    jt["text"] = t.reasoning_text;
    if (!t.raw_completion_ref.empty()) jt["ref"] = t.raw_completion_ref;
    reasoning.push_back(std::move(jt));
  }
  out["reasoning"] = std::move(reasoning);

  return out.dump(2);
}

DecodeResult decode_canonical(const std::string& text) {
  DecodeResult result;
  Diagnostics diag(result.diagnostics);

  if (nesting_too_deep(text)) {
    diag.error("too-deep", "$", "document nesting exceeds the supported depth");
    return result;
  }

  ojson root;
  try {
    root = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    diag.error("bad-json", "$", e.what());
    return result;
  }
  if (!root.is_object()) {
    diag.error("bad-type", "$", "strategy document must be a JSON object");
    return result;
  }

  check_unknown_fields(root,
                       {"inquiry", "objective", "level", "behaviors", "features", "data_sources",
                        "model", "performance", "reasoning"},
                       "", diag);

  SensingStrategy s;

  if (auto it = root.find("inquiry"); it != root.end() && it->is_object()) {
    s.inquiry.raw_text = it->value("raw", "");
    s.inquiry.normalized_text = it->value("normalized", "");
  }

  for (const char* section :
       {"objective", "level", "behaviors", "features", "data_sources", "model", "performance",
        "reasoning"}) {
    if (!root.contains(section)) {
      diag.error("missing-section", section, std::string("missing required section '") + section + "'");
    }
  }
  if (diag.errors() > 0) return result;

  // objective
  if (!root["objective"].is_string() || trim(root["objective"].get<std::string>()).empty()) {
    diag.error("bad-value", "objective", "objective must be a non-empty string");
  } else {
    s.objective = root["objective"].get<std::string>();
  }

  // level
  if (!root["level"].is_string()) {
    diag.error("bad-type", "level", "level must be a string");
  } else if (auto level = behavior_level_from(root["level"].get<std::string>())) {
    s.level = *level;
  } else {
    diag.error("bad-enum", "level",
               "unknown level '" + root["level"].get<std::string>() + "'; expected one of " +
                   enum_list({"Context", "Activity", "Category", "Trait"}));
  }

  // behaviors
  std::set<std::string> node_ids;
  const ojson& behaviors = root["behaviors"];
  if (!behaviors.is_object()) {
    diag.error("bad-type", "behaviors", "behaviors must be an object");
  } else {
    check_unknown_fields(behaviors, {"root", "nodes", "edges"}, "behaviors", diag);
    s.decomposition.root_id = get_string(behaviors, "root", "behaviors", diag);
    auto nodes_it = behaviors.find("nodes");
    if (nodes_it == behaviors.end() || !nodes_it->is_array()) {
      diag.error("bad-type", "behaviors.nodes", "behaviors.nodes must be an array");
    } else {
      for (std::size_t i = 0; i < nodes_it->size(); ++i) {
        const ojson& jn = (*nodes_it)[i];
        const std::string path = "behaviors.nodes[" + std::to_string(i) + "]";
        if (!jn.is_object()) {
          diag.error("bad-type", path, "node must be an object");
          continue;
        }
        check_unknown_fields(jn, {"id", "label", "level", "sensors"}, path, diag);
        BehaviorNode n;
        n.id = get_string(jn, "id", path, diag);
        n.label = get_string(jn, "label", path, diag);
        if (!n.id.empty() && !node_ids.insert(n.id).second) {
          diag.error("duplicate-node-id", path, "duplicate behavior node id '" + n.id + "'", n.id);
        }
        if (trim(n.label).empty()) {
          diag.error("bad-value", path + ".label", "node label must be non-empty");
        }
        std::string level_text = get_string(jn, "level", path, diag);
        if (auto level = behavior_level_from(level_text)) {
          n.level = *level;
        } else {
          diag.error("bad-enum", path + ".level",
                     "unknown level '" + level_text + "'; expected one of " +
                         enum_list({"Context", "Activity", "Category", "Trait"}));
        }
        n.sensor_hints = get_string_array(jn, "sensors", path, diag);
        s.decomposition.nodes.push_back(std::move(n));
      }
    }
    auto edges_it = behaviors.find("edges");
    if (edges_it == behaviors.end() || !edges_it->is_array()) {
      diag.error("bad-type", "behaviors.edges", "behaviors.edges must be an array");
    } else {
      for (std::size_t i = 0; i < edges_it->size(); ++i) {
        const ojson& je = (*edges_it)[i];
        const std::string path = "behaviors.edges[" + std::to_string(i) + "]";
        if (!je.is_array() || je.size() != 2 || !je[0].is_string() || !je[1].is_string()) {
          diag.error("bad-type", path, "edge must be a [parent, child] pair of node ids");
          continue;
        }
        std::string parent = je[0].get<std::string>();
        std::string child = je[1].get<std::string>();
        for (const std::string* end : {&parent, &child}) {
          if (!node_ids.count(*end)) {
            diag.error("dangling-behavior-ref", path,
                       "edge references behavior '" + *end + "' which is not declared", *end);
          }
        }
        s.decomposition.edges.emplace_back(std::move(parent), std::move(child));
      }
    }
    if (!s.decomposition.root_id.empty() && !node_ids.count(s.decomposition.root_id)) {
      diag.error("dangling-behavior-ref", "behaviors.root",
                 "root references behavior '" + s.decomposition.root_id + "' which is not declared",
                 s.decomposition.root_id);
    }
  }

  // features
  const ojson& features = root["features"];
  if (!features.is_array()) {
    diag.error("bad-type", "features", "features must be an array");
  } else if (features.empty()) {
    diag.error("empty-section", "features", "a strategy needs at least one feature");
  } else {
    for (std::size_t i = 0; i < features.size(); ++i) {
      const ojson& jf = features[i];
      const std::string path = "features[" + std::to_string(i) + "]";
      if (!jf.is_object()) {
        diag.error("bad-type", path, "feature must be an object");
        continue;
      }
      check_unknown_fields(jf, {"metric", "time_span", "behavior", "display_name"}, path, diag);
      FeatureSpec f;
      if (auto it = jf.find("metric"); it != jf.end() && it->is_object()) {
        std::string cat = get_string(*it, "category", path + ".metric", diag);
        if (auto category = metric_category_from(cat)) {
          f.metric.category = *category;
        } else {
          diag.error("bad-enum", path + ".metric.category",
                     "unknown metric category '" + cat + "'; expected one of " +
                         enum_list({"Statistical", "Regularity", "Relation", "Diversity",
                                    "Similarity", "Spatial", "Temporal", "Other"}));
        }
        f.metric.name = get_string(*it, "name", path + ".metric", diag, /*required=*/false);
      }
      if (auto it = jf.find("time_span"); it != jf.end() && it->is_object()) {
        std::string kind = get_string(*it, "kind", path + ".time_span", diag, /*required=*/false);
        if (!kind.empty()) {
          if (auto k = time_span_kind_from(kind)) {
            f.time_span.kind = *k;
          } else {
            diag.error("bad-enum", path + ".time_span.kind",
                       "unknown time span kind '" + kind + "'; expected Duration or Periodicity");
          }
        }
        f.time_span.expression =
            get_string(*it, "expression", path + ".time_span", diag, /*required=*/false);
      }
      if (auto it = jf.find("behavior"); it != jf.end() && it->is_string()) {
        f.behavior_id = it->get<std::string>();
        if (!f.behavior_id.empty() && !node_ids.count(f.behavior_id)) {
          diag.error("dangling-behavior-ref", path + ".behavior",
                     "feature references behavior '" + f.behavior_id + "' which is not declared",
                     f.behavior_id);
        }
      }
      std::string derived = feature_display_name(f, s.decomposition);
      if (auto it = jf.find("display_name"); it != jf.end() && it->is_string()) {
        if (it->get<std::string>() != derived) {
          diag.warn("display-name-mismatch", path + ".display_name",
                    "display name '" + it->get<std::string>() + "' normalized to '" + derived + "'");
        }
      }
      f.display_name = derived;
      s.features.push_back(std::move(f));
    }
  }

  // data_sources
  const ojson& sources = root["data_sources"];
  std::vector<std::pair<std::string, std::vector<std::string>>> extra_justifications;
  if (!sources.is_object()) {
    diag.error("bad-type", "data_sources", "data_sources must be an object");
  } else {
    check_unknown_fields(sources, {"sensors", "justification"}, "data_sources", diag);
    s.data_sources.sensors = get_string_array(sources, "sensors", "data_sources", diag);
    if (auto it = sources.find("justification"); it != sources.end() && !it->is_null()) {
      if (!it->is_object()) {
        diag.error("bad-type", "data_sources.justification", "justification must be an object");
      } else {
        for (const auto& [key, value] : it->items()) {
          if (!value.is_array()) {
            diag.error("bad-type", "data_sources.justification." + key,
                       "justification entry must be an array of sensor names");
            continue;
          }
          std::vector<std::string> subset;
          for (const auto& v : value) {
            if (v.is_string()) subset.push_back(v.get<std::string>());
          }
          extra_justifications.emplace_back(key, std::move(subset));
        }
      }
    }
  }

  // model
  const ojson& model = root["model"];
  if (!model.is_object()) {
    diag.error("bad-type", "model", "model must be an object");
  } else {
    check_unknown_fields(model, {"name", "task", "rationale"}, "model", diag);
    s.model.model_name = get_string(model, "name", "model", diag);
    std::string task = get_string(model, "task", "model", diag);
    if (auto k = task_kind_from(task)) {
      s.model.task_kind = *k;
    } else if (!task.empty()) {
      diag.error("bad-enum", "model.task",
                 "unknown task '" + task + "'; expected Regression or Classification");
    }
    s.model.rationale = get_string(model, "rationale", "model", diag, /*required=*/false);
  }

  // performance
  const ojson& perf = root["performance"];
  if (!perf.is_object()) {
    diag.error("bad-type", "performance", "performance must be an object");
  } else {
    check_unknown_fields(perf, {"tier", "rationale"}, "performance", diag);
    std::string tier = get_string(perf, "tier", "performance", diag);
    if (auto t = performance_tier_from(tier)) {
      s.performance.tier = *t;
    } else if (!tier.empty()) {
      diag.error("bad-enum", "performance.tier",
                 "unknown tier '" + tier + "'; expected Low, Moderate, or High");
    }
    s.performance.rationale = get_string(perf, "rationale", "performance", diag);
    if (trim(s.performance.rationale).empty()) {
      diag.error("bad-value", "performance.rationale",
                 "performance estimate needs a non-empty rationale");
    }
  }

  // reasoning
  const ojson& reasoning = root["reasoning"];
  if (!reasoning.is_array()) {
    diag.error("bad-type", "reasoning", "reasoning must be an array");
  } else {
    std::set<StepKind> seen;
    for (std::size_t i = 0; i < reasoning.size(); ++i) {
      const ojson& jt = reasoning[i];
      const std::string path = "reasoning[" + std::to_string(i) + "]";
      if (!jt.is_object()) {
        diag.error("bad-type", path, "reasoning entry must be an object");
        continue;
      }
      check_unknown_fields(jt, {"step", "text", "ref"}, path, diag);
      StepTrace t;
      std::string step = get_string(jt, "step", path, diag);
      if (auto k = step_kind_from(step)) {
        t.step = *k;
        if (!seen.insert(*k).second) {
          diag.error("duplicate-step", path, "step '" + step + "' appears more than once");
        }
      } else if (!step.empty()) {
        diag.error("bad-enum", path + ".step",
                   "unknown step '" + step + "'; expected one of " +
                       enum_list({"extract", "represent", "features", "data", "model"}));
      }
      t.reasoning_text = get_string(jt, "text", path, diag, /*required=*/false);
      t.raw_completion_ref = get_string(jt, "ref", path, diag, /*required=*/false);
      s.reasoning.push_back(std::move(t));
    }
  }

  if (diag.errors() > 0) return result;

  // Attach justification entries to features by display name; anything left
  // over is kept verbatim with a warning. Features without an entry get one
  // derived from their behavior's sensor hints.
  std::vector<bool> used(extra_justifications.size(), false);
  for (const auto& f : s.features) {
    bool matched = false;
    for (std::size_t i = 0; i < extra_justifications.size(); ++i) {
      if (!used[i] && extra_justifications[i].first == f.display_name) {
        s.data_sources.justification.push_back(extra_justifications[i]);
        used[i] = true;
        matched = true;
        break;
      }
    }
    if (!matched) {
      std::vector<std::string> derived;
      const BehaviorNode* node = s.decomposition.find(f.behavior_id);
      if (node) derived = node->sensor_hints;
      if (!trim(f.time_span.expression).empty()) derived.push_back("Time");
      std::sort(derived.begin(), derived.end());
      derived.erase(std::unique(derived.begin(), derived.end()), derived.end());
      s.data_sources.justification.emplace_back(f.display_name, std::move(derived));
    }
  }
  for (std::size_t i = 0; i < extra_justifications.size(); ++i) {
    if (!used[i]) {
      diag.warn("unknown-justification", "data_sources.justification",
                "justification entry '" + extra_justifications[i].first +
                    "' matches no feature display name");
      s.data_sources.justification.push_back(extra_justifications[i]);
    }
  }

  result.strategy = std::move(s);
  return result;
}

ExtractedBlock extract_structured_block(const std::string& completion) {
  ExtractedBlock out;
  std::istringstream in(completion);
  std::string line;
  bool in_block = false;
  bool found = false;
  std::string body;
  int block_count = 0;

  while (std::getline(in, line)) {
    std::string stripped = trim(line);
    if (!in_block && stripped.rfind("```", 0) == 0) {
      std::string tag = casefold(trim(stripped.substr(3)));
      if (tag == "strategy") {
        ++block_count;
        if (!found) {
          in_block = true;
        }
      }
      continue;
    }
    if (in_block) {
      if (stripped.rfind("```", 0) == 0) {
        in_block = false;
        found = true;
        continue;
      }
      body += line;
      body += '\n';
    }
  }

  if (in_block) {
    // Opening fence without a closing one; take what we have.
    out.diagnostics.push_back({Severity::Warning, "unterminated-block", "$",
                               "strategy block was not closed; using the remainder of the text",
                               ""});
    found = true;
  }
  if (!found) return out;
  if (block_count > 1) {
    out.diagnostics.push_back({Severity::Warning, "multiple-blocks", "$",
                               "completion contains " + std::to_string(block_count) +
                                   " strategy blocks; using the first",
                               ""});
  }
  if (!body.empty() && body.back() == '\n') body.pop_back();
  out.body = std::move(body);
  return out;
}

namespace {

// Whole-name distance; auto-correction stays conservative (at most one
// changed character), while suggestions use the looser token-aware metric.
std::size_t correction_distance(std::string_view a, std::string_view b) {
  return levenshtein(casefold(trim(a)), casefold(trim(b)));
}

// Canonicalizes one sensor name in place. Returns false when the name is
// unknown beyond repair (an error diagnostic has been emitted).
bool normalize_sensor_name(std::string& name, const KnowledgeBase& kb, const std::string& path,
                           Diagnostics& diag) {
  auto hit = kb.lookup_sensor(name);
  if (hit.found()) {
    name = hit.spec->name;
    return true;
  }
  // Unique nearest candidate one edit away gets auto-corrected.
  std::vector<const SensorSpec*> at_one;
  for (const auto& s : kb.sensors()) {
    std::size_t d = correction_distance(name, s.name);
    for (const auto& a : s.aliases) d = std::min(d, correction_distance(name, a));
    if (d <= 1) at_one.push_back(&s);
  }
  if (at_one.size() == 1) {
    diag.warn("corrected-sensor", path,
              "sensor '" + name + "' auto-corrected to '" + at_one[0]->name + "'", name);
    name = at_one[0]->name;
    return true;
  }
  std::string message = "unknown sensor '" + name + "'";
  if (!hit.suggestions.empty()) {
    message += "; nearest known names: ";
    for (std::size_t i = 0; i < hit.suggestions.size(); ++i) {
      if (i) message += ", ";
      message += hit.suggestions[i];
    }
  }
  diag.error("unknown-sensor", path, message, name);
  return false;
}

void normalize_metric(FeatureSpec& f, const KnowledgeBase& kb, const std::string& path,
                      Diagnostics& diag) {
  if (trim(f.metric.name).empty()) return;  // incompleteness is the validator's call
  auto hit = kb.lookup_metric_in(f.metric.category, f.metric.name);
  if (hit.found()) {
    if (hit.spec->category != f.metric.category) {
      diag.warn("corrected-metric-category", path,
                "metric '" + f.metric.name + "' belongs to category " +
                    std::string(to_string(hit.spec->category)) + ", not " +
                    std::string(to_string(f.metric.category)),
                f.metric.name);
      f.metric.category = hit.spec->category;
    }
    f.metric.name = hit.spec->name;
    return;
  }
  std::vector<const MetricSpec*> at_one;
  for (const auto& m : kb.metrics()) {
    if (correction_distance(f.metric.name, m.name) <= 1) at_one.push_back(&m);
  }
  if (at_one.size() == 1) {
    diag.warn("corrected-metric", path,
              "metric '" + f.metric.name + "' auto-corrected to '" + at_one[0]->name + "'",
              f.metric.name);
    f.metric.name = at_one[0]->name;
    f.metric.category = at_one[0]->category;
    return;
  }
  std::string message = "unknown metric '" + f.metric.name + "'";
  if (!hit.suggestions.empty()) {
    message += "; nearest known names: ";
    for (std::size_t i = 0; i < hit.suggestions.size(); ++i) {
      if (i) message += ", ";
      message += hit.suggestions[i];
    }
  }
  diag.error("unknown-metric", path, message, f.metric.name);
}

}  // namespace

DecodeResult parse_llm_strategy(const std::string& completion, const KnowledgeBase& kb) {
  DecodeResult result;
  try {
    ExtractedBlock block = extract_structured_block(completion);
    result.diagnostics = block.diagnostics;
    if (!block.body) {
      result.diagnostics.push_back({Severity::Error, "missing-block", "$",
                                    "completion contains no ```strategy fenced block", ""});
      return result;
    }

    DecodeResult decoded = decode_canonical(*block.body);
    result.diagnostics.insert(result.diagnostics.end(), decoded.diagnostics.begin(),
                              decoded.diagnostics.end());
    if (!decoded.strategy) return result;

    SensingStrategy s = std::move(*decoded.strategy);
    Diagnostics diag(result.diagnostics);

    for (std::size_t i = 0; i < s.decomposition.nodes.size(); ++i) {
      auto& node = s.decomposition.nodes[i];
      for (auto& hint : node.sensor_hints) {
        normalize_sensor_name(hint, kb, "behaviors.nodes[" + std::to_string(i) + "].sensors", diag);
      }
    }
    for (auto& name : s.data_sources.sensors) {
      normalize_sensor_name(name, kb, "data_sources.sensors", diag);
    }
    for (auto& [key, subset] : s.data_sources.justification) {
      for (auto& name : subset) {
        normalize_sensor_name(name, kb, "data_sources.justification", diag);
      }
    }
    for (std::size_t i = 0; i < s.features.size(); ++i) {
      normalize_metric(s.features[i], kb, "features[" + std::to_string(i) + "].metric", diag);
    }

    // Normalization may have rewritten metric or sensor names; refresh the
    // derived display names and the justification keys that used them.
    for (auto& f : s.features) {
      std::string updated = feature_display_name(f, s.decomposition);
      if (updated != f.display_name) {
        for (auto& [key, subset] : s.data_sources.justification) {
          if (key == f.display_name) key = updated;
        }
        f.display_name = updated;
      }
    }

    if (diag.errors() > 0) return result;
    result.strategy = std::move(s);
    return result;
  } catch (const std::exception& e) {
    result.strategy.reset();
    result.diagnostics.push_back(
        {Severity::Error, "internal-error", "$", std::string("parse failed: ") + e.what(), ""});
    return result;
  }
}

namespace {

void render_tree(const SensingStrategy& s, const std::string& id, int depth,
                 std::set<std::string>& on_path, std::string& out) {
  const BehaviorNode* node = s.decomposition.find(id);
  if (!node || on_path.count(id)) return;  // cycle guard for malformed inputs
  on_path.insert(id);
  out += std::string(static_cast<std::size_t>(depth) * 2, ' ');
  out += "- " + node->label + " (" + std::string(to_string(node->level));
  if (!node->sensor_hints.empty()) {
    out += "; sensors: ";
    for (std::size_t i = 0; i < node->sensor_hints.size(); ++i) {
      if (i) out += ", ";
      out += node->sensor_hints[i];
    }
  }
  out += ")\n";
  for (const auto& [p, c] : s.decomposition.edges) {
    if (p == id) render_tree(s, c, depth + 1, on_path, out);
  }
  on_path.erase(id);
}

}  // namespace

std::string render_strategy_markdown(const SensingStrategy& s, const KnowledgeBase& kb) {
  std::string out = "# Mobile Sensing Strategy\n\n";
  out += "Objective: " + s.objective + "\n";
  out += "Behavior Level: " + std::string(to_string(s.level)) + "\n";

  out += "\n## Behavior Decomposition\n\n";
  std::set<std::string> on_path;
  render_tree(s, s.decomposition.root_id, 0, on_path, out);

  out += "\n## Features\n\n";
  out += "| Feature | Metric | Time span | Behavior |\n";
  out += "| --- | --- | --- | --- |\n";
  for (const auto& f : s.features) {
    const BehaviorNode* node = s.decomposition.find(f.behavior_id);
    out += "| " + feature_display_name(f, s.decomposition) + " | " +
           std::string(to_string(f.metric.category)) + " / " + f.metric.name + " | " +
           std::string(to_string(f.time_span.kind)) + ": " + f.time_span.expression + " | " +
           (node ? node->label : f.behavior_id) + " |\n";
  }

  out += "\n## Data To Collect\n";
  for (SensorCategory cat :
       {SensorCategory::Hardware, SensorCategory::Software, SensorCategory::Contextual}) {
    std::string section;
    for (const auto& name : s.data_sources.sensors) {
      auto hit = kb.lookup_sensor(name);
      if (hit.found() && hit.spec->category == cat) {
        section += "- " + hit.spec->name;
        if (!hit.spec->description.empty()) section += ": " + hit.spec->description;
        section += "\n";
      }
    }
    if (!section.empty()) {
      out += "\n### " + std::string(to_string(cat)) + "\n\n" + section;
    }
  }
  std::string unknown;
  for (const auto& name : s.data_sources.sensors) {
    if (!kb.lookup_sensor(name).found()) unknown += "- " + name + "\n";
  }
  if (!unknown.empty()) out += "\n### Unrecognized\n\n" + unknown;

  out += "\n## Suggested Model\n\n";
  out += "**" + s.model.model_name + "** (" + std::string(to_string(s.model.task_kind)) + "). " +
         s.model.rationale + "\n";

  out += "\n## Estimated Performance\n\n";
  out += std::string(to_string(s.performance.tier)) + ". " + s.performance.rationale + "\n";

  if (!s.reasoning.empty()) {
    out += "\n## Reasoning\n\n";
    for (const auto& t : s.reasoning) {
      std::string step(to_string(t.step));
      step[0] = static_cast<char>(std::toupper(step[0]));
      out += "- **" + step + "**: " + t.reasoning_text + "\n";
    }
  }
  return out;
}

std::string format_instruction() {
  return
      "Output format: alongside your step-by-step reasoning, emit the final strategy as a\n"
      "single fenced block opened with ```strategy and closed with ``` holding one JSON\n"
      "object with exactly these\n"
      "sections in order: \"objective\" (string), \"level\" (Context | Activity | Category |\n"
      "Trait), \"behaviors\" ({\"root\": id, \"nodes\": [{\"id\", \"label\", \"level\", \"sensors\"?}],\n"
      "\"edges\": [[parent_id, child_id], ...]}), \"features\" ([{\"metric\": {\"category\",\n"
      "\"name\"}, \"time_span\": {\"kind\": Duration | Periodicity, \"expression\"}, \"behavior\":\n"
      "node_id}]), \"data_sources\" ({\"sensors\": [...], \"justification\": {feature display\n"
      "name: [sensor, ...]}}), \"model\" ({\"name\", \"task\": Regression | Classification,\n"
      "\"rationale\"}), \"performance\" ({\"tier\": Low | Moderate | High, \"rationale\"}), and\n"
      "\"reasoning\" ([{\"step\": extract | represent | features | data | model, \"text\"}]).\n"
      "Every sensor name must come from the sensor list, every metric from the metric list,\n"
      "and every leaf behavior must be a Context-level entry with its observing sensors.";
}

std::string strategy_digest(const SensingStrategy& strategy) {
  return sha256_hex(encode_canonical(strategy));
}

}  // namespace sense
