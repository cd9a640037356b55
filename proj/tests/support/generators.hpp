#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "sense/knowledge_base.hpp"
#include "sense/strategy.hpp"

namespace sense::testing {

inline std::string data_dir() { return SENSE_DATA_DIR; }

inline KnowledgeBase& shipped_kb() {
  static KnowledgeBase kb = KnowledgeBase::load_file(data_dir() + "/knowledge_base.json");
  return kb;
}

struct Rng {
  std::mt19937 gen;

  explicit Rng(unsigned seed) : gen(seed) {}

  int range(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(gen);
  }
  bool chance(double p) { return std::uniform_real_distribution<>(0.0, 1.0)(gen) < p; }
  template <typename T>
  const T& pick(const std::vector<T>& pool) {
    return pool[static_cast<std::size_t>(range(0, static_cast<int>(pool.size()) - 1))];
  }
};

inline BehaviorLevel level_of_rank(int rank) {
  static const BehaviorLevel kLevels[] = {BehaviorLevel::Context, BehaviorLevel::Activity,
                                          BehaviorLevel::Category, BehaviorLevel::Trait};
  return kLevels[rank];
}

inline const std::vector<std::string>& label_pool() {
  static const std::vector<std::string> pool = {
      "walking",      "running",        "sleeping",       "typing",
      "commuting",    "screen use",     "calling friends", "posting online",
      "reading news", "cooking dinner", "exercising",     "listening to music"};
  return pool;
}

inline const std::vector<std::pair<TimeSpanKind, std::string>>& time_span_pool() {
  static const std::vector<std::pair<TimeSpanKind, std::string>> pool = {
      {TimeSpanKind::Duration, "morning"},
      {TimeSpanKind::Duration, "night"},
      {TimeSpanKind::Duration, "during the night"},
      {TimeSpanKind::Duration, "during the evening"},
      {TimeSpanKind::Duration, "per weeknight"},
      {TimeSpanKind::Duration, "per day"},
      {TimeSpanKind::Duration, "in the last 30 minutes"},
      {TimeSpanKind::Duration, "in the last two hours"},
      {TimeSpanKind::Duration, "over the past two weeks"},
      {TimeSpanKind::Duration, "over the past 7 days"},
      {TimeSpanKind::Periodicity, "daily"},
      {TimeSpanKind::Periodicity, "weekly"},
      {TimeSpanKind::Periodicity, "monthly"},
  };
  return pool;
}

inline std::vector<std::string> random_hints(Rng& rng, const KnowledgeBase& kb) {
  std::set<std::string> names;
  const int n = rng.range(1, 2);
  while (static_cast<int>(names.size()) < n) {
    names.insert(kb.sensors()[static_cast<std::size_t>(
                                  rng.range(0, static_cast<int>(kb.sensors().size()) - 1))]
                     .name);
  }
  return {names.begin(), names.end()};
}

// Tree rooted at `root_level`, edges strictly coarser to finer with random
// level skips, every Context node carrying known sensor hints.
inline BehaviorDecomposition make_valid_decomposition(Rng& rng, const KnowledgeBase& kb,
                                                      BehaviorLevel root_level) {
  BehaviorDecomposition d;
  int counter = 0;
  auto fresh = [&](BehaviorLevel level) {
    BehaviorNode n;
    n.id = "n" + std::to_string(counter++);
    n.label = rng.pick(label_pool());
    n.level = level;
    if (level == BehaviorLevel::Context) n.sensor_hints = random_hints(rng, kb);
    return n;
  };
  BehaviorNode root = fresh(root_level);
  d.root_id = root.id;
  d.nodes.push_back(root);

  std::vector<std::string> frontier;
  if (root_level != BehaviorLevel::Context) frontier.push_back(d.root_id);
  while (!frontier.empty()) {
    const std::string parent_id = frontier.back();
    frontier.pop_back();
    const int parent_rank = level_rank(d.find(parent_id)->level);
    const int n_children = rng.range(1, 3);
    for (int i = 0; i < n_children; ++i) {
      BehaviorNode child = fresh(level_of_rank(rng.range(0, parent_rank - 1)));
      d.edges.emplace_back(parent_id, child.id);
      if (child.level != BehaviorLevel::Context) frontier.push_back(child.id);
      d.nodes.push_back(std::move(child));
    }
  }
  return d;
}

// A complete valid strategy whose behaviors sit at `level` and whose features
// draw metrics from `category`. Round-trips through the canonical codec.
inline SensingStrategy make_valid_strategy(Rng& rng, const KnowledgeBase& kb, BehaviorLevel level,
                                           MetricCategory category) {
  SensingStrategy s;
  if (rng.chance(0.5)) {
    s.inquiry.raw_text = "INPUT: strategy exercise";
    s.inquiry.normalized_text = "strategy exercise";
  }
  s.objective = rng.pick(label_pool()) + " patterns";
  s.level = level;
  s.decomposition = make_valid_decomposition(rng, kb, level);

  std::vector<std::string> leaf_ids;
  for (const auto& n : s.decomposition.nodes) {
    if (n.level == BehaviorLevel::Context) leaf_ids.push_back(n.id);
  }

  std::vector<MetricSpec> in_category;
  for (const auto& m : kb.metrics()) {
    if (m.category == category) in_category.push_back(m);
  }

  std::set<std::string> used_names;
  std::set<std::string> sensor_union;
  const int want = rng.range(1, 3);
  for (int i = 0; i < want || s.features.empty(); ++i) {
    if (i > 8) break;
    FeatureSpec f;
    const MetricSpec& metric = in_category[static_cast<std::size_t>(
        rng.range(0, static_cast<int>(in_category.size()) - 1))];
    f.metric = {metric.category, metric.name};
    const auto& [kind, expression] = rng.pick(time_span_pool());
    f.time_span = {kind, expression};
    f.behavior_id = rng.pick(leaf_ids);
    f.display_name = feature_display_name(f, s.decomposition);
    if (!used_names.insert(f.display_name).second) continue;
    std::vector<std::string> needed = required_sensors(f, s.decomposition, kb);
    sensor_union.insert(needed.begin(), needed.end());
    s.data_sources.justification.emplace_back(f.display_name, needed);
    s.features.push_back(std::move(f));
  }
  s.data_sources.sensors.assign(sensor_union.begin(), sensor_union.end());

  std::vector<ModelSpec> models = kb.models();
  const ModelSpec& model = models[static_cast<std::size_t>(
      rng.range(0, static_cast<int>(models.size()) - 1))];
  s.model.model_name = model.name;
  s.model.task_kind = rng.pick(model.task_kinds);
  s.model.rationale = "fits the sensed feature set";

  s.performance.tier = static_cast<PerformanceTier>(rng.range(0, 2));
  s.performance.rationale = "based on how directly the behaviour is observed";

  static const StepKind kSteps[] = {StepKind::Extract, StepKind::Represent, StepKind::Features,
                                    StepKind::Data, StepKind::Model};
  for (StepKind step : kSteps) {
    StepTrace t;
    t.step = step;
    t.reasoning_text = "short note on " + std::string(to_string(step));
    if (rng.chance(0.3)) t.raw_completion_ref = "attempt-1";
    s.reasoning.push_back(std::move(t));
  }
  return s;
}

// Arbitrary DAG for the order property: nodes keep non-empty labels, known
// hints, and reachability, while edge directions may break the level rules.
inline BehaviorDecomposition make_random_decomposition(Rng& rng, const KnowledgeBase& kb) {
  BehaviorDecomposition d;
  const int n_nodes = rng.range(1, 8);
  for (int i = 0; i < n_nodes; ++i) {
    BehaviorNode n;
    n.id = "n" + std::to_string(i);
    n.label = rng.pick(label_pool());
    n.level = level_of_rank(rng.range(0, 3));
    if (n.level == BehaviorLevel::Context && rng.chance(0.7)) {
      n.sensor_hints = random_hints(rng, kb);
    }
    d.nodes.push_back(std::move(n));
  }
  d.root_id = "n0";
  std::set<std::pair<int, int>> used;
  for (int i = 1; i < n_nodes; ++i) {
    const int parent = rng.range(0, i - 1);
    used.insert({parent, i});
    d.edges.emplace_back("n" + std::to_string(parent), "n" + std::to_string(i));
  }
  const int extras = rng.range(0, 2);
  for (int k = 0; k < extras && n_nodes > 1; ++k) {
    const int a = rng.range(0, n_nodes - 1);
    const int b = rng.range(0, n_nodes - 1);
    if (a == b || !used.insert({a, b}).second) continue;
    d.edges.emplace_back("n" + std::to_string(a), "n" + std::to_string(b));
  }
  return d;
}

}  // namespace sense::testing
