#include "sense/behavior.hpp"

#include <map>
#include <set>

#include "sense/strings.hpp"

namespace sense {

int level_rank(BehaviorLevel level) {
  switch (level) {
    case BehaviorLevel::Context: return 0;
    case BehaviorLevel::Activity: return 1;
    case BehaviorLevel::Category: return 2;
    case BehaviorLevel::Trait: return 3;
  }
  return -1;
}

std::string_view to_string(BehaviorLevel level) {
  switch (level) {
    case BehaviorLevel::Context: return "Context";
    case BehaviorLevel::Activity: return "Activity";
    case BehaviorLevel::Category: return "Category";
    case BehaviorLevel::Trait: return "Trait";
  }
  return "?";
}

std::optional<BehaviorLevel> behavior_level_from(std::string_view s) {
  const std::string folded = casefold(trim(s));
  for (BehaviorLevel l : {BehaviorLevel::Context, BehaviorLevel::Activity,
                          BehaviorLevel::Category, BehaviorLevel::Trait}) {
    if (folded == casefold(to_string(l))) return l;
  }
  return std::nullopt;
}

std::string_view to_string(DecompositionViolation::Code code) {
  using Code = DecompositionViolation::Code;
  switch (code) {
    case Code::Cycle: return "cycle";
    case Code::LevelInversion: return "level-inversion";
    case Code::NonContextLeaf: return "non-context-leaf";
    case Code::UnknownSensorHint: return "unknown-sensor-hint";
    case Code::UnreachableNode: return "unreachable-node";
    case Code::MisplacedSensorHint: return "misplaced-sensor-hint";
    case Code::EmptyLabel: return "empty-label";
  }
  return "?";
}

const BehaviorNode* BehaviorDecomposition::find(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

namespace {

struct Graph {
  std::map<std::string, const BehaviorNode*> by_id;
  std::map<std::string, std::vector<std::string>> children;
};

Graph build_graph(const BehaviorDecomposition& decomp) {
  Graph g;
  for (const auto& n : decomp.nodes) {
    if (n.id.empty()) {
      throw DecompositionStructureError("behavior node with empty id");
    }
    if (!g.by_id.emplace(n.id, &n).second) {
      throw DecompositionStructureError("duplicate behavior node id '" + n.id + "'");
    }
    g.children[n.id];
  }
  if (!g.by_id.count(decomp.root_id)) {
    throw DecompositionStructureError("root id '" + decomp.root_id + "' names no node");
  }
  for (const auto& [parent, child] : decomp.edges) {
    if (!g.by_id.count(parent)) {
      throw DecompositionStructureError("edge parent '" + parent + "' names no node");
    }
    if (!g.by_id.count(child)) {
      throw DecompositionStructureError("edge child '" + child + "' names no node");
    }
    g.children[parent].push_back(child);
  }
  return g;
}

std::string subject_of(const BehaviorNode& n) { return n.label.empty() ? n.id : n.label; }

}  // namespace

std::vector<DecompositionViolation> validate_decomposition(const BehaviorDecomposition& decomp,
                                                           const KnowledgeBase& kb) {
  using Code = DecompositionViolation::Code;
  Graph g = build_graph(decomp);
  std::vector<DecompositionViolation> out;

  for (const auto& n : decomp.nodes) {
    if (trim(n.label).empty()) {
      out.push_back({Code::EmptyLabel, n.id, "node '" + n.id + "' has an empty label"});
    }
    if (!n.sensor_hints.empty() && n.level != BehaviorLevel::Context) {
      out.push_back({Code::MisplacedSensorHint, subject_of(n),
                     "sensor hints are only meaningful on Context-level nodes, but '" +
                         subject_of(n) + "' is " + std::string(to_string(n.level))});
    }
    for (const auto& hint : n.sensor_hints) {
      if (!kb.lookup_sensor(hint).found()) {
        out.push_back({Code::UnknownSensorHint, hint,
                       "node '" + subject_of(n) + "' hints at sensor '" + hint +
                           "' which is not in the knowledge base"});
      }
    }
  }

  for (const auto& [parent, child] : decomp.edges) {
    const BehaviorNode* p = g.by_id.at(parent);
    const BehaviorNode* c = g.by_id.at(child);
    if (level_rank(p->level) <= level_rank(c->level)) {
      out.push_back({Code::LevelInversion, subject_of(*c),
                     "edge " + parent + " -> " + child + " goes from " +
                         std::string(to_string(p->level)) + " to " +
                         std::string(to_string(c->level)) +
                         " but levels must strictly decrease in coarseness"});
    }
  }

  // Cycle detection by iterative DFS coloring.
  std::map<std::string, int> color;  // 0 white, 1 gray, 2 black
  std::set<std::string> cycle_nodes;
  for (const auto& n : decomp.nodes) {
    if (color[n.id] != 0) continue;
    std::vector<std::pair<std::string, std::size_t>> stack{{n.id, 0}};
    color[n.id] = 1;
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      const auto& kids = g.children.at(id);
      if (next < kids.size()) {
        const std::string& k = kids[next++];
        if (color[k] == 0) {
          color[k] = 1;
          stack.emplace_back(k, 0);
        } else if (color[k] == 1) {
          cycle_nodes.insert(k);
        }
      } else {
        color[id] = 2;
        stack.pop_back();
      }
    }
  }
  for (const auto& id : cycle_nodes) {
    out.push_back({Code::Cycle, subject_of(*g.by_id.at(id)),
                   "node '" + id + "' lies on a cycle"});
  }

  // Reachability from root.
  std::set<std::string> reachable;
  std::vector<std::string> queue{decomp.root_id};
  reachable.insert(decomp.root_id);
  while (!queue.empty()) {
    std::string id = std::move(queue.back());
    queue.pop_back();
    for (const auto& k : g.children.at(id)) {
      if (reachable.insert(k).second) queue.push_back(k);
    }
  }
  for (const auto& n : decomp.nodes) {
    if (!reachable.count(n.id)) {
      out.push_back({Code::UnreachableNode, subject_of(n),
                     "node '" + n.id + "' is not reachable from the root"});
    }
  }

  for (const auto& n : decomp.nodes) {
    if (g.children.at(n.id).empty() && n.level != BehaviorLevel::Context) {
      out.push_back({Code::NonContextLeaf, subject_of(n),
                     "leaf '" + subject_of(n) + "' is at " + std::string(to_string(n.level)) +
                         " level; every leaf must be a Context behavior"});
    }
  }

  return out;
}

std::vector<BehaviorNode> context_leaves(const BehaviorDecomposition& decomp) {
  Graph g = build_graph(decomp);
  std::vector<BehaviorNode> out;
  for (const auto& n : decomp.nodes) {
    if (g.children.at(n.id).empty()) out.push_back(n);
  }
  return out;
}

}  // namespace sense
