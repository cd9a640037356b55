#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sense/knowledge_base.hpp"

namespace sense {

// The four granularity levels, finest to coarsest. An edge in a
// decomposition always goes from a strictly coarser parent to a strictly
// finer child, so level_rank(parent) > level_rank(child).
enum class BehaviorLevel { Context, Activity, Category, Trait };

int level_rank(BehaviorLevel level);
std::string_view to_string(BehaviorLevel level);
std::optional<BehaviorLevel> behavior_level_from(std::string_view s);

struct BehaviorNode {
  std::string id;
  std::string label;
  BehaviorLevel level = BehaviorLevel::Context;
  // Sensor names that observe this behavior; meaningful only at Context level.
  std::vector<std::string> sensor_hints;

  bool operator==(const BehaviorNode&) const = default;
};

struct BehaviorDecomposition {
  std::string root_id;
  std::vector<BehaviorNode> nodes;  // declaration order, root included
  std::vector<std::pair<std::string, std::string>> edges;  // parent id -> child id

  const BehaviorNode* find(std::string_view id) const;

  bool operator==(const BehaviorDecomposition&) const = default;
};

// Raised when the graph is not even well formed (duplicate ids, edges or
// root naming missing nodes). Distinct from validation violations.
class DecompositionStructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DecompositionViolation {
  enum class Code {
    Cycle,
    LevelInversion,
    NonContextLeaf,
    UnknownSensorHint,
    UnreachableNode,
    MisplacedSensorHint,
    EmptyLabel
  };

  Code code;
  std::string subject;  // node label or id
  std::string detail;

  bool operator==(const DecompositionViolation&) const = default;
};

std::string_view to_string(DecompositionViolation::Code code);

// Returns every invariant violation; empty means the decomposition is valid.
// Throws DecompositionStructureError when ids are not unique or edges refer
// to nodes that do not exist.
std::vector<DecompositionViolation> validate_decomposition(const BehaviorDecomposition& decomp,
                                                           const KnowledgeBase& kb);

// Nodes with no outgoing edges, in declaration order. On a valid
// decomposition these are exactly the Context-level behaviors.
std::vector<BehaviorNode> context_leaves(const BehaviorDecomposition& decomp);

}  // namespace sense
