#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sense/knowledge_base.hpp"
#include "sense/strategy.hpp"

namespace sense {

enum class Severity { Error, Warning };

struct ParseDiagnostic {
  Severity severity = Severity::Error;
  std::string code;      // missing-section, bad-enum, dangling-behavior-ref, ...
  std::string location;  // section path, e.g. "features[1].metric"
  std::string message;
  std::string subject;   // offending name when the diagnostic is about one

  bool operator==(const ParseDiagnostic&) const = default;
};

struct DecodeResult {
  std::optional<SensingStrategy> strategy;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return strategy.has_value(); }
  bool has_errors() const;
};

// Canonical encoding: a JSON document with fixed key order and 2-space
// indentation. Sections in order: inquiry (only when non-empty), objective,
// level, behaviors, features, data_sources, model, performance, reasoning.
// Equal strategies produce byte-identical text.
std::string encode_canonical(const SensingStrategy& strategy);

// Inverse of encode_canonical on its image. Unknown fields produce
// warnings; missing sections, bad enums, and dangling references produce
// errors, and any error means no strategy is returned.
DecodeResult decode_canonical(const std::string& text);

struct ExtractedBlock {
  std::optional<std::string> body;
  std::vector<ParseDiagnostic> diagnostics;  // multiple-blocks / unterminated-block warnings
};

// Contents of the first ```strategy fenced block, tolerating surrounding
// prose. Returns no body when the completion carries no such fence.
ExtractedBlock extract_structured_block(const std::string& completion);

// extract + decode + knowledge-base normalization of sensor and metric
// names. Names at edit distance 1 from a unique knowledge-base entry are
// auto-corrected with a warning; anything further is an error. Never throws.
DecodeResult parse_llm_strategy(const std::string& completion, const KnowledgeBase& kb);

// Human-readable report of the strategy. The knowledge base drives the
// grouping of collected data by sensor category.
std::string render_strategy_markdown(const SensingStrategy& strategy, const KnowledgeBase& kb);

// Output-format instruction embedded in prompts; describes the fenced
// canonical block the model must emit.
std::string format_instruction();

}  // namespace sense
