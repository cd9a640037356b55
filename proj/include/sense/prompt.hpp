#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sense/strategy.hpp"
#include "sense/validator.hpp"

namespace sense {

// One worked (inquiry, reasoning, strategy) triple embedded in the prompt.
struct FewShotExample {
  std::string inquiry;
  std::string reasoning;
  std::string strategy_block;  // canonical encoding, no fences

  bool operator==(const FewShotExample&) const = default;
};

class InvalidExampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A prompt asks either for the whole strategy at once or for one step's
// slice of it, with earlier steps' fragments carried as context.
struct StepScope {
  bool all_steps = true;
  StepKind step = StepKind::Extract;
  std::string prior_context;

  static StepScope all() { return {}; }
  static StepScope single(StepKind step, std::string prior_context = "") {
    return {false, step, std::move(prior_context)};
  }

  bool operator==(const StepScope&) const = default;
};

struct Prompt {
  std::string prefix;
  std::vector<FewShotExample> examples;
  std::string user_input;      // "INPUT: <inquiry>"
  StepScope scope;
  std::string repair_context;  // accumulated repair rounds, empty on first attempt

  // System part: design rules plus the output-format instruction.
  std::string system_text() const;
  // User part: examples, step focus, the inquiry, repair rounds.
  std::string user_text() const;
  std::string rendered() const;

  bool operator==(const Prompt&) const = default;
};

std::string_view step_title(StepKind step);

std::string render_example(const FewShotExample& example);

// Throws InvalidExampleError when an example's strategy block does not
// decode, and std::invalid_argument on empty rules text or inquiry.
Prompt build_prompt(const std::string& rules_text, const std::vector<FewShotExample>& examples,
                    const Inquiry& inquiry, const StepScope& scope = StepScope::all());

// New prompt carrying the model's prior output and the itemized violation
// feedback, asking for a corrected strategy block only. The original
// inquiry and prefix are preserved verbatim.
Prompt repair_prompt(const Prompt& previous, const std::string& raw_completion,
                     const std::string& feedback_text);
Prompt repair_prompt(const Prompt& previous, const std::string& raw_completion,
                     const ValidationReport& violations, const KnowledgeBase& kb);

// Reads every example document in a directory (sorted by filename).
std::vector<FewShotExample> load_examples_dir(const std::string& path);

struct RulesFile {
  std::string version;
  std::string text;
};

// First line "version: <x>", remainder is the rules text.
RulesFile load_rules_file(const std::string& path);

}  // namespace sense
