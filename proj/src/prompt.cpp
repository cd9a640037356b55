#include "sense/prompt.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sense/codec.hpp"
#include "sense/strings.hpp"

namespace sense {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* step_fields(StepKind step) {
  switch (step) {
    case StepKind::Extract: return "\"objective\" and \"level\"";
    case StepKind::Represent: return "\"behaviors\"";
    case StepKind::Features: return "\"features\"";
    case StepKind::Data: return "\"data_sources\"";
    case StepKind::Model: return "\"model\" and \"performance\"";
  }
  return "";
}

}  // namespace

std::string_view step_title(StepKind step) {
  switch (step) {
    case StepKind::Extract: return "Information Extraction";
    case StepKind::Represent: return "Human Behavior Representation";
    case StepKind::Features: return "Feature Construction";
    case StepKind::Data: return "Data Selection";
    case StepKind::Model: return "Model and its Estimated Performance";
  }
  return "?";
}

std::string render_example(const FewShotExample& example) {
  std::string out = "Inquiry: " + example.inquiry + "\n";
  out += "Reasoning:\n" + example.reasoning + "\n";
  out += "Mobile Sensing Strategy:\n```strategy\n" + example.strategy_block + "\n```";
  return out;
}

std::string Prompt::system_text() const {
  return prefix + "\n\n" + format_instruction();
}

std::string Prompt::user_text() const {
  std::string out;
  for (const auto& e : examples) {
    out += render_example(e);
    out += "\n\n";
  }
  if (!scope.all_steps) {
    out += "This exchange covers only the " + std::string(step_title(scope.step)) +
           " step. Give the reasoning for this step, then a ```strategy block containing " +
           "only " + step_fields(scope.step) + ".\n\n";
    if (!scope.prior_context.empty()) {
      out += "Output of the earlier steps:\n" + scope.prior_context + "\n\n";
    }
  }
  out += user_input;
  out += repair_context;
  return out;
}

std::string Prompt::rendered() const { return system_text() + "\n\n" + user_text(); }

Prompt build_prompt(const std::string& rules_text, const std::vector<FewShotExample>& examples,
                    const Inquiry& inquiry, const StepScope& scope) {
  if (trim(rules_text).empty()) {
    throw std::invalid_argument("rules text must not be empty");
  }
  if (inquiry.normalized_text.empty()) {
    throw std::invalid_argument("inquiry must not be empty");
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    if (e.inquiry.empty() || e.reasoning.empty() || e.strategy_block.empty()) {
      throw InvalidExampleError("example " + std::to_string(i + 1) +
                                " is missing one of inquiry/reasoning/strategy");
    }
    DecodeResult decoded = decode_canonical(e.strategy_block);
    if (!decoded.ok()) {
      std::string why;
      for (const auto& d : decoded.diagnostics) {
        if (d.severity == Severity::Error) {
          why = d.message;
          break;
        }
      }
      throw InvalidExampleError("example " + std::to_string(i + 1) + " ('" + e.inquiry +
                                "') has an undecodable strategy block: " + why);
    }
  }
  Prompt p;
  p.prefix = rules_text;
  p.examples = examples;
  p.user_input = "INPUT: " + inquiry.normalized_text;
  p.scope = scope;
  return p;
}

Prompt repair_prompt(const Prompt& previous, const std::string& raw_completion,
                     const std::string& feedback_text) {
  Prompt next = previous;
  next.repair_context += "\n\nYour previous reply was:\n" + raw_completion +
                         "\n\nThat strategy breaks these rules:\n" + feedback_text +
                         "\nReply with a corrected ```strategy block only; no other text.";
  return next;
}

Prompt repair_prompt(const Prompt& previous, const std::string& raw_completion,
                     const ValidationReport& violations, const KnowledgeBase& kb) {
  return repair_prompt(previous, raw_completion, violation_feedback_text(violations, kb));
}

std::vector<FewShotExample> load_examples_dir(const std::string& path) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) {
    throw std::runtime_error("examples directory '" + path + "' does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<FewShotExample> out;
  for (const auto& file : files) {
    nlohmann::ordered_json doc;
    try {
      doc = nlohmann::ordered_json::parse(read_file(file.string()));
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidExampleError("example file '" + file.string() + "' is not valid JSON: " +
                                e.what());
    }
    FewShotExample e;
    e.inquiry = doc.value("inquiry", "");
    e.reasoning = doc.value("reasoning", "");
    if (doc.contains("strategy") && doc["strategy"].is_object()) {
      e.strategy_block = doc["strategy"].dump(2);
    } else {
      e.strategy_block = doc.value("strategy", "");
    }
    if (e.inquiry.empty() || e.reasoning.empty() || e.strategy_block.empty()) {
      throw InvalidExampleError("example file '" + file.string() +
                                "' needs inquiry, reasoning, and strategy fields");
    }
    out.push_back(std::move(e));
  }
  return out;
}

RulesFile load_rules_file(const std::string& path) {
  std::string text = read_file(path);
  RulesFile out;
  std::istringstream in(text);
  std::string first;
  if (std::getline(in, first) && starts_with_ci(trim(first), "version:")) {
    out.version = trim(trim(first).substr(std::string("version:").size()));
    std::ostringstream rest;
    rest << in.rdbuf();
    out.text = trim(rest.str());
  } else {
    out.text = trim(text);
  }
  if (out.text.empty()) throw std::runtime_error("rules file '" + path + "' has no rules text");
  return out;
}

}  // namespace sense
