#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sense/codec.hpp"
#include "sense/knowledge_base.hpp"
#include "sense/llm.hpp"
#include "sense/pipeline.hpp"
#include "sense/prompt.hpp"
#include "sense/strategy.hpp"
#include "sense/strings.hpp"
#include "sense/validator.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sense;

constexpr int kExitAccepted = 0;
constexpr int kExitViolations = 1;
constexpr int kExitBackend = 2;
constexpr int kExitConfig = 3;

#ifndef SENSE_DATA_DIR
#define SENSE_DATA_DIR "data"
#endif

struct CliConfig {
  std::string kb_path = std::string(SENSE_DATA_DIR) + "/knowledge_base.json";
  std::string examples_path = std::string(SENSE_DATA_DIR) + "/examples";
  std::string backend = "mock";
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model_name = "gpt-3.5-turbo";
  std::string mock_script;
  std::string format = "md";
  std::string store;
  int max_repairs = 2;
  std::string step_mode = "single";
};

void add_common_options(CLI::App* cmd, CliConfig& cfg) {
  cmd->add_option("--kb", cfg.kb_path, "Knowledge base file");
  cmd->add_option("--examples", cfg.examples_path, "Few-shot examples directory");
  cmd->add_option("--backend", cfg.backend, "Completion backend")
      ->check(CLI::IsMember({"remote", "mock"}));
  cmd->add_option("--endpoint", cfg.endpoint, "Remote chat-completion URL");
  cmd->add_option("--model-name", cfg.model_name, "Model to request");
  cmd->add_option("--mock-script", cfg.mock_script, "Scripted responses for the mock backend");
  cmd->add_option("--format", cfg.format, "Output format")
      ->check(CLI::IsMember({"md", "canonical"}));
  cmd->add_option("--store", cfg.store, "Run store directory (runs persist only when set)");
  cmd->add_option("--max-repairs", cfg.max_repairs, "Repair attempts after the first")
      ->check(CLI::Range(0, 5));
  cmd->add_option("--step-mode", cfg.step_mode, "One completion or one per step")
      ->check(CLI::IsMember({"single", "per-step"}));
}

std::string read_file_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// The rules file has no flag of its own; it lives next to the knowledge
// base, falling back to the shipped copy.
std::string rules_path_for(const std::string& kb_path) {
  fs::path beside = fs::path(kb_path).parent_path() / "rules.txt";
  std::error_code ec;
  if (fs::is_regular_file(beside, ec)) return beside.string();
  return std::string(SENSE_DATA_DIR) + "/rules.txt";
}

PipelineConfig make_pipeline_config(const CliConfig& cfg) {
  PipelineConfig pc;
  pc.max_repairs = cfg.max_repairs;
  pc.step_mode = cfg.step_mode == "per-step" ? StepMode::PerStep : StepMode::SingleShot;
  pc.model_name = cfg.model_name;
  pc.backend_kind = cfg.backend;
  RulesFile rules = load_rules_file(rules_path_for(cfg.kb_path));
  pc.rules_version = rules.version;
  pc.rules_text = rules.text;
  pc.examples = load_examples_dir(cfg.examples_path);
  return pc;
}

std::unique_ptr<LlmBackend> make_backend(const CliConfig& cfg) {
  if (cfg.backend == "mock") {
    if (cfg.mock_script.empty()) {
      throw ConfigError("the mock backend needs --mock-script");
    }
    return mock_backend_from_script(MockScript::load_file(cfg.mock_script));
  }
  const char* key = std::getenv("SENSE_API_KEY");
  if (!key || !*key) {
    throw ConfigError("the remote backend needs the SENSE_API_KEY environment variable");
  }
  RemoteConfig rc;
  rc.endpoint_url = cfg.endpoint;
  rc.api_key = key;
  return std::make_unique<RemoteBackend>(rc);
}

// Returns the process exit code for one generate run; prints the artifact
// to stdout and everything else to stderr.
int report_run(const RunRecord& record, const CliConfig& cfg, const KnowledgeBase& kb) {
  std::cerr << "run " << record.run_id << ": " << to_string(record.outcome) << " after "
            << record.attempts.size() << " attempt(s)\n";
  switch (record.outcome) {
    case RunOutcome::Accepted:
      if (cfg.format == "canonical") {
        std::cout << record.canonical_strategy << "\n";
      } else {
        std::cout << render_strategy_markdown(*record.strategy, kb);
      }
      return kExitAccepted;
    case RunOutcome::RejectedAfterRepairs: {
      if (!record.attempts.empty()) {
        const Attempt& last = record.attempts.back();
        if (!last.feedback_text.empty()) {
          std::cerr << "unresolved violations:\n" << last.feedback_text;
        }
        for (const auto& d : last.diagnostics) {
          if (d.severity == Severity::Error) {
            std::cerr << "parse error at " << d.location << ": " << d.message << "\n";
          }
        }
      }
      return kExitViolations;
    }
    case RunOutcome::BackendFailure:
      std::cerr << "backend failure: " << record.error_message << "\n";
      return kExitBackend;
  }
  return kExitConfig;
}

int run_generate(const CliConfig& cfg, const std::string& inquiry_arg) {
  std::string raw = inquiry_arg;
  if (trim(raw).empty()) {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    raw = buf.str();
  }
  Inquiry inquiry = Inquiry::from(raw);
  if (inquiry.normalized_text.empty()) {
    throw ConfigError("no inquiry given; pass it as an argument or on standard input");
  }

  KnowledgeBase kb = KnowledgeBase::load_file(cfg.kb_path);
  PipelineConfig pc = make_pipeline_config(cfg);
  std::unique_ptr<LlmBackend> backend = make_backend(cfg);

  RunRecord record = generate_strategy(inquiry, pc, kb, *backend);
  if (!cfg.store.empty()) {
    std::string path = persist_run(record, cfg.store);
    std::cerr << "stored " << path << "\n";
  }
  return report_run(record, cfg, kb);
}

// Accepts a bare canonical document, a {inquiry, reasoning, strategy}
// example file, or prose with a fenced block.
DecodeResult decode_strategy_file(const std::string& text, const KnowledgeBase& kb) {
  try {
    auto doc = nlohmann::ordered_json::parse(text);
    if (doc.is_object() && doc.contains("strategy") && doc["strategy"].is_object()) {
      return decode_canonical(doc["strategy"].dump(2));
    }
    if (doc.is_object()) {
      return decode_canonical(text);
    }
  } catch (const nlohmann::json::parse_error&) {
  }
  return parse_llm_strategy(text, kb);
}

int run_validate(const CliConfig& cfg, const std::string& file) {
  KnowledgeBase kb = KnowledgeBase::load_file(cfg.kb_path);
  std::string text = read_file_or_throw(file);
  DecodeResult decoded = decode_strategy_file(text, kb);
  if (!decoded.ok()) {
    std::cerr << "'" << file << "' does not decode as a strategy:\n";
    for (const auto& d : decoded.diagnostics) {
      if (d.severity == Severity::Error) {
        std::cerr << "  " << d.location << ": " << d.message << "\n";
      }
    }
    return kExitConfig;
  }
  ValidationReport report = validate_strategy(*decoded.strategy, kb);
  if (report.passed()) {
    std::cout << "no violations\n";
    return kExitAccepted;
  }
  std::cout << violation_feedback_text(report, kb);
  return kExitViolations;
}

int run_kb_list(const CliConfig& cfg) {
  KnowledgeBase kb = KnowledgeBase::load_file(cfg.kb_path);
  struct Group {
    SensorCategory category;
    const char* title;
  };
  for (const Group& g : {Group{SensorCategory::Hardware, "Hardware"},
                         Group{SensorCategory::Software, "Software"},
                         Group{SensorCategory::Contextual, "Contextual"}}) {
    auto sensors = kb.sensors_by_category(g.category);
    std::cout << g.title << " (" << sensors.size() << ")\n";
    for (const auto& s : sensors) {
      std::cout << "  " << s.name;
      if (!s.aliases.empty()) {
        std::cout << " (";
        for (std::size_t i = 0; i < s.aliases.size(); ++i) {
          if (i) std::cout << ", ";
          std::cout << s.aliases[i];
        }
        std::cout << ")";
      }
      std::cout << "\n";
    }
  }
  return kExitAccepted;
}

int run_kb_show(const CliConfig& cfg, const std::string& name) {
  KnowledgeBase kb = KnowledgeBase::load_file(cfg.kb_path);
  auto hit = kb.lookup_sensor(name);
  if (!hit.found()) {
    std::cerr << "unknown sensor '" << name << "'";
    if (!hit.suggestions.empty()) {
      std::cerr << "; did you mean: ";
      for (std::size_t i = 0; i < hit.suggestions.size(); ++i) {
        if (i) std::cerr << ", ";
        std::cerr << hit.suggestions[i];
      }
    } else {
      std::cerr << "; see 'kb list' for the known sensors";
    }
    std::cerr << "\n";
    return kExitViolations;
  }
  const SensorSpec& s = *hit.spec;
  std::cout << "Name: " << s.name << "\n";
  std::cout << "Category: " << to_string(s.category) << "\n";
  if (!s.aliases.empty()) {
    std::cout << "Aliases: ";
    for (std::size_t i = 0; i < s.aliases.size(); ++i) {
      if (i) std::cout << ", ";
      std::cout << s.aliases[i];
    }
    std::cout << "\n";
  }
  std::cout << "Description: " << s.description << "\n";
  std::cout << "Availability: " << s.availability_note << "\n";
  return kExitAccepted;
}

int run_repl(const CliConfig& cfg) {
  KnowledgeBase kb = KnowledgeBase::load_file(cfg.kb_path);
  PipelineConfig pc = make_pipeline_config(cfg);
  std::unique_ptr<LlmBackend> backend = make_backend(cfg);

  std::cerr << "sense repl; :history lists inquiries, :quit leaves\n";
  std::vector<std::string> history;
  std::string line;
  while (true) {
    std::cerr << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    std::string text = trim(line);
    if (text.empty()) continue;
    if (text == ":quit") break;
    if (text == ":history") {
      for (std::size_t i = 0; i < history.size(); ++i) {
        std::cout << (i + 1) << ". " << history[i] << "\n";
      }
      continue;
    }
    Inquiry inquiry = Inquiry::from(text);
    history.push_back(inquiry.normalized_text);
    try {
      RunRecord record = generate_strategy(inquiry, pc, kb, *backend);
      if (!cfg.store.empty()) {
        std::string path = persist_run(record, cfg.store);
        std::cerr << "stored " << path << "\n";
      }
      report_run(record, cfg, kb);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
    }
  }
  return kExitAccepted;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mobile sensing strategy generator"};
  app.require_subcommand(1);

  CliConfig cfg;
  std::string inquiry_arg;
  std::string validate_file;
  std::string show_name;

  CLI::App* generate = app.add_subcommand("generate", "Generate a strategy for an inquiry");
  add_common_options(generate, cfg);
  generate->add_option("inquiry", inquiry_arg, "Research inquiry (reads stdin when omitted)");

  CLI::App* validate = app.add_subcommand("validate", "Check a strategy file against the rules");
  add_common_options(validate, cfg);
  validate->add_option("file", validate_file, "Strategy file")->required();

  CLI::App* kb_cmd = app.add_subcommand("kb", "Inspect the knowledge base");
  add_common_options(kb_cmd, cfg);
  kb_cmd->require_subcommand(1);
  CLI::App* kb_list = kb_cmd->add_subcommand("list", "List sensors by category");
  CLI::App* kb_show = kb_cmd->add_subcommand("show", "Show one sensor");
  kb_show->add_option("name", show_name, "Sensor name")->required();

  CLI::App* repl = app.add_subcommand("repl", "Interactive inquiry session");
  add_common_options(repl, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (generate->parsed()) return run_generate(cfg, inquiry_arg);
    if (validate->parsed()) return run_validate(cfg, validate_file);
    if (kb_cmd->parsed()) {
      if (kb_list->parsed()) return run_kb_list(cfg);
      if (kb_show->parsed()) return run_kb_show(cfg, show_name);
    }
    if (repl->parsed()) return run_repl(cfg);
  } catch (const LlmError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const StoreError& e) {
    std::cerr << "store error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
