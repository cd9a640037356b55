#include "sense/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sense/digest.hpp"
#include "sense/strings.hpp"

namespace sense {

namespace {

using ojson = nlohmann::ordered_json;

constexpr StepKind kStepOrder[kStepCount] = {StepKind::Extract, StepKind::Represent,
                                             StepKind::Features, StepKind::Data, StepKind::Model};

int step_index(StepKind step) {
  for (int i = 0; i < kStepCount; ++i) {
    if (kStepOrder[i] == step) return i;
  }
  return -1;
}

std::string iso_utc_now() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()) % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char date[24];
  std::strftime(date, sizeof date, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[32];
  std::snprintf(out, sizeof out, "%s.%03dZ", date, static_cast<int>(ms.count()));
  return out;
}

LlmRequest make_request(const PipelineConfig& config, const Prompt& prompt) {
  LlmRequest req;
  req.model_name = config.model_name;
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  req.messages = {{Role::System, prompt.system_text()}, {Role::User, prompt.user_text()}};
  return req;
}

// Parse failures about names the knowledge base does not know become
// validator-style entries so the repair prompt can cite the usual rules.
ValidationReport synthesize_report(const std::vector<ParseDiagnostic>& diagnostics) {
  ValidationReport report;
  std::set<std::string> seen;
  for (const auto& d : diagnostics) {
    if (d.severity != Severity::Error) continue;
    if (d.code == "unknown-sensor" && seen.insert("s:" + d.subject).second) {
      report.violations.push_back({ViolationCode::V1UnknownSensor, d.subject, d.message});
    } else if (d.code == "unknown-metric" && seen.insert("m:" + d.subject).second) {
      report.violations.push_back({ViolationCode::V3UnknownMetric, d.subject, d.message});
    }
  }
  return report;
}

std::string attempt_feedback(const ValidationReport& report,
                             const std::vector<ParseDiagnostic>& diagnostics,
                             const KnowledgeBase& kb) {
  std::string out;
  if (!report.violations.empty()) out += violation_feedback_text(report, kb);
  for (const auto& d : diagnostics) {
    if (d.severity != Severity::Error) continue;
    if (d.code == "unknown-sensor" || d.code == "unknown-metric") continue;
    out += "- [parse:" + d.code + "] " + d.location + ": " + d.message + "\n";
  }
  if (out.empty()) out = "- the reply carried no usable strategy block\n";
  return out;
}

void validate_config(const PipelineConfig& config) {
  if (config.max_repairs < 0 || config.max_repairs > 5) {
    throw ConfigError("max_repairs must be between 0 and 5");
  }
  if (trim(config.rules_text).empty()) {
    throw ConfigError("pipeline config needs non-empty rules text");
  }
  if (config.max_tokens <= 0 || config.temperature < 0.0 || config.temperature > 2.0) {
    throw ConfigError("completion parameters out of range");
  }
}

std::string snapshot_json(const ConfigSnapshot& c);

std::string make_run_id(const Inquiry& inquiry, const ConfigSnapshot& config,
                        const std::string& started_at) {
  static std::atomic<unsigned long long> counter{0};
  const std::string material = inquiry.normalized_text + "\n" + snapshot_json(config) + "\n" +
                               started_at + "\n" + std::to_string(counter.fetch_add(1));
  return sha256_hex(material).substr(0, 16);
}

// ---- lenient fragment readers for the per-step mode ----

class FragmentReader {
 public:
  FragmentReader(StepState& state, std::string step_name)
      : state_(state), step_name_(std::move(step_name)) {}

  void error(const std::string& location, const std::string& message) {
    state_.diagnostics.push_back(
        {Severity::Error, "bad-fragment", step_name_ + ":" + location, message, ""});
  }

  std::string str(const ojson& obj, const char* key) {
    if (auto it = obj.find(key); it != obj.end() && it->is_string()) return it->get<std::string>();
    return {};
  }

  std::vector<std::string> str_array(const ojson& value) {
    std::vector<std::string> out;
    if (!value.is_array()) return out;
    for (const auto& v : value) {
      if (v.is_string()) out.push_back(v.get<std::string>());
    }
    return out;
  }

 private:
  StepState& state_;
  std::string step_name_;
};

void read_extract(const ojson& doc, StepState& state, FragmentReader& r) {
  state.objective = r.str(doc, "objective");
  if (trim(state.objective).empty()) r.error("objective", "step produced no objective");
  if (auto level = behavior_level_from(r.str(doc, "level"))) {
    state.level = *level;
  } else {
    r.error("level", "step produced no usable behavior level");
  }
}

void read_represent(const ojson& doc, StepState& state, FragmentReader& r) {
  auto it = doc.find("behaviors");
  if (it == doc.end() || !it->is_object()) {
    r.error("behaviors", "step produced no behaviors object");
    return;
  }
  BehaviorDecomposition d;
  d.root_id = r.str(*it, "root");
  if (auto nodes = it->find("nodes"); nodes != it->end() && nodes->is_array()) {
    for (const auto& jn : *nodes) {
      if (!jn.is_object()) continue;
      BehaviorNode n;
      n.id = r.str(jn, "id");
      n.label = r.str(jn, "label");
      if (auto level = behavior_level_from(r.str(jn, "level"))) n.level = *level;
      if (auto hints = jn.find("sensors"); hints != jn.end()) {
        n.sensor_hints = r.str_array(*hints);
      }
      d.nodes.push_back(std::move(n));
    }
  }
  if (auto edges = it->find("edges"); edges != it->end() && edges->is_array()) {
    for (const auto& je : *edges) {
      if (je.is_array() && je.size() == 2 && je[0].is_string() && je[1].is_string()) {
        d.edges.emplace_back(je[0].get<std::string>(), je[1].get<std::string>());
      }
    }
  }
  if (d.nodes.empty()) r.error("behaviors.nodes", "step produced no behavior nodes");
  state.decomposition = std::move(d);
}

void read_features(const ojson& doc, StepState& state, FragmentReader& r) {
  auto it = doc.find("features");
  if (it == doc.end() || !it->is_array() || it->empty()) {
    r.error("features", "step produced no features");
    return;
  }
  for (const auto& jf : *it) {
    if (!jf.is_object()) continue;
    FeatureSpec f;
    if (auto m = jf.find("metric"); m != jf.end() && m->is_object()) {
      if (auto cat = metric_category_from(r.str(*m, "category"))) f.metric.category = *cat;
      f.metric.name = r.str(*m, "name");
    }
    if (auto t = jf.find("time_span"); t != jf.end() && t->is_object()) {
      if (auto kind = time_span_kind_from(r.str(*t, "kind"))) f.time_span.kind = *kind;
      f.time_span.expression = r.str(*t, "expression");
    }
    f.behavior_id = r.str(jf, "behavior");
    state.features.push_back(std::move(f));
  }
}

void read_data(const ojson& doc, StepState& state, FragmentReader& r) {
  auto it = doc.find("data_sources");
  if (it == doc.end() || !it->is_object()) {
    r.error("data_sources", "step produced no data_sources object");
    return;
  }
  if (auto sensors = it->find("sensors"); sensors != it->end()) {
    state.data_sources.sensors = r.str_array(*sensors);
  }
  if (state.data_sources.sensors.empty()) {
    r.error("data_sources.sensors", "step selected no sensors");
  }
  if (auto just = it->find("justification"); just != it->end() && just->is_object()) {
    for (const auto& [key, value] : just->items()) {
      state.data_sources.justification.emplace_back(key, r.str_array(value));
    }
  }
}

void read_model(const ojson& doc, StepState& state, FragmentReader& r) {
  if (auto m = doc.find("model"); m != doc.end() && m->is_object()) {
    state.model.model_name = r.str(*m, "name");
    if (auto task = task_kind_from(r.str(*m, "task"))) state.model.task_kind = *task;
    state.model.rationale = r.str(*m, "rationale");
  } else {
    r.error("model", "step produced no model object");
  }
  if (auto p = doc.find("performance"); p != doc.end() && p->is_object()) {
    if (auto tier = performance_tier_from(r.str(*p, "tier"))) state.performance.tier = *tier;
    state.performance.rationale = r.str(*p, "rationale");
    if (trim(state.performance.rationale).empty()) {
      r.error("performance.rationale", "step produced no performance rationale");
    }
  } else {
    r.error("performance", "step produced no performance object");
  }
}

std::string prose_before_fence(const std::string& completion) {
  const auto fence = completion.find("```");
  std::string prose = fence == std::string::npos ? completion : completion.substr(0, fence);
  return trim(prose);
}

}  // namespace

std::string_view to_string(StepMode mode) {
  return mode == StepMode::SingleShot ? "single" : "per-step";
}

std::optional<StepMode> step_mode_from(std::string_view s) {
  const std::string folded = casefold(trim(s));
  if (folded == "single" || folded == "singleshot" || folded == "single-shot") {
    return StepMode::SingleShot;
  }
  if (folded == "per-step" || folded == "perstep") return StepMode::PerStep;
  return std::nullopt;
}

std::string_view to_string(RunOutcome outcome) {
  switch (outcome) {
    case RunOutcome::Accepted: return "accepted";
    case RunOutcome::RejectedAfterRepairs: return "rejected-after-repairs";
    case RunOutcome::BackendFailure: return "backend-failure";
  }
  return "?";
}

std::optional<RunOutcome> run_outcome_from(std::string_view s) {
  for (RunOutcome o : {RunOutcome::Accepted, RunOutcome::RejectedAfterRepairs,
                       RunOutcome::BackendFailure}) {
    if (s == to_string(o)) return o;
  }
  return std::nullopt;
}

ConfigSnapshot ConfigSnapshot::of(const PipelineConfig& config) {
  ConfigSnapshot snap;
  snap.max_repairs = config.max_repairs;
  snap.step_mode = config.step_mode;
  snap.model_name = config.model_name;
  snap.temperature = config.temperature;
  snap.max_tokens = config.max_tokens;
  snap.backend_kind = config.backend_kind;
  snap.rules_version = config.rules_version;
  for (const auto& e : config.examples) snap.example_inquiries.push_back(e.inquiry);
  return snap;
}

void run_step(StepKind step, StepState& state, const PipelineConfig& config,
              const KnowledgeBase& kb, LlmBackend& backend) {
  const int index = step_index(step);
  if (state.completed.count(step)) {
    throw StepOrderError("step '" + std::string(to_string(step)) + "' already ran");
  }
  for (int i = 0; i < index; ++i) {
    if (!state.completed.count(kStepOrder[i])) {
      throw StepOrderError("step '" + std::string(to_string(step)) + "' needs step '" +
                           std::string(to_string(kStepOrder[i])) + "' first");
    }
  }

  Prompt prompt = build_prompt(config.rules_text, config.examples, state.inquiry,
                               StepScope::single(step, state.fragment_context));
  const std::string marker =
      "=== step " + std::to_string(index + 1) + " (" + std::string(step_title(step)) + ") ===\n";
  state.prompts_text += marker + prompt.rendered() + "\n";

  LlmResponse response = complete(backend, make_request(config, prompt));
  state.completions_text += marker + response.text + "\n";

  StepTrace trace;
  trace.step = step;
  trace.reasoning_text = prose_before_fence(response.text);
  trace.raw_completion_ref = "attempt-1/step-" + std::to_string(index + 1);
  state.traces.push_back(trace);

  FragmentReader reader(state, std::string(to_string(step)));
  ExtractedBlock block = extract_structured_block(response.text);
  for (auto& d : block.diagnostics) state.diagnostics.push_back(d);
  if (!block.body) {
    state.diagnostics.push_back({Severity::Error, "missing-block",
                                 std::string(to_string(step)),
                                 "step completion carries no ```strategy block", ""});
  } else {
    ojson doc;
    try {
      doc = ojson::parse(*block.body);
      if (!doc.is_object()) {
        reader.error("$", "fragment must be a JSON object");
      } else {
        switch (step) {
          case StepKind::Extract: read_extract(doc, state, reader); break;
          case StepKind::Represent: read_represent(doc, state, reader); break;
          case StepKind::Features: read_features(doc, state, reader); break;
          case StepKind::Data: read_data(doc, state, reader); break;
          case StepKind::Model: read_model(doc, state, reader); break;
        }
        state.fragment_context += "Step " + std::to_string(index + 1) + " (" +
                                  std::string(step_title(step)) + "):\n```strategy\n" +
                                  *block.body + "\n```\n";
      }
    } catch (const ojson::parse_error& e) {
      reader.error("$", std::string("fragment is not valid JSON: ") + e.what());
    }
  }

  state.completed.insert(step);
  (void)kb;
}

SensingStrategy assemble_strategy(const StepState& state) {
  SensingStrategy s;
  s.inquiry = state.inquiry;
  s.objective = state.objective;
  s.level = state.level;
  s.decomposition = state.decomposition;
  s.features = state.features;
  for (auto& f : s.features) f.display_name = feature_display_name(f, s.decomposition);
  s.data_sources = state.data_sources;
  s.model = state.model;
  s.performance = state.performance;
  s.reasoning = state.traces;
  return s;
}

namespace {

bool has_parse_errors(const std::vector<ParseDiagnostic>& diagnostics) {
  for (const auto& d : diagnostics) {
    if (d.severity == Severity::Error) return true;
  }
  return false;
}

}  // namespace

RunRecord generate_strategy(const Inquiry& inquiry, const PipelineConfig& config,
                            const KnowledgeBase& kb, LlmBackend& backend) {
  validate_config(config);
  if (inquiry.normalized_text.empty()) throw ConfigError("inquiry must not be empty");

  RunRecord record;
  record.inquiry = inquiry;
  record.config = ConfigSnapshot::of(config);
  record.started_at = iso_utc_now();
  record.run_id = make_run_id(inquiry, record.config, record.started_at);

  const Prompt base_prompt = build_prompt(config.rules_text, config.examples, inquiry);
  Prompt current_prompt = base_prompt;
  const int max_attempts = 1 + config.max_repairs;

  for (int attempt_no = 1; attempt_no <= max_attempts; ++attempt_no) {
    Attempt attempt;
    std::optional<SensingStrategy> parsed;

    try {
      if (attempt_no == 1 && config.step_mode == StepMode::PerStep) {
        StepState state;
        state.inquiry = inquiry;
        try {
          for (StepKind step : kStepOrder) run_step(step, state, config, kb, backend);
        } catch (const LlmError& e) {
          attempt.prompt_text = state.prompts_text;
          attempt.raw_completion = state.completions_text;
          attempt.diagnostics = state.diagnostics;
          record.attempts.push_back(std::move(attempt));
          record.outcome = RunOutcome::BackendFailure;
          record.error_message = e.what();
          record.finished_at = iso_utc_now();
          return record;
        }
        attempt.prompt_text = state.prompts_text;
        attempt.diagnostics = state.diagnostics;
        if (has_parse_errors(state.diagnostics)) {
          attempt.raw_completion = state.completions_text;
        } else {
          // Re-run the assembled document through the normal parse path so
          // sensor/metric names get the same normalization treatment.
          const std::string assembled =
              "```strategy\n" + encode_canonical(assemble_strategy(state)) + "\n```";
          attempt.raw_completion = assembled;
          DecodeResult result = parse_llm_strategy(assembled, kb);
          for (const auto& d : result.diagnostics) attempt.diagnostics.push_back(d);
          parsed = std::move(result.strategy);
        }
      } else {
        attempt.prompt_text = current_prompt.rendered();
        LlmResponse response = complete(backend, make_request(config, current_prompt));
        attempt.raw_completion = response.text;
        DecodeResult result = parse_llm_strategy(response.text, kb);
        attempt.diagnostics = std::move(result.diagnostics);
        parsed = std::move(result.strategy);
      }
    } catch (const LlmError& e) {
      record.attempts.push_back(std::move(attempt));
      record.outcome = RunOutcome::BackendFailure;
      record.error_message = e.what();
      record.finished_at = iso_utc_now();
      return record;
    }

    if (parsed) {
      attempt.report = validate_strategy(*parsed, kb);
    } else {
      attempt.report = synthesize_report(attempt.diagnostics);
    }

    if (parsed && attempt.report.passed()) {
      SensingStrategy accepted = std::move(*parsed);
      accepted.inquiry = inquiry;
      const std::string ref = "attempt-" + std::to_string(attempt_no);
      for (auto& t : accepted.reasoning) {
        if (t.raw_completion_ref.empty()) t.raw_completion_ref = ref;
      }
      record.canonical_strategy = encode_canonical(accepted);
      record.strategy = std::move(accepted);
      record.attempts.push_back(std::move(attempt));
      record.outcome = RunOutcome::Accepted;
      record.finished_at = iso_utc_now();
      return record;
    }

    attempt.feedback_text = attempt_feedback(attempt.report, attempt.diagnostics, kb);
    const std::string raw = attempt.raw_completion;
    const std::string feedback = attempt.feedback_text;
    record.attempts.push_back(std::move(attempt));

    if (attempt_no < max_attempts) {
      current_prompt = repair_prompt(attempt_no == 1 ? base_prompt : current_prompt, raw, feedback);
    }
  }

  record.outcome = RunOutcome::RejectedAfterRepairs;
  record.finished_at = iso_utc_now();
  return record;
}

// ---- run record (de)serialization ----

namespace {

std::optional<ViolationCode> violation_code_from(std::string_view s) {
  for (ViolationCode c :
       {ViolationCode::V1UnknownSensor, ViolationCode::V2IncompleteFeature,
        ViolationCode::V3UnknownMetric, ViolationCode::V4MalformedTimespan,
        ViolationCode::V5UnknownModel, ViolationCode::V6LevelInversion,
        ViolationCode::V7UnanchoredFeature, ViolationCode::V8UncoveredFeature}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

ojson diagnostics_to_json(const std::vector<ParseDiagnostic>& diagnostics) {
  ojson out = ojson::array();
  for (const auto& d : diagnostics) {
    out.push_back({{"severity", d.severity == Severity::Error ? "error" : "warning"},
                   {"code", d.code},
                   {"location", d.location},
                   {"message", d.message},
                   {"subject", d.subject}});
  }
  return out;
}

std::vector<ParseDiagnostic> diagnostics_from_json(const ojson& arr) {
  std::vector<ParseDiagnostic> out;
  for (const auto& jd : arr) {
    ParseDiagnostic d;
    d.severity = jd.value("severity", "error") == "warning" ? Severity::Warning : Severity::Error;
    d.code = jd.value("code", "");
    d.location = jd.value("location", "");
    d.message = jd.value("message", "");
    d.subject = jd.value("subject", "");
    out.push_back(std::move(d));
  }
  return out;
}

ojson snapshot_to_json(const ConfigSnapshot& c) {
  ojson out;
  out["max_repairs"] = c.max_repairs;
  out["step_mode"] = to_string(c.step_mode);
  out["model_name"] = c.model_name;
  out["temperature"] = c.temperature;
  out["max_tokens"] = c.max_tokens;
  out["backend"] = c.backend_kind;
  out["rules_version"] = c.rules_version;
  out["example_inquiries"] = c.example_inquiries;
  return out;
}

std::string snapshot_json(const ConfigSnapshot& c) { return snapshot_to_json(c).dump(); }

ConfigSnapshot snapshot_from_json(const ojson& j) {
  ConfigSnapshot c;
  c.max_repairs = j.value("max_repairs", 2);
  if (auto mode = step_mode_from(j.value("step_mode", "single"))) c.step_mode = *mode;
  c.model_name = j.value("model_name", "");
  c.temperature = j.value("temperature", 0.2);
  c.max_tokens = j.value("max_tokens", 2048);
  c.backend_kind = j.value("backend", "");
  c.rules_version = j.value("rules_version", "");
  if (j.contains("example_inquiries")) {
    for (const auto& v : j["example_inquiries"]) {
      if (v.is_string()) c.example_inquiries.push_back(v.get<std::string>());
    }
  }
  return c;
}

}  // namespace

std::string run_record_to_json(const RunRecord& record) {
  ojson out;
  out["run_id"] = record.run_id;
  out["inquiry"] = {{"raw", record.inquiry.raw_text},
                    {"normalized", record.inquiry.normalized_text}};
  out["config"] = snapshot_to_json(record.config);
  ojson attempts = ojson::array();
  for (const auto& a : record.attempts) {
    ojson report = ojson::array();
    for (const auto& v : a.report.violations) {
      report.push_back({{"code", std::string(to_string(v.code))},
                        {"subject", v.subject},
                        {"detail", v.detail}});
    }
    attempts.push_back({{"prompt", a.prompt_text},
                        {"completion", a.raw_completion},
                        {"diagnostics", diagnostics_to_json(a.diagnostics)},
                        {"report", std::move(report)},
                        {"feedback", a.feedback_text}});
  }
  out["attempts"] = std::move(attempts);
  out["outcome"] = to_string(record.outcome);
  if (!record.canonical_strategy.empty()) out["strategy"] = record.canonical_strategy;
  if (!record.error_message.empty()) out["error"] = record.error_message;
  out["started_at"] = record.started_at;
  out["finished_at"] = record.finished_at;
  return out.dump(2);
}

RunRecord run_record_from_json(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw StoreError(StoreError::Kind::Io, std::string("run record is not valid JSON: ") + e.what());
  }
  RunRecord record;
  record.run_id = doc.value("run_id", "");
  if (doc.contains("inquiry")) {
    record.inquiry.raw_text = doc["inquiry"].value("raw", "");
    record.inquiry.normalized_text = doc["inquiry"].value("normalized", "");
  }
  if (doc.contains("config")) record.config = snapshot_from_json(doc["config"]);
  if (doc.contains("attempts")) {
    for (const auto& ja : doc["attempts"]) {
      Attempt a;
      a.prompt_text = ja.value("prompt", "");
      a.raw_completion = ja.value("completion", "");
      if (ja.contains("diagnostics")) a.diagnostics = diagnostics_from_json(ja["diagnostics"]);
      if (ja.contains("report")) {
        for (const auto& jv : ja["report"]) {
          Violation v;
          auto code = violation_code_from(jv.value("code", ""));
          if (!code) {
            throw StoreError(StoreError::Kind::Io,
                             "run record carries unknown violation code '" +
                                 jv.value("code", "") + "'");
          }
          v.code = *code;
          v.subject = jv.value("subject", "");
          v.detail = jv.value("detail", "");
          a.report.violations.push_back(std::move(v));
        }
      }
      a.feedback_text = ja.value("feedback", "");
      record.attempts.push_back(std::move(a));
    }
  }
  if (auto outcome = run_outcome_from(doc.value("outcome", ""))) {
    record.outcome = *outcome;
  } else {
    throw StoreError(StoreError::Kind::Io, "run record carries an unknown outcome");
  }
  record.canonical_strategy = doc.value("strategy", "");
  if (!record.canonical_strategy.empty()) {
    DecodeResult decoded = decode_canonical(record.canonical_strategy);
    if (!decoded.ok()) {
      throw StoreError(StoreError::Kind::Io, "run record strategy does not decode");
    }
    record.strategy = std::move(decoded.strategy);
  }
  record.error_message = doc.value("error", "");
  record.started_at = doc.value("started_at", "");
  record.finished_at = doc.value("finished_at", "");
  return record;
}

std::string persist_run(const RunRecord& record, const std::string& store_path) {
  namespace fs = std::filesystem;
  if (record.run_id.empty()) throw StoreError(StoreError::Kind::Io, "run record has no run_id");
  const fs::path dir = fs::path(store_path) / record.run_id;
  const fs::path target = dir / "record.json";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw StoreError(StoreError::Kind::Io,
                     "cannot create '" + dir.string() + "': " + ec.message());
  }
  if (fs::exists(target)) {
    throw StoreError(StoreError::Kind::Conflict,
                     "run '" + record.run_id + "' already exists at " + target.string());
  }
  const fs::path tmp = dir / "record.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError(StoreError::Kind::Io, "cannot write '" + tmp.string() + "'");
    out << run_record_to_json(record);
    if (!out.flush()) throw StoreError(StoreError::Kind::Io, "cannot flush '" + tmp.string() + "'");
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    throw StoreError(StoreError::Kind::Io,
                     "cannot move record into place: " + ec.message());
  }
  return target.string();
}

RunRecord load_run(const std::string& store_path, const std::string& run_id) {
  namespace fs = std::filesystem;
  const fs::path target = fs::path(store_path) / run_id / "record.json";
  std::ifstream in(target, std::ios::binary);
  if (!in) {
    throw StoreError(StoreError::Kind::Io, "no run record at '" + target.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_record_from_json(buf.str());
}

}  // namespace sense
