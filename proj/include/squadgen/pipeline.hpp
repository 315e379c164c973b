#pragma once

// End-to-end orchestration used by the CLI: configuration, run
// manifests, and the generate / mix / evaluate / report / stats stages.
// All artifacts of a run land under <output_dir>/<config_digest>/ so a
// rerun with the same config overwrites (and must reproduce) the same
// files.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "squadgen/backend.hpp"
#include "squadgen/context_generation.hpp"
#include "squadgen/dataset_mixer.hpp"
#include "squadgen/eval_metrics.hpp"
#include "squadgen/errors.hpp"
#include "squadgen/hashing.hpp"
#include "squadgen/http_transport.hpp"
#include "squadgen/jsonl.hpp"
#include "squadgen/qa_synthesis.hpp"
#include "squadgen/report.hpp"
#include "squadgen/squad_data.hpp"

namespace squadgen {

enum ExitCode {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInput = 3,
  kExitBackend = 4,
  kExitInternal = 5,
};

struct FilterConfig {
  FilterCriterion criterion;
  bool hard_fail = false;
};

struct PipelineConfig {
  std::string input_dataset;      // seed source for generate
  std::string real_dataset;       // mix: real side
  std::string generated_dataset;  // mix: generated pool
  std::string output_dir = "runs";
  uint64_t run_seed = 0;
  std::string prompt_template = kDefaultPromptTemplate;
  size_t max_context_words = kDefaultMaxContextWords;
  size_t max_pairs_per_context = 10;
  FilterConfig filter;
  std::map<std::string, BackendConfig> backends;  // keyed by role name
  std::string replay_fixture;
  bool strict_replay = true;
  MixSpec mix;
  ReportFormat report_format = ReportFormat::markdown;
  bool resume = false;
  bool lenient = false;

  nlohmann::json raw = nlohmann::json::object();  // as loaded + overrides
};

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  c.raw = j;
  c.input_dataset = j.value("input_dataset", "");
  c.real_dataset = j.value("real_dataset", "");
  c.generated_dataset = j.value("generated_dataset", "");
  c.output_dir = j.value("output_dir", "runs");
  c.run_seed = j.value("run_seed", uint64_t{0});
  c.prompt_template = j.value("prompt_template", kDefaultPromptTemplate);
  c.max_context_words =
      j.value("max_context_words", kDefaultMaxContextWords);
  c.max_pairs_per_context = j.value("max_pairs_per_context", size_t{10});
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    const std::string kind = f.value("criterion", "exact");
    if (kind == "exact") {
      c.filter.criterion.kind = FilterCriterion::Kind::exact;
    } else if (kind == "f1_threshold") {
      c.filter.criterion.kind = FilterCriterion::Kind::f1_threshold;
      c.filter.criterion.tau = f.value("tau", 0.8);
    } else {
      throw ConfigError("unknown filter criterion: " + kind);
    }
    c.filter.hard_fail = f.value("hard_fail", false);
  }
  if (j.contains("backends"))
    for (const auto& [name, bj] : j.at("backends").items())
      c.backends[name] = backend_config_from_json(bj, role_from_name(name));
  c.replay_fixture = j.value("replay_fixture", "");
  c.strict_replay = j.value("strict_replay", true);
  if (j.contains("mix")) c.mix = mix_spec_from_json(j.at("mix"));
  c.report_format =
      report_format_from_name(j.value("report_format", "markdown"));
  c.lenient = j.value("lenient", false);
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return pipeline_config_from_json(j);
}

// Digest over the effective config JSON; the run directory is named by
// it, so identical configs map to identical run directories.
inline std::string config_digest(const PipelineConfig& c) {
  return json_digest(c.raw).substr(0, 12);
}

struct RunManifest {
  std::string config_digest;
  std::map<std::string, std::string> input_digests;
  std::map<std::string, size_t> counts;
  std::map<std::string, double> stage_seconds;
  std::string error;  // set when a stage aborted

  nlohmann::json to_json() const {
    return {{"config_digest", config_digest},
            {"input_digests", input_digests},
            {"counts", counts},
            {"stage_seconds", stage_seconds},
            {"error", error}};
  }
};

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write: " + path);
  out << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class StageTimer {
 public:
  explicit StageTimer(RunManifest& m, std::string name)
      : manifest_(m), name_(std::move(name)),
        t0_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    manifest_.stage_seconds[name_] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
            .count();
  }

 private:
  RunManifest& manifest_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

inline std::string run_dir(const PipelineConfig& cfg) {
  const auto dir =
      std::filesystem::path(cfg.output_dir) / config_digest(cfg);
  std::filesystem::create_directories(dir);
  return dir.string();
}

// Builds a client for one role. A replay fixture (config or --replay)
// overrides whatever adapter the role config names, so any run can be
// replayed offline without editing backends.
inline BackendClient make_client(const PipelineConfig& cfg, Role role) {
  const std::string name = role_name(role);
  BackendConfig bc;
  auto it = cfg.backends.find(name);
  if (it != cfg.backends.end()) bc = it->second;
  bc.role = role;
  if (!cfg.replay_fixture.empty() || bc.adapter == AdapterKind::replay) {
    if (cfg.replay_fixture.empty())
      throw ConfigError("replay adapter for role '" + name +
                        "' but no replay fixture configured");
    auto fixture = ReplayFixture::load(cfg.replay_fixture, cfg.strict_replay);
    return BackendClient(bc, std::make_shared<ReplayTransport>(
                                 std::move(fixture)));
  }
  if (bc.endpoint_url.empty())
    throw ConfigError("backend '" + name + "' has no endpoint_url");
  return BackendClient(bc, make_http_transport(bc));
}

struct GenerateResult {
  QaDataset dataset;
  RunManifest manifest;
  std::string dataset_path;
  std::string provenance_path;
  std::string decisions_path;
  std::string manifest_path;
};

inline GenerateResult cmd_generate(const PipelineConfig& cfg) {
  if (cfg.input_dataset.empty())
    throw ConfigError("generate: input_dataset not set");
  if (!std::filesystem::exists(cfg.input_dataset))
    throw ConfigError("generate: input dataset not found: " +
                      cfg.input_dataset);
  if (!cfg.replay_fixture.empty() &&
      !std::filesystem::exists(cfg.replay_fixture))
    throw ConfigError("generate: replay fixture not found: " +
                      cfg.replay_fixture);

  GenerateResult result;
  auto& manifest = result.manifest;
  manifest.config_digest = config_digest(cfg);
  manifest.input_digests["input_dataset"] = file_digest(cfg.input_dataset);

  const std::string dir = run_dir(cfg);
  result.dataset_path = dir + "/generated.json";
  result.provenance_path = dir + "/provenance.jsonl";
  result.decisions_path = dir + "/decisions.jsonl";
  result.manifest_path = dir + "/manifest.json";

  auto abort_with = [&](const std::string& what) {
    manifest.error = what;
    write_text_file(result.manifest_path, manifest.to_json().dump(1) + "\n");
  };

  try {
    // Stage 1: seed sampling.
    std::vector<SeedQuestion> seeds;
    {
      StageTimer t(manifest, "sample_seeds");
      std::vector<std::string> warnings;
      const auto input = load_dataset_file(
          cfg.input_dataset, ParseOptions{cfg.lenient}, &warnings);
      seeds = sample_seed_questions(input, cfg.run_seed);
    }
    manifest.counts["seeds"] = seeds.size();

    // Resume: reuse successful records already in the provenance stream.
    std::map<std::string, GenerationRecord> prior;
    bool append_provenance = false;
    if (cfg.resume && std::filesystem::exists(result.provenance_path)) {
      append_provenance = true;
      for (const auto& j : read_jsonl(result.provenance_path)) {
        auto r = generation_record_from_json(j);
        if (r.ok()) prior[r.backend_fingerprint] = std::move(r);
      }
    }

    // Stage 2: context generation.
    std::vector<GenerationRecord> records;
    {
      StageTimer t(manifest, "generate_contexts");
      std::vector<SeedQuestion> pending;
      std::vector<std::optional<GenerationRecord>> slots(seeds.size());
      GenerateContextsOptions opts{cfg.prompt_template, cfg.max_context_words};
      for (size_t i = 0; i < seeds.size(); ++i) {
        const auto fp = request_fingerprint(
            role_name(Role::llm),
            BackendClient::llm_request(
                build_prompt(seeds[i].qa.question, cfg.prompt_template)));
        auto it = prior.find(fp);
        if (it != prior.end()) {
          slots[i] = it->second;
        } else {
          pending.push_back(seeds[i]);
        }
      }
      std::vector<GenerationRecord> fresh;
      if (!pending.empty()) {
        JsonlWriter provenance(result.provenance_path, append_provenance);
        const auto llm = make_client(cfg, Role::llm);
        fresh = generate_contexts(pending, llm, cfg.run_seed, &provenance,
                                  opts);
      } else if (!append_provenance) {
        // Truncate so an empty run still leaves a (empty) stream behind.
        JsonlWriter provenance(result.provenance_path);
      }
      size_t next_fresh = 0;
      for (size_t i = 0; i < seeds.size(); ++i) {
        records.push_back(slots[i] ? std::move(*slots[i])
                                   : std::move(fresh[next_fresh++]));
      }
    }
    size_t contexts_ok = 0;
    for (const auto& r : records) contexts_ok += r.ok();
    manifest.counts["contexts_ok"] = contexts_ok;
    // Individual failures are tolerated (the error records make the run
    // resumable), but a run where every call failed has nothing to show
    // and must not masquerade as success.
    if (!records.empty() && contexts_ok == 0)
      throw BackendError("all " + std::to_string(records.size()) +
                         " context generations failed; first error: " +
                         records.front().error);

    // Stage 3: question generation.
    std::vector<CandidatePair> candidates;
    std::map<std::string, std::string> contexts;
    {
      StageTimer t(manifest, "generate_questions");
      std::vector<size_t> rec_index;
      std::vector<nlohmann::json> requests;
      for (size_t i = 0; i < records.size(); ++i) {
        if (!records[i].ok() || records[i].clipped_context.empty()) continue;
        contexts[records[i].seed_question_id] = records[i].clipped_context;
        rec_index.push_back(i);
        requests.push_back(
            BackendClient::qg_request(records[i].clipped_context));
      }
      std::vector<Outcome<BackendResponse>> results;
      if (!requests.empty()) {
        const auto qg = make_client(cfg, Role::qg);
        results = run_batch(qg, requests);
      }
      for (size_t k = 0; k < rec_index.size(); ++k) {
        const auto& rec = records[rec_index[k]];
        if (!results[k].ok()) continue;  // record already carries context
        const auto& payload = results[k].value->payload;
        if (!payload.contains("pairs") || !payload.at("pairs").is_array())
          continue;
        for (const auto& p : payload.at("pairs")) {
          CandidatePair cand;
          cand.context_ref = rec.seed_question_id;
          cand.question = p.value("question", "");
          cand.answer_text = p.value("answer", "");
          if (!text::trim(cand.answer_text).empty()) {
            const auto aligned = align_answer_span(rec.clipped_context,
                                                   cand.answer_text);
            cand.aligned_span = aligned.span;
            cand.case_fallback = aligned.case_fallback;
            cand.occurrence_count = aligned.occurrence_count;
          }
          candidates.push_back(std::move(cand));
        }
      }
    }
    manifest.counts["candidates"] = candidates.size();

    // Stage 4: round-trip filter + assembly.
    std::vector<FilterDecision> decisions;
    {
      StageTimer t(manifest, "roundtrip_filter");
      if (!candidates.empty()) {
        const auto reader = make_client(cfg, Role::reader);
        decisions = roundtrip_filter(candidates, contexts, reader,
                                     cfg.filter.criterion, nullptr,
                                     {cfg.filter.hard_fail});
      }
    }
    {
      StageTimer t(manifest, "assemble");
      std::vector<FilterDecision> extra_drops;
      result.dataset = assemble_generated_dataset(
          records, decisions, {cfg.max_pairs_per_context}, &extra_drops);
      JsonlWriter decision_log(result.decisions_path);
      for (const auto& d : decisions)
        decision_log.write(filter_decision_to_json(d));
      for (const auto& d : extra_drops)
        decision_log.write(filter_decision_to_json(d));
      size_t kept = 0;
      for (const auto& d : decisions) kept += d.keep;
      manifest.counts["kept"] = kept - extra_drops.size();
    }
    manifest.counts["assembled_qas"] = dataset_stats(result.dataset).num_qas;

    write_text_file(result.dataset_path, serialize_dataset(result.dataset));
    write_text_file(result.manifest_path, manifest.to_json().dump(1) + "\n");
  } catch (const std::exception& e) {
    abort_with(e.what());
    throw;
  }
  return result;
}

struct MixCmdResult {
  MixResult mix;
  std::string dataset_path;
  std::string manifest_path;
};

inline MixCmdResult cmd_mix(const PipelineConfig& cfg) {
  if (cfg.real_dataset.empty() || cfg.generated_dataset.empty())
    throw ConfigError("mix: real_dataset and generated_dataset must be set");
  if (!std::filesystem::exists(cfg.real_dataset))
    throw ConfigError("mix: real dataset not found: " + cfg.real_dataset);
  if (!std::filesystem::exists(cfg.generated_dataset))
    throw ConfigError("mix: generated dataset not found: " +
                      cfg.generated_dataset);

  const auto real =
      load_dataset_file(cfg.real_dataset, ParseOptions{cfg.lenient});
  const auto pool =
      load_dataset_file(cfg.generated_dataset, ParseOptions{cfg.lenient});

  MixCmdResult out;
  out.mix = mix_datasets(real, pool, cfg.mix);
  out.mix.manifest.real_digest = file_digest(cfg.real_dataset);
  out.mix.manifest.gen_digest = file_digest(cfg.generated_dataset);

  const std::string dir = run_dir(cfg);
  out.dataset_path = dir + "/mixed.json";
  out.manifest_path = dir + "/mix_manifest.json";
  write_text_file(out.dataset_path, serialize_dataset(out.mix.dataset));
  write_text_file(out.manifest_path,
                  mix_manifest_to_json(out.mix.manifest).dump(1) + "\n");
  return out;
}

struct EvaluateResult {
  EvalReport report;
  std::string report_path;
};

inline EvaluateResult cmd_evaluate(const PipelineConfig& cfg,
                                   const std::string& gold_path,
                                   const std::string& predictions_path,
                                   const std::string& dataset_name) {
  if (!std::filesystem::exists(gold_path))
    throw ConfigError("evaluate: gold dataset not found: " + gold_path);
  if (!std::filesystem::exists(predictions_path))
    throw ConfigError("evaluate: prediction file not found: " +
                      predictions_path);
  const auto gold = load_dataset_file(gold_path, ParseOptions{cfg.lenient});
  const auto preds = parse_predictions(read_text_file(predictions_path));

  EvaluateResult out;
  out.report = evaluate_dataset(gold, preds, dataset_name);
  const std::string dir = run_dir(cfg);
  out.report_path = dir + "/eval_" + dataset_name + ".json";
  write_text_file(out.report_path,
                  report_to_json(out.report).dump(1) + "\n");
  return out;
}

// Report input: JSON array of {"name": str, "reports": [item...]} where
// each item is either a path to an eval report file or an inline report
// object.
inline std::vector<ReportGroup> load_report_groups(const std::string& path) {
  const auto j = nlohmann::json::parse(read_text_file(path));
  if (!j.is_array())
    throw ConfigError("report spec must be a JSON array of groups");
  std::vector<ReportGroup> groups;
  for (const auto& g : j) {
    ReportGroup group;
    group.name = g.at("name").get<std::string>();
    for (const auto& item : g.at("reports")) {
      if (item.is_string()) {
        group.reports.push_back(report_from_json(
            nlohmann::json::parse(read_text_file(item.get<std::string>()))));
      } else {
        group.reports.push_back(report_from_json(item));
      }
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

inline nlohmann::json stats_to_json(const DatasetStats& s) {
  return {{"num_articles", s.num_articles},
          {"num_contexts", s.num_contexts},
          {"num_qas", s.num_qas},
          {"mean_context_words", s.mean_context_words},
          {"mean_answers_per_qa", s.mean_answers_per_qa}};
}

inline DatasetStats cmd_stats(const PipelineConfig& cfg,
                              const std::string& dataset_path) {
  if (!std::filesystem::exists(dataset_path))
    throw ConfigError("stats: dataset not found: " + dataset_path);
  return dataset_stats(
      load_dataset_file(dataset_path, ParseOptions{cfg.lenient}));
}

}  // namespace squadgen
