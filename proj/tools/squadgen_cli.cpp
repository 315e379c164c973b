// squadgen: synthetic QA data pipeline CLI.
//
//   generate  seed sampling -> context generation -> QG -> round-trip
//             filter -> generated dataset
//   mix       combine real + generated datasets at a ratio
//   evaluate  SQuAD v1.1 EM/F1 for a prediction file
//   report    render result tables (markdown/csv/json)
//   stats     dataset summary statistics
//   validate  schema + invariant check for a dataset file

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "squadgen/squadgen.hpp"

namespace {

using namespace squadgen;

struct CommonOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string replay_path;
  bool strict_replay = false;
  bool lenient = false;
};

PipelineConfig effective_config(const CommonOpts& opts) {
  PipelineConfig cfg;
  if (!opts.config_path.empty()) cfg = load_pipeline_config(opts.config_path);
  nlohmann::json raw = cfg.raw;
  if (opts.seed) {
    cfg.run_seed = *opts.seed;
    cfg.mix.seed = *opts.seed;
    raw["run_seed"] = *opts.seed;
  }
  if (!opts.replay_path.empty()) {
    cfg.replay_fixture = opts.replay_path;
    raw["replay_fixture"] = opts.replay_path;
  }
  if (opts.strict_replay) {
    cfg.strict_replay = true;
    raw["strict_replay"] = true;
  }
  if (opts.lenient) {
    cfg.lenient = true;
    raw["lenient"] = true;
  }
  cfg.raw = raw;
  return cfg;
}

int dispatch(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitInput;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic QA data pipeline for distribution-shift robustness"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--config", common.config_path, "Pipeline config JSON");
  app.add_option("--seed", common.seed, "Override run seed");
  app.add_option("--replay", common.replay_path, "Replay fixture JSONL");
  app.add_flag("--strict-replay", common.strict_replay,
               "Fail on unmatched replay fingerprints");
  app.add_flag("--lenient", common.lenient,
               "Drop invalid QAs with warnings instead of failing");

  auto* generate = app.add_subcommand("generate", "Run the generation pipeline");
  bool resume = false;
  generate->add_flag("--resume", resume,
                     "Skip contexts already in the provenance stream");

  auto* mix = app.add_subcommand("mix", "Mix real and generated datasets");
  std::optional<double> ratio;
  mix->add_option("--ratio", ratio, "Generated/real QA ratio");

  auto* evaluate = app.add_subcommand("evaluate", "Score a prediction file");
  std::string gold_path, pred_path, dataset_name = "dataset";
  evaluate->add_option("gold", gold_path, "Gold dataset (SQuAD v1.1 JSON)")
      ->required();
  evaluate->add_option("predictions", pred_path, "Prediction JSON file")
      ->required();
  evaluate->add_option("--name", dataset_name, "Dataset name for the report");

  auto* report = app.add_subcommand("report", "Render result tables");
  std::string groups_path, format_name;
  report->add_option("groups", groups_path, "Report group spec JSON")
      ->required();
  report->add_option("--format", format_name, "markdown, csv, or json");

  auto* stats = app.add_subcommand("stats", "Dataset summary statistics");
  std::string stats_path;
  stats->add_option("dataset", stats_path, "Dataset file")->required();

  auto* validate = app.add_subcommand("validate", "Validate a dataset file");
  std::string validate_path;
  validate->add_option("dataset", validate_path, "Dataset file")->required();

  // shared options may also be given after the subcommand name
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  return dispatch([&]() -> int {
    auto cfg = effective_config(common);

    if (generate->parsed()) {
      cfg.resume = resume;
      const auto result = cmd_generate(cfg);
      const auto s = dataset_stats(result.dataset);
      std::cout << "generated dataset: " << result.dataset_path << "\n"
                << "contexts: " << s.num_contexts << ", qas: " << s.num_qas
                << "\n";
      return kExitOk;
    }

    if (mix->parsed()) {
      if (ratio) {
        cfg.mix.ratio = *ratio;
        cfg.raw["mix"]["ratio"] = *ratio;
      }
      const auto result = cmd_mix(cfg);
      const auto s = dataset_stats(result.mix.dataset);
      std::cout << "mixed dataset: " << result.dataset_path << "\n"
                << "qas: " << s.num_qas << " (real "
                << result.mix.manifest.real_qas << " + sampled "
                << result.mix.manifest.sampled_qas << ")\n";
      return kExitOk;
    }

    if (evaluate->parsed()) {
      const auto result = cmd_evaluate(cfg, gold_path, pred_path, dataset_name);
      std::cout << dataset_name << ": F1 " << format_score(result.report.f1)
                << ", EM " << format_score(result.report.em) << " over "
                << result.report.num_questions << " questions\n";
      if (!result.report.missing_predictions.empty())
        std::cout << "missing predictions: "
                  << result.report.missing_predictions.size() << "\n";
      for (const auto& id : result.report.unknown_prediction_ids)
        std::cerr << "warning: prediction for unknown id " << id << "\n";
      std::cout << "report: " << result.report_path << "\n";
      return kExitOk;
    }

    if (report->parsed()) {
      if (!format_name.empty())
        cfg.report_format = report_format_from_name(format_name);
      const auto groups = load_report_groups(groups_path);
      std::cout << render_report(groups, cfg.report_format);
      return kExitOk;
    }

    if (stats->parsed()) {
      const auto s = cmd_stats(cfg, stats_path);
      std::cout << stats_to_json(s).dump(1) << "\n";
      return kExitOk;
    }

    if (validate->parsed()) {
      std::vector<std::string> warnings;
      const auto d = load_dataset_file(validate_path,
                                       ParseOptions{cfg.lenient}, &warnings);
      validate_dataset(d);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      const auto s = dataset_stats(d);
      std::cout << "valid: " << s.num_qas << " qas in " << s.num_contexts
                << " contexts\n";
      return kExitOk;
    }

    return kExitInternal;
  });
}
