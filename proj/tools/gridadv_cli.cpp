#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "gridadv/common.hpp"
#include "gridadv/harness.hpp"

using namespace gridadv;

int main(int argc, char** argv) {
  CLI::App app{"Adversarial false-data-injection experiments on AC state estimation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config, case_name, region, out;
  std::uint64_t seed = 0;
  int workers = 0;
  bool paper_scale = false, quiet = false;
  app.add_option("--config", config, "JSON experiment plan")->check(CLI::ExistingFile);
  app.add_option("--case", case_name, "case name or path (case14, case39, case118)");
  app.add_option("--region", region, "region fixture name or JSON path");
  app.add_option("--seed", seed, "root seed");
  app.add_option("--workers", workers, "worker threads (default: GRIDADV_WORKERS or 1)");
  app.add_option("--out", out, "output directory");
  app.add_flag("--paper-scale", paper_scale, "full-size datasets and NSE step budget");
  app.add_flag("--quiet", quiet, "suppress progress messages");

  const std::vector<std::pair<const char*, const char*>> commands{
      {"gen-data", "generate datasets A and B"},
      {"train-nse", "train the neural state estimator on dataset A"},
      {"calibrate-bdd", "calibrate LNRT and chi-squared thresholds on dataset B"},
      {"train-detectors", "calibrate divergence detectors and train the MLP detector"},
      {"attack", "run the attack sweep on a third of dataset B"},
      {"evaluate", "compute bypass probabilities and deviation statistics"},
      {"report", "write figure-source CSVs and SVG renderings"},
      {"run", "all stages in order"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentPlan plan = ExperimentPlan::desk();
    if (!config.empty()) plan = plan_from_json(nlohmann::json::parse(read_text_file(config)), plan);
    if (paper_scale) plan.apply_full_scale();
    if (!case_name.empty()) plan.case_name = case_name;
    if (!region.empty()) plan.region = region;
    if (app.count("--seed")) plan.seed = seed;
    if (!out.empty()) plan.out = out;
    plan.workers = workers > 0 ? workers : default_workers(plan.workers);
    plan.quiet = quiet;

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "gen-data") cmd_gen_data(plan);
    else if (cmd == "train-nse") cmd_train_nse(plan);
    else if (cmd == "calibrate-bdd") cmd_calibrate_bdd(plan);
    else if (cmd == "train-detectors") cmd_train_detectors(plan);
    else if (cmd == "attack") cmd_attack(plan);
    else if (cmd == "evaluate") cmd_evaluate(plan);
    else if (cmd == "report") cmd_report(plan);
    else run_pipeline(plan);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
