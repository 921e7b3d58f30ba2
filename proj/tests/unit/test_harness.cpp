#include <filesystem>

#include "doctest.h"
#include "gridadv/harness.hpp"

using namespace gridadv;
namespace fs = std::filesystem;

namespace {

ExperimentPlan tiny_plan(const std::string& name) {
  auto p = ExperimentPlan::desk();
  p.case_name = "case14";
  p.region = "case14_delocalized";
  p.epsilons = {1, 10};
  p.modes = {SelectionMode::All, SelectionMode::Tenth};
  p.samples_a = 1200;
  p.samples_b = 1200;
  p.nse.steps = 200;
  p.nse.hidden = {64, 64};
  p.write_jsonl = false;
  p.quiet = true;
  p.out = fs::temp_directory_path() / "gridadv_unit_harness" / name;
  fs::remove_all(p.out);
  return p;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("five-number summary matches interpolated quartiles and Tukey whiskers") {
    const auto f = five_number_summary({7, 1, 3, 15, 2, 9, 4, 100, 6, 5, -40, 8.5});
    CHECK(f.q1 == doctest::Approx(2.75));
    CHECK(f.median == doctest::Approx(5.5));
    CHECK(f.q3 == doctest::Approx(8.625));
    CHECK(f.whisker_lo == 1.0);
    CHECK(f.whisker_hi == 15.0);
    CHECK(f.min == -40.0);
    CHECK(f.max == 100.0);
    CHECK(f.count == 12);
    CHECK_THROWS(five_number_summary({}));
  }

  TEST_CASE("plan json round-trips and partial overrides keep the base") {
    auto p = ExperimentPlan::desk();
    p.epsilons = {0.5, 3};
    p.modes = {SelectionMode::Half};
    p.seed = 42;
    p.nse.hidden = {32};
    p.divergence.window = 20;
    const auto back = plan_from_json(plan_to_json(p));
    CHECK(plan_to_json(back) == plan_to_json(p));

    const auto partial = plan_from_json({{"seed", 9}, {"nse", {{"steps", 10}}}});
    CHECK(partial.seed == 9);
    CHECK(partial.nse.steps == 10);
    CHECK(partial.nse.hidden == ExperimentPlan::desk().nse.hidden);
    CHECK(partial.case_name == "case39");
    CHECK_THROWS_AS(plan_from_json({{"epsilons", {1, -2}}}), HarnessError);
  }

  TEST_CASE("stage seeds are distinct and reproducible") {
    ExperimentPlan p;
    CHECK(p.stage_seed(1) != p.stage_seed(2));
    ExperimentPlan q;
    q.seed = 2;
    CHECK(p.stage_seed(3) != q.stage_seed(3));
    CHECK(p.stage_seed(3) == ExperimentPlan{}.stage_seed(3));
  }

  TEST_CASE("stages demand their inputs") {
    auto p = tiny_plan("missing");
    CHECK_THROWS_AS(cmd_train_nse(p), HarnessError);
    CHECK_THROWS_AS(cmd_attack(p), HarnessError);
  }

  TEST_CASE("small pipeline is deterministic and guards its artifacts") {
    auto p = tiny_plan("run1");
    const auto rep = run_pipeline(p);
    const auto paths = artifacts(p);
    CHECK(fs::exists(paths.report_csv()));
    CHECK(fs::exists(paths.figures() / "bypass_bars.svg"));
    // benign and perfect controls plus one row set per (eps, mode)
    CHECK(rep.rows.size() == default_detector_roster().size() * (2 + 4));
    for (const auto& r : rep.rows) {
      CHECK(r.bypass_probability >= 0.0);
      CHECK(r.bypass_probability <= 1.0);
    }

    auto q = tiny_plan("run2");
    run_pipeline(q);
    CHECK(read_text_file(paths.report_csv()) == read_text_file(artifacts(q).report_csv()));

    auto empty = p;
    empty.detectors.clear();
    CHECK_THROWS_AS(cmd_evaluate(empty), HarnessError);

    auto model = load_model(paths.nse_model());
    model.metadata["dataset_hash"] = hex64(hash_file(paths.dataset_b()));
    save_model(paths.nse_model(), model);
    CHECK_THROWS_AS(cmd_attack(p), HarnessError);
  }
}
