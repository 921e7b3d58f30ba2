#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gridadv/attack.hpp"
#include "gridadv/bdd.hpp"
#include "gridadv/dataset.hpp"
#include "gridadv/detectors.hpp"
#include "gridadv/nse.hpp"
#include "gridadv/profile.hpp"
#include "gridadv/sfdia.hpp"
#include "json.hpp"

namespace gridadv {

inline constexpr int kFullScaleSamples = 105120;

/// Detectors evaluated by default; the report also reserves columns for
/// `reserved_detectors()`.
const std::vector<std::string>& default_detector_roster();
const std::vector<std::string>& reserved_detectors();

struct ExperimentPlan {
  std::string case_name = "case39";
  std::string region = "case39_localized";
  std::vector<double> epsilons{1, 2, 5, 10};
  std::vector<SelectionMode> modes{SelectionMode::All, SelectionMode::Half, SelectionMode::Tenth};
  int samples_a = 2000;
  int samples_b = 2000;
  ProfileKind profile_a = ProfileKind::FiveMinute;
  ProfileKind profile_b = ProfileKind::HalfHourly;
  std::uint64_t seed = 1;  ///< root seed; per-stage seeds derive from it
  std::vector<std::string> detectors = default_detector_roster();
  std::filesystem::path out = "gridadv_out";
  int workers = 1;
  bool write_jsonl = true;
  double far_target = 0.02;
  /// NSE input/eta units relative to per-unit; 0 means the case's MVA base.
  double measurement_unit = 0.0;
  NseTrainConfig nse;
  DivergenceConfig divergence;
  DetectorTrainConfig mlp_detector;
  AttackedDatasetConfig attacked;
  bool quiet = false;

  /// Desk defaults (NSE step budget trimmed to minutes on one core).
  static ExperimentPlan desk();
  void apply_full_scale();
  std::uint64_t stage_seed(std::uint64_t stage) const;
};

nlohmann::json plan_to_json(const ExperimentPlan& p);
/// Fields present in `j` override `base`.
ExperimentPlan plan_from_json(const nlohmann::json& j, ExperimentPlan base = ExperimentPlan::desk());

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File locations under plan.out.
struct ArtifactPaths {
  std::filesystem::path root;
  std::filesystem::path dataset_a() const { return root / "dataset_a.gads"; }
  std::filesystem::path dataset_b() const { return root / "dataset_b.gads"; }
  std::filesystem::path dataset_b_att() const { return root / "dataset_b_att.gaat"; }
  std::filesystem::path nse_model() const { return root / "nse.bin"; }
  std::filesystem::path bdd() const { return root / "bdd_thresholds.json"; }
  std::filesystem::path detectors() const { return root / "detectors.json"; }
  std::filesystem::path mlp_detector() const { return root / "mlp_detector.bin"; }
  std::filesystem::path attacks() const { return root / "attacks"; }
  std::filesystem::path attack_set(double eps, SelectionMode mode) const;
  std::filesystem::path attack_batch(double eps, SelectionMode mode) const;
  std::filesystem::path perfect_control() const { return attacks() / "control_perfect.gads"; }
  std::filesystem::path report_csv() const { return root / "report.csv"; }
  std::filesystem::path report_json() const { return root / "report.json"; }
  std::filesystem::path figures() const { return root / "figures"; }
};

ArtifactPaths artifacts(const ExperimentPlan& p);

struct ReportRow {
  std::string detector;
  double epsilon = 0.0;
  std::string mode;
  int num_compromised_channels = 0;
  double bypass_probability = 0.0;
  double max_dp = 0.0;       ///< median over samples of max |dp|, MW
  double max_dq = 0.0;       ///< median over samples of max |dq|, MVAr
  double median_dvm = 0.0;   ///< median over samples of median |d|v||, pu
  double median_dva = 0.0;   ///< median over samples of median |dtheta|, degrees
  int samples = 0;
  int estimator_failures = 0;
};

struct FiveNumber {
  double whisker_lo, q1, median, q3, whisker_hi, min, max;
  int count;
};

/// Quartiles by linear interpolation, Tukey whiskers at 1.5 IQR clipped to the data.
FiveNumber five_number_summary(std::vector<double> v);

struct Report {
  std::vector<ReportRow> rows;
  nlohmann::json json;
};

void cmd_gen_data(const ExperimentPlan& p);
NseReport cmd_train_nse(const ExperimentPlan& p);
BddThresholds cmd_calibrate_bdd(const ExperimentPlan& p);
void cmd_train_detectors(const ExperimentPlan& p);
void cmd_attack(const ExperimentPlan& p);
Report cmd_evaluate(const ExperimentPlan& p);
void cmd_report(const ExperimentPlan& p);
/// All stages in order.
Report run_pipeline(const ExperimentPlan& p);

std::string format_number(double v);
std::string report_csv(const std::vector<ReportRow>& rows);

}  // namespace gridadv
