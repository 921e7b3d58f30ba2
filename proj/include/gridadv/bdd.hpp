#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridadv/estimation.hpp"
#include "json.hpp"

namespace gridadv {

struct BddOptions {
  /// Divide by sqrt(R_ii B_ii) instead of R_ii B_ii.
  bool classical_normalization = false;
  double sensitivity_floor = 1e-8;
};

struct ResidualAnalysis {
  Eigen::VectorXd residual;      ///< signed z - h(x)
  Eigen::VectorXd normalized;    ///< |r_i| / (R_ii B_ii)
  Eigen::VectorXd sensitivity;   ///< B_ii after flooring
};

ResidualAnalysis analyze_residuals(const NetworkCase& c, const AdmittanceSet& y, const MeasurementVector& z,
                                   const StateVector& x_hat, const Eigen::VectorXd& weights,
                                   const BddOptions& opts = {});

Eigen::VectorXd normalized_residuals(const NetworkCase& c, const AdmittanceSet& y, const MeasurementVector& z,
                                     const StateVector& x_hat, const Eigen::VectorXd& weights,
                                     const BddOptions& opts = {});

struct BddThresholds {
  double tau_2 = 0.0;
  double tau_inf = 0.0;
  double far_target = 0.02;
  int sample_count = 0;
  std::string case_name;
};

inline constexpr int kMinCalibrationSamples = 1000;

/// Thresholds at the (1 - far_target) nearest-rank quantile of the benign
/// norms.
BddThresholds calibrate_thresholds(const std::vector<Eigen::VectorXd>& benign_normalized, double far_target,
                                   int min_samples = kMinCalibrationSamples);
BddThresholds calibrate_thresholds_from_norms(const std::vector<double>& norms_2, const std::vector<double>& norms_inf,
                                              double far_target, int min_samples = kMinCalibrationSamples);

/// true means attacked (norm strictly above threshold).
bool lnr_test(const Eigen::VectorXd& r_norm, const BddThresholds& t);
bool chi2_test(const Eigen::VectorXd& r_norm, const BddThresholds& t);

nlohmann::json thresholds_to_json(const BddThresholds& t);
BddThresholds thresholds_from_json(const nlohmann::json& j);

}  // namespace gridadv
