#include "gridadv/bdd.hpp"

#include <stdexcept>

#include "gridadv/common.hpp"

namespace gridadv {

ResidualAnalysis analyze_residuals(const NetworkCase& c, const AdmittanceSet& y, const MeasurementVector& z,
                                   const StateVector& x_hat, const Eigen::VectorXd& weights,
                                   const BddOptions& opts) {
  const int m = c.num_measurements();
  if (z.size() != m || weights.size() != m) throw std::invalid_argument("residual inputs have inconsistent lengths");
  ResidualAnalysis out;
  out.residual = z.values - measurement_function(c, y, x_hat).values;

  const Eigen::MatrixXd h = reduced_jacobian(c, measurement_jacobian(c, y, x_hat));
  const Eigen::MatrixXd gain = h.transpose() * weights.asDiagonal() * h;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gain);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-15)
    throw ObservabilityError("gain matrix is singular at the estimate", {});
  const Eigen::MatrixXd k_inv_ht = ldlt.solve(h.transpose());

  out.sensitivity.resize(m);
  out.normalized.resize(m);
  for (int i = 0; i < m; ++i) {
    const double omega = h.row(i).dot(k_inv_ht.col(i));
    const double b = std::max(1.0 - weights[i] * omega, opts.sensitivity_floor);
    const double rb = b / weights[i];
    out.sensitivity[i] = b;
    out.normalized[i] = std::abs(out.residual[i]) / (opts.classical_normalization ? std::sqrt(rb) : rb);
  }
  return out;
}

Eigen::VectorXd normalized_residuals(const NetworkCase& c, const AdmittanceSet& y, const MeasurementVector& z,
                                     const StateVector& x_hat, const Eigen::VectorXd& weights,
                                     const BddOptions& opts) {
  return analyze_residuals(c, y, z, x_hat, weights, opts).normalized;
}

BddThresholds calibrate_thresholds_from_norms(const std::vector<double>& norms_2, const std::vector<double>& norms_inf,
                                              double far_target, int min_samples) {
  if (far_target < 0 || far_target >= 1) throw std::invalid_argument("far_target must lie in [0, 1)");
  if (norms_2.size() != norms_inf.size()) throw std::invalid_argument("norm vectors differ in length");
  if (static_cast<int>(norms_2.size()) < min_samples)
    throw std::invalid_argument("at least " + std::to_string(min_samples) + " benign samples are required, got " +
                                std::to_string(norms_2.size()));
  BddThresholds t;
  t.far_target = far_target;
  t.sample_count = static_cast<int>(norms_2.size());
  t.tau_2 = nearest_rank_quantile(norms_2, 1.0 - far_target);
  t.tau_inf = nearest_rank_quantile(norms_inf, 1.0 - far_target);
  return t;
}

BddThresholds calibrate_thresholds(const std::vector<Eigen::VectorXd>& benign_normalized, double far_target,
                                   int min_samples) {
  std::vector<double> n2, ninf;
  n2.reserve(benign_normalized.size());
  ninf.reserve(benign_normalized.size());
  for (const auto& r : benign_normalized) {
    n2.push_back(r.norm());
    ninf.push_back(r.cwiseAbs().maxCoeff());
  }
  return calibrate_thresholds_from_norms(n2, ninf, far_target, min_samples);
}

bool lnr_test(const Eigen::VectorXd& r_norm, const BddThresholds& t) {
  return r_norm.size() > 0 && r_norm.cwiseAbs().maxCoeff() > t.tau_inf;
}

bool chi2_test(const Eigen::VectorXd& r_norm, const BddThresholds& t) { return r_norm.norm() > t.tau_2; }

nlohmann::json thresholds_to_json(const BddThresholds& t) {
  return {{"case", t.case_name}, {"far_target", t.far_target}, {"tau_2", t.tau_2},
          {"tau_inf", t.tau_inf}, {"sample_count", t.sample_count}};
}

BddThresholds thresholds_from_json(const nlohmann::json& j) {
  BddThresholds t;
  t.case_name = j.value("case", "");
  t.far_target = j.at("far_target").get<double>();
  t.tau_2 = j.at("tau_2").get<double>();
  t.tau_inf = j.at("tau_inf").get<double>();
  t.sample_count = j.value("sample_count", 0);
  return t;
}

}  // namespace gridadv
