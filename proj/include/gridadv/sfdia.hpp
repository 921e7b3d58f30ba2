#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridadv/common.hpp"
#include "gridadv/powerflow.hpp"

namespace gridadv {

enum class SfdiaVariant { None, Perfect, NoisyParams, NoisyState };

std::string to_string(SfdiaVariant v);
SfdiaVariant sfdia_variant_from(const std::string& name);

struct StateDeviation {
  Eigen::VectorXd c;                ///< 2N, same layout as StateVector::stacked()
  std::vector<bool> support;        ///< components drawn into the support
};

struct DeviationConfig {
  double min_fraction = 0.10;
  double max_fraction = 0.80;
  double min_scale = 0.10;
  double max_scale = 1.90;
};

/// Sparse relative deviation c_j = s * u * x_j over a random support of
/// non-slack components. Magnitude channels never get pushed to vm <= 0.
StateDeviation sample_deviation(Rng& rng, const StateVector& x_hat, int slack_bus, const DeviationConfig& cfg = {});

/// Support size for a drawn fraction: nearest integer, at least one.
int deviation_support_size(double fraction, int num_components);

/// a = h(x + c) - h(x).
Eigen::VectorXd perfect_sfdia(const NetworkCase& c, const AdmittanceSet& y, const StateVector& x_hat,
                              const Eigen::VectorXd& dev);

/// Perfect attack built on a model whose series admittances are scaled by
/// (1 + scale * g), g ~ N(0, 1) truncated to [-3, 3].
Eigen::VectorXd noisy_param_sfdia(const NetworkCase& c, const StateVector& x_hat, const Eigen::VectorXd& dev,
                                  Rng& rng, double scale = 0.10);

/// Perfect attack built around x_hat * (1 + e), e ~ U[-level, level].
Eigen::VectorXd noisy_state_sfdia(const NetworkCase& c, const AdmittanceSet& y, const StateVector& x_hat,
                                  const Eigen::VectorXd& dev, Rng& rng, double level = 0.08);

struct AttackSampleLabel {
  bool attacked = false;
  SfdiaVariant variant = SfdiaVariant::None;
  std::vector<bool> compromised_state_mask;
};

struct AttackedRecord {
  std::int64_t timestamp_index = 0;
  Eigen::VectorXd measurements;  ///< z or z + a
  AttackSampleLabel label;
};

struct AttackedDatasetConfig {
  double attack_probability = 0.5;
  DeviationConfig deviation;
  double param_noise = 0.10;
  double state_noise = 0.08;
  std::uint64_t seed = 7;
};

/// One record per benign sample; samples need an estimated state.
std::vector<AttackedRecord> build_attacked_dataset(const NetworkCase& c, const AdmittanceSet& y,
                                                   const std::vector<ScenarioSample>& benign,
                                                   const AttackedDatasetConfig& cfg, int workers = 1);

}  // namespace gridadv
