#include "gridadv/sfdia.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gridadv {

std::string to_string(SfdiaVariant v) {
  switch (v) {
    case SfdiaVariant::None: return "none";
    case SfdiaVariant::Perfect: return "perfect";
    case SfdiaVariant::NoisyParams: return "noisy_params";
    case SfdiaVariant::NoisyState: return "noisy_state";
  }
  return "none";
}

SfdiaVariant sfdia_variant_from(const std::string& name) {
  for (auto v : {SfdiaVariant::None, SfdiaVariant::Perfect, SfdiaVariant::NoisyParams, SfdiaVariant::NoisyState})
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown SFDIA variant '" + name + "'");
}

int deviation_support_size(double fraction, int num_components) {
  const auto k = static_cast<int>(std::lround(fraction * num_components));
  return std::clamp(k, 1, num_components);
}

StateDeviation sample_deviation(Rng& rng, const StateVector& x_hat, int slack_bus, const DeviationConfig& cfg) {
  const int n = x_hat.size();
  const Eigen::VectorXd x = x_hat.stacked();
  std::vector<int> candidates;
  for (int j = 0; j < 2 * n; ++j)
    if (j != n + slack_bus) candidates.push_back(j);

  std::uniform_real_distribution<double> frac(cfg.min_fraction, cfg.max_fraction);
  const int k = std::min(deviation_support_size(frac(rng), 2 * n), static_cast<int>(candidates.size()));
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(candidates.size()) - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }

  StateDeviation d{Eigen::VectorXd::Zero(2 * n), std::vector<bool>(2 * n, false)};
  std::uniform_real_distribution<double> scale(cfg.min_scale, cfg.max_scale);
  std::bernoulli_distribution negative(0.5);
  for (int i = 0; i < k; ++i) {
    const int j = candidates[i];
    const double u = scale(rng);
    double s = negative(rng) ? -1.0 : 1.0;
    if (j < n && s < 0 && u >= 0.9) s = 1.0;
    d.c[j] = s * u * x[j];
    d.support[j] = true;
  }
  return d;
}

namespace {

void check_domain(const StateVector& x, const Eigen::VectorXd& dev) {
  const int n = x.size();
  if (dev.size() != 2 * n) throw std::invalid_argument("deviation length must be 2N");
  if (((x.vm + dev.head(n)).array() <= 0).any())
    throw std::domain_error("deviation drives a voltage magnitude to a non-positive value");
}

StateVector shifted(const StateVector& x, const Eigen::VectorXd& dev) {
  return StateVector::from_stacked(x.stacked() + dev);
}

}  // namespace

Eigen::VectorXd perfect_sfdia(const NetworkCase& c, const AdmittanceSet& y, const StateVector& x_hat,
                              const Eigen::VectorXd& dev) {
  check_domain(x_hat, dev);
  return measurement_function(c, y, shifted(x_hat, dev)).values - measurement_function(c, y, x_hat).values;
}

Eigen::VectorXd noisy_param_sfdia(const NetworkCase& c, const StateVector& x_hat, const Eigen::VectorXd& dev,
                                  Rng& rng, double scale) {
  NetworkCase perturbed = c;
  std::normal_distribution<double> g;
  for (auto& br : perturbed.branches) {
    double draw = 0.0, factor = 0.0;
    do {
      do draw = g(rng);
      while (std::abs(draw) > 3.0);
      factor = 1.0 + scale * draw;
    } while (factor == 0.0);
    br.series_admittance *= factor;
  }
  return perfect_sfdia(perturbed, build_admittance(perturbed), x_hat, dev);
}

Eigen::VectorXd noisy_state_sfdia(const NetworkCase& c, const AdmittanceSet& y, const StateVector& x_hat,
                                  const Eigen::VectorXd& dev, Rng& rng, double level) {
  std::uniform_real_distribution<double> e(-level, level);
  Eigen::VectorXd x = x_hat.stacked();
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] *= 1.0 + e(rng);
  return perfect_sfdia(c, y, StateVector::from_stacked(x), dev);
}

std::vector<AttackedRecord> build_attacked_dataset(const NetworkCase& c, const AdmittanceSet& y,
                                                   const std::vector<ScenarioSample>& benign,
                                                   const AttackedDatasetConfig& cfg, int workers) {
  std::vector<AttackedRecord> out(benign.size());
  parallel_for(benign.size(), workers, [&](std::size_t i) {
    const auto& s = benign[i];
    if (!s.estimated_state) throw std::invalid_argument("benign sample lacks an estimated state");
    Rng rng = substream(cfg.seed, static_cast<std::uint64_t>(s.timestamp_index));
    AttackedRecord& rec = out[i];
    rec.timestamp_index = s.timestamp_index;
    rec.measurements = s.measurements.values;
    rec.label.compromised_state_mask.assign(2 * c.num_buses(), false);
    std::bernoulli_distribution attack(cfg.attack_probability);
    if (!attack(rng)) return;
    std::uniform_int_distribution<int> variant(1, 3);
    rec.label.variant = static_cast<SfdiaVariant>(variant(rng));
    rec.label.attacked = true;
    const auto& x = *s.estimated_state;
    const auto dev = sample_deviation(rng, x, c.slack_bus(), cfg.deviation);
    rec.label.compromised_state_mask = dev.support;
    Eigen::VectorXd a;
    switch (rec.label.variant) {
      case SfdiaVariant::Perfect: a = perfect_sfdia(c, y, x, dev.c); break;
      case SfdiaVariant::NoisyParams: a = noisy_param_sfdia(c, x, dev.c, rng, cfg.param_noise); break;
      default: a = noisy_state_sfdia(c, y, x, dev.c, rng, cfg.state_noise); break;
    }
    rec.measurements += a;
  });
  return out;
}

}  // namespace gridadv
