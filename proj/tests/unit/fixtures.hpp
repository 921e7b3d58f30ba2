#pragma once

#include <string>

#include "gridadv/estimation.hpp"
#include "gridadv/grid.hpp"
#include "gridadv/powerflow.hpp"
#include "gridadv/profile.hpp"

namespace fixtures {

/// Seed under which the delocalized sampler draws the IEEE 14 illustration
/// (buses 5, 9, 11, 12, 14; five lines).
inline constexpr std::uint64_t kIeee14DelocalizedSeed = 520358;

/// Two buses joined by one branch of admittance `y`, slack at bus 0.
inline gridadv::NetworkCase two_bus(gridadv::Complex y, gridadv::Complex load = {0.0, 0.0},
                                    gridadv::Complex shunt0 = {0.0, 0.0}, gridadv::Complex shunt1 = {0.0, 0.0}) {
  nlohmann::json j = {
      {"name", "two-bus"},
      {"base_mva", 100.0},
      {"buses",
       {{{"type", "slack"}, {"shunt_admittance", {shunt0.real(), shunt0.imag()}}},
        {{"type", "PQ"},
         {"base_load", {load.real(), load.imag()}},
         {"shunt_admittance", {shunt1.real(), shunt1.imag()}}}}},
      {"branches", {{{"from_bus", 0}, {"to_bus", 1}, {"series_admittance", {y.real(), y.imag()}}}}}};
  return gridadv::case_from_json(j);
}

inline gridadv::StateVector random_state(int n, std::mt19937_64& rng, int slack = 0) {
  std::uniform_real_distribution<double> vm(0.92, 1.08), va(-0.3, 0.3);
  gridadv::StateVector x = gridadv::StateVector::flat(n);
  for (int k = 0; k < n; ++k) {
    x.vm[k] = vm(rng);
    x.va[k] = k == slack ? 0.0 : va(rng);
  }
  return x;
}

/// Noisy scenarios with WLS estimates filled in, defender weights in `weights`.
inline std::vector<gridadv::ScenarioSample> estimated_samples(const gridadv::NetworkCase& c,
                                                              const gridadv::AdmittanceSet& y, int n,
                                                              std::uint64_t seed, Eigen::VectorXd& weights) {
  gridadv::ScenarioConfig cfg;
  cfg.num_samples = n;
  cfg.seed = seed;
  const auto profile = gridadv::synthetic_profile(gridadv::ProfileKind::FiveMinute, n, seed);
  auto samples = gridadv::generate_scenarios(c, y, cfg, profile);
  weights = gridadv::nominal_weights(c, y);
  gridadv::EstimatorConfig est;
  est.weights = weights;
  for (auto& s : samples) s.estimated_state = gridadv::wls_estimate(c, y, s.measurements, est).state;
  return samples;
}

}  // namespace fixtures
