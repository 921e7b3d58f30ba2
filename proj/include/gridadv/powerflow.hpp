#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridadv/common.hpp"
#include "gridadv/grid.hpp"

namespace gridadv {

/// Bus voltage magnitudes (pu) and angles (rad).
struct StateVector {
  Eigen::VectorXd vm;
  Eigen::VectorXd va;

  static StateVector flat(int n);
  /// [vm; va], length 2N.
  Eigen::VectorXd stacked() const;
  static StateVector from_stacked(const Eigen::VectorXd& x);
  int size() const { return static_cast<int>(vm.size()); }
};

/// Index helpers for the measurement ordering
/// [{|v_k|, p_k, q_k} per bus] then [{p_s, q_s, p_r, q_r} per branch].
struct MeasurementLayout {
  int num_buses;
  int num_branches;

  explicit MeasurementLayout(const NetworkCase& c) : num_buses(c.num_buses()), num_branches(c.num_branches()) {}
  MeasurementLayout(int n, int m) : num_buses(n), num_branches(m) {}

  int size() const { return 3 * num_buses + 4 * num_branches; }
  int vm(int bus) const { return 3 * bus; }
  int p(int bus) const { return 3 * bus + 1; }
  int q(int bus) const { return 3 * bus + 2; }
  int p_from(int l) const { return 3 * num_buses + 4 * l; }
  int q_from(int l) const { return 3 * num_buses + 4 * l + 1; }
  int p_to(int l) const { return 3 * num_buses + 4 * l + 2; }
  int q_to(int l) const { return 3 * num_buses + 4 * l + 3; }
  bool is_voltage(int i) const { return i < 3 * num_buses && i % 3 == 0; }
  bool is_real_power(int i) const;
};

struct MeasurementVector {
  Eigen::VectorXd values;
  int size() const { return static_cast<int>(values.size()); }
};

/// Noise-free measurement model h(x).
MeasurementVector measurement_function(const NetworkCase& c, const AdmittanceSet& y, const StateVector& x);

struct PowerflowOptions {
  double tol = 1e-8;
  int max_iters = 20;
};

class PowerflowError : public std::runtime_error {
 public:
  PowerflowError(const std::string& what, double mismatch, int iterations)
      : std::runtime_error(what), mismatch_(mismatch), iterations_(iterations) {}
  double mismatch() const { return mismatch_; }
  int iterations() const { return iterations_; }

 private:
  double mismatch_;
  int iterations_;
};

struct PowerflowResult {
  StateVector state;
  int iterations = 0;
  double mismatch = 0.0;
};

/// Newton-Raphson power flow. `loads` are per-bus complex demands and
/// `gen_p` per-bus real dispatch (pu); the slack bus absorbs the balance.
PowerflowResult solve_powerflow(const NetworkCase& c, const AdmittanceSet& y, const Eigen::VectorXcd& loads,
                                const Eigen::VectorXd& gen_p, const PowerflowOptions& opts = {},
                                const StateVector* warm_start = nullptr);

/// Base-case loads and dispatch scaled by `factor`.
PowerflowResult solve_scaled_powerflow(const NetworkCase& c, const AdmittanceSet& y, double factor,
                                       const PowerflowOptions& opts = {}, const StateVector* warm_start = nullptr);

/// Largest absolute injection mismatch at PV/PQ buses (P) and PQ buses (Q).
double power_mismatch(const NetworkCase& c, const AdmittanceSet& y, const StateVector& x,
                      const Eigen::VectorXcd& loads, const Eigen::VectorXd& gen_p);

/// Per-channel noise standard deviation: max(fraction * |value|, floor).
Eigen::VectorXd noise_sigma(const Eigen::VectorXd& values, double fraction, double floor);

struct ScenarioConfig {
  int num_samples = 2000;
  int interval_minutes = 5;
  double load_scale_lo = 0.7;
  double load_scale_hi = 1.3;
  double noise_sigma_fraction = 0.01;
  double noise_sigma_floor = 1e-4;  ///< absolute floor on sigma, pu
  std::uint64_t seed = 1;
};

struct ScenarioSample {
  std::int64_t timestamp_index = 0;
  StateVector true_state;
  MeasurementVector measurements;
  std::optional<StateVector> estimated_state;
};

struct ScenarioLog {
  std::vector<std::string> skipped;
};

/// One sample per profile entry: scale demand and dispatch, solve, measure,
/// and add independent Gaussian noise. Deterministic under `cfg.seed`
/// regardless of `workers`.
std::vector<ScenarioSample> generate_scenarios(const NetworkCase& c, const AdmittanceSet& y,
                                               const ScenarioConfig& cfg, std::span<const double> profile,
                                               int workers = 1, ScenarioLog* log = nullptr);

}  // namespace gridadv
