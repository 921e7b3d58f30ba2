#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridadv/grid.hpp"
#include "gridadv/powerflow.hpp"

namespace gridadv {

/// Analytic dh/dx, (3N+4M) x 2N, columns ordered [vm; va].
Eigen::MatrixXd measurement_jacobian(const NetworkCase& c, const AdmittanceSet& y, const StateVector& x);

/// Diagonal of R^-1 from a reference measurement vector under the synthesis
/// noise model.
Eigen::VectorXd weights_from_measurements(const Eigen::VectorXd& reference, double sigma_fraction = 0.01,
                                          double sigma_floor = 1e-4);

/// Defender weights fixed from the noiseless base-load operating point.
Eigen::VectorXd nominal_weights(const NetworkCase& c, const AdmittanceSet& y, double sigma_fraction = 0.01,
                                double sigma_floor = 1e-4);

struct EstimatorConfig {
  double tol = 1e-6;
  int max_iters = 25;
  Eigen::VectorXd weights;
  /// Steps whose infinity norm falls below this count as converged.
  double step_tol = 1e-11;
  int max_halvings = 6;
};

class ObservabilityError : public std::runtime_error {
 public:
  ObservabilityError(const std::string& what, std::vector<std::string> directions)
      : std::runtime_error(what), directions_(std::move(directions)) {}
  const std::vector<std::string>& directions() const { return directions_; }

 private:
  std::vector<std::string> directions_;
};

struct WlsResult {
  StateVector state;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
};

double wls_objective(const Eigen::VectorXd& z, const Eigen::VectorXd& h, const Eigen::VectorXd& weights);

/// Gauss-Newton with step halving; the slack angle stays at its x0 value
/// (zero for the flat start).
WlsResult wls_estimate(const NetworkCase& c, const AdmittanceSet& y, const MeasurementVector& z,
                       const EstimatorConfig& cfg, const std::optional<StateVector>& x0 = std::nullopt);

/// Jacobian with the slack-angle column removed.
Eigen::MatrixXd reduced_jacobian(const NetworkCase& c, const Eigen::MatrixXd& h_full);

}  // namespace gridadv
