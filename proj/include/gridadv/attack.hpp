#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridadv/nse.hpp"
#include "gridadv/region.hpp"

namespace gridadv {

enum class SelectionMode { All, Half, Tenth, Explicit };

std::string to_string(SelectionMode m);
SelectionMode selection_mode_from(const std::string& s);

struct PcdmConfig {
  double epsilon = 1.0;
  SelectionMode mode = SelectionMode::All;
  std::vector<bool> mask;  ///< used when mode == Explicit
  double eig_tol = 1e-10;
  int eig_max_iters = 200000;
  double shift = 0.0;
  /// Model inputs and eta are in units of z * measurement_unit (100 for MW on a 100 MVA base).
  double measurement_unit = 1.0;
};

/// Symmetric J^T J.
Eigen::MatrixXd build_quadratic(const Eigen::MatrixXd& j);

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
  int iterations = 0;
  bool converged = false;
};

/// Dominant eigenpair of symmetric PSD `a` by shifted power iteration,
/// restricted to the orthogonal complement of `deflate` (columns orthonormal).
EigenPair power_iteration(const Eigen::MatrixXd& a, double tol, int max_iters, double shift = 0.0,
                          const Eigen::MatrixXd* deflate = nullptr);

struct SdpSolution {
  double lambda_star = 0.0;  ///< principal eigenvalue of W
  Eigen::VectorXd nu_star;   ///< principal eigenvector of W, unit length
  double lambda_2 = 0.0;     ///< second eigenvalue of W
  double objective = 0.0;    ///< Tr(J~ W)
  double quadratic_top = 0.0;     ///< largest eigenvalue of J~
  double quadratic_second = 0.0;  ///< second eigenvalue of J~
  bool degenerate = false;        ///< top eigenspace of J~ not resolved
  int iterations = 0;
};

/// max Tr(J~ W) s.t. W PSD, Tr(W) <= eps^2, ||W||_* <= 1, solved through the
/// dominant eigenpair of J~.
SdpSolution solve_sdp(const Eigen::MatrixXd& jt, const PcdmConfig& cfg);

/// eta = eps * sqrt(lambda*) * nu*, sign fixed so the largest-magnitude entry is positive.
Eigen::VectorXd recover_perturbation(const SdpSolution& sol, const PcdmConfig& cfg);

std::vector<bool> selection_vector(const Eigen::VectorXd& eta, SelectionMode mode,
                                   const std::vector<bool>& mask = {});

Eigen::VectorXd masked(const Eigen::VectorXd& eta, const std::vector<bool>& e);

/// z with (eta (.) e) / unit added at the region's measurement indices.
Eigen::VectorXd attack_measurements(const Eigen::VectorXd& z, const AttackRegion& region, const Eigen::VectorXd& eta,
                                    const std::vector<bool>& e, double unit = 1.0);

struct AttackDiagnostics {
  double lambda_star = 0.0;
  double lambda_2 = 0.0;
  double objective = 0.0;
  double predicted_deviation = 0.0;  ///< ||J (eta (.) e)||_2
  bool degenerate = false;
};

struct AttackResult {
  Eigen::VectorXd z_attacked;
  Eigen::VectorXd eta;
  std::vector<bool> selection;
  AttackDiagnostics diagnostics;
};

AttackResult run_attack(const MlpModel& model, const AttackRegion& region, const Eigen::VectorXd& z,
                        const PcdmConfig& cfg);

}  // namespace gridadv
