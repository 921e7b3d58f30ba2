#include "gridadv/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gridadv/common.hpp"

namespace gridadv {

std::string to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::All: return "all";
    case SelectionMode::Half: return "half";
    case SelectionMode::Tenth: return "tenth";
    case SelectionMode::Explicit: return "explicit";
  }
  return "all";
}

SelectionMode selection_mode_from(const std::string& s) {
  for (auto m : {SelectionMode::All, SelectionMode::Half, SelectionMode::Tenth, SelectionMode::Explicit})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown selection mode '" + s + "'");
}

Eigen::MatrixXd build_quadratic(const Eigen::MatrixXd& j) {
  Eigen::MatrixXd q = j.transpose() * j;
  return 0.5 * (q + q.transpose());
}

EigenPair power_iteration(const Eigen::MatrixXd& a, double tol, int max_iters, double shift,
                          const Eigen::MatrixXd* deflate) {
  const auto n = a.rows();
  if (n == 0 || a.cols() != n) throw std::invalid_argument("power iteration needs a non-empty square matrix");
  auto project_out = [&](Eigen::VectorXd& v) {
    if (deflate && deflate->cols() > 0) v -= *deflate * (deflate->transpose() * v);
  };
  // Fixed pseudo-random start keeps results reproducible.
  Rng rng = substream(0x9e3779b9ULL, static_cast<std::uint64_t>(n));
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  project_out(v);
  EigenPair out;
  if (v.norm() == 0.0) {
    out.vector = v;
    out.converged = true;
    return out;
  }
  v.normalize();
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  for (int it = 1; it <= max_iters; ++it) {
    Eigen::VectorXd w = a * v;
    project_out(w);
    const double lambda = v.dot(w);
    const double residual = (w - lambda * v).norm();
    out.value = lambda;
    out.vector = v;
    out.iterations = it;
    if (residual <= tol * std::max(std::abs(lambda), scale * 1e-12)) {
      out.converged = true;
      return out;
    }
    w += shift * v;
    const double norm = w.norm();
    if (norm == 0.0) {
      out.converged = true;
      return out;
    }
    v = w / norm;
  }
  return out;
}

SdpSolution solve_sdp(const Eigen::MatrixXd& jt, const PcdmConfig& cfg) {
  if (cfg.epsilon <= 0) throw std::invalid_argument("epsilon must be positive");
  if ((jt - jt.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, jt.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("quadratic form must be symmetric");
  const auto n = jt.rows();
  SdpSolution s;
  const auto top = power_iteration(jt, cfg.eig_tol, cfg.eig_max_iters, cfg.shift);
  Eigen::MatrixXd basis = top.vector;
  const auto second = n > 1 ? power_iteration(jt, cfg.eig_tol, cfg.eig_max_iters, cfg.shift, &basis) : EigenPair{};
  s.quadratic_top = top.value;
  s.quadratic_second = second.value;
  s.iterations = top.iterations;
  const double gap = top.value - second.value;
  s.degenerate = !top.converged || (n > 1 && gap <= cfg.eig_tol * std::max(std::abs(top.value), 1e-300));

  const double budget = std::min(cfg.epsilon * cfg.epsilon, 1.0);
  const Eigen::VectorXd u = top.vector.normalized();
  const Eigen::MatrixXd w = budget * u * u.transpose();
  s.objective = (jt.cwiseProduct(w)).sum();

  // Certificate: eigenpairs of the constructed W itself.
  const auto w1 = power_iteration(w, 1e-14, 1000);
  s.lambda_star = w1.value;
  s.nu_star = w1.vector.normalized();
  if (n > 1) {
    Eigen::MatrixXd wb = s.nu_star;
    s.lambda_2 = std::max(0.0, power_iteration(w, 1e-14, 1000, 0.0, &wb).value);
  }
  return s;
}

Eigen::VectorXd recover_perturbation(const SdpSolution& sol, const PcdmConfig& cfg) {
  Eigen::VectorXd nu = sol.nu_star;
  if (nu.size() == 0) throw std::invalid_argument("empty eigenvector");
  Eigen::Index arg = 0;
  nu.cwiseAbs().maxCoeff(&arg);
  if (nu[arg] < 0) nu = -nu;
  return cfg.epsilon * std::sqrt(std::max(sol.lambda_star, 0.0)) * nu;
}

std::vector<bool> selection_vector(const Eigen::VectorXd& eta, SelectionMode mode, const std::vector<bool>& mask) {
  const auto n = static_cast<std::size_t>(eta.size());
  if (mode == SelectionMode::All) return std::vector<bool>(n, true);
  if (mode == SelectionMode::Explicit) {
    if (mask.size() != n) throw std::invalid_argument("explicit mask length differs from N_A");
    return mask;
  }
  const std::size_t k = mode == SelectionMode::Half ? n / 2
                                                    : static_cast<std::size_t>(std::lround(static_cast<double>(n) / 10.0));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(eta[a]) > std::abs(eta[b]); });
  std::vector<bool> e(n, false);
  for (std::size_t i = 0; i < std::min(k, n); ++i) e[order[i]] = true;
  return e;
}

Eigen::VectorXd masked(const Eigen::VectorXd& eta, const std::vector<bool>& e) {
  if (e.size() != static_cast<std::size_t>(eta.size())) throw std::invalid_argument("mask length mismatch");
  Eigen::VectorXd out = eta;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    if (!e[i]) out[i] = 0.0;
  return out;
}

Eigen::VectorXd attack_measurements(const Eigen::VectorXd& z, const AttackRegion& region, const Eigen::VectorXd& eta,
                                    const std::vector<bool>& e, double unit) {
  if (!(unit > 0)) throw std::invalid_argument("measurement unit must be positive");
  return scatter_add(region, z, masked(eta, e) / unit);
}

AttackResult run_attack(const MlpModel& model, const AttackRegion& region, const Eigen::VectorXd& z,
                        const PcdmConfig& cfg) {
  if (model.inputs() != region.num_measurements())
    throw std::invalid_argument("model input size does not match the region");
  const Eigen::VectorXd zd = project(region, z) * cfg.measurement_unit;
  const Eigen::MatrixXd j = input_jacobian(model, zd);
  const auto sol = solve_sdp(build_quadratic(j), cfg);
  AttackResult r;
  r.eta = recover_perturbation(sol, cfg);
  r.selection = selection_vector(r.eta, cfg.mode, cfg.mask);
  r.z_attacked = attack_measurements(z, region, r.eta, r.selection, cfg.measurement_unit);
  r.diagnostics.lambda_star = sol.lambda_star;
  r.diagnostics.lambda_2 = sol.lambda_2;
  r.diagnostics.objective = sol.objective;
  r.diagnostics.degenerate = sol.degenerate;
  r.diagnostics.predicted_deviation = (j * masked(r.eta, r.selection)).norm();
  return r;
}

}  // namespace gridadv
