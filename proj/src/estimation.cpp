#include "gridadv/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gridadv {

Eigen::MatrixXd measurement_jacobian(const NetworkCase& c, const AdmittanceSet& y, const StateVector& x) {
  const int n = c.num_buses();
  const MeasurementLayout layout(c);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(layout.size(), 2 * n);
  const Complex j1(0.0, 1.0);

  Eigen::VectorXcd v(n), vn(n);
  for (int k = 0; k < n; ++k) {
    vn[k] = std::polar(1.0, x.va[k]);
    v[k] = x.vm[k] * vn[k];
  }
  const Eigen::VectorXcd current = y.ybus * v;

  for (int k = 0; k < n; ++k) {
    h(layout.vm(k), k) = 1.0;
    for (int m = 0; m < n; ++m) {
      const Complex ykm = y.ybus(k, m);
      if (ykm == Complex(0.0, 0.0) && m != k) continue;
      Complex d_va, d_vm;
      if (m == k) {
        d_va = j1 * v[k] * std::conj(current[k]) - j1 * std::norm(v[k]) * std::conj(ykm);
        d_vm = vn[k] * std::conj(current[k]) + v[k] * std::conj(ykm * vn[k]);
      } else {
        d_va = -j1 * v[k] * std::conj(ykm * v[m]);
        d_vm = v[k] * std::conj(ykm * vn[m]);
      }
      h(layout.p(k), m) = d_vm.real();
      h(layout.q(k), m) = d_vm.imag();
      h(layout.p(k), n + m) = d_va.real();
      h(layout.q(k), n + m) = d_va.imag();
    }
  }

  for (const auto& br : c.branches) {
    const auto& co = y.branch[br.id];
    const int f = br.from_bus;
    const int t = br.to_bus;
    const Complex i_f = co.ff * v[f] + co.ft * v[t];
    const Complex i_t = co.tf * v[f] + co.tt * v[t];

    const Complex sf_vaf = j1 * v[f] * std::conj(i_f) - j1 * std::norm(v[f]) * std::conj(co.ff);
    const Complex sf_vat = -j1 * v[f] * std::conj(co.ft * v[t]);
    const Complex sf_vmf = vn[f] * std::conj(i_f) + v[f] * std::conj(co.ff * vn[f]);
    const Complex sf_vmt = v[f] * std::conj(co.ft * vn[t]);

    const Complex st_vat = j1 * v[t] * std::conj(i_t) - j1 * std::norm(v[t]) * std::conj(co.tt);
    const Complex st_vaf = -j1 * v[t] * std::conj(co.tf * v[f]);
    const Complex st_vmt = vn[t] * std::conj(i_t) + v[t] * std::conj(co.tt * vn[t]);
    const Complex st_vmf = v[t] * std::conj(co.tf * vn[f]);

    // Parallel circuits are distinct rows, so plain assignment is safe.
    const int l = br.id;
    h(layout.p_from(l), f) = sf_vmf.real();
    h(layout.q_from(l), f) = sf_vmf.imag();
    h(layout.p_from(l), t) = sf_vmt.real();
    h(layout.q_from(l), t) = sf_vmt.imag();
    h(layout.p_from(l), n + f) = sf_vaf.real();
    h(layout.q_from(l), n + f) = sf_vaf.imag();
    h(layout.p_from(l), n + t) = sf_vat.real();
    h(layout.q_from(l), n + t) = sf_vat.imag();

    h(layout.p_to(l), f) = st_vmf.real();
    h(layout.q_to(l), f) = st_vmf.imag();
    h(layout.p_to(l), t) = st_vmt.real();
    h(layout.q_to(l), t) = st_vmt.imag();
    h(layout.p_to(l), n + f) = st_vaf.real();
    h(layout.q_to(l), n + f) = st_vaf.imag();
    h(layout.p_to(l), n + t) = st_vat.real();
    h(layout.q_to(l), n + t) = st_vat.imag();
  }
  return h;
}

Eigen::VectorXd weights_from_measurements(const Eigen::VectorXd& reference, double sigma_fraction,
                                          double sigma_floor) {
  const Eigen::VectorXd sigma = noise_sigma(reference, sigma_fraction, sigma_floor);
  return sigma.array().square().inverse().matrix();
}

Eigen::VectorXd nominal_weights(const NetworkCase& c, const AdmittanceSet& y, double sigma_fraction,
                                double sigma_floor) {
  const auto pf = solve_scaled_powerflow(c, y, 1.0);
  return weights_from_measurements(measurement_function(c, y, pf.state).values, sigma_fraction, sigma_floor);
}

double wls_objective(const Eigen::VectorXd& z, const Eigen::VectorXd& h, const Eigen::VectorXd& weights) {
  return ((z - h).array().square() * weights.array()).sum();
}

Eigen::MatrixXd reduced_jacobian(const NetworkCase& c, const Eigen::MatrixXd& h_full) {
  const int n = c.num_buses();
  const int drop = n + c.slack_bus();
  Eigen::MatrixXd h(h_full.rows(), h_full.cols() - 1);
  h.leftCols(drop) = h_full.leftCols(drop);
  h.rightCols(h_full.cols() - drop - 1) = h_full.rightCols(h_full.cols() - drop - 1);
  return h;
}

namespace {

std::string state_label(const NetworkCase& c, int reduced_index) {
  const int n = c.num_buses();
  int full = reduced_index;
  if (full >= n + c.slack_bus()) ++full;
  std::ostringstream os;
  if (full < n)
    os << "vm[bus " << c.buses[full].label << "]";
  else
    os << "va[bus " << c.buses[full - n].label << "]";
  return os.str();
}

[[noreturn]] void report_unobservable(const NetworkCase& c, const Eigen::MatrixXd& gain) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gain);
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const double cutoff = std::max(vals.cwiseAbs().maxCoeff(), 1.0) * 1e-12;
  std::vector<std::string> directions;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals[i] > cutoff) continue;
    Eigen::Index arg = 0;
    eig.eigenvectors().col(i).cwiseAbs().maxCoeff(&arg);
    directions.push_back(state_label(c, static_cast<int>(arg)));
  }
  std::ostringstream os;
  os << "gain matrix is singular; unobservable directions:";
  for (const auto& d : directions) os << ' ' << d;
  throw ObservabilityError(os.str(), directions);
}

}  // namespace

WlsResult wls_estimate(const NetworkCase& c, const AdmittanceSet& y, const MeasurementVector& z,
                       const EstimatorConfig& cfg, const std::optional<StateVector>& x0) {
  const int n = c.num_buses();
  const int m = c.num_measurements();
  if (z.size() != m) throw std::invalid_argument("measurement vector length mismatch");
  const Eigen::VectorXd w = cfg.weights.size() ? cfg.weights : Eigen::VectorXd::Ones(m);
  if (w.size() != m || (w.array() <= 0).any()) throw std::invalid_argument("weights must be positive, one per channel");
  if (cfg.tol <= 0) throw std::invalid_argument("tol must be positive");

  const int slack_col = n + c.slack_bus();
  WlsResult res;
  res.state = x0 ? *x0 : StateVector::flat(n);
  if (res.state.size() != n) throw std::invalid_argument("initial state dimension mismatch");

  Eigen::VectorXd hx = measurement_function(c, y, res.state).values;
  res.objective = wls_objective(z.values, hx, w);

  for (;;) {
    const Eigen::MatrixXd h = reduced_jacobian(c, measurement_jacobian(c, y, res.state));
    const Eigen::VectorXd r = z.values - hx;
    const Eigen::VectorXd grad = h.transpose() * (w.asDiagonal() * r);
    res.gradient_norm = grad.cwiseAbs().maxCoeff();
    if (res.gradient_norm < cfg.tol) {
      res.converged = true;
      return res;
    }
    if (res.iterations >= cfg.max_iters) return res;

    const Eigen::MatrixXd gain = h.transpose() * w.asDiagonal() * h;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gain);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-15) report_unobservable(c, gain);
    const Eigen::VectorXd step = ldlt.solve(grad);

    Eigen::VectorXd dx = Eigen::VectorXd::Zero(2 * n);
    dx.head(slack_col) = step.head(slack_col);
    dx.tail(2 * n - slack_col - 1) = step.tail(2 * n - slack_col - 1);

    double alpha = 1.0;
    bool accepted = false;
    StateVector trial;
    Eigen::VectorXd h_trial;
    double obj_trial = 0.0;
    for (int halving = 0; halving <= cfg.max_halvings; ++halving, alpha *= 0.5) {
      trial = StateVector::from_stacked(res.state.stacked() + alpha * dx);
      if ((trial.vm.array() <= 0).any()) continue;
      h_trial = measurement_function(c, y, trial).values;
      obj_trial = wls_objective(z.values, h_trial, w);
      if (std::isfinite(obj_trial) && obj_trial <= res.objective) {
        accepted = true;
        break;
      }
    }
    const double step_size = alpha * dx.cwiseAbs().maxCoeff();
    if (!accepted) {
      // No descent along the Gauss-Newton direction: at the numerical floor.
      res.converged = dx.cwiseAbs().maxCoeff() < std::sqrt(cfg.step_tol);
      return res;
    }
    res.state = trial;
    hx = h_trial;
    res.objective = obj_trial;
    ++res.iterations;
    if (step_size < cfg.step_tol) {
      res.converged = true;
      const Eigen::VectorXd r2 = z.values - hx;
      res.gradient_norm = (h.transpose() * (w.asDiagonal() * r2)).cwiseAbs().maxCoeff();
      return res;
    }
  }
}

}  // namespace gridadv
