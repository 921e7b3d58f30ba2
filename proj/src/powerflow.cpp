#include "gridadv/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gridadv {

StateVector StateVector::flat(int n) { return {Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(n)}; }

Eigen::VectorXd StateVector::stacked() const {
  Eigen::VectorXd x(2 * vm.size());
  x << vm, va;
  return x;
}

StateVector StateVector::from_stacked(const Eigen::VectorXd& x) {
  const auto n = x.size() / 2;
  return {x.head(n), x.tail(n)};
}

bool MeasurementLayout::is_real_power(int i) const {
  if (i < 3 * num_buses) return i % 3 == 1;
  return ((i - 3 * num_buses) % 4) % 2 == 0;
}

namespace {

Eigen::VectorXcd phasors(const StateVector& x) {
  Eigen::VectorXcd v(x.vm.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = std::polar(x.vm[k], x.va[k]);
  return v;
}

}  // namespace

MeasurementVector measurement_function(const NetworkCase& c, const AdmittanceSet& y, const StateVector& x) {
  const MeasurementLayout layout(c);
  const Eigen::VectorXcd v = phasors(x);
  const Eigen::VectorXcd current = y.ybus * v;
  MeasurementVector z{Eigen::VectorXd(layout.size())};
  for (int k = 0; k < c.num_buses(); ++k) {
    const Complex s = v[k] * std::conj(current[k]);
    z.values[layout.vm(k)] = x.vm[k];
    z.values[layout.p(k)] = s.real();
    z.values[layout.q(k)] = s.imag();
  }
  for (const auto& br : c.branches) {
    const auto& k = y.branch[br.id];
    const Complex vf = v[br.from_bus];
    const Complex vt = v[br.to_bus];
    const Complex sf = vf * std::conj(k.ff * vf + k.ft * vt);
    const Complex st = vt * std::conj(k.tf * vf + k.tt * vt);
    z.values[layout.p_from(br.id)] = sf.real();
    z.values[layout.q_from(br.id)] = sf.imag();
    z.values[layout.p_to(br.id)] = st.real();
    z.values[layout.q_to(br.id)] = st.imag();
  }
  return z;
}

namespace {

struct BusSets {
  std::vector<int> pv, pq, pvpq;
};

BusSets classify(const NetworkCase& c) {
  BusSets s;
  for (const auto& b : c.buses) {
    if (b.type == BusType::PV) s.pv.push_back(b.id);
    if (b.type == BusType::PQ) s.pq.push_back(b.id);
    if (b.type != BusType::Slack) s.pvpq.push_back(b.id);
  }
  return s;
}

Eigen::VectorXd mismatch_vector(const Eigen::VectorXcd& s_calc, const Eigen::VectorXcd& s_spec, const BusSets& s) {
  Eigen::VectorXd f(s.pvpq.size() + s.pq.size());
  Eigen::Index r = 0;
  for (int k : s.pvpq) f[r++] = (s_calc[k] - s_spec[k]).real();
  for (int k : s.pq) f[r++] = (s_calc[k] - s_spec[k]).imag();
  return f;
}

}  // namespace

double power_mismatch(const NetworkCase& c, const AdmittanceSet& y, const StateVector& x,
                      const Eigen::VectorXcd& loads, const Eigen::VectorXd& gen_p) {
  const Eigen::VectorXcd v = phasors(x);
  const Eigen::VectorXcd s_calc = v.cwiseProduct((y.ybus * v).conjugate());
  const Eigen::VectorXcd s_spec = gen_p.cast<Complex>() - loads;
  const Eigen::VectorXd f = mismatch_vector(s_calc, s_spec, classify(c));
  return f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
}

PowerflowResult solve_powerflow(const NetworkCase& c, const AdmittanceSet& y, const Eigen::VectorXcd& loads,
                                const Eigen::VectorXd& gen_p, const PowerflowOptions& opts,
                                const StateVector* warm_start) {
  const int n = c.num_buses();
  if (loads.size() != n || gen_p.size() != n) throw std::invalid_argument("load/dispatch vectors must have N entries");
  const BusSets sets = classify(c);

  StateVector x = warm_start ? *warm_start : StateVector::flat(n);
  for (const auto& b : c.buses)
    if (b.type != BusType::PQ) x.vm[b.id] = b.vm_setpoint;
  x.va[c.slack_bus()] = warm_start ? warm_start->va[c.slack_bus()] : 0.0;

  const Eigen::VectorXcd s_spec = gen_p.cast<Complex>() - loads;
  const auto npvpq = static_cast<Eigen::Index>(sets.pvpq.size());
  const auto npq = static_cast<Eigen::Index>(sets.pq.size());

  double mismatch = 0.0;
  for (int iter = 0; iter <= opts.max_iters; ++iter) {
    const Eigen::VectorXcd v = phasors(x);
    const Eigen::VectorXcd ibus = y.ybus * v;
    const Eigen::VectorXcd s_calc = v.cwiseProduct(ibus.conjugate());
    const Eigen::VectorXd f = mismatch_vector(s_calc, s_spec, sets);
    mismatch = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(mismatch)) break;
    if (mismatch < opts.tol) return {x, iter, mismatch};
    if (iter == opts.max_iters) break;

    // dS/dVa and dS/dVm in polar form.
    const Eigen::VectorXcd vnorm = v.cwiseQuotient(x.vm.cast<Complex>());
    const Eigen::MatrixXcd ds_dva =
        Complex(0, 1) * v.asDiagonal() *
        (Eigen::MatrixXcd(ibus.asDiagonal()) - y.ybus * v.asDiagonal()).conjugate();
    const Eigen::MatrixXcd ds_dvm = v.asDiagonal() * (y.ybus * vnorm.asDiagonal()).conjugate() +
                                    Eigen::MatrixXcd(ibus.conjugate().asDiagonal()) * vnorm.asDiagonal();

    Eigen::MatrixXd jac(npvpq + npq, npvpq + npq);
    for (Eigen::Index r = 0; r < npvpq; ++r) {
      for (Eigen::Index col = 0; col < npvpq; ++col) jac(r, col) = ds_dva(sets.pvpq[r], sets.pvpq[col]).real();
      for (Eigen::Index col = 0; col < npq; ++col) jac(r, npvpq + col) = ds_dvm(sets.pvpq[r], sets.pq[col]).real();
    }
    for (Eigen::Index r = 0; r < npq; ++r) {
      for (Eigen::Index col = 0; col < npvpq; ++col) jac(npvpq + r, col) = ds_dva(sets.pq[r], sets.pvpq[col]).imag();
      for (Eigen::Index col = 0; col < npq; ++col) jac(npvpq + r, npvpq + col) = ds_dvm(sets.pq[r], sets.pq[col]).imag();
    }
    const Eigen::VectorXd dx = jac.partialPivLu().solve(f);
    if (!dx.allFinite()) break;
    for (Eigen::Index r = 0; r < npvpq; ++r) x.va[sets.pvpq[r]] -= dx[r];
    for (Eigen::Index r = 0; r < npq; ++r) x.vm[sets.pq[r]] -= dx[npvpq + r];
  }
  throw PowerflowError("power flow did not converge (max mismatch " + std::to_string(mismatch) + " pu)", mismatch,
                       opts.max_iters);
}

PowerflowResult solve_scaled_powerflow(const NetworkCase& c, const AdmittanceSet& y, double factor,
                                       const PowerflowOptions& opts, const StateVector* warm_start) {
  const int n = c.num_buses();
  Eigen::VectorXcd loads(n);
  Eigen::VectorXd gen(n);
  for (const auto& b : c.buses) {
    loads[b.id] = b.base_load * factor;
    gen[b.id] = b.gen_p * factor;
  }
  return solve_powerflow(c, y, loads, gen, opts, warm_start);
}

Eigen::VectorXd noise_sigma(const Eigen::VectorXd& values, double fraction, double floor) {
  return (values.cwiseAbs() * fraction).cwiseMax(floor);
}

std::vector<ScenarioSample> generate_scenarios(const NetworkCase& c, const AdmittanceSet& y,
                                               const ScenarioConfig& cfg, std::span<const double> profile,
                                               int workers, ScenarioLog* log) {
  if (cfg.num_samples < 1) throw std::invalid_argument("num_samples must be at least 1");
  if (cfg.load_scale_lo > cfg.load_scale_hi) throw std::invalid_argument("load scale bounds are inverted");
  if (profile.size() < static_cast<std::size_t>(cfg.num_samples))
    throw std::invalid_argument("load profile shorter than num_samples");

  const auto n = static_cast<std::size_t>(cfg.num_samples);
  std::vector<std::optional<ScenarioSample>> slots(n);
  std::vector<std::string> errors(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const double factor = std::clamp(profile[i], cfg.load_scale_lo, cfg.load_scale_hi);
    try {
      const auto pf = solve_scaled_powerflow(c, y, factor);
      ScenarioSample s;
      s.timestamp_index = static_cast<std::int64_t>(i);
      s.true_state = pf.state;
      s.measurements = measurement_function(c, y, pf.state);
      if (cfg.noise_sigma_fraction > 0) {
        const Eigen::VectorXd sigma = noise_sigma(s.measurements.values, cfg.noise_sigma_fraction, cfg.noise_sigma_floor);
        Rng rng = substream(cfg.seed, i);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index j = 0; j < sigma.size(); ++j) s.measurements.values[j] += sigma[j] * normal(rng);
      }
      slots[i] = std::move(s);
    } catch (const PowerflowError& e) {
      errors[i] = "sample " + std::to_string(i) + ": " + e.what();
    }
  });

  std::vector<ScenarioSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i])
      out.push_back(std::move(*slots[i]));
    else if (log)
      log->skipped.push_back(errors[i]);
  }
  return out;
}

}  // namespace gridadv
