#include "gridadv/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "gridadv/common.hpp"

namespace gridadv {

int ResidualHistogram::bin_of(double v) const {
  const int n = bins();
  const double t = (v - lo) / (hi - lo) * n;
  if (!(t > 0)) return 0;
  if (t >= n) return n - 1;
  return static_cast<int>(t);
}

ResidualHistogram make_histogram(const double* values, std::size_t n, double lo, double hi, int bins,
                                 double smoothing, int channel) {
  if (bins < 1 || !(hi > lo)) throw std::invalid_argument("histogram needs at least one bin and hi > lo");
  if (n == 0) throw std::invalid_argument("histogram of an empty sample");
  ResidualHistogram h;
  h.lo = lo;
  h.hi = hi;
  h.channel = channel;
  h.prob.assign(static_cast<std::size_t>(bins), 0.0);
  for (std::size_t i = 0; i < n; ++i) h.prob[static_cast<std::size_t>(h.bin_of(values[i]))] += 1.0;
  const double norm = 1.0 + bins * smoothing;
  for (auto& p : h.prob) p = (p / static_cast<double>(n) + smoothing) / norm;
  return h;
}

ResidualHistogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins,
                                 double smoothing, int channel) {
  return make_histogram(values.data(), values.size(), lo, hi, bins, smoothing, channel);
}

namespace {

void check_compatible(const ResidualHistogram& p, const ResidualHistogram& q) {
  if (p.bins() != q.bins() || p.lo != q.lo || p.hi != q.hi)
    throw std::invalid_argument("histograms do not share bin edges");
}

double sum_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) s += p[i] * std::log(p[i] / q[i]);
  return std::max(s, 0.0);
}

struct Range {
  double lo, hi;
};

Range span_of(const double* v, std::size_t n, double sigmas) {
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += v[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
  double sd = std::sqrt(var / static_cast<double>(std::max<std::size_t>(n - 1, 1)));
  if (!(sd > 0)) sd = 1.0;
  return {mean - sigmas * sd, mean + sigmas * sd};
}

Eigen::MatrixXd deltas(const Eigen::MatrixXd& w) {
  if (w.cols() < 2) throw std::invalid_argument("one-step deltas need at least two columns");
  return w.rightCols(w.cols() - 1) - w.leftCols(w.cols() - 1);
}

double threshold_from(std::vector<double> stats, double far) {
  if (stats.empty()) throw std::invalid_argument("no calibration windows");
  return nearest_rank_quantile(std::move(stats), 1.0 - far);
}

std::vector<double> window_statistics(const Eigen::MatrixXd& stream, const DivergenceConfig& cfg,
                                      const std::function<double(const Eigen::MatrixXd&)>& stat) {
  std::vector<double> out;
  for (Eigen::Index end = cfg.window; end <= stream.cols(); end += cfg.stride)
    out.push_back(stat(stream.middleCols(end - cfg.window, cfg.window)));
  return out;
}

void check_config(const DivergenceConfig& cfg) {
  if (cfg.window < 2 || cfg.bins < 1 || cfg.stride < 1 || !(cfg.far_target > 0 && cfg.far_target < 1))
    throw std::invalid_argument("invalid divergence detector configuration");
}

nlohmann::json histogram_to_json(const ResidualHistogram& h) {
  return {{"lo", h.lo}, {"hi", h.hi}, {"channel", h.channel}, {"prob", h.prob}};
}

ResidualHistogram histogram_from_json(const nlohmann::json& j) {
  ResidualHistogram h;
  h.lo = j.at("lo");
  h.hi = j.at("hi");
  h.channel = j.at("channel");
  h.prob = j.at("prob").get<std::vector<double>>();
  return h;
}

nlohmann::json config_to_json(const DivergenceConfig& c) {
  return {{"window", c.window}, {"bins", c.bins}, {"span_sigmas", c.span_sigmas},
          {"smoothing", c.smoothing}, {"far_target", c.far_target}, {"stride", c.stride}};
}

DivergenceConfig config_from_json(const nlohmann::json& j) {
  DivergenceConfig c;
  c.window = j.at("window");
  c.bins = j.at("bins");
  c.span_sigmas = j.at("span_sigmas");
  c.smoothing = j.at("smoothing");
  c.far_target = j.at("far_target");
  c.stride = j.at("stride");
  return c;
}

Eigen::MatrixXd take_columns(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

}  // namespace

double kl_divergence(const ResidualHistogram& p, const ResidualHistogram& q) {
  check_compatible(p, q);
  return sum_kl(p.prob, q.prob);
}

double js_divergence(const ResidualHistogram& p, const ResidualHistogram& q) {
  check_compatible(p, q);
  std::vector<double> m(p.prob.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (p.prob[i] + q.prob[i]);
  return std::min(0.5 * sum_kl(p.prob, m) + 0.5 * sum_kl(q.prob, m), std::log(2.0));
}

DetectorVerdict make_verdict(std::string detector, double statistic, double threshold) {
  return {statistic > threshold, statistic, threshold, std::move(detector)};
}

Eigen::VectorXd standardized_residuals(const NetworkCase& c, const AdmittanceSet& y, const MeasurementVector& z,
                                       const StateVector& x_hat, const Eigen::VectorXd& weights) {
  const Eigen::VectorXd h = measurement_function(c, y, x_hat).values;
  if (weights.size() != h.size()) throw std::invalid_argument("weights length mismatch");
  return ((z.values - h).array() * weights.array().sqrt()).matrix();
}

Eigen::MatrixXd power_transform(const Eigen::MatrixXd& r, double p) {
  if (p == 1.0) return r;
  return r.unaryExpr([p](double v) { return std::copysign(std::pow(std::abs(v), p), v); });
}

std::vector<Eigen::MatrixXd> sliding_windows(const Eigen::MatrixXd& stream, int window, int stride) {
  if (window < 1 || stride < 1) throw std::invalid_argument("window and stride must be positive");
  std::vector<Eigen::MatrixXd> out;
  for (Eigen::Index end = window; end <= stream.cols(); end += stride)
    out.emplace_back(stream.middleCols(end - window, window));
  return out;
}

KldDetector KldDetector::calibrate(const Eigen::MatrixXd& history, const Eigen::MatrixXd& calibration,
                                   const DivergenceConfig& cfg, double power, bool pooled) {
  check_config(cfg);
  if (!(power > 0)) throw std::invalid_argument("power must be positive");
  if (history.size() == 0 || calibration.rows() != history.rows())
    throw std::invalid_argument("history and calibration streams must share channels");
  KldDetector d;
  d.cfg_ = cfg;
  d.power_ = power;
  d.pooled_ = pooled;
  const Eigen::MatrixXd h = power_transform(history, power);
  if (pooled) {
    const auto r = span_of(h.data(), static_cast<std::size_t>(h.size()), cfg.span_sigmas);
    d.history_.push_back(make_histogram(h.data(), static_cast<std::size_t>(h.size()), r.lo, r.hi, cfg.bins,
                                        cfg.smoothing));
  } else {
    for (Eigen::Index ch = 0; ch < h.rows(); ++ch) {
      std::vector<double> v(h.row(ch).begin(), h.row(ch).end());
      const auto r = span_of(v.data(), v.size(), cfg.span_sigmas);
      d.history_.push_back(make_histogram(v, r.lo, r.hi, cfg.bins, cfg.smoothing, static_cast<int>(ch)));
    }
  }
  const auto stats = window_statistics(calibration, cfg, [&](const Eigen::MatrixXd& w) { return d.statistic(w); });
  d.calibration_windows_ = static_cast<int>(stats.size());
  d.threshold_ = threshold_from(stats, cfg.far_target);
  return d;
}

double KldDetector::statistic(const Eigen::MatrixXd& window) const {
  if (window.cols() == 0) throw std::invalid_argument("empty window");
  if (history_.empty()) throw std::logic_error("detector is not calibrated");
  const Eigen::MatrixXd t = power_transform(window, power_);
  if (pooled_) {
    const auto& h = history_.front();
    return kl_divergence(make_histogram(t.data(), static_cast<std::size_t>(t.size()), h.lo, h.hi, h.bins(),
                                        cfg_.smoothing),
                         h);
  }
  if (t.rows() != static_cast<Eigen::Index>(history_.size())) throw std::invalid_argument("window channel mismatch");
  double s = 0.0;
  for (Eigen::Index ch = 0; ch < t.rows(); ++ch) {
    const auto& h = history_[static_cast<std::size_t>(ch)];
    std::vector<double> v(t.row(ch).begin(), t.row(ch).end());
    s += kl_divergence(make_histogram(v, h.lo, h.hi, h.bins(), cfg_.smoothing, static_cast<int>(ch)), h);
  }
  return s / static_cast<double>(t.rows());
}

DetectorVerdict KldDetector::test(const Eigen::MatrixXd& window) const {
  return make_verdict(name(), statistic(window), threshold_);
}

nlohmann::json KldDetector::to_json() const {
  nlohmann::json hs = nlohmann::json::array();
  for (const auto& h : history_) hs.push_back(histogram_to_json(h));
  return {{"detector", name()},     {"config", config_to_json(cfg_)}, {"power", power_},
          {"pooled", pooled_},      {"threshold", threshold_},        {"calibration_windows", calibration_windows_},
          {"histograms", hs}};
}

KldDetector KldDetector::from_json(const nlohmann::json& j) {
  KldDetector d;
  d.cfg_ = config_from_json(j.at("config"));
  d.power_ = j.at("power");
  d.pooled_ = j.at("pooled");
  d.threshold_ = j.at("threshold");
  d.calibration_windows_ = j.at("calibration_windows");
  for (const auto& h : j.at("histograms")) d.history_.push_back(histogram_from_json(h));
  return d;
}

KsrsDetector KsrsDetector::calibrate(const Eigen::MatrixXd& history, const Eigen::MatrixXd& calibration,
                                     const DivergenceConfig& cfg, int k) {
  check_config(cfg);
  if (history.cols() < 2 || calibration.rows() != history.rows())
    throw std::invalid_argument("history and calibration streams must share channels");
  const int channels = static_cast<int>(history.rows());
  if (k <= 0) k = static_cast<int>(std::ceil(0.05 * channels));
  if (k > channels) throw std::invalid_argument("k exceeds the channel count");
  KsrsDetector d;
  d.cfg_ = cfg;
  d.k_ = k;
  const Eigen::MatrixXd dh = deltas(history);
  for (int ch = 0; ch < channels; ++ch) {
    std::vector<double> v(dh.row(ch).begin(), dh.row(ch).end());
    const auto r = span_of(v.data(), v.size(), cfg.span_sigmas);
    d.history_.push_back(make_histogram(v, r.lo, r.hi, cfg.bins, cfg.smoothing, ch));
  }
  const auto stats = window_statistics(calibration, cfg, [&](const Eigen::MatrixXd& w) { return d.statistic(w); });
  d.calibration_windows_ = static_cast<int>(stats.size());
  d.threshold_ = threshold_from(stats, cfg.far_target);
  return d;
}

Eigen::VectorXd KsrsDetector::channel_divergences(const Eigen::MatrixXd& window) const {
  if (history_.empty()) throw std::logic_error("detector is not calibrated");
  if (window.rows() != static_cast<Eigen::Index>(history_.size())) throw std::invalid_argument("window channel mismatch");
  const Eigen::MatrixXd dw = deltas(window);
  Eigen::VectorXd out(dw.rows());
  std::vector<double> v(static_cast<std::size_t>(dw.cols()));
  for (Eigen::Index ch = 0; ch < dw.rows(); ++ch) {
    for (Eigen::Index t = 0; t < dw.cols(); ++t) v[static_cast<std::size_t>(t)] = dw(ch, t);
    const auto& h = history_[static_cast<std::size_t>(ch)];
    out[ch] = js_divergence(make_histogram(v, h.lo, h.hi, h.bins(), cfg_.smoothing, static_cast<int>(ch)), h);
  }
  return out;
}

double KsrsDetector::statistic(const Eigen::MatrixXd& window, int k) const {
  const Eigen::VectorXd js = channel_divergences(window);
  if (k < 1 || k > js.size()) throw std::invalid_argument("k must lie in [1, channels]");
  std::vector<double> v(js.begin(), js.end());
  std::partial_sort(v.begin(), v.begin() + k, v.end(), std::greater<>());
  return std::accumulate(v.begin(), v.begin() + k, 0.0) / k;
}

double KsrsDetector::statistic(const Eigen::MatrixXd& window) const { return statistic(window, k_); }

DetectorVerdict KsrsDetector::test(const Eigen::MatrixXd& window) const {
  return make_verdict(name(), statistic(window), threshold_);
}

nlohmann::json KsrsDetector::to_json() const {
  nlohmann::json hs = nlohmann::json::array();
  for (const auto& h : history_) hs.push_back(histogram_to_json(h));
  return {{"detector", name()}, {"config", config_to_json(cfg_)}, {"k", k_}, {"threshold", threshold_},
          {"calibration_windows", calibration_windows_}, {"histograms", hs}};
}

KsrsDetector KsrsDetector::from_json(const nlohmann::json& j) {
  KsrsDetector d;
  d.cfg_ = config_from_json(j.at("config"));
  d.k_ = j.at("k");
  d.threshold_ = j.at("threshold");
  d.calibration_windows_ = j.at("calibration_windows");
  for (const auto& h : j.at("histograms")) d.history_.push_back(histogram_from_json(h));
  return d;
}

double detector_logit(const MlpModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.inputs()) throw std::invalid_argument("measurement length does not match the classifier");
  return model.net.forward(model.input.apply(z))(0, 0);
}

DetectorVerdict mlp_detect(const MlpModel& model, const Eigen::VectorXd& z) {
  const double p = 1.0 / (1.0 + std::exp(-detector_logit(model, z)));
  return make_verdict("mlp", p, 0.5);
}

double classification_accuracy(const MlpModel& model, const Eigen::MatrixXd& z, const std::vector<int>& labels) {
  if (z.cols() != static_cast<Eigen::Index>(labels.size()) || labels.empty())
    throw std::invalid_argument("labels do not match samples");
  const Eigen::MatrixXd logits = model.net.forward(model.input.apply(z));
  int right = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) right += (logits(0, static_cast<Eigen::Index>(i)) > 0) == (labels[i] != 0);
  return static_cast<double>(right) / static_cast<double>(labels.size());
}

MlpModel train_mlp_detector(const Eigen::MatrixXd& z, const std::vector<int>& labels, const DetectorTrainConfig& cfg,
                            DetectorTrainReport* report) {
  if (z.cols() != static_cast<Eigen::Index>(labels.size()) || z.cols() < 2)
    throw std::invalid_argument("need at least two labeled samples");
  const auto [train, test] = split_indices(static_cast<int>(z.cols()), cfg.train_fraction, cfg.seed);
  if (test.empty()) throw std::invalid_argument("held-out split is empty");
  auto pick = [&](const std::vector<int>& idx) {
    std::vector<int> out;
    for (int i : idx) out.push_back(labels[static_cast<std::size_t>(i)]);
    return out;
  };
  const Eigen::MatrixXd z_train = take_columns(z, train);
  const Eigen::MatrixXd z_test = take_columns(z, test);
  const auto y_train = pick(train);
  const auto y_test = pick(test);
  Eigen::MatrixXd target(1, z_train.cols());
  for (Eigen::Index i = 0; i < target.cols(); ++i) target(0, i) = y_train[static_cast<std::size_t>(i)] ? 1.0 : 0.0;

  MlpModel model;
  model.input = Standardizer::fit(z_train);
  model.output = Standardizer::identity(1);
  std::vector<int> sizes{static_cast<int>(z.rows())};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  model.net = Mlp(sizes, cfg.leaky_slope, cfg.seed);

  FitConfig fit;
  fit.batch_size = cfg.batch_size;
  fit.steps = cfg.max_steps;
  fit.learning_rate = cfg.learning_rate;
  fit.dropout = cfg.dropout;
  fit.seed = cfg.seed;
  double acc = 0.0;
  int steps = 0;
  auto stop = [&](int step) {
    if (step % cfg.eval_interval != 0 && step != cfg.max_steps) return false;
    acc = classification_accuracy(model, z_test, y_test);
    steps = step;
    return acc > cfg.accuracy_gate;
  };
  fit_mlp(model.net, model.input.apply(z_train), target, fit, logistic_loss, stop);
  if (steps == 0) acc = classification_accuracy(model, z_test, y_test);

  DetectorTrainReport r{acc, steps, static_cast<int>(train.size()), static_cast<int>(test.size())};
  if (report) *report = r;
  if (!(acc > cfg.accuracy_gate))
    throw DetectorTrainingError("classifier reached held-out accuracy " + std::to_string(acc) + " after " +
                                std::to_string(steps) + " steps, below the gate of " +
                                std::to_string(cfg.accuracy_gate) + "; more attacked training data is needed");
  model.metadata = {{"kind", "mlp_detector"},
                    {"training", {{"test_accuracy", acc}, {"steps", steps}, {"train_count", r.train_count},
                                  {"test_count", r.test_count}}}};
  return model;
}

double bypass_probability(const std::vector<bool>& flagged) {
  if (flagged.empty()) throw std::invalid_argument("no attacked samples");
  const auto missed = std::count(flagged.begin(), flagged.end(), false);
  return static_cast<double>(missed) / static_cast<double>(flagged.size());
}

double bypass_probability(const std::vector<DetectorVerdict>& verdicts) {
  std::vector<bool> f;
  f.reserve(verdicts.size());
  for (const auto& v : verdicts) f.push_back(v.attacked);
  return bypass_probability(f);
}

}  // namespace gridadv
