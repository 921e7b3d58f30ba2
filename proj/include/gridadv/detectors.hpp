#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridadv/nse.hpp"
#include "gridadv/powerflow.hpp"
#include "json.hpp"

namespace gridadv {

/// Uniform-bin histogram with Laplace-smoothed probabilities. Values outside
/// [lo, hi) land in the edge bins.
struct ResidualHistogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> prob;
  int channel = -1;  ///< -1 when pooled over channels

  int bins() const { return static_cast<int>(prob.size()); }
  int bin_of(double v) const;
};

ResidualHistogram make_histogram(const double* values, std::size_t n, double lo, double hi, int bins,
                                 double smoothing = 1e-6, int channel = -1);
ResidualHistogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins,
                                 double smoothing = 1e-6, int channel = -1);

/// Natural-log divergences; histograms must share bin edges.
double kl_divergence(const ResidualHistogram& p, const ResidualHistogram& q);
double js_divergence(const ResidualHistogram& p, const ResidualHistogram& q);

struct DetectorVerdict {
  bool attacked = false;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detector;
};

DetectorVerdict make_verdict(std::string detector, double statistic, double threshold);

/// (z - h(x_hat)) scaled by sqrt(weights): residuals in units of sigma.
Eigen::VectorXd standardized_residuals(const NetworkCase& c, const AdmittanceSet& y, const MeasurementVector& z,
                                       const StateVector& x_hat, const Eigen::VectorXd& weights);

/// Sign-preserving |r|^p sign(r), elementwise.
Eigen::MatrixXd power_transform(const Eigen::MatrixXd& r, double p);

struct DivergenceConfig {
  int window = 50;
  int bins = 64;
  double span_sigmas = 6.0;
  double smoothing = 1e-6;
  double far_target = 0.02;
  int stride = 1;  ///< spacing of calibration windows
};

/// KL divergence between the residual distribution of a window (channels x
/// window columns) and the historical one. power = 1 is the plain test,
/// power != 1 the transformed variant.
class KldDetector {
 public:
  KldDetector() = default;
  static KldDetector calibrate(const Eigen::MatrixXd& history, const Eigen::MatrixXd& calibration,
                               const DivergenceConfig& cfg, double power = 1.0, bool pooled = true);

  double statistic(const Eigen::MatrixXd& window) const;
  DetectorVerdict test(const Eigen::MatrixXd& window) const;

  std::string name() const { return power_ == 1.0 ? "kld" : "transformed_kld"; }
  double threshold() const { return threshold_; }
  double power() const { return power_; }
  int window() const { return cfg_.window; }
  bool pooled() const { return pooled_; }
  const std::vector<ResidualHistogram>& history() const { return history_; }

  nlohmann::json to_json() const;
  static KldDetector from_json(const nlohmann::json& j);

 private:
  DivergenceConfig cfg_;
  double power_ = 1.0;
  bool pooled_ = true;
  std::vector<ResidualHistogram> history_;
  double threshold_ = 0.0;
  int calibration_windows_ = 0;
};

/// Mean of the k largest per-channel Jensen-Shannon divergences between the
/// one-step residual deltas of a window and their historical distribution.
class KsrsDetector {
 public:
  KsrsDetector() = default;
  /// k <= 0 picks ceil(5% of channels).
  static KsrsDetector calibrate(const Eigen::MatrixXd& history, const Eigen::MatrixXd& calibration,
                                const DivergenceConfig& cfg, int k = 0);

  double statistic(const Eigen::MatrixXd& window) const;
  /// Statistic with an explicit k, same histograms.
  double statistic(const Eigen::MatrixXd& window, int k) const;
  /// Per-channel divergences of a window.
  Eigen::VectorXd channel_divergences(const Eigen::MatrixXd& window) const;
  DetectorVerdict test(const Eigen::MatrixXd& window) const;

  std::string name() const { return "ksrs"; }
  double threshold() const { return threshold_; }
  int k() const { return k_; }
  int window() const { return cfg_.window; }

  nlohmann::json to_json() const;
  static KsrsDetector from_json(const nlohmann::json& j);

 private:
  DivergenceConfig cfg_;
  int k_ = 1;
  std::vector<ResidualHistogram> history_;
  double threshold_ = 0.0;
  int calibration_windows_ = 0;
};

/// Windows of `stream` (channels x time) ending at each column index in
/// [window - 1, cols) with the given stride.
std::vector<Eigen::MatrixXd> sliding_windows(const Eigen::MatrixXd& stream, int window, int stride = 1);

struct DetectorTrainConfig {
  std::vector<int> hidden{256, 128, 64};
  double dropout = 0.1;
  double leaky_slope = 0.01;
  double learning_rate = 1e-3;
  int batch_size = 256;
  int max_steps = 20000;
  int eval_interval = 250;
  double accuracy_gate = 0.98;
  double train_fraction = 0.8;
  std::uint64_t seed = 5;
};

class DetectorTrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DetectorTrainReport {
  double test_accuracy = 0.0;
  int steps = 0;
  int train_count = 0;
  int test_count = 0;
};

/// Columns of `z` are full measurement vectors, labels 1 = attacked. Throws
/// DetectorTrainingError if the held-out accuracy never exceeds the gate.
MlpModel train_mlp_detector(const Eigen::MatrixXd& z, const std::vector<int>& labels,
                            const DetectorTrainConfig& cfg, DetectorTrainReport* report = nullptr);

double detector_logit(const MlpModel& model, const Eigen::VectorXd& z);
/// Attacked iff sigmoid(logit) > 0.5; exactly 0.5 is benign.
DetectorVerdict mlp_detect(const MlpModel& model, const Eigen::VectorXd& z);
double classification_accuracy(const MlpModel& model, const Eigen::MatrixXd& z, const std::vector<int>& labels);

/// Fraction of attacked samples the detector marks benign.
double bypass_probability(const std::vector<DetectorVerdict>& verdicts);
double bypass_probability(const std::vector<bool>& flagged);

}  // namespace gridadv
