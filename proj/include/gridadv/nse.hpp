#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridadv/mlp.hpp"
#include "json.hpp"

namespace gridadv {

/// Network plus input/output normalization; shared by the state estimator
/// substitute and the detector classifier.
struct MlpModel {
  Mlp net;
  Standardizer input;
  Standardizer output;
  nlohmann::json metadata = nlohmann::json::object();

  int inputs() const { return net.inputs(); }
  int outputs() const { return net.outputs(); }
};

void save_model(const std::filesystem::path& path, const MlpModel& model);
/// Reads the binary model and, if present, the JSON sidecar next to it.
MlpModel load_model(const std::filesystem::path& path);

enum class HuberMode { Vector, Componentwise };

struct NseTrainConfig {
  int batch_size = 256;
  int steps = 50000;
  double learning_rate = 1e-3;
  double dropout = 0.2;
  double huber_gamma = 1.0;
  HuberMode huber_mode = HuberMode::Vector;
  std::vector<int> hidden{512, 512};
  double leaky_slope = 0.01;
  double train_fraction = 0.8;
  double scale_floor = 1e-6;
  std::uint64_t seed = 1;
};

nlohmann::json to_json(const NseTrainConfig& cfg);
NseTrainConfig nse_config_from_json(const nlohmann::json& j);

struct NseReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double test_rmse = 0.0;
  double test_max_abs = 0.0;
  int train_count = 0;
  int test_count = 0;
  int steps = 0;
};

/// Columns of `z` are region measurements, columns of `x` the matching region
/// state estimates.
MlpModel train_nse(const Eigen::MatrixXd& z, const Eigen::MatrixXd& x, const NseTrainConfig& cfg,
                   NseReport* report = nullptr);

Eigen::VectorXd predict(const MlpModel& model, const Eigen::VectorXd& z);
Eigen::MatrixXd predict_batch(const MlpModel& model, const Eigen::MatrixXd& z);

/// d(prediction)/d(raw input), outputs x inputs.
Eigen::MatrixXd input_jacobian(const MlpModel& model, const Eigen::VectorXd& z);

/// Deterministic split of `count` indices into (train, test).
std::pair<std::vector<int>, std::vector<int>> split_indices(int count, double train_fraction, std::uint64_t seed);

}  // namespace gridadv
