#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridadv/common.hpp"

namespace gridadv {

/// Per-channel affine map v -> (v - mean) / scale.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  /// Columns of `data` are samples. Scales below `floor` are raised to it.
  static Standardizer fit(const Eigen::MatrixXd& data, double floor = 1e-6);
  static Standardizer identity(int n);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& v) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& v) const;
  int size() const { return static_cast<int>(mean.size()); }
};

/// Fully connected network with leaky-rectifier hidden layers and a linear
/// output layer. Samples are columns.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes, double leaky_slope, std::uint64_t seed);

  const std::vector<int>& sizes() const { return sizes_; }
  int inputs() const { return sizes_.front(); }
  int outputs() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  double leaky_slope() const { return alpha_; }

  std::vector<Eigen::MatrixXd> weights;  ///< layer l: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  struct Tape {
    std::vector<Eigen::MatrixXd> inputs;  ///< input to each layer (after dropout)
    std::vector<Eigen::MatrixXd> pre;     ///< pre-activations of hidden layers
    std::vector<Eigen::MatrixXd> masks;   ///< inverted-dropout masks
  };
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& x, double dropout, Rng& rng, Tape& tape) const;

  struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
  };
  /// Backpropagates dL/d(output) through the recorded tape.
  void backward(const Tape& tape, const Eigen::MatrixXd& d_out, Gradients& g) const;

  /// d(output)/d(input) at x (no dropout), outputs x inputs.
  Eigen::MatrixXd input_jacobian(const Eigen::VectorXd& x) const;
  /// Smallest |pre-activation| over hidden units at x.
  double kink_distance(const Eigen::VectorXd& x) const;

  void write(std::ostream& out) const;
  static Mlp read(std::istream& in);

 private:
  std::vector<int> sizes_;
  double alpha_ = 0.01;
};

class Adam {
 public:
  Adam(const Mlp& model, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Mlp& model, const Mlp::Gradients& g);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Mlp::Gradients m_, v_;
};

/// Loss over a batch: returns the mean loss and writes dL/d(output).
using BatchLoss = std::function<double(const Eigen::MatrixXd& out, const Eigen::MatrixXd& target, Eigen::MatrixXd& grad)>;

struct FitConfig {
  int batch_size = 256;
  int steps = 1000;
  double learning_rate = 1e-3;
  double dropout = 0.0;
  std::uint64_t seed = 1;
};

struct FitTrace {
  double initial_loss = 0.0;  ///< full training-set loss before the first step
  double final_loss = 0.0;
  int steps = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int step) : std::runtime_error("training diverged (non-finite loss) at step " + std::to_string(step)), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Minibatch Adam over columns of x / y. `stop(step)` may end training early.
FitTrace fit_mlp(Mlp& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const FitConfig& cfg,
                 const BatchLoss& loss, const std::function<bool(int)>& stop = {});

/// Vector-level Huber: 0.5||d||^2 if ||d||_1 < gamma else gamma(||d||_1 - gamma/2), per sample.
double vector_huber(const Eigen::MatrixXd& out, const Eigen::MatrixXd& target, double gamma, Eigen::MatrixXd& grad);
/// Classical per-component Huber summed over components, averaged over samples.
double componentwise_huber(const Eigen::MatrixXd& out, const Eigen::MatrixXd& target, double gamma,
                           Eigen::MatrixXd& grad);
/// Binary cross-entropy on logits (row vector out, targets in {0,1}).
double logistic_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& target, Eigen::MatrixXd& grad);

void write_standardizer(std::ostream& out, const Standardizer& s);
Standardizer read_standardizer(std::istream& in);

}  // namespace gridadv
