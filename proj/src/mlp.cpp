#include "gridadv/mlp.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

namespace gridadv {

Standardizer Standardizer::fit(const Eigen::MatrixXd& data, double floor) {
  if (data.cols() == 0) throw std::invalid_argument("cannot fit normalization on an empty set");
  Standardizer s;
  s.mean = data.rowwise().mean();
  const Eigen::MatrixXd centered = data.colwise() - s.mean;
  s.scale = (centered.array().square().rowwise().sum() / static_cast<double>(data.cols())).sqrt().matrix();
  s.scale = s.scale.cwiseMax(floor);
  return s;
}

Standardizer Standardizer::identity(int n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)}; }

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& v) const {
  if (v.rows() != mean.size()) throw std::invalid_argument("normalization dimension mismatch");
  return (v.colwise() - mean).array().colwise() / scale.array();
}

Eigen::MatrixXd Standardizer::invert(const Eigen::MatrixXd& v) const {
  if (v.rows() != mean.size()) throw std::invalid_argument("normalization dimension mismatch");
  return (v.array().colwise() * scale.array()).matrix().colwise() + mean;
}

Mlp::Mlp(std::vector<int> sizes, double leaky_slope, std::uint64_t seed) : sizes_(std::move(sizes)), alpha_(leaky_slope) {
  if (sizes_.size() < 2) throw std::invalid_argument("an MLP needs at least input and output sizes");
  for (int s : sizes_)
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  Rng rng = substream(seed, 0);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double gain = l + 2 < sizes_.size() ? std::sqrt(2.0 / (1.0 + alpha_ * alpha_)) : 1.0;
    std::normal_distribution<double> g(0.0, gain / std::sqrt(static_cast<double>(in)));
    Eigen::MatrixXd w(out, in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = g(rng);
    weights.push_back(std::move(w));
    biases.push_back(Eigen::VectorXd::Zero(out));
  }
}

namespace {

void leaky_inplace(Eigen::MatrixXd& m, double alpha) {
  m = m.unaryExpr([alpha](double v) { return v > 0 ? v : alpha * v; });
}

Eigen::MatrixXd leaky_slope_of(const Eigen::MatrixXd& pre, double alpha) {
  return pre.unaryExpr([alpha](double v) { return v > 0 ? 1.0 : alpha; });
}

}  // namespace

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != inputs()) throw std::invalid_argument("input dimension mismatch");
  Eigen::MatrixXd a = x;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weights[l] * a;
    z.colwise() += biases[l];
    if (l + 1 < num_layers()) leaky_inplace(z, alpha_);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_train(const Eigen::MatrixXd& x, double dropout, Rng& rng, Tape& tape) const {
  if (x.rows() != inputs()) throw std::invalid_argument("input dimension mismatch");
  tape.inputs.assign(num_layers(), {});
  tape.pre.assign(num_layers() - 1, {});
  tape.masks.assign(num_layers() - 1, {});
  std::bernoulli_distribution keep(1.0 - dropout);
  const double inv_keep = dropout > 0 ? 1.0 / (1.0 - dropout) : 1.0;
  Eigen::MatrixXd a = x;
  for (int l = 0; l < num_layers(); ++l) {
    tape.inputs[l] = a;
    Eigen::MatrixXd z = weights[l] * a;
    z.colwise() += biases[l];
    if (l + 1 == num_layers()) return z;
    tape.pre[l] = z;
    leaky_inplace(z, alpha_);
    if (dropout > 0) {
      Eigen::MatrixXd mask(z.rows(), z.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? inv_keep : 0.0;
      z.array() *= mask.array();
      tape.masks[l] = std::move(mask);
    }
    a = std::move(z);
  }
  return a;
}

void Mlp::backward(const Tape& tape, const Eigen::MatrixXd& d_out, Gradients& g) const {
  g.weights.resize(num_layers());
  g.biases.resize(num_layers());
  Eigen::MatrixXd delta = d_out;
  for (int l = num_layers() - 1; l >= 0; --l) {
    g.weights[l].noalias() = delta * tape.inputs[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd up = weights[l].transpose() * delta;
    if (tape.masks[l - 1].size()) up.array() *= tape.masks[l - 1].array();
    up.array() *= leaky_slope_of(tape.pre[l - 1], alpha_).array();
    delta = std::move(up);
  }
}

Eigen::MatrixXd Mlp::input_jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != inputs()) throw std::invalid_argument("input dimension mismatch");
  std::vector<Eigen::VectorXd> slopes;
  Eigen::VectorXd a = x;
  for (int l = 0; l + 1 < num_layers(); ++l) {
    Eigen::VectorXd z = weights[l] * a + biases[l];
    slopes.push_back(z.unaryExpr([this](double v) { return v > 0 ? 1.0 : alpha_; }));
    a = z.unaryExpr([this](double v) { return v > 0 ? v : alpha_ * v; });
  }
  // Reverse sweep carrying all output rows at once.
  Eigen::MatrixXd g = weights.back();
  for (int l = num_layers() - 2; l >= 0; --l) {
    g = g * slopes[l].asDiagonal();
    g = g * weights[l];
  }
  return g;
}

double Mlp::kink_distance(const Eigen::VectorXd& x) const {
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd a = x;
  for (int l = 0; l + 1 < num_layers(); ++l) {
    Eigen::VectorXd z = weights[l] * a + biases[l];
    best = std::min(best, z.cwiseAbs().minCoeff());
    a = z.unaryExpr([this](double v) { return v > 0 ? v : alpha_ * v; });
  }
  return best;
}

namespace {

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated model stream");
  return v;
}

void put_block(std::ostream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_block(std::istream& in, double* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("truncated model stream");
}

constexpr std::uint32_t kMlpMagic = 0x504c4d47;  // "GMLP"
constexpr std::uint32_t kMlpVersion = 1;

}  // namespace

void Mlp::write(std::ostream& out) const {
  put(out, kMlpMagic);
  put(out, kMlpVersion);
  put(out, static_cast<std::uint32_t>(sizes_.size()));
  for (int s : sizes_) put(out, static_cast<std::uint32_t>(s));
  put(out, alpha_);
  for (int l = 0; l < num_layers(); ++l) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = weights[l];
    put_block(out, rm.data(), static_cast<std::size_t>(rm.size()));
    put_block(out, biases[l].data(), static_cast<std::size_t>(biases[l].size()));
  }
}

Mlp Mlp::read(std::istream& in) {
  if (get<std::uint32_t>(in) != kMlpMagic) throw std::runtime_error("not a model stream");
  if (const auto v = get<std::uint32_t>(in); v != kMlpVersion)
    throw std::runtime_error("unsupported model version " + std::to_string(v));
  const auto count = get<std::uint32_t>(in);
  if (count < 2 || count > 64) throw std::runtime_error("corrupt layer count");
  Mlp m;
  for (std::uint32_t i = 0; i < count; ++i) m.sizes_.push_back(static_cast<int>(get<std::uint32_t>(in)));
  m.alpha_ = get<double>(in);
  for (std::size_t l = 0; l + 1 < m.sizes_.size(); ++l) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(m.sizes_[l + 1], m.sizes_[l]);
    get_block(in, rm.data(), static_cast<std::size_t>(rm.size()));
    Eigen::VectorXd b(m.sizes_[l + 1]);
    get_block(in, b.data(), static_cast<std::size_t>(b.size()));
    m.weights.emplace_back(rm);
    m.biases.push_back(std::move(b));
  }
  return m;
}

void write_standardizer(std::ostream& out, const Standardizer& s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  put_block(out, s.mean.data(), static_cast<std::size_t>(s.size()));
  put_block(out, s.scale.data(), static_cast<std::size_t>(s.size()));
}

Standardizer read_standardizer(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 24)) throw std::runtime_error("corrupt normalization block");
  Standardizer s{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  get_block(in, s.mean.data(), n);
  get_block(in, s.scale.data(), n);
  if ((s.scale.array() <= 0).any()) throw std::runtime_error("normalization scales must be positive");
  return s;
}

Adam::Adam(const Mlp& model, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (int l = 0; l < model.num_layers(); ++l) {
    m_.weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    m_.biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
  }
  v_ = m_;
}

void Adam::step(Mlp& model, const Mlp::Gradients& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  const double eps_hat = eps_ * std::sqrt(c2);
  auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= step * m.array() / (v.array().sqrt() + eps_hat);
  };
  for (int l = 0; l < model.num_layers(); ++l) {
    update(model.weights[l], m_.weights[l], v_.weights[l], g.weights[l]);
    update(model.biases[l], m_.biases[l], v_.biases[l], g.biases[l]);
  }
}

double vector_huber(const Eigen::MatrixXd& out, const Eigen::MatrixXd& target, double gamma, Eigen::MatrixXd& grad) {
  const Eigen::MatrixXd d = out - target;
  grad.resize(d.rows(), d.cols());
  const double n = static_cast<double>(d.cols());
  double total = 0.0;
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    const double l1 = d.col(j).cwiseAbs().sum();
    if (l1 < gamma) {
      total += 0.5 * d.col(j).squaredNorm();
      grad.col(j) = d.col(j) / n;
    } else {
      total += gamma * (l1 - 0.5 * gamma);
      grad.col(j) = gamma * d.col(j).unaryExpr([](double v) { return static_cast<double>((v > 0) - (v < 0)); }) / n;
    }
  }
  return total / n;
}

double componentwise_huber(const Eigen::MatrixXd& out, const Eigen::MatrixXd& target, double gamma,
                           Eigen::MatrixXd& grad) {
  const Eigen::MatrixXd d = out - target;
  const double n = static_cast<double>(d.cols());
  grad = d.unaryExpr([gamma](double v) { return std::abs(v) <= gamma ? v : gamma * ((v > 0) - (v < 0)); }) / n;
  const double total =
      d.unaryExpr([gamma](double v) { return std::abs(v) <= gamma ? 0.5 * v * v : gamma * (std::abs(v) - 0.5 * gamma); })
          .sum();
  return total / n;
}

double logistic_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& target, Eigen::MatrixXd& grad) {
  const double n = static_cast<double>(logits.cols());
  grad.resize(logits.rows(), logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double z = logits.data()[i];
    const double t = target.data()[i];
    // log(1 + e^z) - t z, evaluated stably.
    total += std::max(z, 0.0) - t * z + std::log1p(std::exp(-std::abs(z)));
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    grad.data()[i] = (p - t) / n;
  }
  return total / n;
}

FitTrace fit_mlp(Mlp& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const FitConfig& cfg,
                 const BatchLoss& loss, const std::function<bool(int)>& stop) {
  if (x.cols() != y.cols() || x.cols() == 0) throw std::invalid_argument("training inputs and targets disagree");
  if (cfg.dropout < 0 || cfg.dropout >= 1) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (cfg.batch_size < 1 || cfg.steps < 0) throw std::invalid_argument("bad batch size or step count");
  FitTrace trace;
  Eigen::MatrixXd grad;
  trace.initial_loss = loss(model.forward(x), y, grad);

  Rng rng = substream(cfg.seed, 1);
  Rng drop_rng = substream(cfg.seed, 2);
  Adam opt(model, cfg.learning_rate);
  std::vector<int> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  const int batch = std::min<int>(cfg.batch_size, static_cast<int>(x.cols()));
  Eigen::MatrixXd xb(x.rows(), batch), yb(y.rows(), batch);
  Mlp::Tape tape;
  Mlp::Gradients g;
  for (int step = 0; step < cfg.steps; ++step) {
    for (int b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      xb.col(b) = x.col(order[cursor]);
      yb.col(b) = y.col(order[cursor]);
      ++cursor;
    }
    const Eigen::MatrixXd out = model.forward_train(xb, cfg.dropout, drop_rng, tape);
    const double l = loss(out, yb, grad);
    if (!std::isfinite(l)) throw DivergenceError(step);
    model.backward(tape, grad, g);
    opt.step(model, g);
    trace.steps = step + 1;
    if (stop && stop(step + 1)) break;
  }
  trace.final_loss = loss(model.forward(x), y, grad);
  if (!std::isfinite(trace.final_loss)) throw DivergenceError(trace.steps);
  return trace;
}

}  // namespace gridadv
