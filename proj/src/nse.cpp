#include "gridadv/nse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gridadv/common.hpp"

namespace gridadv {

namespace {

constexpr char kModelMagic[8] = {'G', 'A', 'M', 'O', 'D', 'E', 'L', '1'};

Eigen::MatrixXd take_columns(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

}  // namespace

void save_model(const std::filesystem::path& path, const MlpModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kModelMagic, sizeof kModelMagic);
  model.net.write(out);
  write_standardizer(out, model.input);
  write_standardizer(out, model.output);
  if (!out) throw std::runtime_error("failed writing " + path.string());
  out.close();
  write_text_file(path.string() + ".json", model.metadata.dump(2) + "\n");
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[sizeof kModelMagic];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + sizeof magic, kModelMagic))
    throw std::runtime_error(path.string() + " is not a model file");
  MlpModel m;
  m.net = Mlp::read(in);
  m.input = read_standardizer(in);
  m.output = read_standardizer(in);
  if (m.input.size() != m.net.inputs() || m.output.size() != m.net.outputs())
    throw std::runtime_error("normalization blocks do not match the network");
  const auto sidecar = path.string() + ".json";
  if (std::filesystem::exists(sidecar)) m.metadata = nlohmann::json::parse(read_text_file(sidecar));
  return m;
}

nlohmann::json to_json(const NseTrainConfig& cfg) {
  return {{"batch_size", cfg.batch_size},
          {"steps", cfg.steps},
          {"learning_rate", cfg.learning_rate},
          {"dropout", cfg.dropout},
          {"huber_gamma", cfg.huber_gamma},
          {"huber_mode", cfg.huber_mode == HuberMode::Vector ? "vector" : "componentwise"},
          {"hidden", cfg.hidden},
          {"leaky_slope", cfg.leaky_slope},
          {"train_fraction", cfg.train_fraction},
          {"scale_floor", cfg.scale_floor},
          {"seed", cfg.seed}};
}

NseTrainConfig nse_config_from_json(const nlohmann::json& j) {
  NseTrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps = j.value("steps", c.steps);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.dropout = j.value("dropout", c.dropout);
  c.huber_gamma = j.value("huber_gamma", c.huber_gamma);
  c.huber_mode = j.value("huber_mode", std::string("vector")) == "vector" ? HuberMode::Vector : HuberMode::Componentwise;
  c.hidden = j.value("hidden", c.hidden);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.scale_floor = j.value("scale_floor", c.scale_floor);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::pair<std::vector<int>, std::vector<int>> split_indices(int count, double train_fraction, std::uint64_t seed) {
  if (train_fraction <= 0 || train_fraction > 1) throw std::invalid_argument("train_fraction must lie in (0, 1]");
  std::vector<int> idx(static_cast<std::size_t>(count));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = substream(seed, 3);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * count));
  return {std::vector<int>(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train)),
          std::vector<int>(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end())};
}

MlpModel train_nse(const Eigen::MatrixXd& z, const Eigen::MatrixXd& x, const NseTrainConfig& cfg,
                   NseReport* report) {
  if (z.cols() != x.cols() || z.cols() < 2) throw std::invalid_argument("need at least two paired samples");
  if (cfg.huber_gamma <= 0) throw std::invalid_argument("huber_gamma must be positive");
  const auto [train, test] = split_indices(static_cast<int>(z.cols()), cfg.train_fraction, cfg.seed);
  const Eigen::MatrixXd z_train = take_columns(z, train);
  const Eigen::MatrixXd x_train = take_columns(x, train);

  MlpModel model;
  model.input = Standardizer::fit(z_train, cfg.scale_floor);
  model.output = Standardizer::fit(x_train, cfg.scale_floor);
  std::vector<int> sizes{static_cast<int>(z.rows())};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(static_cast<int>(x.rows()));
  model.net = Mlp(sizes, cfg.leaky_slope, cfg.seed);

  FitConfig fit;
  fit.batch_size = cfg.batch_size;
  fit.steps = cfg.steps;
  fit.learning_rate = cfg.learning_rate;
  fit.dropout = cfg.dropout;
  fit.seed = cfg.seed;
  const double gamma = cfg.huber_gamma;
  BatchLoss loss = cfg.huber_mode == HuberMode::Vector
                       ? BatchLoss([gamma](const auto& o, const auto& t, auto& g) { return vector_huber(o, t, gamma, g); })
                       : BatchLoss([gamma](const auto& o, const auto& t, auto& g) {
                           return componentwise_huber(o, t, gamma, g);
                         });
  const auto trace = fit_mlp(model.net, model.input.apply(z_train), model.output.apply(x_train), fit, loss);

  NseReport r;
  r.initial_loss = trace.initial_loss;
  r.final_loss = trace.final_loss;
  r.steps = trace.steps;
  r.train_count = static_cast<int>(train.size());
  r.test_count = static_cast<int>(test.size());
  if (!test.empty()) {
    const Eigen::MatrixXd err = predict_batch(model, take_columns(z, test)) - take_columns(x, test);
    r.test_rmse = std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
    r.test_max_abs = err.cwiseAbs().maxCoeff();
  }
  model.metadata = {{"kind", "nse"}, {"config", to_json(cfg)},
                    {"training", {{"initial_loss", r.initial_loss}, {"final_loss", r.final_loss},
                                  {"test_rmse", r.test_rmse}, {"test_max_abs", r.test_max_abs},
                                  {"train_count", r.train_count}, {"test_count", r.test_count}}}};
  if (report) *report = r;
  return model;
}

Eigen::MatrixXd predict_batch(const MlpModel& model, const Eigen::MatrixXd& z) {
  return model.output.invert(model.net.forward(model.input.apply(z)));
}

Eigen::VectorXd predict(const MlpModel& model, const Eigen::VectorXd& z) { return predict_batch(model, z); }

Eigen::MatrixXd input_jacobian(const MlpModel& model, const Eigen::VectorXd& z) {
  const Eigen::VectorXd zn = model.input.apply(z);
  return model.output.scale.asDiagonal() * model.net.input_jacobian(zn) *
         model.input.scale.cwiseInverse().asDiagonal();
}

}  // namespace gridadv
