#include <sstream>

#include "doctest.h"
#include "gridadv/nse.hpp"

using namespace gridadv;

namespace {

MlpModel random_model(std::vector<int> sizes, std::uint64_t seed, double alpha = 0.01) {
  MlpModel m;
  m.net = Mlp(sizes, alpha, seed);
  Rng rng = substream(seed, 99);
  std::normal_distribution<double> g;
  for (auto& b : m.net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = 0.1 * g(rng);
  m.input = Standardizer{Eigen::VectorXd::Random(sizes.front()), Eigen::VectorXd::Constant(sizes.front(), 0.5)};
  m.output = Standardizer{Eigen::VectorXd::Random(sizes.back()), Eigen::VectorXd::Constant(sizes.back(), 2.0)};
  return m;
}

Eigen::MatrixXd central_jacobian(const MlpModel& m, const Eigen::VectorXd& z, double h) {
  Eigen::MatrixXd fd(m.outputs(), m.inputs());
  for (int j = 0; j < m.inputs(); ++j) {
    Eigen::VectorXd up = z, dn = z;
    up[j] += h;
    dn[j] -= h;
    fd.col(j) = (predict(m, up) - predict(m, dn)) / (2 * h);
  }
  return fd;
}

}  // namespace

TEST_SUITE("nse") {
  TEST_CASE("default training configuration") {
    const NseTrainConfig cfg;
    CHECK(cfg.batch_size == 256);
    CHECK(cfg.steps == 50000);
    CHECK(cfg.huber_gamma == 1.0);
    CHECK(cfg.dropout == 0.2);
    CHECK(cfg.hidden == std::vector<int>{512, 512});
    CHECK(cfg.leaky_slope == 0.01);
    CHECK(cfg.learning_rate == 1e-3);
  }

  TEST_CASE("zero network predicts the output mean") {
    MlpModel m = random_model({5, 8, 3}, 1);
    for (auto& w : m.net.weights) w.setZero();
    for (auto& b : m.net.biases) b.setZero();
    CHECK(predict(m, Eigen::VectorXd::Random(5)) == m.output.mean);
  }

  TEST_CASE("single linear layer with identity weights passes normalized input through") {
    MlpModel m = random_model({4, 4}, 2);
    m.net.weights[0].setIdentity();
    m.net.biases[0].setZero();
    m.output = m.input;
    const Eigen::VectorXd z = Eigen::VectorXd::Random(4);
    CHECK((predict(m, z) - z).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("normalization round trip") {
    const Eigen::MatrixXd data = Eigen::MatrixXd::Random(6, 50) * 3.0;
    const auto s = Standardizer::fit(data);
    CHECK((s.invert(s.apply(data)) - data).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.scale.array() > 0).all());
    const auto flat = Standardizer::fit(Eigen::MatrixXd::Ones(2, 10));
    CHECK((flat.scale.array() > 0).all());
  }

  TEST_CASE("input Jacobian matches central differences away from kinks") {
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 20; ++seed) {
      const auto m = random_model({12, 32, 32, 6}, seed);
      Eigen::VectorXd z = Eigen::VectorXd::Random(12);
      if (m.net.kink_distance(m.input.apply(z)) < 1e-3) continue;
      const Eigen::MatrixXd j = input_jacobian(m, z);
      const Eigen::MatrixXd fd = central_jacobian(m, z, 1e-6);
      CHECK((j - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()) < 1e-4);
      ++checked;
    }
  }

  TEST_CASE("unit leaky slope gives a constant Jacobian equal to the weight product") {
    const auto m = random_model({5, 7, 7, 3}, 4, 1.0);
    const Eigen::MatrixXd expect = m.output.scale.asDiagonal() * m.net.weights[2] * m.net.weights[1] *
                                   m.net.weights[0] * m.input.scale.cwiseInverse().asDiagonal();
    for (int t = 0; t < 5; ++t)
      CHECK((input_jacobian(m, Eigen::VectorXd::Random(5)) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("vector Huber switches on the l1 norm of the whole error vector") {
    Eigen::MatrixXd out(2, 2), target = Eigen::MatrixXd::Zero(2, 2), g;
    out << 0.3, 2.0, 0.4, -1.0;
    const double l = vector_huber(out, target, 1.0, g);
    CHECK(l == doctest::Approx((0.5 * 0.25 + (3.0 - 0.5)) / 2));
    CHECK(g(0, 0) == doctest::Approx(0.15));
    CHECK(g(1, 1) == doctest::Approx(-0.5));
    const double lc = componentwise_huber(out, target, 1.0, g);
    CHECK(lc == doctest::Approx((0.045 + 0.08 + 1.5 + 0.5) / 2));
  }

  TEST_CASE("a linear teacher is recovered and training is deterministic") {
    Rng rng = substream(5, 0);
    std::normal_distribution<double> g;
    const int n = 1000;
    Eigen::MatrixXd z(6, n);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = g(rng);
    Eigen::MatrixXd a(3, 6);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    const Eigen::MatrixXd x = a * z;
    NseTrainConfig cfg;
    cfg.hidden = {32, 32};
    cfg.steps = 1500;
    cfg.batch_size = 64;
    cfg.dropout = 0.0;
    NseReport rep;
    const auto m1 = train_nse(z, x, cfg, &rep);
    CHECK(rep.final_loss < 0.1 * rep.initial_loss);
    const double spread = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
    CHECK(rep.test_rmse < 0.15 * spread);
    const auto m2 = train_nse(z, x, cfg);
    for (int l = 0; l < m1.net.num_layers(); ++l) CHECK(m1.net.weights[l] == m2.net.weights[l]);
  }

  TEST_CASE("model files round trip with their sidecar") {
    auto m = random_model({4, 6, 2}, 8);
    m.metadata = {{"dataset_hash", "abc"}};
    const auto path = std::filesystem::temp_directory_path() / "gridadv_test_model.bin";
    save_model(path, m);
    const auto back = load_model(path);
    CHECK(back.net.sizes() == m.net.sizes());
    CHECK(back.net.weights[1] == m.net.weights[1]);
    CHECK(back.input.scale == m.input.scale);
    CHECK(back.metadata.at("dataset_hash") == "abc");
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".json");
  }

  TEST_CASE("divergence is reported with the step index") {
    Eigen::MatrixXd z = Eigen::MatrixXd::Random(3, 20), x = Eigen::MatrixXd::Random(2, 20);
    x(0, 3) = std::numeric_limits<double>::quiet_NaN();
    NseTrainConfig cfg;
    cfg.hidden = {4};
    cfg.steps = 5;
    cfg.train_fraction = 1.0;
    CHECK_THROWS_AS(train_nse(z, x, cfg), std::exception);
  }
}
