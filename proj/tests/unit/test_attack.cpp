#include "doctest.h"
#include "gridadv/attack.hpp"

using namespace gridadv;

namespace {

Eigen::MatrixXd random_psd(int n, std::uint64_t seed) {
  Rng rng = substream(seed, 0);
  std::normal_distribution<double> g;
  Eigen::MatrixXd j(n + 3, n);
  for (Eigen::Index i = 0; i < j.size(); ++i) j.data()[i] = g(rng);
  return build_quadratic(j);
}

}  // namespace

TEST_SUITE("attack") {
  TEST_CASE("quadratic form of small matrices") {
    CHECK(build_quadratic(Eigen::MatrixXd::Identity(3, 3)) == Eigen::MatrixXd::Identity(3, 3));
    Eigen::Matrix2d j;
    j << 1, 2, 3, 4;
    Eigen::Matrix2d expect;
    expect << 10, 14, 14, 20;
    CHECK(build_quadratic(j) == Eigen::MatrixXd(expect));
    const auto q = random_psd(15, 3);
    CHECK((q - q.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Rng rng = substream(1, 1);
    std::normal_distribution<double> g;
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd x(15);
      for (auto& v : x) v = g(rng);
      CHECK(x.dot(q * x) >= 0.0);
    }
  }

  TEST_CASE("diagonal quadratic picks the dominant axis") {
    Eigen::MatrixXd q = Eigen::Vector2d(4.0, 1.0).asDiagonal();
    PcdmConfig cfg;
    const auto s = solve_sdp(q, cfg);
    CHECK(s.lambda_star == doctest::Approx(1.0));
    CHECK(std::abs(std::abs(s.nu_star[0]) - 1.0) < 1e-9);
    CHECK(s.objective == doctest::Approx(4.0));
    CHECK_FALSE(s.degenerate);
    const auto eta = recover_perturbation(s, cfg);
    CHECK((eta - Eigen::Vector2d(1.0, 0.0)).norm() < 1e-9);
  }

  TEST_CASE("isotropic quadratic is flagged as degenerate") {
    PcdmConfig cfg;
    cfg.epsilon = 0.5;
    const auto s = solve_sdp(Eigen::MatrixXd::Identity(6, 6), cfg);
    CHECK(s.degenerate);
    CHECK(s.objective == doctest::Approx(0.25));
    CHECK(s.nu_star.norm() == doctest::Approx(1.0));
  }

  TEST_CASE("solution invariants and eigenvalues against a dense solver") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto q = random_psd(10 + static_cast<int>(seed), seed);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
      for (double eps : {0.5, 1.0, 2.0, 10.0}) {
        PcdmConfig cfg;
        cfg.epsilon = eps;
        const auto s = solve_sdp(q, cfg);
        CHECK(s.nu_star.norm() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(s.lambda_star <= std::min(eps * eps, 1.0) + 1e-9);
        CHECK(s.lambda_star >= s.lambda_2);
        CHECK(s.lambda_2 >= 0.0);
        CHECK(s.lambda_2 / s.lambda_star < 1e-6);
        const double expect = std::min(eps * eps, 1.0) * eig.eigenvalues().maxCoeff();
        CHECK(std::abs(s.objective - expect) / expect < 1e-8);
        const double norm = recover_perturbation(s, cfg).norm();
        CHECK(norm == doctest::Approx(eps >= 1 ? eps : eps * eps).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("scaling the Jacobian keeps the direction and scales the objective") {
    Rng rng = substream(2, 2);
    std::normal_distribution<double> g;
    Eigen::MatrixXd j(5, 9);
    for (Eigen::Index i = 0; i < j.size(); ++i) j.data()[i] = g(rng);
    PcdmConfig cfg;
    const auto a = solve_sdp(build_quadratic(j), cfg);
    const auto b = solve_sdp(build_quadratic(3.0 * j), cfg);
    CHECK(std::abs(std::abs(a.nu_star.dot(b.nu_star)) - 1.0) < 1e-9);
    CHECK(b.objective == doctest::Approx(9.0 * a.objective).epsilon(1e-9));
  }

  TEST_CASE("sign canonicalization") {
    SdpSolution s;
    s.lambda_star = 1.0;
    s.nu_star = Eigen::Vector3d(0.1, -0.9, 0.3).normalized();
    PcdmConfig cfg;
    const auto eta = recover_perturbation(s, cfg);
    CHECK(eta[1] > 0);
    CHECK(recover_perturbation(SdpSolution{1.0, Eigen::Vector2d(1.0, 0.0)}, cfg) == Eigen::VectorXd(Eigen::Vector2d(1.0, 0.0)));
  }

  TEST_CASE("selection vectors") {
    Eigen::VectorXd eta = Eigen::VectorXd::LinSpaced(48, 1.0, 48.0);
    auto count = [](const std::vector<bool>& e) { return std::count(e.begin(), e.end(), true); };
    CHECK(count(selection_vector(eta, SelectionMode::Tenth)) == 5);
    CHECK(count(selection_vector(eta, SelectionMode::Half)) == 24);
    CHECK(count(selection_vector(eta, SelectionMode::All)) == 48);
    const auto top = selection_vector(eta, SelectionMode::Tenth);
    for (int i = 43; i < 48; ++i) CHECK(top[i]);
    const auto ties = selection_vector(Eigen::VectorXd::Ones(48), SelectionMode::Half);
    for (int i = 0; i < 48; ++i) CHECK(ties[i] == (i < 24));
    CHECK(count(selection_vector(Eigen::VectorXd::Ones(7), SelectionMode::Half)) == 3);
  }

  TEST_CASE("scatter identity on a full two-bus region") {
    const auto c = load_case("case2");
    const auto r = make_region(c, {0, 1}, {0}, RegionKind::Localized, false);
    const Eigen::VectorXd z = Eigen::VectorXd::Random(c.num_measurements());
    const Eigen::VectorXd eta = Eigen::VectorXd::Random(r.num_measurements());
    CHECK(attack_measurements(z, r, eta, std::vector<bool>(eta.size(), false)) == z);
    const Eigen::VectorXd za = attack_measurements(z, r, eta, std::vector<bool>(eta.size(), true));
    CHECK(((project(r, za) - project(r, z)) - eta).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((za - z).norm() == doctest::Approx(eta.norm()));
    CHECK(za[0] == z[0]);
  }

  TEST_CASE("end-to-end attack on a linear substitute") {
    const auto c = load_case("case14");
    const auto region = localized_region(c, c.index_of_label(12), 2);
    MlpModel m;
    m.net = Mlp({region.num_measurements(), region.num_states()}, 0.01, 4);
    m.input = Standardizer::identity(region.num_measurements());
    m.output = Standardizer::identity(region.num_states());
    const Eigen::VectorXd z = Eigen::VectorXd::Random(c.num_measurements());
    PcdmConfig cfg;
    const auto res = run_attack(m, region, z, cfg);
    const Eigen::VectorXd achieved = predict(m, project(region, res.z_attacked)) - predict(m, project(region, z));
    CHECK(achieved.norm() == doctest::Approx(res.diagnostics.predicted_deviation).epsilon(1e-10));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.net.weights[0]);
    CHECK(res.diagnostics.predicted_deviation == doctest::Approx(svd.singularValues()[0]).epsilon(1e-8));
    Rng rng = substream(6, 6);
    std::normal_distribution<double> g;
    for (int t = 0; t < 10000; ++t) {
      Eigen::VectorXd p(region.num_measurements());
      for (auto& v : p) v = g(rng);
      p *= cfg.epsilon / p.norm();
      CHECK((m.net.weights[0] * p).norm() <= res.diagnostics.predicted_deviation);
    }
    cfg.epsilon = 1e-9;
    const auto tiny = run_attack(m, region, z, cfg);
    CHECK((tiny.z_attacked - z).cwiseAbs().maxCoeff() < 1e-9);
    cfg.epsilon = 1.0;
    cfg.mode = SelectionMode::Tenth;
    const auto sparse = run_attack(m, region, z, cfg);
    int changed = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) changed += sparse.z_attacked[i] != z[i];
    CHECK(changed == std::lround(region.num_measurements() / 10.0));
  }
}
