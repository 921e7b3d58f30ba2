#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "gridadv/grid.hpp"

using namespace gridadv;

TEST_SUITE("grid") {
  TEST_CASE("minimal two-bus MATPOWER case") {
    const auto c = load_case("case2");
    CHECK(c.num_buses() == 2);
    CHECK(c.num_branches() == 1);
    CHECK(c.slack_bus() == 0);
    CHECK(c.buses[1].base_load == Complex(0.5, 0.2));
    CHECK(c.buses[0].has_generator);
    CHECK_FALSE(c.buses[1].has_generator);
  }

  TEST_CASE("bundled IEEE cases have the published sizes") {
    CHECK(load_case("case14").num_buses() == 14);
    const auto c39 = load_case("case39");
    CHECK(c39.num_buses() == 39);
    CHECK(c39.num_branches() == 46);
    int gens = 0;
    for (const auto& b : c39.buses) gens += b.has_voltage_control;
    CHECK(gens == 10);
    const auto c118 = load_case("case118");
    CHECK(c118.num_buses() == 118);
    CHECK(c118.num_branches() == 186);
    int taps = 0;
    for (const auto& br : c118.branches) taps += br.tap_ratio != 1.0;
    CHECK(taps == 9);
  }

  TEST_CASE("two-bus admittance matches the pi-model layout") {
    const Complex y(2.0, -20.0), s0(0.0, 0.3), s1(0.1, 0.05);
    const auto c = fixtures::two_bus(y, {}, s0, s1);
    const auto a = build_admittance(c);
    CHECK(std::abs(a.ybus(0, 0) - (s0 + y)) < 1e-14);
    CHECK(std::abs(a.ybus(1, 1) - (s1 + y)) < 1e-14);
    CHECK(std::abs(a.ybus(0, 1) + y) < 1e-14);
    CHECK(std::abs(a.ybus(1, 0) + y) < 1e-14);
  }

  TEST_CASE("unit branch gives a pure Laplacian") {
    const auto a = build_admittance(fixtures::two_bus({1.0, 0.0}));
    Eigen::MatrixXcd expect(2, 2);
    expect << 1.0, -1.0, -1.0, 1.0;
    CHECK((a.ybus - expect).norm() < 1e-15);
  }

  TEST_CASE("IEEE 14 ybus equals a naive entry-by-entry assembly") {
    const auto c = load_case("case14");
    const auto a = build_admittance(c);
    const int n = c.num_buses();
    Eigen::MatrixXcd naive = Eigen::MatrixXcd::Zero(n, n);
    for (int r = 0; r < n; ++r) {
      for (int s = 0; s < n; ++s) {
        Complex acc = r == s ? c.buses[r].shunt_admittance : Complex{};
        for (const auto& br : c.branches) {
          const Complex ys = br.series_admittance;
          const Complex half_b(0.0, br.charging_susceptance / 2.0);
          const double t = br.tap_ratio;
          if (r == s && br.from_bus == r) acc += (ys + half_b) / (t * t);
          if (r == s && br.to_bus == r) acc += ys + half_b;
          if (r != s && ((br.from_bus == r && br.to_bus == s) || (br.from_bus == s && br.to_bus == r))) acc -= ys / t;
        }
        naive(r, s) = acc;
      }
    }
    CHECK((a.ybus - naive).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("row sums vanish without shunts, charging or taps") {
    auto c = load_case("case14");
    for (auto& b : c.buses) b.shunt_admittance = 0.0;
    for (auto& br : c.branches) {
      br.charging_susceptance = 0.0;
      br.tap_ratio = 1.0;
    }
    const auto a = build_admittance(c);
    CHECK(a.ybus.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.ybus - a.ybus.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("sparsity follows the topology") {
    const auto c = load_case("case39");
    const auto a = build_admittance(c);
    const auto adj = c.adjacency();
    for (int k = 0; k < c.num_buses(); ++k)
      for (int m = 0; m < c.num_buses(); ++m) {
        const bool neighbour = k == m || std::find(adj[k].begin(), adj[k].end(), m) != adj[k].end();
        if (!neighbour) CHECK(a.ybus(k, m) == Complex(0.0, 0.0));
      }
  }

  TEST_CASE("bus currents decompose into branch and shunt currents") {
    const auto c = load_case("case118");
    const auto a = build_admittance(c);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    const int n = c.num_buses();
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXcd v(n);
      for (int k = 0; k < n; ++k) v[k] = {g(rng), g(rng)};
      Eigen::VectorXcd i = Eigen::VectorXcd::Zero(n);
      const Eigen::VectorXcd i_from = a.yfrom * v;
      const Eigen::VectorXcd i_to = a.yto * v;
      for (const auto& br : c.branches) {
        i[br.from_bus] += i_from[br.id];
        i[br.to_bus] += i_to[br.id];
      }
      for (const auto& b : c.buses) i[b.id] += b.shunt_admittance * v[b.id];
      REQUIRE((a.ybus * v - i).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  TEST_CASE("JSON round trip preserves the case") {
    const auto c = load_case("case14");
    const auto back = case_from_json(case_to_json(c));
    REQUIRE(back.num_buses() == c.num_buses());
    CHECK((build_admittance(back).ybus - build_admittance(c).ybus).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("malformed cases are rejected") {
    CHECK_THROWS_AS(parse_case("mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 0 0 0 0 1 1 0 1 1 1.1 0.9;\n];\nfoo bar\n"),
                    CaseError);
    nlohmann::json disconnected = {
        {"base_mva", 100.0},
        {"buses", {{{"type", "slack"}}, {{"type", "PQ"}}, {{"type", "PQ"}}}},
        {"branches", {{{"from_bus", 0}, {"to_bus", 1}, {"series_admittance", {1.0, -10.0}}}}}};
    CHECK_THROWS_AS(case_from_json(disconnected), CaseError);
    nlohmann::json no_slack = {
        {"base_mva", 100.0},
        {"buses", {{{"type", "PQ"}}, {{"type", "PQ"}}}},
        {"branches", {{{"from_bus", 0}, {"to_bus", 1}, {"series_admittance", {1.0, -10.0}}}}}};
    CHECK_THROWS_AS(case_from_json(no_slack), CaseError);
  }

  TEST_CASE("parallel branches are accepted, summed and flagged") {
    nlohmann::json j = {
        {"base_mva", 100.0},
        {"buses", {{{"type", "slack"}}, {{"type", "PQ"}}}},
        {"branches",
         {{{"from_bus", 0}, {"to_bus", 1}, {"series_admittance", {1.0, -10.0}}},
          {{"from_bus", 0}, {"to_bus", 1}, {"series_admittance", {1.0, -10.0}}}}}};
    const auto c = case_from_json(j);
    CHECK(c.num_branches() == 2);
    CHECK_FALSE(c.warnings.empty());
    CHECK(std::abs(build_admittance(c).ybus(0, 1) - Complex(-2.0, 20.0)) < 1e-14);
  }
}
