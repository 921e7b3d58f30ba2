#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "gridadv/region.hpp"

using namespace gridadv;

namespace {

std::vector<int> labels(const NetworkCase& c, const std::vector<int>& ids) {
  std::vector<int> out;
  for (int b : ids) out.push_back(c.buses[b].label);
  return out;
}

std::set<std::pair<int, int>> label_pairs(const NetworkCase& c, const AttackRegion& r) {
  std::set<std::pair<int, int>> out;
  for (int l : r.lines) {
    const auto [a, b] = std::minmax(c.buses[c.branches[l].from_bus].label, c.buses[c.branches[l].to_bus].label);
    out.insert({a, b});
  }
  return out;
}

}  // namespace

TEST_SUITE("region") {
  TEST_CASE("IEEE 14 two-hop neighbourhood of bus 12") {
    const auto c = load_case("case14");
    const auto r = localized_region(c, c.index_of_label(12), 2);
    CHECK(labels(c, r.buses) == std::vector<int>{5, 6, 11, 12, 13, 14});
    for (int l : r.lines) {
      CHECK(std::binary_search(r.buses.begin(), r.buses.end(), c.branches[l].from_bus));
      CHECK(std::binary_search(r.buses.begin(), r.buses.end(), c.branches[l].to_bus));
    }
    CHECK(r.num_measurements() == 2 * 6 + 4 * static_cast<int>(r.lines.size()));
  }

  TEST_CASE("zero hops keeps only the target") {
    const auto c = load_case("case14");
    const auto r = localized_region(c, c.index_of_label(9), 0);
    CHECK(r.buses == std::vector<int>{c.index_of_label(9)});
    CHECK(r.lines.empty());
    CHECK(r.num_measurements() == 2);
  }

  TEST_CASE("generator targets are rejected") {
    const auto c = load_case("case14");
    CHECK_THROWS_AS(localized_region(c, c.index_of_label(1), 1), RegionError);
  }

  TEST_CASE("delocalized regions avoid generators and respect the inclusion probability") {
    const auto c = load_case("case39");
    const auto none = delocalized_region(c, 7, 0.0, 3);
    CHECK(none.lines.empty());
    CHECK(none.buses.size() == 7);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto r = delocalized_region(c, 7, 0.5, seed);
      for (int b : r.buses) CHECK_FALSE(c.buses[b].has_generator);
      for (int l : r.lines) {
        CHECK_FALSE(c.buses[c.branches[l].from_bus].has_generator);
        CHECK_FALSE(c.buses[c.branches[l].to_bus].has_generator);
      }
      CHECK(r.num_measurements() == 2 * 7 + 4 * static_cast<int>(r.lines.size()));
      CHECK(region_to_json(c, r) == region_to_json(c, delocalized_region(c, 7, 0.5, seed)));
    }
  }

  TEST_CASE("seeded delocalized draw reproduces the IEEE 14 illustration") {
    const auto c = load_case("case14");
    const auto r = delocalized_region(c, 5, 0.5, fixtures::kIeee14DelocalizedSeed);
    CHECK(labels(c, r.buses) == std::vector<int>{5, 9, 11, 12, 14});
    const std::set<std::pair<int, int>> expect{{5, 6}, {7, 9}, {9, 14}, {10, 11}, {12, 13}};
    CHECK(label_pairs(c, r) == expect);
    CHECK(label_pairs(c, load_region(c, "case14_delocalized")) == expect);
  }

  TEST_CASE("bundled fixtures have the tabulated sizes") {
    const auto c39 = load_case("case39");
    const auto l39 = load_region(c39, "case39_localized");
    CHECK(l39.buses.size() == 8);
    CHECK(l39.lines.size() == 8);
    CHECK(l39.num_measurements() == 48);
    const auto d39 = load_region(c39, "case39_delocalized");
    CHECK(d39.buses.size() == 7);
    CHECK(d39.lines.size() == 10);
    CHECK(d39.num_measurements() == 54);
    const auto c118 = load_case("case118");
    CHECK(load_region(c118, "case118_localized").num_measurements() == 124);
    const auto d118 = load_region(c118, "case118_delocalized");
    CHECK(d118.buses.size() == 30);
    CHECK(d118.lines.size() == 34);
    for (const auto* r : {&l39, &d39}) CHECK(std::is_sorted(r->lines.begin(), r->lines.end()));
  }

  TEST_CASE("projection and scatter round trip") {
    const auto c = load_case("case2");
    const auto r = make_region(c, {0, 1}, {0}, RegionKind::Localized, false);
    const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(c.num_measurements(), 1.0, 10.0);
    const Eigen::VectorXd zd = project(r, z);
    CHECK(zd.size() == c.num_measurements() - 2);
    const Eigen::VectorXd back = scatter_add(r, Eigen::VectorXd::Zero(z.size()), zd);
    CHECK(project(r, back) == zd);
    CHECK(back[0] == 0.0);
    CHECK(back[3] == 0.0);
    StateVector x = StateVector::flat(2);
    x.va[1] = -0.1;
    CHECK(project_states(r, x) == (Eigen::Vector4d() << 1.0, 1.0, 0.0, -0.1).finished());
    CHECK_THROWS_AS(scatter_add(r, z, Eigen::VectorXd::Zero(3)), RegionError);
  }

  TEST_CASE("duplicate fixture lines accumulate in the scatter") {
    const auto c = load_case("case39");
    const auto r = load_region(c, "case39_delocalized");
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(c.num_measurements());
    const Eigen::VectorXd out = scatter_add(r, z, Eigen::VectorXd::Ones(r.num_measurements()));
    CHECK(out.sum() == doctest::Approx(54.0));
    CHECK(out.maxCoeff() == 2.0);
  }
}
