#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridadv/common.hpp"
#include "gridadv/powerflow.hpp"
#include "json.hpp"

namespace gridadv {

enum class RegionKind { Localized, Delocalized };

std::string to_string(RegionKind k);
RegionKind region_kind_from(const std::string& s);

class RegionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AttackRegion {
  std::string case_name;
  RegionKind kind = RegionKind::Localized;
  std::vector<int> buses;  ///< ascending bus ids
  std::vector<int> lines;  ///< branch ids, non-decreasing; repeats allowed
  /// Global measurement indices: {p, q} per bus, then {ps, qs, pr, qr} per line.
  std::vector<int> measurement_index_map;
  /// Global state indices: vm of each bus, then va of each bus.
  std::vector<int> state_index_map;

  int num_measurements() const { return static_cast<int>(measurement_index_map.size()); }
  int num_states() const { return static_cast<int>(state_index_map.size()); }
  std::uint64_t hash() const;
};

/// Assembles index maps. Lines must touch the bus set; with
/// `forbid_generators` a generator bus in `buses` is an error.
AttackRegion make_region(const NetworkCase& c, std::vector<int> buses, std::vector<int> lines, RegionKind kind,
                         bool forbid_generators = true);

/// k-hop neighbourhood of `target` through non-generator buses.
AttackRegion localized_region(const NetworkCase& c, int target_bus, int k_hops);

AttackRegion delocalized_region(const NetworkCase& c, int num_buses, double line_inclusion_prob, std::uint64_t seed);

/// Branch id joining two buses; the n-th such circuit when `occurrence` > 0.
int branch_between(const NetworkCase& c, int a, int b, int occurrence = 0);

nlohmann::json region_to_json(const NetworkCase& c, const AttackRegion& r);
/// Region file: {case, kind, buses[], lines[][2]} with 0-based bus ids.
AttackRegion region_from_json(const NetworkCase& c, const nlohmann::json& j);
/// Bundled fixture name (e.g. "case39_localized") or a path.
AttackRegion load_region(const NetworkCase& c, const std::string& name_or_path);

Eigen::VectorXd project(const AttackRegion& r, const Eigen::VectorXd& z);
Eigen::VectorXd project_states(const AttackRegion& r, const StateVector& x);
/// Adds `delta` (length N_A) into a full measurement vector at the region indices.
Eigen::VectorXd scatter_add(const AttackRegion& r, const Eigen::VectorXd& z, const Eigen::VectorXd& delta);

}  // namespace gridadv
