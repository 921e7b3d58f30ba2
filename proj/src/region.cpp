#include "gridadv/region.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace gridadv {

std::string to_string(RegionKind k) { return k == RegionKind::Localized ? "localized" : "delocalized"; }

RegionKind region_kind_from(const std::string& s) {
  if (s == "localized") return RegionKind::Localized;
  if (s == "delocalized") return RegionKind::Delocalized;
  throw RegionError("unknown region kind '" + s + "'");
}

std::uint64_t AttackRegion::hash() const {
  std::string key = case_name + "|" + to_string(kind) + "|";
  for (int b : buses) key += std::to_string(b) + ",";
  key += "|";
  for (int l : lines) key += std::to_string(l) + ",";
  return fnv1a(key);
}

AttackRegion make_region(const NetworkCase& c, std::vector<int> buses, std::vector<int> lines, RegionKind kind,
                         bool forbid_generators) {
  const int n = c.num_buses();
  std::sort(buses.begin(), buses.end());
  if (buses.empty()) throw RegionError("attack region needs at least one bus");
  if (std::adjacent_find(buses.begin(), buses.end()) != buses.end()) throw RegionError("duplicate bus in region");
  for (int b : buses) {
    if (b < 0 || b >= n) throw RegionError("bus index " + std::to_string(b) + " out of range");
    if (forbid_generators && c.buses[b].has_generator)
      throw RegionError("bus " + std::to_string(c.buses[b].label) + " hosts a generator");
  }
  std::sort(lines.begin(), lines.end());
  for (int l : lines) {
    if (l < 0 || l >= c.num_branches()) throw RegionError("branch index " + std::to_string(l) + " out of range");
    const auto& br = c.branches[l];
    if (!std::binary_search(buses.begin(), buses.end(), br.from_bus) &&
        !std::binary_search(buses.begin(), buses.end(), br.to_bus))
      throw RegionError("branch " + std::to_string(l) + " does not touch the region's buses");
  }

  AttackRegion r;
  r.case_name = c.name;
  r.kind = kind;
  r.buses = std::move(buses);
  r.lines = std::move(lines);
  const MeasurementLayout layout(c);
  for (int b : r.buses) {
    r.measurement_index_map.push_back(layout.p(b));
    r.measurement_index_map.push_back(layout.q(b));
  }
  for (int l : r.lines)
    for (int idx : {layout.p_from(l), layout.q_from(l), layout.p_to(l), layout.q_to(l)})
      r.measurement_index_map.push_back(idx);
  for (int b : r.buses) r.state_index_map.push_back(b);
  for (int b : r.buses) r.state_index_map.push_back(n + b);
  return r;
}

AttackRegion localized_region(const NetworkCase& c, int target_bus, int k_hops) {
  if (target_bus < 0 || target_bus >= c.num_buses()) throw RegionError("target bus out of range");
  if (c.buses[target_bus].has_generator) throw RegionError("target bus hosts a generator");
  if (k_hops < 0) throw RegionError("k_hops must be non-negative");
  const auto adj = c.adjacency();
  std::vector<int> depth(c.num_buses(), -1);
  std::deque<int> queue{target_bus};
  depth[target_bus] = 0;
  std::vector<int> buses;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    buses.push_back(u);
    if (depth[u] == k_hops) continue;
    for (int v : adj[u]) {
      if (depth[v] >= 0 || c.buses[v].has_generator) continue;
      depth[v] = depth[u] + 1;
      queue.push_back(v);
    }
  }
  std::vector<int> lines;
  for (const auto& br : c.branches)
    if (depth[br.from_bus] >= 0 && depth[br.to_bus] >= 0) lines.push_back(br.id);
  return make_region(c, buses, lines, RegionKind::Localized);
}

AttackRegion delocalized_region(const NetworkCase& c, int num_buses, double line_inclusion_prob, std::uint64_t seed) {
  std::vector<int> pool;
  for (const auto& b : c.buses)
    if (!b.has_generator) pool.push_back(b.id);
  if (num_buses < 1 || num_buses > static_cast<int>(pool.size()))
    throw RegionError("requested " + std::to_string(num_buses) + " buses but only " + std::to_string(pool.size()) +
                      " non-generator buses exist");
  if (line_inclusion_prob < 0 || line_inclusion_prob > 1) throw RegionError("line inclusion probability not in [0,1]");
  Rng rng = substream(seed, 0);
  for (int i = 0; i < num_buses; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<int> buses(pool.begin(), pool.begin() + num_buses);
  std::sort(buses.begin(), buses.end());
  std::bernoulli_distribution include(line_inclusion_prob);
  std::set<int> lines;
  for (int b : buses) {
    for (const auto& br : c.branches) {
      if (br.from_bus != b && br.to_bus != b) continue;
      const int far = br.from_bus == b ? br.to_bus : br.from_bus;
      if (c.buses[far].has_generator) continue;
      if (include(rng)) lines.insert(br.id);
    }
  }
  return make_region(c, buses, {lines.begin(), lines.end()}, RegionKind::Delocalized);
}

int branch_between(const NetworkCase& c, int a, int b, int occurrence) {
  int seen = 0;
  for (const auto& br : c.branches) {
    if ((br.from_bus == a && br.to_bus == b) || (br.from_bus == b && br.to_bus == a)) {
      if (seen == occurrence) return br.id;
      ++seen;
    }
  }
  if (seen > 0) return branch_between(c, a, b, occurrence % seen);
  throw RegionError("no branch between buses " + std::to_string(a) + " and " + std::to_string(b));
}

nlohmann::json region_to_json(const NetworkCase& c, const AttackRegion& r) {
  nlohmann::json lines = nlohmann::json::array();
  for (int l : r.lines) lines.push_back({c.branches[l].from_bus, c.branches[l].to_bus});
  return {{"case", r.case_name}, {"kind", to_string(r.kind)}, {"buses", r.buses}, {"lines", lines}};
}

AttackRegion region_from_json(const NetworkCase& c, const nlohmann::json& j) {
  try {
    std::vector<int> buses = j.at("buses").get<std::vector<int>>();
    std::vector<int> lines;
    std::map<std::pair<int, int>, int> repeats;
    for (const auto& pair : j.at("lines")) {
      const int a = pair.at(0).get<int>();
      const int b = pair.at(1).get<int>();
      if (a < 0 || b < 0 || a >= c.num_buses() || b >= c.num_buses())
        throw RegionError("line endpoint out of range");
      const auto key = std::minmax(a, b);
      lines.push_back(branch_between(c, a, b, repeats[key]++));
    }
    const auto kind = region_kind_from(j.value("kind", "localized"));
    return make_region(c, std::move(buses), std::move(lines), kind, j.value("forbid_generators", false));
  } catch (const nlohmann::json::exception& e) {
    throw RegionError(std::string("malformed region file: ") + e.what());
  }
}

AttackRegion load_region(const NetworkCase& c, const std::string& name_or_path) {
  std::filesystem::path p(name_or_path);
  if (!std::filesystem::exists(p)) p = data_dir() / "regions" / (name_or_path + ".json");
  if (!std::filesystem::exists(p)) throw RegionError("unknown region '" + name_or_path + "'");
  const auto j = nlohmann::json::parse(read_text_file(p));
  if (j.contains("case") && !c.name.empty() && j.at("case").get<std::string>() != c.name)
    throw RegionError("region file is for case '" + j.at("case").get<std::string>() + "', not '" + c.name + "'");
  return region_from_json(c, j);
}

Eigen::VectorXd project(const AttackRegion& r, const Eigen::VectorXd& z) {
  Eigen::VectorXd out(r.num_measurements());
  for (int i = 0; i < r.num_measurements(); ++i) {
    const int idx = r.measurement_index_map[i];
    if (idx >= z.size()) throw RegionError("measurement vector too short for region");
    out[i] = z[idx];
  }
  return out;
}

Eigen::VectorXd project_states(const AttackRegion& r, const StateVector& x) {
  const Eigen::VectorXd s = x.stacked();
  Eigen::VectorXd out(r.num_states());
  for (int i = 0; i < r.num_states(); ++i) {
    const int idx = r.state_index_map[i];
    if (idx >= s.size()) throw RegionError("state vector too short for region");
    out[i] = s[idx];
  }
  return out;
}

Eigen::VectorXd scatter_add(const AttackRegion& r, const Eigen::VectorXd& z, const Eigen::VectorXd& delta) {
  if (delta.size() != r.num_measurements()) throw RegionError("perturbation length does not match the region");
  Eigen::VectorXd out = z;
  for (int i = 0; i < r.num_measurements(); ++i) {
    const int idx = r.measurement_index_map[i];
    if (idx >= z.size()) throw RegionError("measurement vector too short for region");
    out[idx] += delta[i];
  }
  return out;
}

}  // namespace gridadv
