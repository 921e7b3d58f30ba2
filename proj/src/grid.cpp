#include "gridadv/grid.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <queue>
#include <set>

#include "gridadv/common.hpp"

namespace gridadv {

std::string_view to_string(BusType t) {
  switch (t) {
    case BusType::Slack: return "slack";
    case BusType::PV: return "PV";
    case BusType::PQ: return "PQ";
  }
  return "?";
}

int NetworkCase::slack_bus() const {
  for (const auto& b : buses)
    if (b.type == BusType::Slack) return b.id;
  throw CaseError("case has no slack bus");
}

int NetworkCase::index_of_label(int label) const {
  for (const auto& b : buses)
    if (b.label == label) return b.id;
  throw CaseError("no bus labelled " + std::to_string(label));
}

std::vector<std::vector<int>> NetworkCase::adjacency() const {
  std::vector<std::set<int>> sets(buses.size());
  for (const auto& br : branches) {
    sets[br.from_bus].insert(br.to_bus);
    sets[br.to_bus].insert(br.from_bus);
  }
  std::vector<std::vector<int>> adj(buses.size());
  for (std::size_t k = 0; k < sets.size(); ++k) adj[k].assign(sets[k].begin(), sets[k].end());
  return adj;
}

namespace {

struct RawRow {
  std::vector<double> values;
  int line;
};

struct RawMatpower {
  std::string name;
  double base_mva = 0.0;
  bool has_base = false;
  std::map<std::string, std::vector<RawRow>> blocks;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view strip_comment(std::string_view s) {
  bool in_quote = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\'') in_quote = !in_quote;
    if (s[i] == '%' && !in_quote) return s.substr(0, i);
  }
  return s;
}

double parse_number(std::string_view tok, int line) {
  std::string buf(tok);
  if (buf == "Inf" || buf == "inf") return HUGE_VAL;
  if (buf == "-Inf" || buf == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || buf.empty())
    throw CaseError("malformed number '" + buf + "'", line);
  return v;
}

// Splits a table body fragment into rows; a row ends at ';' or at end of line.
void consume_rows(std::string_view body, int line, std::vector<RawRow>& rows, RawRow& pending) {
  std::size_t i = 0;
  auto flush = [&] {
    if (!pending.values.empty()) rows.push_back(std::move(pending));
    pending = RawRow{{}, line};
  };
  while (i < body.size()) {
    const char ch = body[i];
    if (ch == ';') {
      flush();
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < body.size() && !std::isspace(static_cast<unsigned char>(body[j])) && body[j] != ';' &&
           body[j] != ',')
      ++j;
    if (pending.values.empty()) pending.line = line;
    pending.values.push_back(parse_number(body.substr(i, j - i), line));
    i = j;
  }
  // MATPOWER allows newline-terminated rows without ';'.
  flush();
}

RawMatpower scan_matpower(std::string_view text) {
  RawMatpower raw;
  std::string current;  // active matrix block
  bool in_cell = false;
  RawRow pending{{}, 0};
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;

    if (in_cell) {
      if (line.find("};") != std::string_view::npos) in_cell = false;
      continue;
    }
    if (!current.empty()) {
      const auto close = line.find(']');
      consume_rows(line.substr(0, close), line_no, raw.blocks[current], pending);
      if (close != std::string_view::npos) current.clear();
      continue;
    }
    if (line.starts_with("function")) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw CaseError("malformed function header", line_no);
      raw.name = std::string(trim(line.substr(eq + 1)));
      continue;
    }
    if (!line.starts_with("mpc.")) throw CaseError("unexpected statement '" + std::string(line) + "'", line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw CaseError("expected assignment", line_no);
    const std::string field(trim(line.substr(4, eq - 4)));
    std::string_view rhs = trim(line.substr(eq + 1));
    if (field == "version") {
      if (rhs.find('2') == std::string_view::npos)
        throw CaseError("unsupported case format version " + std::string(rhs), line_no);
    } else if (field == "baseMVA") {
      if (rhs.ends_with(';')) rhs.remove_suffix(1);
      raw.base_mva = parse_number(trim(rhs), line_no);
      raw.has_base = true;
    } else if (rhs.starts_with('[')) {
      rhs.remove_prefix(1);
      const auto close = rhs.find(']');
      current = field;
      raw.blocks[current];
      pending = RawRow{{}, line_no};
      consume_rows(rhs.substr(0, close), line_no, raw.blocks[current], pending);
      if (close != std::string_view::npos) current.clear();
    } else if (rhs.starts_with('{')) {
      in_cell = rhs.find("};") == std::string_view::npos;
    } else {
      throw CaseError("unsupported field mpc." + field, line_no);
    }
  }
  if (!current.empty()) throw CaseError("unterminated block mpc." + current, line_no);
  return raw;
}

void require_columns(const RawRow& row, std::size_t n, const char* block) {
  if (row.values.size() < n)
    throw CaseError(std::string(block) + " row needs at least " + std::to_string(n) + " columns", row.line);
}

int as_label(double v, int line) {
  if (v != std::floor(v) || v <= 0) throw CaseError("bus number must be a positive integer", line);
  return static_cast<int>(v);
}

}  // namespace

NetworkCase parse_matpower(std::string_view text) {
  const RawMatpower raw = scan_matpower(text);
  if (!raw.has_base) throw CaseError("missing mpc.baseMVA");
  if (raw.base_mva <= 0) throw CaseError("baseMVA must be positive");
  for (const char* req : {"bus", "gen", "branch"})
    if (!raw.blocks.contains(req)) throw CaseError(std::string("missing mpc.") + req + " block");

  NetworkCase c;
  c.name = raw.name.empty() ? "unnamed" : raw.name;
  c.base_mva = raw.base_mva;
  const double base = raw.base_mva;

  std::map<int, int> index;
  for (const auto& row : raw.blocks.at("bus")) {
    require_columns(row, 8, "bus");
    Bus b;
    b.id = static_cast<int>(c.buses.size());
    b.label = as_label(row.values[0], row.line);
    if (index.contains(b.label)) throw CaseError("duplicate bus number " + std::to_string(b.label), row.line);
    const int type = static_cast<int>(row.values[1]);
    if (type == 3)
      b.type = BusType::Slack;
    else if (type == 2)
      b.type = BusType::PV;
    else if (type == 1)
      b.type = BusType::PQ;
    else
      throw CaseError("unsupported bus type " + std::to_string(type), row.line);
    b.base_load = Complex(row.values[2], row.values[3]) / base;
    b.shunt_admittance = Complex(row.values[4], row.values[5]) / base;
    b.vm_setpoint = row.values[7];
    index[b.label] = b.id;
    c.buses.push_back(b);
  }

  for (const auto& row : raw.blocks.at("gen")) {
    require_columns(row, 8, "gen");
    const int label = as_label(row.values[0], row.line);
    if (!index.contains(label)) throw CaseError("generator at unknown bus " + std::to_string(label), row.line);
    if (row.values[7] <= 0) continue;
    Bus& b = c.buses[index.at(label)];
    if (!b.has_voltage_control) b.vm_setpoint = row.values[5];
    b.has_voltage_control = true;
    b.gen_p += row.values[1] / base;
    if (row.values[1] > 0) b.has_generator = true;
  }
  for (auto& b : c.buses) {
    if (b.type == BusType::Slack) {
      b.has_generator = true;
      if (!b.has_voltage_control) c.warnings.push_back("slack bus " + std::to_string(b.label) + " has no generator row");
    }
    if (b.type == BusType::PV && !b.has_voltage_control) {
      c.warnings.push_back("bus " + std::to_string(b.label) + " typed PV without an in-service generator; treated as PQ");
      b.type = BusType::PQ;
    }
  }

  for (const auto& row : raw.blocks.at("branch")) {
    require_columns(row, 5, "branch");
    const int f = as_label(row.values[0], row.line);
    const int t = as_label(row.values[1], row.line);
    if (!index.contains(f) || !index.contains(t)) throw CaseError("branch at unknown bus", row.line);
    const double ratio = row.values.size() > 8 ? row.values[8] : 0.0;
    const double angle = row.values.size() > 9 ? row.values[9] : 0.0;
    const double status = row.values.size() > 10 ? row.values[10] : 1.0;
    if (angle != 0.0) throw CaseError("phase-shifting transformers are not supported", row.line);
    if (status <= 0) {
      c.warnings.push_back("out-of-service branch " + std::to_string(f) + "-" + std::to_string(t) + " dropped");
      continue;
    }
    const Complex z(row.values[2], row.values[3]);
    if (std::abs(z) == 0.0) throw CaseError("branch with zero impedance", row.line);
    Branch br;
    br.id = static_cast<int>(c.branches.size());
    br.from_bus = index.at(f);
    br.to_bus = index.at(t);
    br.series_admittance = 1.0 / z;
    br.charging_susceptance = row.values[4];
    br.tap_ratio = ratio == 0.0 ? 1.0 : ratio;
    c.branches.push_back(br);
  }

  validate_case(c);
  return c;
}

void validate_case(NetworkCase& c) {
  const int n = c.num_buses();
  if (n < 2) throw CaseError("a case needs at least two buses");
  if (c.num_branches() < 1) throw CaseError("a case needs at least one branch");
  if (c.base_mva <= 0) throw CaseError("base_mva must be positive");
  int slack = 0;
  for (int k = 0; k < n; ++k) {
    const Bus& b = c.buses[k];
    if (b.id != k) throw CaseError("bus ids must be contiguous and 0-based");
    if (b.type == BusType::Slack) ++slack;
    if (b.shunt_admittance.real() < 0) throw CaseError("negative shunt conductance at bus " + std::to_string(b.label));
  }
  if (slack != 1) throw CaseError("expected exactly one slack bus, found " + std::to_string(slack));

  std::set<std::pair<int, int>> seen;
  for (std::size_t l = 0; l < c.branches.size(); ++l) {
    const Branch& br = c.branches[l];
    if (br.id != static_cast<int>(l)) throw CaseError("branch ids must be contiguous and 0-based");
    if (br.from_bus < 0 || br.from_bus >= n || br.to_bus < 0 || br.to_bus >= n)
      throw CaseError("branch " + std::to_string(l) + " references an unknown bus");
    if (br.from_bus == br.to_bus) throw CaseError("branch " + std::to_string(l) + " is a self-loop");
    if (std::abs(br.series_admittance) == 0.0) throw CaseError("branch " + std::to_string(l) + " has zero admittance");
    if (!(br.tap_ratio > 0)) throw CaseError("branch " + std::to_string(l) + " has a non-positive tap ratio");
    const auto key = std::minmax(br.from_bus, br.to_bus);
    if (!seen.insert(key).second) {
      const std::string msg = "parallel branches between buses " + std::to_string(c.buses[key.first].label) +
                              " and " + std::to_string(c.buses[key.second].label);
      if (std::find(c.warnings.begin(), c.warnings.end(), msg) == c.warnings.end()) c.warnings.push_back(msg);
    }
  }

  std::vector<bool> visited(n, false);
  const auto adj = c.adjacency();
  std::queue<int> q;
  q.push(0);
  visited[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int k = q.front();
    q.pop();
    for (int m : adj[k])
      if (!visited[m]) {
        visited[m] = true;
        ++count;
        q.push(m);
      }
  }
  if (count != n) throw CaseError("network graph is disconnected");
}

namespace {

nlohmann::json complex_json(Complex v) { return nlohmann::json::array({v.real(), v.imag()}); }

Complex json_complex(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw CaseError("complex values are [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

BusType bus_type_from(const std::string& s) {
  if (s == "slack") return BusType::Slack;
  if (s == "PV") return BusType::PV;
  if (s == "PQ") return BusType::PQ;
  throw CaseError("unknown bus type '" + s + "'");
}

}  // namespace

nlohmann::json case_to_json(const NetworkCase& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["base_mva"] = c.base_mva;
  auto& buses = j["buses"] = nlohmann::json::array();
  for (const auto& b : c.buses) {
    buses.push_back({{"label", b.label},
                     {"type", std::string(to_string(b.type))},
                     {"shunt_admittance", complex_json(b.shunt_admittance)},
                     {"base_load", complex_json(b.base_load)},
                     {"has_generator", b.has_generator},
                     {"has_voltage_control", b.has_voltage_control},
                     {"vm_setpoint", b.vm_setpoint},
                     {"gen_p", b.gen_p}});
  }
  auto& branches = j["branches"] = nlohmann::json::array();
  for (const auto& br : c.branches) {
    branches.push_back({{"from_bus", br.from_bus},
                        {"to_bus", br.to_bus},
                        {"series_admittance", complex_json(br.series_admittance)},
                        {"charging_susceptance", br.charging_susceptance},
                        {"tap_ratio", br.tap_ratio}});
  }
  return j;
}

NetworkCase case_from_json(const nlohmann::json& j) {
  try {
    NetworkCase c;
    c.name = j.value("name", "unnamed");
    c.base_mva = j.at("base_mva").get<double>();
    for (const auto& jb : j.at("buses")) {
      Bus b;
      b.id = static_cast<int>(c.buses.size());
      b.label = jb.value("label", b.id + 1);
      b.type = bus_type_from(jb.at("type").get<std::string>());
      b.shunt_admittance = json_complex(jb.value("shunt_admittance", nlohmann::json::array({0.0, 0.0})));
      b.base_load = json_complex(jb.value("base_load", nlohmann::json::array({0.0, 0.0})));
      b.has_generator = jb.value("has_generator", b.type == BusType::Slack);
      b.has_voltage_control = jb.value("has_voltage_control", b.type != BusType::PQ);
      b.vm_setpoint = jb.value("vm_setpoint", 1.0);
      b.gen_p = jb.value("gen_p", 0.0);
      c.buses.push_back(b);
    }
    for (const auto& jl : j.at("branches")) {
      Branch br;
      br.id = static_cast<int>(c.branches.size());
      br.from_bus = jl.at("from_bus").get<int>();
      br.to_bus = jl.at("to_bus").get<int>();
      br.series_admittance = json_complex(jl.at("series_admittance"));
      br.charging_susceptance = jl.value("charging_susceptance", 0.0);
      br.tap_ratio = jl.value("tap_ratio", 1.0);
      c.branches.push_back(br);
    }
    validate_case(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw CaseError(std::string("malformed JSON case: ") + e.what());
  }
}

NetworkCase parse_case(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw CaseError(std::string("JSON syntax error: ") + e.what());
    }
    return case_from_json(j);
  }
  return parse_matpower(text);
}

NetworkCase load_case_file(const std::filesystem::path& path) {
  NetworkCase c = parse_case(read_text_file(path));
  if (c.name == "unnamed") c.name = path.stem().string();
  return c;
}

NetworkCase load_case(const std::string& name_or_path) {
  std::filesystem::path p(name_or_path);
  if (std::filesystem::exists(p)) return load_case_file(p);
  for (const char* ext : {".m", ".json"}) {
    const auto bundled = data_dir() / "cases" / (name_or_path + ext);
    if (std::filesystem::exists(bundled)) return load_case_file(bundled);
  }
  throw CaseError("unknown case '" + name_or_path + "'");
}

BranchCoefficients branch_coefficients(const Branch& br) {
  const Complex ys = br.series_admittance;
  const Complex tt = ys + Complex(0.0, br.charging_susceptance / 2.0);
  const double t = br.tap_ratio;
  return {tt / (t * t), -ys / t, -ys / t, tt};
}

AdmittanceSet build_admittance(const NetworkCase& c) {
  const int n = c.num_buses();
  const int m = c.num_branches();
  AdmittanceSet a;
  a.ybus = Eigen::MatrixXcd::Zero(n, n);
  a.yfrom = Eigen::MatrixXcd::Zero(m, n);
  a.yto = Eigen::MatrixXcd::Zero(m, n);
  a.branch.reserve(m);
  for (const auto& br : c.branches) {
    const auto k = branch_coefficients(br);
    a.branch.push_back(k);
    a.yfrom(br.id, br.from_bus) = k.ff;
    a.yfrom(br.id, br.to_bus) = k.ft;
    a.yto(br.id, br.from_bus) = k.tf;
    a.yto(br.id, br.to_bus) = k.tt;
    a.ybus(br.from_bus, br.from_bus) += k.ff;
    a.ybus(br.from_bus, br.to_bus) += k.ft;
    a.ybus(br.to_bus, br.from_bus) += k.tf;
    a.ybus(br.to_bus, br.to_bus) += k.tt;
  }
  for (const auto& b : c.buses) a.ybus(b.id, b.id) += b.shunt_admittance;
  return a;
}

}  // namespace gridadv
