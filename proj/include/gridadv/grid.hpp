#pragma once

#include <complex>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace gridadv {

using Complex = std::complex<double>;

enum class BusType { Slack, PV, PQ };

std::string_view to_string(BusType t);

struct Bus {
  int id = 0;     ///< 0-based contiguous index
  int label = 0;  ///< bus number as written in the source case
  BusType type = BusType::PQ;
  Complex shunt_admittance{0.0, 0.0};  ///< per-unit g + jb at 1 pu voltage
  Complex base_load{0.0, 0.0};         ///< per-unit P + jQ demand
  bool has_generator = false;          ///< hosts a unit with real-power dispatch
  bool has_voltage_control = false;    ///< any in-service unit (incl. condensers)
  double vm_setpoint = 1.0;
  double gen_p = 0.0;  ///< per-unit real dispatch at base load
};

struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  Complex series_admittance{0.0, 0.0};
  double charging_susceptance = 0.0;  ///< total line charging, per-unit
  double tap_ratio = 1.0;             ///< off-nominal ratio on the from side
};

struct NetworkCase {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  /// Non-fatal findings from validation (parallel circuits and the like).
  std::vector<std::string> warnings;

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_branches() const { return static_cast<int>(branches.size()); }
  int num_measurements() const { return 3 * num_buses() + 4 * num_branches(); }
  int num_states() const { return 2 * num_buses(); }
  int slack_bus() const;
  /// 0-based index of the bus with the given source label; throws if absent.
  int index_of_label(int label) const;
  /// Neighbour lists over branches; parallel circuits appear once.
  std::vector<std::vector<int>> adjacency() const;
};

class CaseError : public std::runtime_error {
 public:
  CaseError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Parses either the MATPOWER table layout or the JSON mirror, chosen by
/// the first non-blank character.
NetworkCase parse_case(std::string_view text);
NetworkCase parse_matpower(std::string_view text);
NetworkCase case_from_json(const nlohmann::json& j);
nlohmann::json case_to_json(const NetworkCase& c);

NetworkCase load_case_file(const std::filesystem::path& path);
/// "case2", "case14", "case39" or "case118" from the data directory, or a path.
NetworkCase load_case(const std::string& name_or_path);

/// Checks the structural invariants and fills `warnings`. Throws CaseError.
void validate_case(NetworkCase& c);

/// Per-branch two-port coefficients: [i_f; i_t] = [ff ft; tf tt] [v_f; v_t].
struct BranchCoefficients {
  Complex ff, ft, tf, tt;
};

struct AdmittanceSet {
  Eigen::MatrixXcd ybus;   ///< N x N
  Eigen::MatrixXcd yfrom;  ///< M x N, sending-end currents
  Eigen::MatrixXcd yto;    ///< M x N, receiving-end currents
  std::vector<BranchCoefficients> branch;
};

BranchCoefficients branch_coefficients(const Branch& br);
AdmittanceSet build_admittance(const NetworkCase& c);

}  // namespace gridadv
