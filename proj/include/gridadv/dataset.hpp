#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gridadv/powerflow.hpp"
#include "gridadv/sfdia.hpp"
#include "json.hpp"

namespace gridadv {

inline constexpr int kDatasetSchemaVersion = 1;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::string case_name;
  int schema_version = kDatasetSchemaVersion;
  nlohmann::json meta = nlohmann::json::object();  ///< generation settings, profile hash, ...
  std::vector<ScenarioSample> samples;
};

struct AttackedDataset {
  std::string case_name;
  int schema_version = kDatasetSchemaVersion;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<AttackedRecord> records;
};

/// Length-prefixed little-endian binary layout, magic "GADS".
void write_dataset(const std::filesystem::path& path, const Dataset& d);
Dataset read_dataset(const std::filesystem::path& path);

/// Header line {schema, version, case, meta, count} followed by one record per line.
void write_dataset_jsonl(const std::filesystem::path& path, const Dataset& d);
Dataset read_dataset_jsonl(const std::filesystem::path& path);

/// Binary magic "GAAT".
void write_attacked_dataset(const std::filesystem::path& path, const AttackedDataset& d);
AttackedDataset read_attacked_dataset(const std::filesystem::path& path);
void write_attacked_dataset_jsonl(const std::filesystem::path& path, const AttackedDataset& d);
AttackedDataset read_attacked_dataset_jsonl(const std::filesystem::path& path);

/// Dispatches on the extension: ".jsonl" reads the JSON-lines mirror.
Dataset load_dataset(const std::filesystem::path& path);

struct AttackBatchEntry {
  std::int64_t sample_id = 0;
  double epsilon = 0.0;
  std::string mode;
  std::vector<int> selected_indices;  ///< region measurement indices with e = 1
  Eigen::VectorXd eta;
  double lambda_star = 0.0;
  double lambda_2 = 0.0;
};

nlohmann::json to_json(const AttackBatchEntry& e);
AttackBatchEntry attack_entry_from_json(const nlohmann::json& j);
void write_attack_batch(const std::filesystem::path& path, const std::vector<AttackBatchEntry>& entries);
std::vector<AttackBatchEntry> read_attack_batch(const std::filesystem::path& path);

}  // namespace gridadv
