#include "gridadv/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gridadv {

static_assert(std::endian::native == std::endian::little, "binary datasets assume a little-endian host");

namespace {

constexpr char kScenarioMagic[4] = {'G', 'A', 'D', 'S'};
constexpr char kAttackedMagic[4] = {'G', 'A', 'A', 'T'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw DatasetError("cannot open " + path.string() + " for writing");
  }
  template <class T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  void vec(const Eigen::VectorXd& v) { bytes(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size()); }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw DatasetError("write failed for " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw DatasetError("cannot open " + path.string());
  }
  template <class T>
  T pod() {
    T v{};
    read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  void read(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DatasetError("truncated file " + path_.string());
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > (1u << 28)) throw DatasetError("corrupt string length in " + path_.string());
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  Eigen::VectorXd vec(Eigen::Index n) {
    Eigen::VectorXd v(n);
    read(reinterpret_cast<char*>(v.data()), sizeof(double) * static_cast<std::size_t>(n));
    return v;
  }
  void magic(const char (&expect)[4]) {
    char m[4];
    read(m, 4);
    if (std::memcmp(m, expect, 4) != 0) throw DatasetError(path_.string() + " has the wrong file magic");
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

struct Header {
  std::string case_name;
  int version;
  nlohmann::json meta;
  std::uint64_t count;
  std::uint32_t state_size;
  std::uint32_t measurement_size;
};

void write_header(Writer& w, const char (&magic)[4], const std::string& case_name, const nlohmann::json& meta,
                  std::uint64_t count, std::uint32_t ns, std::uint32_t nm) {
  w.bytes(magic, 4);
  w.pod<std::uint32_t>(kDatasetSchemaVersion);
  w.str(case_name);
  w.str(meta.dump());
  w.pod<std::uint64_t>(count);
  w.pod<std::uint32_t>(ns);
  w.pod<std::uint32_t>(nm);
}

Header read_header(Reader& r, const char (&magic)[4]) {
  r.magic(magic);
  Header h;
  h.version = static_cast<int>(r.pod<std::uint32_t>());
  if (h.version != kDatasetSchemaVersion)
    throw DatasetError("unsupported dataset schema version " + std::to_string(h.version));
  h.case_name = r.str();
  h.meta = nlohmann::json::parse(r.str());
  h.count = r.pod<std::uint64_t>();
  h.state_size = r.pod<std::uint32_t>();
  h.measurement_size = r.pod<std::uint32_t>();
  return h;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_json_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json jsonl_header(const char* schema, const std::string& case_name, const nlohmann::json& meta,
                            std::size_t count) {
  return {{"schema", schema}, {"version", kDatasetSchemaVersion}, {"case", case_name}, {"meta", meta},
          {"count", count}};
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path, const char* schema,
                                       nlohmann::json& header) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DatasetError(path.string() + " is empty");
  header = nlohmann::json::parse(line);
  if (header.value("schema", "") != schema) throw DatasetError(path.string() + " is not a " + schema + " file");
  if (header.at("version") != kDatasetSchemaVersion) throw DatasetError("unsupported dataset schema version");
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
  if (rows.size() != header.at("count").get<std::size_t>()) throw DatasetError("record count mismatch in " + path.string());
  return rows;
}

void write_lines(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot open " + path.string() + " for writing");
  for (const auto& r : rows) out << r.dump() << '\n';
  if (!out) throw DatasetError("write failed for " + path.string());
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& d) {
  const std::uint32_t ns = d.samples.empty() ? 0 : static_cast<std::uint32_t>(d.samples.front().true_state.size());
  const std::uint32_t nm = d.samples.empty() ? 0 : static_cast<std::uint32_t>(d.samples.front().measurements.size());
  Writer w(path);
  write_header(w, kScenarioMagic, d.case_name, d.meta, d.samples.size(), ns, nm);
  for (const auto& s : d.samples) {
    if (static_cast<std::uint32_t>(s.true_state.size()) != ns || static_cast<std::uint32_t>(s.measurements.size()) != nm)
      throw DatasetError("inconsistent record sizes");
    w.pod<std::int64_t>(s.timestamp_index);
    w.vec(s.true_state.stacked());
    w.vec(s.measurements.values);
    w.pod<std::uint8_t>(s.estimated_state ? 1 : 0);
    if (s.estimated_state) w.vec(s.estimated_state->stacked());
  }
  w.finish(path);
}

Dataset read_dataset(const std::filesystem::path& path) {
  Reader r(path);
  const auto h = read_header(r, kScenarioMagic);
  Dataset d;
  d.case_name = h.case_name;
  d.schema_version = h.version;
  d.meta = h.meta;
  d.samples.resize(h.count);
  const Eigen::Index ns = 2 * static_cast<Eigen::Index>(h.state_size);
  for (auto& s : d.samples) {
    s.timestamp_index = r.pod<std::int64_t>();
    s.true_state = StateVector::from_stacked(r.vec(ns));
    s.measurements.values = r.vec(h.measurement_size);
    if (r.pod<std::uint8_t>()) s.estimated_state = StateVector::from_stacked(r.vec(ns));
  }
  return d;
}

void write_dataset_jsonl(const std::filesystem::path& path, const Dataset& d) {
  std::vector<nlohmann::json> rows{jsonl_header("gridadv.dataset", d.case_name, d.meta, d.samples.size())};
  for (const auto& s : d.samples) {
    nlohmann::json j = {{"timestamp_index", s.timestamp_index},
                        {"true_state", to_std(s.true_state.stacked())},
                        {"measurements", to_std(s.measurements.values)}};
    j["estimated_state"] = s.estimated_state ? nlohmann::json(to_std(s.estimated_state->stacked())) : nlohmann::json();
    rows.push_back(std::move(j));
  }
  write_lines(path, rows);
}

Dataset read_dataset_jsonl(const std::filesystem::path& path) {
  nlohmann::json header;
  const auto rows = read_jsonl(path, "gridadv.dataset", header);
  Dataset d;
  d.case_name = header.at("case");
  d.meta = header.at("meta");
  for (const auto& j : rows) {
    ScenarioSample s;
    s.timestamp_index = j.at("timestamp_index");
    s.true_state = StateVector::from_stacked(from_json_vector(j.at("true_state")));
    s.measurements.values = from_json_vector(j.at("measurements"));
    if (!j.at("estimated_state").is_null()) s.estimated_state = StateVector::from_stacked(from_json_vector(j.at("estimated_state")));
    d.samples.push_back(std::move(s));
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path) {
  return path.extension() == ".jsonl" ? read_dataset_jsonl(path) : read_dataset(path);
}

void write_attacked_dataset(const std::filesystem::path& path, const AttackedDataset& d) {
  const std::uint32_t nm = d.records.empty() ? 0 : static_cast<std::uint32_t>(d.records.front().measurements.size());
  const std::uint32_t ns =
      d.records.empty() ? 0 : static_cast<std::uint32_t>(d.records.front().label.compromised_state_mask.size());
  Writer w(path);
  write_header(w, kAttackedMagic, d.case_name, d.meta, d.records.size(), ns, nm);
  for (const auto& rec : d.records) {
    if (static_cast<std::uint32_t>(rec.measurements.size()) != nm) throw DatasetError("inconsistent record sizes");
    w.pod<std::int64_t>(rec.timestamp_index);
    w.vec(rec.measurements);
    w.pod<std::uint8_t>(rec.label.attacked ? 1 : 0);
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(rec.label.variant));
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(rec.label.compromised_state_mask.size()));
    for (bool b : rec.label.compromised_state_mask) w.pod<std::uint8_t>(b ? 1 : 0);
  }
  w.finish(path);
}

AttackedDataset read_attacked_dataset(const std::filesystem::path& path) {
  Reader r(path);
  const auto h = read_header(r, kAttackedMagic);
  AttackedDataset d;
  d.case_name = h.case_name;
  d.schema_version = h.version;
  d.meta = h.meta;
  d.records.resize(h.count);
  for (auto& rec : d.records) {
    rec.timestamp_index = r.pod<std::int64_t>();
    rec.measurements = r.vec(h.measurement_size);
    rec.label.attacked = r.pod<std::uint8_t>() != 0;
    const auto v = r.pod<std::uint8_t>();
    if (v > static_cast<std::uint8_t>(SfdiaVariant::NoisyState)) throw DatasetError("unknown attack variant code");
    rec.label.variant = static_cast<SfdiaVariant>(v);
    const auto n = r.pod<std::uint32_t>();
    if (n > (1u << 20)) throw DatasetError("corrupt mask length");
    rec.label.compromised_state_mask.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) rec.label.compromised_state_mask[i] = r.pod<std::uint8_t>() != 0;
  }
  return d;
}

void write_attacked_dataset_jsonl(const std::filesystem::path& path, const AttackedDataset& d) {
  std::vector<nlohmann::json> rows{jsonl_header("gridadv.attacked_dataset", d.case_name, d.meta, d.records.size())};
  for (const auto& rec : d.records) {
    std::vector<int> mask;
    for (bool b : rec.label.compromised_state_mask) mask.push_back(b ? 1 : 0);
    rows.push_back({{"timestamp_index", rec.timestamp_index},
                    {"measurements", to_std(rec.measurements)},
                    {"attacked", rec.label.attacked},
                    {"variant", to_string(rec.label.variant)},
                    {"compromised_state_mask", mask}});
  }
  write_lines(path, rows);
}

AttackedDataset read_attacked_dataset_jsonl(const std::filesystem::path& path) {
  nlohmann::json header;
  const auto rows = read_jsonl(path, "gridadv.attacked_dataset", header);
  AttackedDataset d;
  d.case_name = header.at("case");
  d.meta = header.at("meta");
  for (const auto& j : rows) {
    AttackedRecord rec;
    rec.timestamp_index = j.at("timestamp_index");
    rec.measurements = from_json_vector(j.at("measurements"));
    rec.label.attacked = j.at("attacked");
    rec.label.variant = sfdia_variant_from(j.at("variant").get<std::string>());
    for (int b : j.at("compromised_state_mask").get<std::vector<int>>()) rec.label.compromised_state_mask.push_back(b != 0);
    d.records.push_back(std::move(rec));
  }
  return d;
}

nlohmann::json to_json(const AttackBatchEntry& e) {
  return {{"sample_id", e.sample_id},   {"epsilon", e.epsilon},         {"mode", e.mode},
          {"selected_indices", e.selected_indices}, {"eta", to_std(e.eta)}, {"lambda_star", e.lambda_star},
          {"lambda_2", e.lambda_2}};
}

AttackBatchEntry attack_entry_from_json(const nlohmann::json& j) {
  AttackBatchEntry e;
  e.sample_id = j.at("sample_id");
  e.epsilon = j.at("epsilon");
  e.mode = j.at("mode");
  e.selected_indices = j.at("selected_indices").get<std::vector<int>>();
  e.eta = from_json_vector(j.at("eta"));
  e.lambda_star = j.at("lambda_star");
  e.lambda_2 = j.at("lambda_2");
  return e;
}

void write_attack_batch(const std::filesystem::path& path, const std::vector<AttackBatchEntry>& entries) {
  std::vector<nlohmann::json> rows;
  for (const auto& e : entries) rows.push_back(to_json(e));
  write_lines(path, rows);
}

std::vector<AttackBatchEntry> read_attack_batch(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::vector<AttackBatchEntry> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(attack_entry_from_json(nlohmann::json::parse(line)));
  return out;
}

}  // namespace gridadv
