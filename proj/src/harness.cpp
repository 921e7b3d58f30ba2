#include "gridadv/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "gridadv/common.hpp"
#include "gridadv/estimation.hpp"
#include "gridadv/region.hpp"

namespace gridadv {

const std::vector<std::string>& default_detector_roster() {
  static const std::vector<std::string> r{"lnrt", "chi2", "kld", "transformed_kld", "ksrs", "mlp"};
  return r;
}

const std::vector<std::string>& reserved_detectors() {
  static const std::vector<std::string> r{"ancusum_c", "outlier_graph", "lstm", "bilstm",
                                          "tcn",       "arma_gnn",      "e3lm", "dagmm"};
  return r;
}

ExperimentPlan ExperimentPlan::desk() {
  ExperimentPlan p;
  p.nse.steps = 4000;
  return p;
}

void ExperimentPlan::apply_full_scale() {
  samples_a = kFullScaleSamples;
  samples_b = kFullScaleSamples;
  nse.steps = NseTrainConfig{}.steps;
}

std::uint64_t ExperimentPlan::stage_seed(std::uint64_t stage) const {
  return splitmix64(seed * 0x9e3779b97f4a7c15ULL + stage);
}

namespace {

std::string eps_tag(double eps) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

nlohmann::json divergence_to_json(const DivergenceConfig& c) {
  return {{"window", c.window}, {"bins", c.bins}, {"span_sigmas", c.span_sigmas}, {"smoothing", c.smoothing},
          {"stride", c.stride}};
}

void divergence_from_json(const nlohmann::json& j, DivergenceConfig& c) {
  c.window = j.value("window", c.window);
  c.bins = j.value("bins", c.bins);
  c.span_sigmas = j.value("span_sigmas", c.span_sigmas);
  c.smoothing = j.value("smoothing", c.smoothing);
  c.stride = j.value("stride", c.stride);
}

nlohmann::json detector_cfg_to_json(const DetectorTrainConfig& c) {
  return {{"hidden", c.hidden},         {"dropout", c.dropout},           {"leaky_slope", c.leaky_slope},
          {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"max_steps", c.max_steps},
          {"eval_interval", c.eval_interval}, {"accuracy_gate", c.accuracy_gate},
          {"train_fraction", c.train_fraction}};
}

void detector_cfg_from_json(const nlohmann::json& j, DetectorTrainConfig& c) {
  c.hidden = j.value("hidden", c.hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.eval_interval = j.value("eval_interval", c.eval_interval);
  c.accuracy_gate = j.value("accuracy_gate", c.accuracy_gate);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
}

nlohmann::json attacked_cfg_to_json(const AttackedDatasetConfig& c) {
  return {{"attack_probability", c.attack_probability},
          {"param_noise", c.param_noise},
          {"state_noise", c.state_noise},
          {"deviation",
           {{"min_fraction", c.deviation.min_fraction},
            {"max_fraction", c.deviation.max_fraction},
            {"min_scale", c.deviation.min_scale},
            {"max_scale", c.deviation.max_scale}}}};
}

void attacked_cfg_from_json(const nlohmann::json& j, AttackedDatasetConfig& c) {
  c.attack_probability = j.value("attack_probability", c.attack_probability);
  c.param_noise = j.value("param_noise", c.param_noise);
  c.state_noise = j.value("state_noise", c.state_noise);
  if (j.contains("deviation")) {
    const auto& d = j.at("deviation");
    c.deviation.min_fraction = d.value("min_fraction", c.deviation.min_fraction);
    c.deviation.max_fraction = d.value("max_fraction", c.deviation.max_fraction);
    c.deviation.min_scale = d.value("min_scale", c.deviation.min_scale);
    c.deviation.max_scale = d.value("max_scale", c.deviation.max_scale);
  }
}

}  // namespace

nlohmann::json plan_to_json(const ExperimentPlan& p) {
  std::vector<std::string> modes;
  for (auto m : p.modes) modes.push_back(to_string(m));
  return {{"case", p.case_name},
          {"region", p.region},
          {"epsilons", p.epsilons},
          {"modes", modes},
          {"samples_a", p.samples_a},
          {"samples_b", p.samples_b},
          {"profile_a", to_string(p.profile_a)},
          {"profile_b", to_string(p.profile_b)},
          {"seed", p.seed},
          {"detectors", p.detectors},
          {"out", p.out.string()},
          {"workers", p.workers},
          {"write_jsonl", p.write_jsonl},
          {"far_target", p.far_target},
          {"measurement_unit", p.measurement_unit},
          {"nse", to_json(p.nse)},
          {"divergence", divergence_to_json(p.divergence)},
          {"mlp_detector", detector_cfg_to_json(p.mlp_detector)},
          {"attacked", attacked_cfg_to_json(p.attacked)}};
}

ExperimentPlan plan_from_json(const nlohmann::json& j, ExperimentPlan p) {
  p.case_name = j.value("case", p.case_name);
  p.region = j.value("region", p.region);
  p.epsilons = j.value("epsilons", p.epsilons);
  if (j.contains("modes")) {
    p.modes.clear();
    for (const auto& m : j.at("modes")) p.modes.push_back(selection_mode_from(m.get<std::string>()));
  }
  p.samples_a = j.value("samples_a", p.samples_a);
  p.samples_b = j.value("samples_b", p.samples_b);
  if (j.contains("profile_a")) p.profile_a = profile_kind_from(j.at("profile_a"));
  if (j.contains("profile_b")) p.profile_b = profile_kind_from(j.at("profile_b"));
  p.seed = j.value("seed", p.seed);
  p.detectors = j.value("detectors", p.detectors);
  if (j.contains("out")) p.out = j.at("out").get<std::string>();
  p.workers = j.value("workers", p.workers);
  p.write_jsonl = j.value("write_jsonl", p.write_jsonl);
  p.far_target = j.value("far_target", p.far_target);
  p.measurement_unit = j.value("measurement_unit", p.measurement_unit);
  if (j.contains("nse")) {
    nlohmann::json merged = to_json(p.nse);
    merged.update(j.at("nse"));
    p.nse = nse_config_from_json(merged);
  }
  if (j.contains("divergence")) divergence_from_json(j.at("divergence"), p.divergence);
  if (j.contains("mlp_detector")) detector_cfg_from_json(j.at("mlp_detector"), p.mlp_detector);
  if (j.contains("attacked")) attacked_cfg_from_json(j.at("attacked"), p.attacked);
  for (double e : p.epsilons)
    if (!(e > 0)) throw HarnessError("epsilons must be positive");
  if (p.samples_a < 2 || p.samples_b < 2) throw HarnessError("dataset sizes must be at least 2");
  return p;
}

std::filesystem::path ArtifactPaths::attack_set(double eps, SelectionMode mode) const {
  return attacks() / ("deebbaa_eps" + eps_tag(eps) + "_" + to_string(mode) + ".gads");
}

std::filesystem::path ArtifactPaths::attack_batch(double eps, SelectionMode mode) const {
  return attacks() / ("batch_eps" + eps_tag(eps) + "_" + to_string(mode) + ".jsonl");
}

ArtifactPaths artifacts(const ExperimentPlan& p) { return {p.out}; }

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

FiveNumber five_number_summary(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("five-number summary of an empty sample");
  std::sort(v.begin(), v.end());
  FiveNumber f{};
  f.count = static_cast<int>(v.size());
  f.min = v.front();
  f.max = v.back();
  f.q1 = interpolated_quantile(v, 0.25);
  f.median = interpolated_quantile(v, 0.5);
  f.q3 = interpolated_quantile(v, 0.75);
  const double iqr = f.q3 - f.q1;
  const double lo = f.q1 - 1.5 * iqr;
  const double hi = f.q3 + 1.5 * iqr;
  f.whisker_lo = *std::lower_bound(v.begin(), v.end(), lo);
  f.whisker_hi = *(std::upper_bound(v.begin(), v.end(), hi) - 1);
  return f;
}

namespace {

void note(const ExperimentPlan& p, const std::string& msg) {
  if (!p.quiet) std::cerr << "[gridadv] " << msg << std::endl;
}

struct Context {
  NetworkCase c;
  AdmittanceSet y;
  Eigen::VectorXd weights;
  double unit = 1.0;
};

Context load_context(const ExperimentPlan& p) {
  Context ctx;
  ctx.c = load_case(p.case_name);
  ctx.y = build_admittance(ctx.c);
  ctx.weights = nominal_weights(ctx.c, ctx.y);
  ctx.unit = p.measurement_unit > 0 ? p.measurement_unit : ctx.c.base_mva;
  return ctx;
}

void require(const std::filesystem::path& f, const char* stage) {
  if (!std::filesystem::exists(f))
    throw HarnessError("missing artifact " + f.string() + " (run `" + stage + "` first)");
}

Dataset load_checked(const std::filesystem::path& f, const NetworkCase& c, const char* stage) {
  require(f, stage);
  Dataset d = read_dataset(f);
  if (d.case_name != c.name) throw HarnessError(f.string() + " belongs to case " + d.case_name);
  return d;
}

std::uint64_t profile_hash(const std::vector<double>& prof) {
  return fnv1a(std::span<const std::byte>(reinterpret_cast<const std::byte*>(prof.data()), prof.size() * sizeof(double)));
}

void write_json(const std::filesystem::path& f, const nlohmann::json& j) { write_text_file(f, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::filesystem::path& f) { return nlohmann::json::parse(read_text_file(f)); }

Eigen::VectorXd estimate_or_keep(const Context& ctx, const Eigen::VectorXd& z, const StateVector& start, bool& ok,
                                 StateVector& out) {
  EstimatorConfig est;
  est.weights = ctx.weights;
  try {
    const auto r = wls_estimate(ctx.c, ctx.y, MeasurementVector{z}, est, start);
    ok = r.converged;
    out = r.state;
  } catch (const std::exception&) {
    ok = false;
    out = start;
  }
  return out.stacked();
}

Dataset generate_dataset(const ExperimentPlan& p, const Context& ctx, const char* label, ProfileKind kind, int n,
                         std::uint64_t seed) {
  ScenarioConfig sc;
  sc.num_samples = n;
  sc.seed = seed;
  const auto prof = synthetic_profile(kind, n, seed);
  ScenarioLog log;
  auto samples = generate_scenarios(ctx.c, ctx.y, sc, prof, p.workers, &log);
  std::vector<char> ok(samples.size(), 0);
  parallel_for(samples.size(), p.workers, [&](std::size_t i) {
    EstimatorConfig est;
    est.weights = ctx.weights;
    try {
      const auto r = wls_estimate(ctx.c, ctx.y, samples[i].measurements, est);
      if (r.converged) {
        samples[i].estimated_state = r.state;
        ok[i] = 1;
      }
    } catch (const std::exception&) {
    }
  });
  Dataset d;
  d.case_name = ctx.c.name;
  int dropped = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (ok[i])
      d.samples.push_back(std::move(samples[i]));
    else
      ++dropped;
  }
  d.meta = {{"dataset", label},
            {"profile", to_string(kind)},
            {"seed", seed},
            {"profile_hash", hex64(profile_hash(prof))},
            {"requested", n},
            {"powerflow_skipped", log.skipped.size()},
            {"estimator_skipped", dropped}};
  note(p, std::string("dataset ") + label + ": " + std::to_string(d.samples.size()) + " samples (" +
              std::to_string(log.skipped.size()) + " power-flow and " + std::to_string(dropped) +
              " estimator failures skipped)");
  return d;
}

Eigen::MatrixXd residual_stream(const Context& ctx, const std::vector<ScenarioSample>& s, int workers) {
  Eigen::MatrixXd r(ctx.c.num_measurements(), static_cast<Eigen::Index>(s.size()));
  parallel_for(s.size(), workers, [&](std::size_t i) {
    r.col(static_cast<Eigen::Index>(i)) =
        standardized_residuals(ctx.c, ctx.y, s[i].measurements, *s[i].estimated_state, ctx.weights);
  });
  return r;
}

std::vector<int> attack_subset(const ExperimentPlan& p, int n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = substream(p.stage_seed(6), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(n / 3));
  std::sort(idx.begin(), idx.end());
  return idx;
}

void check_spillage(const MlpModel& model, const std::filesystem::path& b_path) {
  const std::string trained_on = model.metadata.value("dataset_hash", "");
  if (trained_on.empty()) throw HarnessError("NSE model carries no training-dataset hash");
  if (trained_on == hex64(hash_file(b_path)))
    throw HarnessError("NSE was trained on dataset B; the attacker must only see dataset A");
}

struct AttackSetOut {
  Dataset data;
  std::vector<AttackBatchEntry> batch;
};

}  // namespace

void cmd_gen_data(const ExperimentPlan& p) {
  const auto ctx = load_context(p);
  const auto paths = artifacts(p);
  std::filesystem::create_directories(paths.root);
  if (p.profile_a == p.profile_b && p.stage_seed(1) == p.stage_seed(2))
    throw HarnessError("datasets A and B must use different profiles or seeds");
  const auto a = generate_dataset(p, ctx, "A", p.profile_a, p.samples_a, p.stage_seed(1));
  const auto b = generate_dataset(p, ctx, "B", p.profile_b, p.samples_b, p.stage_seed(2));
  if (a.meta.at("profile_hash") == b.meta.at("profile_hash")) throw HarnessError("datasets A and B share a profile");
  write_dataset(paths.dataset_a(), a);
  write_dataset(paths.dataset_b(), b);
  if (p.write_jsonl) {
    write_dataset_jsonl(std::filesystem::path(paths.dataset_a()).replace_extension(".jsonl"), a);
    write_dataset_jsonl(std::filesystem::path(paths.dataset_b()).replace_extension(".jsonl"), b);
  }
  write_json(paths.root / "plan.json", plan_to_json(p));
}

NseReport cmd_train_nse(const ExperimentPlan& p) {
  const auto ctx = load_context(p);
  const auto paths = artifacts(p);
  const auto a = load_checked(paths.dataset_a(), ctx.c, "gen-data");
  const auto region = load_region(ctx.c, p.region);
  Eigen::MatrixXd z(region.num_measurements(), static_cast<Eigen::Index>(a.samples.size()));
  Eigen::MatrixXd x(region.num_states(), z.cols());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    z.col(static_cast<Eigen::Index>(i)) = project(region, a.samples[i].measurements.values) * ctx.unit;
    x.col(static_cast<Eigen::Index>(i)) = project_states(region, *a.samples[i].estimated_state);
  }
  NseTrainConfig cfg = p.nse;
  cfg.seed = p.stage_seed(3);
  note(p, "training NSE " + std::to_string(region.num_measurements()) + " -> " + std::to_string(region.num_states()) +
              " for " + std::to_string(cfg.steps) + " steps");
  NseReport rep;
  auto model = train_nse(z, x, cfg, &rep);
  model.metadata["dataset_hash"] = hex64(hash_file(paths.dataset_a()));
  model.metadata["region"] = p.region;
  model.metadata["region_hash"] = hex64(region.hash());
  model.metadata["case"] = ctx.c.name;
  model.metadata["measurement_unit"] = ctx.unit;
  save_model(paths.nse_model(), model);
  note(p, "NSE test RMSE " + format_number(rep.test_rmse) + ", max abs " + format_number(rep.test_max_abs));
  return rep;
}

BddThresholds cmd_calibrate_bdd(const ExperimentPlan& p) {
  const auto ctx = load_context(p);
  const auto paths = artifacts(p);
  const auto b = load_checked(paths.dataset_b(), ctx.c, "gen-data");
  std::vector<Eigen::VectorXd> rn(b.samples.size());
  parallel_for(b.samples.size(), p.workers, [&](std::size_t i) {
    rn[i] = normalized_residuals(ctx.c, ctx.y, b.samples[i].measurements, *b.samples[i].estimated_state, ctx.weights);
  });
  auto th = calibrate_thresholds(rn, p.far_target);
  th.case_name = ctx.c.name;
  write_json(paths.bdd(), thresholds_to_json(th));
  note(p, "BDD thresholds tau_inf=" + format_number(th.tau_inf) + " tau_2=" + format_number(th.tau_2));
  return th;
}

void cmd_train_detectors(const ExperimentPlan& p) {
  const auto ctx = load_context(p);
  const auto paths = artifacts(p);
  const auto b = load_checked(paths.dataset_b(), ctx.c, "gen-data");
  const Eigen::MatrixXd stream = residual_stream(ctx, b.samples, p.workers);
  DivergenceConfig dc = p.divergence;
  dc.far_target = p.far_target;
  const auto kld = KldDetector::calibrate(stream, stream, dc, 1.0);
  const auto tkld = KldDetector::calibrate(stream, stream, dc, 2.0);
  const auto ksrs = KsrsDetector::calibrate(stream, stream, dc);
  write_json(paths.detectors(), {{"case", ctx.c.name},
                                 {"dataset_b_hash", hex64(hash_file(paths.dataset_b()))},
                                 {"kld", kld.to_json()},
                                 {"transformed_kld", tkld.to_json()},
                                 {"ksrs", ksrs.to_json()}});

  AttackedDatasetConfig ac = p.attacked;
  ac.seed = p.stage_seed(4);
  AttackedDataset att;
  att.case_name = ctx.c.name;
  att.records = build_attacked_dataset(ctx.c, ctx.y, b.samples, ac, p.workers);
  att.meta = {{"dataset", "B_att"}, {"config", attacked_cfg_to_json(ac)}, {"seed", ac.seed}};
  write_attacked_dataset(paths.dataset_b_att(), att);
  if (p.write_jsonl)
    write_attacked_dataset_jsonl(std::filesystem::path(paths.dataset_b_att()).replace_extension(".jsonl"), att);

  const bool want_mlp = std::find(p.detectors.begin(), p.detectors.end(), "mlp") != p.detectors.end();
  if (!want_mlp) return;
  Eigen::MatrixXd z(ctx.c.num_measurements(), static_cast<Eigen::Index>(att.records.size()));
  std::vector<int> labels(att.records.size());
  for (std::size_t i = 0; i < att.records.size(); ++i) {
    z.col(static_cast<Eigen::Index>(i)) = att.records[i].measurements;
    labels[i] = att.records[i].label.attacked ? 1 : 0;
  }
  DetectorTrainConfig mc = p.mlp_detector;
  mc.seed = p.stage_seed(5);
  DetectorTrainReport rep;
  auto model = train_mlp_detector(z, labels, mc, &rep);
  model.metadata["case"] = ctx.c.name;
  save_model(paths.mlp_detector(), model);
  note(p, "MLP detector held-out accuracy " + format_number(rep.test_accuracy) + " after " +
              std::to_string(rep.steps) + " steps");
}

void cmd_attack(const ExperimentPlan& p) {
  const auto ctx = load_context(p);
  const auto paths = artifacts(p);
  const auto b = load_checked(paths.dataset_b(), ctx.c, "gen-data");
  require(paths.nse_model(), "train-nse");
  const auto model = load_model(paths.nse_model());
  check_spillage(model, paths.dataset_b());
  const auto region = load_region(ctx.c, p.region);
  if (model.metadata.value("region_hash", "") != hex64(region.hash()))
    throw HarnessError("NSE was trained for a different attack region");
  const double unit = model.metadata.value("measurement_unit", 1.0);
  const auto subset = attack_subset(p, static_cast<int>(b.samples.size()));
  std::filesystem::create_directories(paths.attacks());

  auto make_set = [&](const nlohmann::json& meta) {
    Dataset d;
    d.case_name = ctx.c.name;
    d.meta = meta;
    d.samples.resize(subset.size());
    return d;
  };

  for (double eps : p.epsilons) {
    for (auto mode : p.modes) {
      PcdmConfig cfg;
      cfg.epsilon = eps;
      cfg.mode = mode;
      cfg.measurement_unit = unit;
      Dataset d = make_set({});
      std::vector<AttackBatchEntry> batch(subset.size());
      std::vector<char> conv(subset.size(), 0);
      std::vector<int> ncomp(subset.size(), 0);
      std::vector<char> degenerate(subset.size(), 0);
      std::vector<double> predicted(subset.size(), 0.0);
      parallel_for(subset.size(), p.workers, [&](std::size_t k) {
        const auto& s = b.samples[static_cast<std::size_t>(subset[k])];
        const auto res = run_attack(model, region, s.measurements.values, cfg);
        auto& out = d.samples[k];
        out.timestamp_index = s.timestamp_index;
        out.true_state = s.true_state;
        out.measurements.values = res.z_attacked;
        bool ok = false;
        StateVector xa;
        estimate_or_keep(ctx, res.z_attacked, *s.estimated_state, ok, xa);
        out.estimated_state = xa;
        conv[k] = ok;
        auto& e = batch[k];
        e.sample_id = s.timestamp_index;
        e.epsilon = eps;
        e.mode = to_string(mode);
        for (int i = 0; i < static_cast<int>(res.selection.size()); ++i)
          if (res.selection[static_cast<std::size_t>(i)]) e.selected_indices.push_back(i);
        ncomp[k] = static_cast<int>(e.selected_indices.size());
        e.eta = res.eta;
        e.lambda_star = res.diagnostics.lambda_star;
        e.lambda_2 = res.diagnostics.lambda_2;
        degenerate[k] = res.diagnostics.degenerate;
        predicted[k] = res.diagnostics.predicted_deviation;
      });
      d.meta = {{"set", "deebbaa"},
                {"epsilon", eps},
                {"mode", to_string(mode)},
                {"b_index", subset},
                {"converged", std::vector<int>(conv.begin(), conv.end())},
                {"num_compromised", ncomp},
                {"degenerate", std::vector<int>(degenerate.begin(), degenerate.end())},
                {"predicted_deviation", predicted},
                {"measurement_unit", unit}};
      write_dataset(paths.attack_set(eps, mode), d);
      write_attack_batch(paths.attack_batch(eps, mode), batch);
      const auto failed = std::count(conv.begin(), conv.end(), 0);
      note(p, "attack eps=" + eps_tag(eps) + " mode=" + to_string(mode) + ": " + std::to_string(subset.size()) +
                  " samples, " + std::to_string(failed) + " estimator failures");
    }
  }

  Dataset ctrl = make_set({});
  std::vector<char> conv(subset.size(), 0);
  std::vector<int> ncomp(subset.size(), 0);
  parallel_for(subset.size(), p.workers, [&](std::size_t k) {
    const auto& s = b.samples[static_cast<std::size_t>(subset[k])];
    Rng rng = substream(p.stage_seed(7), static_cast<std::uint64_t>(subset[k]));
    const auto dev = sample_deviation(rng, *s.estimated_state, ctx.c.slack_bus(), p.attacked.deviation);
    const Eigen::VectorXd a = perfect_sfdia(ctx.c, ctx.y, *s.estimated_state, dev.c);
    auto& out = ctrl.samples[k];
    out.timestamp_index = s.timestamp_index;
    out.true_state = s.true_state;
    out.measurements.values = s.measurements.values + a;
    bool ok = false;
    StateVector xa;
    estimate_or_keep(ctx, out.measurements.values,
                     StateVector::from_stacked(s.estimated_state->stacked() + dev.c), ok, xa);
    out.estimated_state = xa;
    conv[k] = ok;
    ncomp[k] = static_cast<int>((a.array() != 0).count());
  });
  ctrl.meta = {{"set", "control_perfect"},
               {"b_index", subset},
               {"converged", std::vector<int>(conv.begin(), conv.end())},
               {"num_compromised", ncomp}};
  write_dataset(paths.perfect_control(), ctrl);
}

namespace {

struct SetEvaluation {
  std::string mode;
  double epsilon = 0.0;
  std::vector<int> b_index;
  std::vector<Eigen::VectorXd> z;
  std::vector<StateVector> x;
  std::vector<char> converged;
  std::vector<int> num_compromised;
};

struct Detectors {
  BddThresholds bdd;
  KldDetector kld, tkld;
  KsrsDetector ksrs;
  std::optional<MlpModel> mlp;
};

SetEvaluation set_from(const Dataset& d, double eps, const std::string& mode) {
  SetEvaluation s;
  s.mode = mode;
  s.epsilon = eps;
  s.b_index = d.meta.at("b_index").get<std::vector<int>>();
  for (int c : d.meta.at("converged").get<std::vector<int>>()) s.converged.push_back(static_cast<char>(c));
  s.num_compromised = d.meta.at("num_compromised").get<std::vector<int>>();
  for (const auto& smp : d.samples) {
    s.z.push_back(smp.measurements.values);
    s.x.push_back(*smp.estimated_state);
  }
  return s;
}

double median_of(std::vector<double> v) { return v.empty() ? 0.0 : interpolated_quantile(std::move(v), 0.5); }

struct Deviations {
  std::vector<double> dp, dq, dvm, dva;
};

Deviations deviations_of(const Context& ctx, const Dataset& b, const SetEvaluation& s) {
  const MeasurementLayout layout(ctx.c);
  const int n = ctx.c.num_buses();
  Deviations d;
  for (std::size_t k = 0; k < s.z.size(); ++k) {
    const auto& ref = b.samples[static_cast<std::size_t>(s.b_index[k])];
    const Eigen::VectorXd dz = (s.z[k] - ref.measurements.values).cwiseAbs();
    double mp = 0.0, mq = 0.0;
    for (int i = 0; i < layout.size(); ++i) {
      if (layout.is_voltage(i)) continue;
      if (layout.is_real_power(i))
        mp = std::max(mp, dz[i]);
      else
        mq = std::max(mq, dz[i]);
    }
    d.dp.push_back(mp * ctx.c.base_mva);
    d.dq.push_back(mq * ctx.c.base_mva);
    std::vector<double> vm(static_cast<std::size_t>(n)), va(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      vm[static_cast<std::size_t>(i)] = std::abs(s.x[k].vm[i] - ref.estimated_state->vm[i]);
      va[static_cast<std::size_t>(i)] = std::abs(s.x[k].va[i] - ref.estimated_state->va[i]) * 180.0 / std::numbers::pi;
    }
    d.dvm.push_back(median_of(vm));
    d.dva.push_back(median_of(va));
  }
  return d;
}

nlohmann::json summary_json(const FiveNumber& f) {
  return {{"whisker_lo", f.whisker_lo}, {"q1", f.q1}, {"median", f.median}, {"q3", f.q3},
          {"whisker_hi", f.whisker_hi}, {"min", f.min}, {"max", f.max}, {"count", f.count}};
}

std::vector<ReportRow> evaluate_set(const ExperimentPlan& p, const Context& ctx, const Dataset& b,
                                    const Eigen::MatrixXd& stream, const Detectors& det, const SetEvaluation& s,
                                    const Deviations& dev) {
  const std::size_t n = s.z.size();
  std::vector<char> f_lnr(n), f_chi(n), f_kld(n), f_tkld(n), f_ksrs(n), f_mlp(n);
  Eigen::MatrixXd attacked_stream = stream;
  std::vector<Eigen::VectorXd> rn(n);
  parallel_for(n, p.workers, [&](std::size_t k) {
    const MeasurementVector z{s.z[k]};
    rn[k] = normalized_residuals(ctx.c, ctx.y, z, s.x[k], ctx.weights);
    attacked_stream.col(s.b_index[k]) = standardized_residuals(ctx.c, ctx.y, z, s.x[k], ctx.weights);
  });
  const Eigen::Index cols = attacked_stream.cols();
  const int w = det.kld.window();
  parallel_for(n, p.workers, [&](std::size_t k) {
    const bool failed = !s.converged[k];
    f_lnr[k] = failed || lnr_test(rn[k], det.bdd);
    f_chi[k] = failed || chi2_test(rn[k], det.bdd);
    const Eigen::Index t = s.b_index[k];
    const Eigen::Index start = std::clamp<Eigen::Index>(t - w + 1, 0, std::max<Eigen::Index>(cols - w, 0));
    const Eigen::MatrixXd win = attacked_stream.middleCols(start, std::min<Eigen::Index>(w, cols));
    f_kld[k] = det.kld.test(win).attacked;
    f_tkld[k] = det.tkld.test(win).attacked;
    f_ksrs[k] = det.ksrs.test(win).attacked;
    if (det.mlp) f_mlp[k] = mlp_detect(*det.mlp, s.z[k]).attacked;
  });

  const int failures = static_cast<int>(std::count(s.converged.begin(), s.converged.end(), 0));
  int channels = 0;
  if (!s.num_compromised.empty())
    channels = *std::max_element(s.num_compromised.begin(), s.num_compromised.end());
  std::vector<ReportRow> rows;
  for (const auto& name : p.detectors) {
    const std::vector<char>* f = nullptr;
    if (name == "lnrt") f = &f_lnr;
    else if (name == "chi2") f = &f_chi;
    else if (name == "kld") f = &f_kld;
    else if (name == "transformed_kld") f = &f_tkld;
    else if (name == "ksrs") f = &f_ksrs;
    else if (name == "mlp") f = &f_mlp;
    else throw HarnessError("unknown detector '" + name + "'");
    if (name == "mlp" && !det.mlp) throw HarnessError("missing artifact: MLP detector (run `train-detectors`)");
    ReportRow r;
    r.detector = name;
    r.epsilon = s.epsilon;
    r.mode = s.mode;
    r.num_compromised_channels = channels;
    r.bypass_probability = bypass_probability(std::vector<bool>(f->begin(), f->end()));
    r.max_dp = median_of(dev.dp);
    r.max_dq = median_of(dev.dq);
    r.median_dvm = median_of(dev.dvm);
    r.median_dva = median_of(dev.dva);
    r.samples = static_cast<int>(n);
    r.estimator_failures = failures;
    rows.push_back(r);
  }
  (void)b;
  return rows;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "detector,epsilon,mode,num_compromised_channels,bypass_probability,max_dp_mw,max_dq_mvar,median_dvm_pu,"
        "median_dva_deg,samples,estimator_failures\n";
  for (const auto& r : rows)
    os << csv_escape(r.detector) << ',' << format_number(r.epsilon) << ',' << r.mode << ','
       << r.num_compromised_channels << ',' << format_number(r.bypass_probability) << ',' << format_number(r.max_dp)
       << ',' << format_number(r.max_dq) << ',' << format_number(r.median_dvm) << ',' << format_number(r.median_dva)
       << ',' << r.samples << ',' << r.estimator_failures << '\n';
  return os.str();
}

Report cmd_evaluate(const ExperimentPlan& p) {
  if (p.detectors.empty()) throw HarnessError("detector roster is empty");
  const auto ctx = load_context(p);
  const auto paths = artifacts(p);
  const auto b = load_checked(paths.dataset_b(), ctx.c, "gen-data");
  require(paths.nse_model(), "train-nse");
  check_spillage(load_model(paths.nse_model()), paths.dataset_b());
  require(paths.bdd(), "calibrate-bdd");
  require(paths.detectors(), "train-detectors");
  Detectors det;
  det.bdd = thresholds_from_json(read_json(paths.bdd()));
  const auto dj = read_json(paths.detectors());
  if (dj.at("dataset_b_hash") != hex64(hash_file(paths.dataset_b())))
    throw HarnessError("detectors were calibrated on a different dataset B");
  det.kld = KldDetector::from_json(dj.at("kld"));
  det.tkld = KldDetector::from_json(dj.at("transformed_kld"));
  det.ksrs = KsrsDetector::from_json(dj.at("ksrs"));
  if (std::find(p.detectors.begin(), p.detectors.end(), "mlp") != p.detectors.end()) {
    require(paths.mlp_detector(), "train-detectors");
    det.mlp = load_model(paths.mlp_detector());
  }
  const Eigen::MatrixXd stream = residual_stream(ctx, b.samples, p.workers);

  std::vector<SetEvaluation> sets;
  {
    SetEvaluation benign;
    benign.mode = "control_benign";
    benign.b_index = attack_subset(p, static_cast<int>(b.samples.size()));
    for (int i : benign.b_index) {
      benign.z.push_back(b.samples[static_cast<std::size_t>(i)].measurements.values);
      benign.x.push_back(*b.samples[static_cast<std::size_t>(i)].estimated_state);
      benign.converged.push_back(1);
      benign.num_compromised.push_back(0);
    }
    sets.push_back(std::move(benign));
  }
  require(paths.perfect_control(), "attack");
  sets.push_back(set_from(read_dataset(paths.perfect_control()), 0.0, "control_perfect"));
  for (double eps : p.epsilons)
    for (auto mode : p.modes) {
      require(paths.attack_set(eps, mode), "attack");
      sets.push_back(set_from(read_dataset(paths.attack_set(eps, mode)), eps, to_string(mode)));
    }

  Report rep;
  nlohmann::json boxes = nlohmann::json::array();
  nlohmann::json traces = nlohmann::json::array();
  for (const auto& s : sets) {
    const auto dev = deviations_of(ctx, b, s);
    auto rows = evaluate_set(p, ctx, b, stream, det, s, dev);
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
    if (s.mode.rfind("control", 0) == 0 || s.z.empty()) continue;
    const int channels = rows.empty() ? 0 : rows.front().num_compromised_channels;
    boxes.push_back({{"epsilon", s.epsilon},
                     {"mode", s.mode},
                     {"num_compromised_channels", channels},
                     {"max_dp_mw", summary_json(five_number_summary(dev.dp))},
                     {"max_dq_mvar", summary_json(five_number_summary(dev.dq))},
                     {"median_dvm_pu", summary_json(five_number_summary(dev.dvm))},
                     {"median_dva_deg", summary_json(five_number_summary(dev.dva))}});
    const auto& ref = b.samples[static_cast<std::size_t>(s.b_index.front())];
    std::vector<double> zb(ref.measurements.values.begin(), ref.measurements.values.end());
    std::vector<double> za(s.z.front().begin(), s.z.front().end());
    const Eigen::VectorXd xb_s = ref.estimated_state->stacked();
    const Eigen::VectorXd xa_s = s.x.front().stacked();
    traces.push_back({{"epsilon", s.epsilon},
                      {"mode", s.mode},
                      {"timestamp_index", ref.timestamp_index},
                      {"z_before", zb},
                      {"z_after", za},
                      {"x_before", std::vector<double>(xb_s.begin(), xb_s.end())},
                      {"x_after", std::vector<double>(xa_s.begin(), xa_s.end())}});
  }

  std::vector<double> n_inf, n_2;
  for (std::size_t i = 0; i < b.samples.size(); ++i) {
    const auto r = normalized_residuals(ctx.c, ctx.y, b.samples[i].measurements, *b.samples[i].estimated_state,
                                        ctx.weights);
    n_inf.push_back(r.lpNorm<Eigen::Infinity>());
    n_2.push_back(r.norm());
  }

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"detector", r.detector},
                    {"epsilon", r.epsilon},
                    {"mode", r.mode},
                    {"num_compromised_channels", r.num_compromised_channels},
                    {"bypass_probability", r.bypass_probability},
                    {"max_dp_mw", r.max_dp},
                    {"max_dq_mvar", r.max_dq},
                    {"median_dvm_pu", r.median_dvm},
                    {"median_dva_deg", r.median_dva},
                    {"samples", r.samples},
                    {"estimator_failures", r.estimator_failures}});
  rep.json = {{"case", ctx.c.name},
              {"region", p.region},
              {"reserved_detectors", reserved_detectors()},
              {"rows", rows},
              {"deviation_boxes", boxes},
              {"traces", traces},
              {"benign_norms", {{"inf", n_inf}, {"l2", n_2}}},
              {"thresholds", thresholds_to_json(det.bdd)},
              {"profile_note", "load profiles are synthetic stand-ins for the recorded utility profiles"}};

  write_text_file(paths.report_csv(), report_csv(rep.rows));
  write_json(paths.report_json(), rep.json);

  std::ostringstream wide;
  wide << "epsilon,mode,num_compromised_channels";
  std::vector<std::string> cols = p.detectors;
  cols.insert(cols.end(), reserved_detectors().begin(), reserved_detectors().end());
  for (const auto& c : cols) wide << ',' << c;
  wide << '\n';
  for (std::size_t i = 0; i < rep.rows.size(); i += p.detectors.size()) {
    const auto& r0 = rep.rows[i];
    wide << format_number(r0.epsilon) << ',' << r0.mode << ',' << r0.num_compromised_channels;
    for (std::size_t d = 0; d < p.detectors.size(); ++d) wide << ',' << format_number(rep.rows[i + d].bypass_probability);
    for (std::size_t d = 0; d < reserved_detectors().size(); ++d) wide << ',';
    wide << '\n';
  }
  write_text_file(paths.root / "bypass_wide.csv", wide.str());
  note(p, "wrote " + paths.report_csv().string());
  return rep;
}

namespace {

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7"};

/// Grouped bars: one panel per detector, groups by channel count, bars by epsilon.
std::string bypass_svg(const nlohmann::json& rows, const std::vector<std::string>& detectors,
                       const std::vector<double>& epsilons) {
  const int pw = 260, ph = 180, cols = 3;
  const int panels = static_cast<int>(detectors.size());
  const int rows_n = (panels + cols - 1) / cols;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * pw << "\" height=\"" << rows_n * ph + 30
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  for (int d = 0; d < panels; ++d) {
    const int ox = (d % cols) * pw + 35, oy = (d / cols) * ph + 20;
    const int w = pw - 50, h = ph - 50;
    os << "<text x=\"" << ox << "\" y=\"" << oy - 5 << "\">" << svg_escape(detectors[static_cast<std::size_t>(d)])
       << "</text>\n";
    os << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << w << "\" height=\"" << h
       << "\" fill=\"none\" stroke=\"#999\"/>\n";
    std::vector<int> groups;
    for (const auto& r : rows)
      if (r.at("detector") == detectors[static_cast<std::size_t>(d)] && r.at("epsilon").get<double>() > 0) {
        const int c = r.at("num_compromised_channels");
        if (std::find(groups.begin(), groups.end(), c) == groups.end()) groups.push_back(c);
      }
    std::sort(groups.begin(), groups.end());
    const double gw = groups.empty() ? w : static_cast<double>(w) / static_cast<double>(groups.size());
    const double bw = gw / (static_cast<double>(epsilons.size()) + 1.0);
    for (const auto& r : rows) {
      if (r.at("detector") != detectors[static_cast<std::size_t>(d)] || !(r.at("epsilon").get<double>() > 0)) continue;
      const auto gi = std::find(groups.begin(), groups.end(), r.at("num_compromised_channels").get<int>()) - groups.begin();
      const auto ei = std::find(epsilons.begin(), epsilons.end(), r.at("epsilon").get<double>()) - epsilons.begin();
      const double v = r.at("bypass_probability");
      const double x = ox + gi * gw + (ei + 0.5) * bw;
      os << "<rect x=\"" << format_number(x) << "\" y=\"" << format_number(oy + h * (1 - v)) << "\" width=\""
         << format_number(bw * 0.9) << "\" height=\"" << format_number(h * v) << "\" fill=\""
         << kPalette[static_cast<std::size_t>(ei) % 8] << "\"/>\n";
    }
    for (std::size_t g = 0; g < groups.size(); ++g)
      os << "<text x=\"" << format_number(ox + (g + 0.4) * gw) << "\" y=\"" << oy + h + 12 << "\">" << groups[g]
         << "</text>\n";
    os << "<text x=\"" << ox - 30 << "\" y=\"" << oy + 8 << "\">1.0</text><text x=\"" << ox - 30 << "\" y=\""
       << oy + h << "\">0.0</text>\n";
  }
  for (std::size_t e = 0; e < epsilons.size(); ++e)
    os << "<rect x=\"" << 10 + 90 * e << "\" y=\"" << rows_n * ph + 12 << "\" width=\"10\" height=\"10\" fill=\""
       << kPalette[e % 8] << "\"/><text x=\"" << 24 + 90 * e << "\" y=\"" << rows_n * ph + 21 << "\">eps="
       << format_number(epsilons[e]) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

/// Box plots per quantity; magnitudes of state deviations on a log axis.
std::string deviation_svg(const nlohmann::json& boxes) {
  const std::vector<std::pair<std::string, bool>> quantities{
      {"max_dp_mw", false}, {"max_dq_mvar", false}, {"median_dvm_pu", true}, {"median_dva_deg", true}};
  const int pw = 320, ph = 220;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * pw << "\" height=\"" << 2 * ph
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  for (std::size_t qi = 0; qi < quantities.size(); ++qi) {
    const auto& [key, log_scale] = quantities[qi];
    const int ox = static_cast<int>(qi % 2) * pw + 45, oy = static_cast<int>(qi / 2) * ph + 20;
    const int w = pw - 60, h = ph - 50;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& b : boxes) {
      lo = std::min(lo, b.at(key).at("whisker_lo").get<double>());
      hi = std::max(hi, b.at(key).at("whisker_hi").get<double>());
    }
    if (log_scale) lo = std::max(lo, hi * 1e-6);
    if (!(hi > lo)) hi = lo + 1.0;
    auto ymap = [&](double v) {
      const double t = log_scale ? (std::log10(std::max(v, lo)) - std::log10(lo)) / (std::log10(hi) - std::log10(lo))
                                 : (v - lo) / (hi - lo);
      return oy + h * (1.0 - t);
    };
    os << "<text x=\"" << ox << "\" y=\"" << oy - 5 << "\">" << key << (log_scale ? " (log scale)" : "")
       << "</text>\n<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << w << "\" height=\"" << h
       << "\" fill=\"none\" stroke=\"#999\"/>\n";
    os << "<text x=\"" << ox - 44 << "\" y=\"" << oy + 8 << "\">" << format_number(hi) << "</text><text x=\""
       << ox - 44 << "\" y=\"" << oy + h << "\">" << format_number(lo) << "</text>\n";
    const double bw = boxes.empty() ? w : static_cast<double>(w) / static_cast<double>(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const auto& s = boxes[i].at(key);
      const double cx = ox + (i + 0.5) * bw;
      const double q1 = ymap(s.at("q1")), q3 = ymap(s.at("q3")), md = ymap(s.at("median"));
      const double wl = ymap(s.at("whisker_lo")), wh = ymap(s.at("whisker_hi"));
      os << "<line x1=\"" << format_number(cx) << "\" x2=\"" << format_number(cx) << "\" y1=\"" << format_number(wl)
         << "\" y2=\"" << format_number(wh) << "\" stroke=\"#333\"/>\n";
      os << "<rect x=\"" << format_number(cx - bw * 0.35) << "\" y=\"" << format_number(q3) << "\" width=\""
         << format_number(bw * 0.7) << "\" height=\"" << format_number(std::max(q1 - q3, 0.5)) << "\" fill=\""
         << kPalette[i % 4] << "\" stroke=\"#333\"/>\n";
      os << "<line x1=\"" << format_number(cx - bw * 0.35) << "\" x2=\"" << format_number(cx + bw * 0.35)
         << "\" y1=\"" << format_number(md) << "\" y2=\"" << format_number(md) << "\" stroke=\"#000\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

void cmd_report(const ExperimentPlan& p) {
  const auto paths = artifacts(p);
  require(paths.report_json(), "evaluate");
  const auto rep = read_json(paths.report_json());
  std::filesystem::create_directories(paths.figures());

  std::ostringstream bars;
  bars << "detector,epsilon,mode,num_compromised_channels,bypass_probability\n";
  std::vector<std::string> detectors;
  for (const auto& r : rep.at("rows")) {
    const std::string d = r.at("detector");
    if (std::find(detectors.begin(), detectors.end(), d) == detectors.end()) detectors.push_back(d);
    if (!(r.at("epsilon").get<double>() > 0)) continue;
    bars << d << ',' << format_number(r.at("epsilon")) << ',' << r.at("mode").get<std::string>() << ','
         << r.at("num_compromised_channels").get<int>() << ',' << format_number(r.at("bypass_probability")) << '\n';
  }
  write_text_file(paths.figures() / "bypass_bars.csv", bars.str());
  write_text_file(paths.figures() / "bypass_bars.svg", bypass_svg(rep.at("rows"), detectors, p.epsilons));

  std::ostringstream box;
  box << "epsilon,mode,num_compromised_channels,quantity,log_scale,whisker_lo,q1,median,q3,whisker_hi,min,max,count\n";
  for (const auto& b : rep.at("deviation_boxes"))
    for (const char* key : {"max_dp_mw", "max_dq_mvar", "median_dvm_pu", "median_dva_deg"}) {
      const auto& s = b.at(key);
      const bool log_scale = std::string(key).rfind("median", 0) == 0;
      box << format_number(b.at("epsilon")) << ',' << b.at("mode").get<std::string>() << ','
          << b.at("num_compromised_channels").get<int>() << ',' << key << ',' << (log_scale ? 1 : 0);
      for (const char* f : {"whisker_lo", "q1", "median", "q3", "whisker_hi", "min", "max"})
        box << ',' << format_number(s.at(f));
      box << ',' << s.at("count").get<int>() << '\n';
    }
  write_text_file(paths.figures() / "deviation_boxes.csv", box.str());
  write_text_file(paths.figures() / "deviation_boxes.svg", deviation_svg(rep.at("deviation_boxes")));

  std::ostringstream tr;
  tr << "epsilon,mode,timestamp_index,kind,index,before,after\n";
  for (const auto& t : rep.at("traces")) {
    for (const char* kind : {"z", "x"}) {
      const auto before = t.at(std::string(kind) + "_before").get<std::vector<double>>();
      const auto after = t.at(std::string(kind) + "_after").get<std::vector<double>>();
      for (std::size_t i = 0; i < before.size(); ++i)
        tr << format_number(t.at("epsilon")) << ',' << t.at("mode").get<std::string>() << ','
           << t.at("timestamp_index").get<std::int64_t>() << ',' << kind << ',' << i << ','
           << format_number(before[i]) << ',' << format_number(after[i]) << '\n';
    }
  }
  write_text_file(paths.figures() / "point_traces.csv", tr.str());

  std::ostringstream hist;
  hist << "norm,bin_lo,bin_hi,count,threshold\n";
  const auto th = rep.at("thresholds");
  for (const char* norm : {"inf", "l2"}) {
    const auto v = rep.at("benign_norms").at(norm).get<std::vector<double>>();
    if (v.empty()) continue;
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    const int bins = 50;
    std::vector<int> counts(bins, 0);
    for (double x : v) {
      const int k = hi > lo ? std::min(bins - 1, static_cast<int>((x - lo) / (hi - lo) * bins)) : 0;
      ++counts[static_cast<std::size_t>(k)];
    }
    const double tau = std::string(norm) == "inf" ? th.at("tau_inf").get<double>() : th.at("tau_2").get<double>();
    for (int k = 0; k < bins; ++k)
      hist << norm << ',' << format_number(lo + (hi - lo) * k / bins) << ','
           << format_number(lo + (hi - lo) * (k + 1) / bins) << ',' << counts[static_cast<std::size_t>(k)] << ','
           << format_number(tau) << '\n';
  }
  write_text_file(paths.figures() / "benign_residual_hist.csv", hist.str());
  note(p, "wrote figures to " + paths.figures().string());
}

Report run_pipeline(const ExperimentPlan& p) {
  cmd_gen_data(p);
  cmd_train_nse(p);
  cmd_calibrate_bdd(p);
  cmd_train_detectors(p);
  cmd_attack(p);
  auto rep = cmd_evaluate(p);
  cmd_report(p);
  return rep;
}

}  // namespace gridadv
