#include "gridadv/profile.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "gridadv/common.hpp"

namespace gridadv {

ProfileKind profile_kind_from(const std::string& name) {
  if (name == "half-hourly") return ProfileKind::HalfHourly;
  if (name == "five-minute") return ProfileKind::FiveMinute;
  throw std::invalid_argument("unknown profile kind '" + name + "'");
}

std::string to_string(ProfileKind kind) { return kind == ProfileKind::HalfHourly ? "half-hourly" : "five-minute"; }

namespace {

std::vector<double> raw_series(int count, double step_minutes, std::uint64_t seed, const ProfileShape& s,
                               double phase) {
  Rng rng = substream(seed, 0);
  std::normal_distribution<double> g(0.0, s.ar_sigma);
  std::vector<double> out(count);
  double ar = 0.0;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < count; ++i) {
    const double hours = i * step_minutes / 60.0;
    ar = s.ar_coefficient * ar + g(rng);
    out[i] = s.mean + s.diurnal_amplitude * std::sin(two_pi * (hours / 24.0) + phase) +
             s.weekly_amplitude * std::sin(two_pi * hours / (24.0 * 7.0) + 0.5 * phase) + ar;
  }
  return out;
}

}  // namespace

std::vector<double> interpolate_profile(const std::vector<double>& coarse, int factor, int num_samples) {
  if (factor < 1 || coarse.empty()) throw std::invalid_argument("bad interpolation request");
  std::vector<double> out(num_samples);
  for (int i = 0; i < num_samples; ++i) {
    const auto lo = static_cast<std::size_t>(i / factor);
    const double t = static_cast<double>(i % factor) / factor;
    const double a = coarse[std::min(lo, coarse.size() - 1)];
    const double b = coarse[std::min(lo + 1, coarse.size() - 1)];
    out[i] = a + t * (b - a);
  }
  return out;
}

std::vector<double> synthetic_profile(ProfileKind kind, int num_samples, std::uint64_t seed,
                                      const ProfileShape& shape) {
  if (num_samples < 1) throw std::invalid_argument("num_samples must be at least 1");
  if (kind == ProfileKind::FiveMinute) return raw_series(num_samples, 5.0, seed, shape, -std::numbers::pi / 2);
  const int coarse_count = num_samples / 6 + 2;
  return interpolate_profile(raw_series(coarse_count, 30.0, seed, shape, -2.0), 6, num_samples);
}

}  // namespace gridadv
