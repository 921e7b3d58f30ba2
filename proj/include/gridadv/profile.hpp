#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gridadv {

/// Synthetic load-scaling profiles. `HalfHourly` is generated on a 30-min
/// grid and linearly interpolated to 5 min; `FiveMinute` is native.
enum class ProfileKind { HalfHourly, FiveMinute };

struct ProfileShape {
  double mean = 1.0;
  double diurnal_amplitude = 0.15;
  double weekly_amplitude = 0.05;
  double ar_coefficient = 0.95;
  double ar_sigma = 0.01;
};

ProfileKind profile_kind_from(const std::string& name);
std::string to_string(ProfileKind kind);

/// `num_samples` scale factors on a 5-minute grid.
std::vector<double> synthetic_profile(ProfileKind kind, int num_samples, std::uint64_t seed,
                                      const ProfileShape& shape = {});

/// Linear interpolation of a coarse series onto a grid `factor` times finer.
std::vector<double> interpolate_profile(const std::vector<double>& coarse, int factor, int num_samples);

}  // namespace gridadv
