#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gridadv {

using Rng = std::mt19937_64;

/// Independent generator for item `index` of a stream seeded with `seed`.
/// Streams are stable regardless of how items are distributed over workers.
Rng substream(std::uint64_t seed, std::uint64_t index);

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a over raw bytes; used for artifact provenance hashes.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t hash_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t h);

/// Directory holding bundled cases and region fixtures. `GRIDADV_DATA_DIR`
/// in the environment overrides the compiled-in location.
std::filesystem::path data_dir();

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Worker count from `GRIDADV_WORKERS`, falling back to `fallback`.
int default_workers(int fallback = 1);

/// Runs body(i) for i in [0, n) across `workers` threads. Each index is
/// visited exactly once; body must only touch per-index state.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body);

/// Nearest-rank empirical quantile (q in [0, 1]); q = 1 gives the maximum.
double nearest_rank_quantile(std::vector<double> values, double q);

/// Linear-interpolation quantile (the usual "type 7" definition).
double interpolated_quantile(std::vector<double> values, double q);

}  // namespace gridadv

#include "gridadv/detail/parallel.hpp"
