#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace snakecpg {

using Rng = std::mt19937_64;

/// Derives an independent generator for a named substream of a root seed
/// ("env", "policy-init", "gp", "dr", ...). Same (seed, name) -> same stream.
Rng make_stream(std::uint64_t root_seed, std::string_view name);

/// Same as make_stream but additionally keyed by an index (worker id, run id).
Rng make_stream(std::uint64_t root_seed, std::string_view name, std::uint64_t index);

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& text);

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace snakecpg
