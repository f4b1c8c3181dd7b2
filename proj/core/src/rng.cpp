#include "snakecpg/rng.hpp"

#include <sstream>

#include "snakecpg/error.hpp"

namespace snakecpg {
namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng make_stream(std::uint64_t root_seed, std::string_view name) {
  return make_stream(root_seed, name, 0);
}

Rng make_stream(std::uint64_t root_seed, std::string_view name, std::uint64_t index) {
  const std::uint64_t a = mix(root_seed);
  const std::uint64_t b = mix(a ^ fnv1a(name));
  const std::uint64_t c = mix(b ^ mix(index + 0x5851f42d4c957f2dULL));
  std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

std::string serialize_rng(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng deserialize_rng(const std::string& text) {
  Rng rng;
  std::istringstream in(text);
  in >> rng;
  if (in.fail()) {
    throw PersistenceError("corrupt RNG state in checkpoint");
  }
  return rng;
}

}  // namespace snakecpg
