#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hadamard {

// SplitMix64 finalizer, used to derive independent stream seeds from a master
// seed and a path of counters (replica, factor, trial, ...).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(master);
  for (std::uint64_t c : path) s = mix64(s ^ mix64(c + 0x632be59bd9b4e019ULL));
  return s;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Engine(derive_seed(master, path));
}

// Stream tags, so that different consumers of one master seed never collide.
namespace stream {
inline constexpr std::uint64_t kRows = 1;
inline constexpr std::uint64_t kWishart = 2;
inline constexpr std::uint64_t kConcentration = 3;
inline constexpr std::uint64_t kTestOperator = 4;
inline constexpr std::uint64_t kTensorCheck = 5;
}  // namespace stream

}  // namespace hadamard
