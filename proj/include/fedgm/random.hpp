#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedgm {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a path of tags,
/// e.g. derive_seed(master, {kStage1, client, epoch}).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix_seed(master);
  for (auto p : path) s = mix_seed(s ^ mix_seed(p + 0x632be59bd9b4e019ULL));
  return s;
}

namespace stream {
inline constexpr std::uint64_t kPartition = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kCondenseInit = 3;
inline constexpr std::uint64_t kCondenseTheta = 4;
inline constexpr std::uint64_t kStage2Theta = 5;
inline constexpr std::uint64_t kFinalModel = 6;
inline constexpr std::uint64_t kProbe = 7;
inline constexpr std::uint64_t kFedAvg = 8;
inline constexpr std::uint64_t kLocal = 9;
inline constexpr std::uint64_t kSbm = 10;
}  // namespace stream

}  // namespace fedgm
