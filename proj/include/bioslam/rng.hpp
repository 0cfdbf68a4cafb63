#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bioslam {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a parent seed and a path of tags.
/// Every random draw in a run is keyed this way, so no generator state needs
/// to be persisted for resume.
inline std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(parent);
  for (std::uint64_t tag : path) s = splitmix64(s ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
  return s;
}

// Purpose tags for derive_seed.
namespace seed_tag {
inline constexpr std::uint64_t world = 1;
inline constexpr std::uint64_t train_render = 2;
inline constexpr std::uint64_t eval_reference = 3;
inline constexpr std::uint64_t eval_query = 4;
inline constexpr std::uint64_t order = 5;
inline constexpr std::uint64_t triplets = 6;
inline constexpr std::uint64_t replay = 7;
inline constexpr std::uint64_t replay_triplets = 8;
inline constexpr std::uint64_t refresh = 9;
inline constexpr std::uint64_t kmeans = 10;
inline constexpr std::uint64_t reward_triplets = 11;
inline constexpr std::uint64_t augment = 12;
inline constexpr std::uint64_t init = 13;
inline constexpr std::uint64_t rehearsal = 14;
}  // namespace seed_tag

}  // namespace bioslam
