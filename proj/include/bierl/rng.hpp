#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace bierl::rng {

using Engine = std::mt19937_64;

/// Stream tags. Every random quantity in a run is drawn from a stream
/// derived from (run seed, tag, counters...), so no generator state has to
/// be carried between iterations or serialized.
enum Tag : std::uint64_t {
  kInnerNoise = 0x11,
  kMetaNoise = 0x12,
  kLookahead = 0x13,
  kBo = 0x14,
  kPolicyInit = 0x15,
  kMetaInit = 0x16,
  kTask = 0x17,
  kEval = 0x18,
};

/// splitmix64 finalizer.
std::uint64_t mix(std::uint64_t x) noexcept;

/// Hash a seed together with an ordered list of tags/counters.
std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept;

Engine engine(std::uint64_t seed);

/// i.i.d. standard normal entries.
void fill_normal(Engine& eng, std::span<double> out);

}  // namespace bierl::rng
