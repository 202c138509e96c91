#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace skd {

using Rng = std::mt19937_64;

// 64-bit FNV-1a over raw bytes. Stable across runs and platforms of equal
// endianness; used for dataset/model fingerprints and seed derivation.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size) noexcept {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= bytes[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void update_value(const T& value) noexcept {
    update(&value, sizeof(T));
  }
  [[nodiscard]] std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Deterministic per-stage seed: the same (root, tag) always yields the same
// stream, and distinct tags yield unrelated streams.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) noexcept;

}  // namespace skd
