#include "skd/rng.hpp"

namespace skd {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) noexcept {
  Fnv1a h;
  h.update(tag.data(), tag.size());
  return splitmix64(root ^ splitmix64(h.digest()));
}

}  // namespace skd
