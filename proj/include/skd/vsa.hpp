#pragma once

// Bit-packed bipolar hypervectors and the binding/bundling operator set.
//
// Component encoding: +1 is bit 1, -1 is bit 0. Bit d lives in word d / 64 at
// position d % 64. Bits at positions >= dim in the last word are always 0, so
// XOR/popcount never see garbage.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace skd::vsa {

inline constexpr std::size_t kWordBits = 64;

[[nodiscard]] constexpr std::size_t words_for(std::size_t dim) noexcept {
  return (dim + kWordBits - 1) / kWordBits;
}

class Hypervector {
 public:
  Hypervector() = default;

  // All components -1.
  explicit Hypervector(std::size_t dim);

  // Takes ownership of packed words; throws if the word count is wrong or any
  // pad bit is set.
  Hypervector(std::size_t dim, std::vector<std::uint64_t> words);

  // Components must be exactly -1 or +1.
  static Hypervector from_bipolar(std::span<const int> values);
  // Positive and zero map to +1, negative to -1.
  static Hypervector from_signs(std::span<const double> values);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return words_; }

  // Component d as -1 or +1.
  [[nodiscard]] int at(std::size_t d) const;
  [[nodiscard]] std::vector<int> to_bipolar() const;
  [[nodiscard]] Hypervector negated() const;

  friend bool operator==(const Hypervector&, const Hypervector&) = default;

 private:
  friend class HypervectorBuilder;
  void clear_padding() noexcept;

  std::size_t dim_ = 0;
  std::vector<std::uint64_t> words_;
};

// Mutable staging area for constructing a hypervector component-by-component.
class HypervectorBuilder {
 public:
  explicit HypervectorBuilder(std::size_t dim) : hv_(dim) {}
  void set(std::size_t d, bool positive);
  [[nodiscard]] Hypervector build() && { return std::move(hv_); }

 private:
  Hypervector hv_;
};

// Bundling accumulator: one signed count per dimension.
class IntegerVector {
 public:
  IntegerVector() = default;
  explicit IntegerVector(std::size_t dim) : values_(dim, 0) {}
  explicit IntegerVector(std::vector<std::int32_t> values) : values_(std::move(values)) {}

  [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }
  [[nodiscard]] std::span<const std::int32_t> values() const noexcept { return values_; }
  [[nodiscard]] std::int32_t operator[](std::size_t d) const { return values_[d]; }

  // values[d] += v_d for bipolar v.
  void accumulate(const Hypervector& v);

 private:
  std::vector<std::int32_t> values_;
};

class ClassBook {
 public:
  explicit ClassBook(std::vector<Hypervector> vectors);

  [[nodiscard]] std::size_t num_classes() const noexcept { return vectors_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return vectors_.front().dim(); }
  [[nodiscard]] const Hypervector& operator[](std::size_t c) const { return vectors_[c]; }
  [[nodiscard]] std::span<const Hypervector> vectors() const noexcept { return vectors_; }

 private:
  std::vector<Hypervector> vectors_;
};

enum class TieRule { plus, minus, seeded_random };

// Bundling accumulator for hot loops: counts set bits in byte-wide SWAR lanes
// (eight dimensions per 64-bit add) and flushes to 32-bit totals before a lane
// can overflow. sums() and threshold() agree exactly with bundle_sum and
// sign_threshold over the same inputs.
class BundleCounter {
 public:
  explicit BundleCounter(std::size_t dim);

  void add(const Hypervector& v);
  // Adds bind(a, b) without materializing it.
  void add_bound(const Hypervector& a, const Hypervector& b);
  void clear() noexcept;

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t count() const noexcept { return count_; }
  [[nodiscard]] IntegerVector sums();
  [[nodiscard]] Hypervector threshold(TieRule tie_rule = TieRule::plus, std::uint64_t tie_seed = 0);

 private:
  void add_word(std::size_t word, std::uint64_t bits) noexcept;
  void flush() noexcept;

  std::size_t dim_;
  std::size_t count_ = 0;
  std::size_t pending_ = 0;
  std::vector<std::uint64_t> lanes_;  // 8 lanes per word
  std::vector<std::int32_t> ones_;    // flushed per-dimension set-bit counts
};

// Componentwise product; XNOR on the packed words.
[[nodiscard]] Hypervector bind(const Hypervector& a, const Hypervector& b);

[[nodiscard]] IntegerVector bundle_sum(std::span<const Hypervector> vs);

// sgn of each accumulator entry. Zero entries follow tie_rule; seeded_random
// draws one fair bit per zero entry from a stream seeded with tie_seed.
[[nodiscard]] Hypervector sign_threshold(const IntegerVector& acc, TieRule tie_rule = TieRule::plus,
                                         std::uint64_t tie_seed = 0);

[[nodiscard]] std::size_t hamming(const Hypervector& a, const Hypervector& b);

// argmin Hamming distance, lowest index on ties.
[[nodiscard]] std::size_t nearest_class(const Hypervector& query, const ClassBook& book);

// u32 LE dim, then ceil(dim/64) u64 LE words.
void write_hypervector(std::ostream& out, const Hypervector& v);
[[nodiscard]] Hypervector read_hypervector(std::istream& in);
[[nodiscard]] std::size_t serialized_size(std::size_t dim) noexcept;

}  // namespace skd::vsa
