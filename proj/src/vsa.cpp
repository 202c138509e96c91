#include "skd/vsa.hpp"

#include <array>
#include <bit>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "skd/binio.hpp"
#include "skd/error.hpp"
#include "skd/rng.hpp"

namespace skd::vsa {
namespace {

std::uint64_t tail_mask(std::size_t dim) noexcept {
  const std::size_t rem = dim % kWordBits;
  return rem == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
}

// Byte b spread to eight byte lanes: lane j holds bit j of b.
constexpr std::array<std::uint64_t, 256> make_spread_table() {
  std::array<std::uint64_t, 256> t{};
  for (std::size_t b = 0; b < 256; ++b) {
    std::uint64_t v = 0;
    for (std::size_t j = 0; j < 8; ++j) v |= std::uint64_t((b >> j) & 1u) << (8 * j);
    t[b] = v;
  }
  return t;
}
constexpr auto kSpread = make_spread_table();

void require_same_dim(const Hypervector& a, const Hypervector& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace

Hypervector::Hypervector(std::size_t dim) : dim_(dim), words_(words_for(dim), 0) {}

Hypervector::Hypervector(std::size_t dim, std::vector<std::uint64_t> words)
    : dim_(dim), words_(std::move(words)) {
  if (words_.size() != words_for(dim_)) {
    throw std::invalid_argument("hypervector: expected " + std::to_string(words_for(dim_)) +
                                " words for dim " + std::to_string(dim_) + ", got " +
                                std::to_string(words_.size()));
  }
  if (!words_.empty() && (words_.back() & ~tail_mask(dim_)) != 0) {
    throw std::invalid_argument("hypervector: pad bits set beyond dim " + std::to_string(dim_));
  }
}

Hypervector Hypervector::from_bipolar(std::span<const int> values) {
  HypervectorBuilder b(values.size());
  for (std::size_t d = 0; d < values.size(); ++d) {
    if (values[d] != 1 && values[d] != -1) {
      throw std::invalid_argument("hypervector: component " + std::to_string(d) +
                                  " is not bipolar");
    }
    b.set(d, values[d] == 1);
  }
  return std::move(b).build();
}

Hypervector Hypervector::from_signs(std::span<const double> values) {
  HypervectorBuilder b(values.size());
  for (std::size_t d = 0; d < values.size(); ++d) b.set(d, values[d] >= 0.0);
  return std::move(b).build();
}

int Hypervector::at(std::size_t d) const {
  if (d >= dim_) throw std::out_of_range("hypervector: index out of range");
  return ((words_[d / kWordBits] >> (d % kWordBits)) & 1u) ? 1 : -1;
}

std::vector<int> Hypervector::to_bipolar() const {
  std::vector<int> out(dim_);
  for (std::size_t d = 0; d < dim_; ++d) {
    out[d] = ((words_[d / kWordBits] >> (d % kWordBits)) & 1u) ? 1 : -1;
  }
  return out;
}

Hypervector Hypervector::negated() const {
  Hypervector out = *this;
  for (auto& w : out.words_) w = ~w;
  out.clear_padding();
  return out;
}

void Hypervector::clear_padding() noexcept {
  if (!words_.empty()) words_.back() &= tail_mask(dim_);
}

void HypervectorBuilder::set(std::size_t d, bool positive) {
  if (d >= hv_.dim_) throw std::out_of_range("hypervector: index out of range");
  const std::uint64_t bit = std::uint64_t{1} << (d % kWordBits);
  auto& w = hv_.words_[d / kWordBits];
  w = positive ? (w | bit) : (w & ~bit);
}

void IntegerVector::accumulate(const Hypervector& v) {
  if (v.dim() != values_.size()) {
    throw std::invalid_argument("bundle: dimension mismatch (" + std::to_string(values_.size()) +
                                " vs " + std::to_string(v.dim()) + ")");
  }
  const auto words = v.words();
  for (std::size_t d = 0; d < values_.size(); ++d) {
    const auto bit = (words[d / kWordBits] >> (d % kWordBits)) & 1u;
    values_[d] += bit ? 1 : -1;
  }
}

ClassBook::ClassBook(std::vector<Hypervector> vectors) : vectors_(std::move(vectors)) {
  if (vectors_.size() < 2) throw std::invalid_argument("class book: need at least 2 classes");
  for (const auto& v : vectors_) require_same_dim(vectors_.front(), v, "class book");
}

Hypervector bind(const Hypervector& a, const Hypervector& b) {
  require_same_dim(a, b, "bind");
  std::vector<std::uint64_t> words(a.words().size());
  for (std::size_t i = 0; i < words.size(); ++i) words[i] = ~(a.words()[i] ^ b.words()[i]);
  if (!words.empty()) words.back() &= tail_mask(a.dim());
  return Hypervector(a.dim(), std::move(words));
}

IntegerVector bundle_sum(std::span<const Hypervector> vs) {
  if (vs.empty()) throw std::invalid_argument("bundle: empty input");
  IntegerVector acc(vs.front().dim());
  for (const auto& v : vs) acc.accumulate(v);
  return acc;
}

Hypervector sign_threshold(const IntegerVector& acc, TieRule tie_rule, std::uint64_t tie_seed) {
  HypervectorBuilder b(acc.dim());
  std::optional<Rng> rng;
  for (std::size_t d = 0; d < acc.dim(); ++d) {
    const auto v = acc[d];
    bool positive = v > 0;
    if (v == 0) {
      switch (tie_rule) {
        case TieRule::plus: positive = true; break;
        case TieRule::minus: positive = false; break;
        case TieRule::seeded_random:
          if (!rng) rng.emplace(tie_seed);
          positive = ((*rng)() >> 63) != 0;
          break;
      }
    }
    b.set(d, positive);
  }
  return std::move(b).build();
}

BundleCounter::BundleCounter(std::size_t dim)
    : dim_(dim), lanes_(words_for(dim) * 8, 0), ones_(dim, 0) {}

void BundleCounter::add_word(std::size_t word, std::uint64_t bits) noexcept {
  std::uint64_t* lane = lanes_.data() + word * 8;
  for (std::size_t k = 0; k < 8; ++k) lane[k] += kSpread[(bits >> (8 * k)) & 0xffu];
}

void BundleCounter::add(const Hypervector& v) {
  if (v.dim() != dim_) {
    throw std::invalid_argument("bundle: dimension mismatch (" + std::to_string(dim_) + " vs " +
                                std::to_string(v.dim()) + ")");
  }
  const auto w = v.words();
  for (std::size_t i = 0; i < w.size(); ++i) add_word(i, w[i]);
  ++count_;
  if (++pending_ == 255) flush();
}

void BundleCounter::add_bound(const Hypervector& a, const Hypervector& b) {
  require_same_dim(a, b, "bind");
  if (a.dim() != dim_) {
    throw std::invalid_argument("bundle: dimension mismatch (" + std::to_string(dim_) + " vs " +
                                std::to_string(a.dim()) + ")");
  }
  const auto wa = a.words();
  const auto wb = b.words();
  const std::size_t last = wa.size() - 1;
  for (std::size_t i = 0; i < last; ++i) add_word(i, ~(wa[i] ^ wb[i]));
  add_word(last, ~(wa[last] ^ wb[last]) & tail_mask(dim_));
  ++count_;
  if (++pending_ == 255) flush();
}

void BundleCounter::flush() noexcept {
  for (std::size_t d = 0; d < dim_; ++d) {
    const std::size_t word = d / kWordBits;
    const std::size_t bit = d % kWordBits;
    ones_[d] += static_cast<std::int32_t>((lanes_[word * 8 + bit / 8] >> (8 * (bit % 8))) & 0xffu);
  }
  std::fill(lanes_.begin(), lanes_.end(), 0);
  pending_ = 0;
}

void BundleCounter::clear() noexcept {
  std::fill(lanes_.begin(), lanes_.end(), 0);
  std::fill(ones_.begin(), ones_.end(), 0);
  count_ = 0;
  pending_ = 0;
}

IntegerVector BundleCounter::sums() {
  flush();
  std::vector<std::int32_t> values(dim_);
  const auto n = static_cast<std::int32_t>(count_);
  for (std::size_t d = 0; d < dim_; ++d) values[d] = 2 * ones_[d] - n;
  return IntegerVector(std::move(values));
}

Hypervector BundleCounter::threshold(TieRule tie_rule, std::uint64_t tie_seed) {
  return sign_threshold(sums(), tie_rule, tie_seed);
}

std::size_t hamming(const Hypervector& a, const Hypervector& b) {
  require_same_dim(a, b, "hamming");
  std::size_t count = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) count += std::popcount(wa[i] ^ wb[i]);
  return count;
}

std::size_t nearest_class(const Hypervector& query, const ClassBook& book) {
  std::size_t best = 0;
  std::size_t best_dist = std::numeric_limits<std::size_t>::max();
  for (std::size_t c = 0; c < book.num_classes(); ++c) {
    const auto dist = hamming(query, book[c]);
    if (dist < best_dist) {
      best_dist = dist;
      best = c;
    }
  }
  return best;
}

void write_hypervector(std::ostream& out, const Hypervector& v) {
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.dim()));
  for (auto w : v.words()) binio::write_le<std::uint64_t>(out, w);
}

Hypervector read_hypervector(std::istream& in) {
  const auto dim = binio::read_le<std::uint32_t>(in);
  if (dim == 0) throw DataError("hypervector: zero dimension in stream");
  std::vector<std::uint64_t> words(words_for(dim));
  for (auto& w : words) w = binio::read_le<std::uint64_t>(in);
  try {
    return Hypervector(dim, std::move(words));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

std::size_t serialized_size(std::size_t dim) noexcept { return 4 + 8 * words_for(dim); }

}  // namespace skd::vsa
