#include <gtest/gtest.h>

#include <sstream>
#include <stdexcept>
#include <vector>

#include "skd/rng.hpp"
#include "skd/vsa.hpp"

using namespace skd;
using namespace skd::vsa;

namespace {

std::vector<int> random_bipolar(std::size_t dim, Rng& rng) {
  std::vector<int> v(dim);
  for (auto& x : v) x = (rng() & 1u) ? 1 : -1;
  return v;
}

Hypervector random_hv(std::size_t dim, Rng& rng) {
  const auto v = random_bipolar(dim, rng);
  return Hypervector::from_bipolar(v);
}

int dot(const std::vector<int>& a, const std::vector<int>& b) {
  int s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Hypervector, RoundTripAtAwkwardDims) {
  Rng rng(1);
  for (const std::size_t dim : {1, 63, 64, 65, 128, 257}) {
    const auto v = random_bipolar(dim, rng);
    const auto hv = Hypervector::from_bipolar(v);
    EXPECT_EQ(hv.words().size(), (dim + 63) / 64);
    EXPECT_EQ(hv.to_bipolar(), v);
    EXPECT_EQ(Hypervector(dim, std::vector<std::uint64_t>(hv.words().begin(), hv.words().end())), hv);
  }
}

TEST(Hypervector, PadBitsStayZero) {
  const auto hv = Hypervector(65).negated();
  EXPECT_EQ(hv.words()[1], 1u);
  EXPECT_THROW(Hypervector(65, {0, 2}), std::invalid_argument);
  EXPECT_THROW(Hypervector(65, {0}), std::invalid_argument);
}

TEST(Hypervector, RejectsNonBipolar) {
  const std::vector<int> v{1, 0, -1};
  EXPECT_THROW((void)Hypervector::from_bipolar(v), std::invalid_argument);
}

TEST(Bind, PaperExample) {
  const std::vector<int> a{1, -1}, b{-1, 1};
  EXPECT_EQ(bind(Hypervector::from_bipolar(a), Hypervector::from_bipolar(b)).to_bipolar(),
            (std::vector<int>{-1, -1}));
}

TEST(Bind, SelfBindIsAllPlus) {
  Rng rng(2);
  const auto v = random_hv(100, rng);
  EXPECT_EQ(bind(v, v).to_bipolar(), std::vector<int>(100, 1));
}

TEST(Bind, MatchesScalarProductAt257) {
  Rng rng(3);
  const auto a = random_bipolar(257, rng);
  const auto b = random_bipolar(257, rng);
  const auto r = bind(Hypervector::from_bipolar(a), Hypervector::from_bipolar(b)).to_bipolar();
  for (std::size_t i = 0; i < 257; ++i) ASSERT_EQ(r[i], a[i] * b[i]) << i;
}

TEST(Bind, DimensionMismatchNamesBoth) {
  try {
    (void)bind(Hypervector(3), Hypervector(5));
    FAIL();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('3'), std::string::npos);
    EXPECT_NE(msg.find('5'), std::string::npos);
  }
}

TEST(Bind, AlgebraProperties) {
  Rng rng(4);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t dim = 1 + rng() % 200;
    const auto a = random_hv(dim, rng), b = random_hv(dim, rng), c = random_hv(dim, rng);
    ASSERT_EQ(bind(a, b), bind(b, a));
    ASSERT_EQ(bind(a, bind(b, c)), bind(bind(a, b), c));
    ASSERT_EQ(bind(a, bind(a, b)), b);
  }
}

TEST(Bundle, Examples) {
  const std::vector<int> a{1, 1}, b{1, -1}, c{-1, 1};
  const std::vector<Hypervector> vs{Hypervector::from_bipolar(a), Hypervector::from_bipolar(b),
                                    Hypervector::from_bipolar(c)};
  const auto s = bundle_sum(vs);
  EXPECT_EQ(s[0], 1);
  EXPECT_EQ(s[1], 1);

  const std::vector<Hypervector> one{Hypervector::from_bipolar(b)};
  const auto s1 = bundle_sum(one);
  EXPECT_EQ(s1[0], 1);
  EXPECT_EQ(s1[1], -1);
}

TEST(Bundle, MatchesScalarSum) {
  Rng rng(5);
  std::vector<std::vector<int>> raw;
  std::vector<Hypervector> vs;
  for (int k = 0; k < 5; ++k) {
    raw.push_back(random_bipolar(64, rng));
    vs.push_back(Hypervector::from_bipolar(raw.back()));
  }
  const auto s = bundle_sum(vs);
  for (std::size_t d = 0; d < 64; ++d) {
    int want = 0;
    for (const auto& r : raw) want += r[d];
    ASSERT_EQ(s[d], want);
  }
}

TEST(Bundle, Errors) {
  EXPECT_THROW((void)bundle_sum(std::vector<Hypervector>{}), std::invalid_argument);
  const std::vector<Hypervector> vs{Hypervector(3), Hypervector(4)};
  EXPECT_THROW((void)bundle_sum(vs), std::invalid_argument);
}

TEST(SignThreshold, Examples) {
  EXPECT_EQ(sign_threshold(IntegerVector(std::vector<std::int32_t>{3, -2, 1})).to_bipolar(),
            (std::vector<int>{1, -1, 1}));
  EXPECT_EQ(sign_threshold(IntegerVector(std::vector<std::int32_t>{0, 0}), TieRule::plus).to_bipolar(),
            (std::vector<int>{1, 1}));
  EXPECT_EQ(sign_threshold(IntegerVector(std::vector<std::int32_t>{0, 0}), TieRule::minus).to_bipolar(),
            (std::vector<int>{-1, -1}));
}

TEST(SignThreshold, SeededTiesAreReproducibleAndOnlyTouchZeros) {
  std::vector<std::int32_t> vals(200, 0);
  vals[0] = 5;
  vals[1] = -5;
  const IntegerVector acc(vals);
  const auto a = sign_threshold(acc, TieRule::seeded_random, 9);
  EXPECT_EQ(a, sign_threshold(acc, TieRule::seeded_random, 9));
  EXPECT_EQ(a.at(0), 1);
  EXPECT_EQ(a.at(1), -1);
  int plus = 0;
  for (std::size_t d = 2; d < 200; ++d) plus += a.at(d) == 1;
  EXPECT_GT(plus, 60);
  EXPECT_LT(plus, 138);
}

// Exhaustive: every m-tuple of vectors in {-1,+1}^D for small D and odd m.
TEST(SignThreshold, OddBundleIsMajorityExhaustive) {
  for (const std::size_t dim : {1, 2, 3}) {
    const std::size_t n_vectors = std::size_t{1} << dim;
    for (const std::size_t m : {1, 3, 5}) {
      std::size_t total = 1;
      for (std::size_t k = 0; k < m; ++k) total *= n_vectors;
      for (std::size_t code = 0; code < total; ++code) {
        std::vector<Hypervector> vs;
        std::size_t c = code;
        for (std::size_t k = 0; k < m; ++k, c /= n_vectors) {
          std::vector<int> v(dim);
          for (std::size_t d = 0; d < dim; ++d) v[d] = ((c % n_vectors) >> d & 1u) ? 1 : -1;
          vs.push_back(Hypervector::from_bipolar(v));
        }
        const auto r = sign_threshold(bundle_sum(vs));
        for (std::size_t d = 0; d < dim; ++d) {
          std::size_t plus = 0;
          for (const auto& v : vs) plus += v.at(d) == 1;
          ASSERT_EQ(r.at(d), 2 * plus > m ? 1 : -1);
        }
      }
    }
  }
}

// Larger D with each dimension's m-tuple enumerated independently: covers
// D = 8 without the (2^8)^5 blow-up of the joint enumeration.
TEST(SignThreshold, OddBundleIsMajorityPerDimensionAtD8) {
  constexpr std::size_t dim = 8;
  for (const std::size_t m : {1, 3, 5}) {
    for (std::size_t pattern = 0; pattern < (std::size_t{1} << m); ++pattern) {
      std::vector<Hypervector> vs;
      for (std::size_t k = 0; k < m; ++k) {
        std::vector<int> v(dim);
        for (std::size_t d = 0; d < dim; ++d) v[d] = ((pattern >> ((k + d) % m)) & 1u) ? 1 : -1;
        vs.push_back(Hypervector::from_bipolar(v));
      }
      const auto r = sign_threshold(bundle_sum(vs));
      for (std::size_t d = 0; d < dim; ++d) {
        int s = 0;
        for (const auto& v : vs) s += v.at(d);
        ASSERT_EQ(r.at(d), s > 0 ? 1 : -1);
      }
    }
  }
}

TEST(BundleCounter, MatchesBundleSumAndThreshold) {
  Rng rng(6);
  for (const std::size_t dim : {1, 7, 64, 100, 257}) {
    for (const std::size_t m : {1, 2, 254, 255, 256, 600}) {
      std::vector<Hypervector> vs;
      BundleCounter bc(dim);
      for (std::size_t k = 0; k < m; ++k) {
        vs.push_back(random_hv(dim, rng));
        bc.add(vs.back());
      }
      EXPECT_EQ(bc.count(), m);
      const auto want = bundle_sum(vs);
      const auto got = bc.sums();
      ASSERT_EQ(std::vector<std::int32_t>(got.values().begin(), got.values().end()),
                std::vector<std::int32_t>(want.values().begin(), want.values().end()))
          << "dim " << dim << " m " << m;
      EXPECT_EQ(bc.threshold(), sign_threshold(want));
    }
  }
}

TEST(BundleCounter, AddBoundEqualsAddOfBind) {
  Rng rng(7);
  for (const std::size_t dim : {5, 64, 130}) {
    BundleCounter direct(dim), fused(dim);
    for (int k = 0; k < 300; ++k) {
      const auto a = random_hv(dim, rng), b = random_hv(dim, rng);
      direct.add(bind(a, b));
      fused.add_bound(a, b);
    }
    EXPECT_EQ(direct.threshold(), fused.threshold());
    EXPECT_EQ(direct.sums().values()[0], fused.sums().values()[0]);
  }
  BundleCounter bc(4);
  EXPECT_THROW(bc.add(Hypervector(5)), std::invalid_argument);
  EXPECT_THROW(bc.add_bound(Hypervector(4), Hypervector(5)), std::invalid_argument);
}

TEST(BundleCounter, ClearResets) {
  Rng rng(8);
  BundleCounter bc(70);
  for (int k = 0; k < 10; ++k) bc.add(random_hv(70, rng));
  bc.clear();
  const auto v = random_hv(70, rng);
  bc.add(v);
  EXPECT_EQ(bc.threshold(), v);
}

TEST(Hamming, Examples) {
  Rng rng(9);
  const auto v = random_hv(100, rng);
  EXPECT_EQ(hamming(v, v), 0u);
  EXPECT_EQ(hamming(v, v.negated()), 100u);
  const auto a = random_bipolar(100, rng), b = random_bipolar(100, rng);
  std::size_t want = 0;
  for (std::size_t i = 0; i < 100; ++i) want += a[i] != b[i];
  EXPECT_EQ(hamming(Hypervector::from_bipolar(a), Hypervector::from_bipolar(b)), want);
  EXPECT_THROW((void)hamming(Hypervector(3), Hypervector(4)), std::invalid_argument);
}

TEST(Hamming, EqualsHalfDimMinusDot) {
  Rng rng(10);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t dim = 1 + rng() % 300;
    const auto a = random_bipolar(dim, rng), b = random_bipolar(dim, rng);
    const auto h = hamming(Hypervector::from_bipolar(a), Hypervector::from_bipolar(b));
    ASSERT_EQ(2 * static_cast<int>(h), static_cast<int>(dim) - dot(a, b));
  }
}

TEST(NearestClass, ExamplesAndOracle) {
  Rng rng(11);
  std::vector<Hypervector> book;
  for (int c = 0; c < 5; ++c) book.push_back(random_hv(128, rng));
  const ClassBook cb(book);
  EXPECT_EQ(nearest_class(book[2], cb), 2u);

  // Equidistant: the query differs from both entries in exactly one bit.
  const std::vector<int> q{1, 1}, c0{1, -1}, c1{-1, 1};
  const ClassBook tie({Hypervector::from_bipolar(c0), Hypervector::from_bipolar(c1)});
  EXPECT_EQ(nearest_class(Hypervector::from_bipolar(q), tie), 0u);

  for (int t = 0; t < 200; ++t) {
    const auto query = random_hv(128, rng);
    std::size_t best = 0, best_d = 1000;
    for (std::size_t c = 0; c < 5; ++c) {
      std::size_t d = 0;
      for (std::size_t i = 0; i < 128; ++i) d += query.at(i) != book[c].at(i);
      if (d < best_d) best_d = d, best = c;
    }
    ASSERT_EQ(nearest_class(query, cb), best);
  }
  EXPECT_THROW((void)nearest_class(Hypervector(64), cb), std::invalid_argument);
}

TEST(ClassBook, Invariants) {
  EXPECT_THROW(ClassBook({Hypervector(8)}), std::invalid_argument);
  EXPECT_THROW(ClassBook({Hypervector(8), Hypervector(9)}), std::invalid_argument);
}

TEST(Serialization, LittleEndianLayout) {
  const std::vector<int> v{1, -1, 1};  // bits 0b101
  std::ostringstream out;
  write_hypervector(out, Hypervector::from_bipolar(v));
  const auto s = out.str();
  ASSERT_EQ(s.size(), serialized_size(3));
  ASSERT_EQ(s.size(), 12u);
  EXPECT_EQ(static_cast<unsigned char>(s[0]), 3);
  EXPECT_EQ(static_cast<unsigned char>(s[4]), 5);
  std::istringstream in(s);
  EXPECT_EQ(read_hypervector(in).to_bipolar(), v);
}
