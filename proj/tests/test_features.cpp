#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "aggrbench/error.hpp"
#include "aggrbench/features.hpp"
#include "aggrbench/memory.hpp"
#include "aggrbench/random.hpp"
#include "support.hpp"

using namespace aggr;

namespace {

// Naive triple loop in double precision; also returns sum |x||w| per element
// so single-precision error is judged against the accumulated magnitude.
struct DenseProduct {
  std::vector<double> value;
  std::vector<double> magnitude;
};

DenseProduct reference_matmul(const FeatureMatrix& x, const DenseWeights& w) {
  DenseProduct p{std::vector<double>(x.rows() * w.out_dim), std::vector<double>(x.rows() * w.out_dim)};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t o = 0; o < w.out_dim; ++o) {
      double s = 0.0, m = 0.0;
      for (std::size_t i = 0; i < w.in_dim; ++i) {
        s += static_cast<double>(x(r, i)) * static_cast<double>(w(i, o));
        m += std::abs(static_cast<double>(x(r, i)) * static_cast<double>(w(i, o)));
      }
      p.value[r * w.out_dim + o] = s;
      p.magnitude[r * w.out_dim + o] = m;
    }
  }
  return p;
}

bool close_to(const FeatureMatrix& got, const DenseProduct& ref, double rtol) {
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double scale = std::max(std::abs(ref.value[i]), ref.magnitude[i]);
    if (std::abs(got.values()[i] - ref.value[i]) > rtol * scale) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("features.matrix") {
  TEST_CASE("shape and fill") {
    FeatureMatrix m(3, 4, 1.5f);
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 4);
    CHECK(m.size() == 12);
    CHECK(m.bytes() == 48);
    CHECK(m(2, 3) == 1.5f);
  }

  TEST_CASE("value count must match the shape") {
    const std::vector<float> v = {1, 2, 3};
    CHECK_THROWS_AS(FeatureMatrix(2, 2, v), ValidationError);
  }

  TEST_CASE("non-finite entries are rejected on validation") {
    FeatureMatrix m(2, 2);
    CHECK_NOTHROW(m.validate_finite());
    m(1, 0) = std::nanf("");
    CHECK_THROWS_AS(m.validate_finite(), ValidationError);
  }

  TEST_CASE("storage goes through the memory tracker") {
    const auto before = memory::Tracker::global().current();
    {
      FeatureMatrix m(100, 10);
      CHECK(memory::Tracker::global().current() - before == 4000);
    }
    CHECK(memory::Tracker::global().current() == before);
  }

  TEST_CASE("memory budget raises with the attempted size") {
    memory::LimitGuard guard(memory::Tracker::global().current() + 1000);
    try {
      FeatureMatrix m(100, 100);
      FAIL("expected OutOfMemoryError");
    } catch (const OutOfMemoryError& e) {
      CHECK(e.attempted_bytes() == 40000);
    }
  }
}

TEST_SUITE("features.matmul") {
  TEST_CASE("hand arithmetic") {
    const FeatureMatrix x(1, 2, std::vector<float>{1, 2});
    const DenseWeights w{2, 1, {1, 1}};
    const auto y = matmul(x, w);
    CHECK(y.rows() == 1);
    CHECK(y.cols() == 1);
    CHECK(y(0, 0) == 3.0f);
  }

  TEST_CASE("identity and zero weights") {
    const auto x = random_features(7, 5, 3);
    CHECK(matmul(x, DenseWeights::identity(5)) == x);
    const auto z = matmul(x, DenseWeights::zeros(5, 3));
    CHECK(z == FeatureMatrix(7, 3, 0.0f));
  }

  TEST_CASE("dimension mismatch") {
    CHECK_THROWS_AS(matmul(FeatureMatrix(2, 3), DenseWeights::identity(4)), ContractError);
  }

  TEST_CASE("5x3 times 3x8 against the double loop") {
    const auto x = random_features(5, 3, 11);
    const auto w = DenseWeights::random(3, 8, 12);
    CHECK(close_to(matmul(x, w), reference_matmul(x, w), 1e-6));
  }

  TEST_CASE("property: 100 random products within 1e-5") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      CounterRng rng(seed, 77);
      const std::size_t rows = 1 + rng.below(40), in = 1 + rng.below(64), out = 1 + rng.below(16);
      const auto x = random_features(rows, in, seed);
      const auto w = DenseWeights::random(in, out, seed + 1000);
      const auto y = matmul(x, w);
      CHECK(close_to(y, reference_matmul(x, w), 1e-5));
      // Associativity with identity on either side.
      CHECK(matmul(matmul(x, DenseWeights::identity(in)), w) == y);
      CHECK(matmul(y, DenseWeights::identity(out)) == y);
    }
  }

  TEST_CASE("threads do not change the product") {
    const auto x = random_features(257, 33, 5);
    const auto w = DenseWeights::random(33, 9, 6);
    CHECK(matmul(x, w, ExecPolicy{4}) == matmul(x, w, ExecPolicy{1}));
  }
}

TEST_SUITE("features.random") {
  TEST_CASE("deterministic per seed") {
    CHECK(random_features(20, 7, 42) == random_features(20, 7, 42));
    CHECK_FALSE(random_features(20, 7, 42) == random_features(20, 7, 43));
  }

  TEST_CASE("entries in [-1, 1] with mean near 0") {
    const auto x = random_features(1000, 1000, 9);
    double sum = 0.0;
    for (float v : x.values()) {
      REQUIRE(v >= -1.0f);
      REQUIRE(v <= 1.0f);
      sum += v;
    }
    CHECK(std::abs(sum / 1e6) < 0.01);
  }

  TEST_CASE("glorot weights respect their bound") {
    const auto w = DenseWeights::random(30, 10, 1);
    const double bound = std::sqrt(6.0 / 40.0);
    for (float v : w.data) CHECK(std::abs(v) <= bound);
  }
}

TEST_SUITE("features.io") {
  TEST_CASE("binary round trip is exact") {
    const auto x = random_features(13, 6, 2);
    std::stringstream buf;
    write_features_binary(buf, x);
    CHECK(buf.str().size() == 16 + 13 * 6 * 4);
    CHECK(read_features_binary(buf) == x);
  }

  TEST_CASE("text round trip is exact") {
    const auto x = random_features(4, 3, 8);
    std::stringstream buf;
    write_features_text(buf, x);
    CHECK(read_features_text(buf) == x);
  }

  TEST_CASE("binary header is little-endian u64") {
    const FeatureMatrix x(2, 1, std::vector<float>{1.0f, -2.0f});
    std::stringstream buf;
    write_features_binary(buf, x);
    const auto s = buf.str();
    CHECK(static_cast<unsigned char>(s[0]) == 2);
    CHECK(static_cast<unsigned char>(s[8]) == 1);
    for (int i = 1; i < 8; ++i) CHECK(s[i] == 0);
  }

  TEST_CASE("truncated and ragged inputs") {
    std::stringstream truncated(std::string("\x02\0\0\0", 4));
    CHECK_THROWS_AS(read_features_binary(truncated), ValidationError);
    std::stringstream ragged("1 2 3\n4 5\n");
    CHECK_THROWS_AS(read_features_text(ragged), ValidationError);
  }

  TEST_CASE("file format is detected") {
    testing::TempDir dir("features");
    const auto x = random_features(5, 4, 1);
    write_features(dir / "x.bin", x, true);
    write_features(dir / "x.txt", x, false);
    CHECK(read_features(dir / "x.bin") == x);
    CHECK(read_features(dir / "x.txt") == x);
    CHECK_THROWS_AS(read_features(dir / "missing.bin"), IoError);
  }

  TEST_CASE("digest depends on shape and values") {
    const auto x = random_features(4, 4, 1);
    auto y = x;
    CHECK(digest(x) == digest(y));
    y(3, 3) += 1.0f;
    CHECK(digest(x) != digest(y));
    CHECK(digest(FeatureMatrix(2, 8)) != digest(FeatureMatrix(8, 2)));
  }
}
