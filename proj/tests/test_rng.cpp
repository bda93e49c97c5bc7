#include "doctest.h"

#include <cmath>
#include <initializer_list>
#include <stdexcept>

#include "resshift/rng.hpp"

using namespace resshift;

TEST_CASE("identical keys give identical sequences") {
  Prng a(42, 7, 3), b(42, 7, 3);
  for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct key components open distinct streams") {
  Prng base(42, 7, 3);
  Prng seed(43, 7, 3);
  Prng stream(42, 8, 3);
  Prng step(42, 7, 4);
  const auto v = base.next_u64();
  CHECK(v != seed.next_u64());
  CHECK(v != stream.next_u64());
  CHECK(v != step.next_u64());
}

TEST_CASE("uniform stays in [0,1) with sane moments") {
  Prng g(1);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal moments") {
  Prng g(2);
  double sum = 0.0, sumsq = 0.0, sumcube = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    sum += z;
    sumsq += z * z;
    sumcube += z * z * z;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::fabs(sumcube / n) < 0.05);
}

TEST_CASE("uniform_index covers the range") {
  Prng g(3);
  int counts[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 50000; ++i) counts[g.uniform_index(5)] += 1;
  for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.05));
  CHECK_THROWS_AS(g.uniform_index(0), std::invalid_argument);
}

TEST_CASE("poisson mean and variance track the rate") {
  for (const double rate : {0.5, 3.0, 12.0, 80.0}) {
    CAPTURE(rate);
    Prng g(4, static_cast<std::uint64_t>(rate * 10));
    double sum = 0.0, sumsq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(g.poisson(rate));
      sum += k;
      sumsq += k * k;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(rate).epsilon(0.03));
    CHECK(var == doctest::Approx(rate).epsilon(0.05));
  }
  Prng g(5);
  CHECK(g.poisson(0.0) == 0);
  CHECK(g.poisson(-1.0) == 0);
}

TEST_CASE("stream namespaces do not collide") {
  CHECK(stream_id(Stream::Dataset, 1) != stream_id(Stream::Degrade, 1));
  CHECK(stream_id(Stream::Marginal, 2) != stream_id(Stream::Marginal, 3));
  Prng a = make_prng(9, Stream::Dataset, 5);
  Prng b = make_prng(9, Stream::Degrade, 5);
  CHECK(a.next_u64() != b.next_u64());
}
