#include "seqcl/numerics.hpp"
#include "seqcl/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace seqcl;

TEST_SUITE("numerics") {

TEST_CASE("sigmoid known values") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(1.0) == doctest::Approx(0.7310585786).epsilon(1e-9));
  // Deep saturation: bounded, no overflow, and the log-space view keeps the
  // full magnitude.
  CHECK(sigmoid(-1000.0) >= 0.0);
  CHECK(sigmoid(-1000.0) < 1e-300);
  CHECK(sigmoid(-700.0) > 0.0);
  CHECK(log_sigmoid(-1000.0) == doctest::Approx(-1000.0).epsilon(1e-9));
  CHECK(sigmoid(1e308) == 1.0);
  CHECK(sigmoid(-1e308) == 0.0);
  CHECK(std::isfinite(sigmoid(1e308)));
}

TEST_CASE("sigmoid symmetry") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-50.0, 50.0);
    CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) < 1e-12);
  }
}

TEST_CASE("log_sigmoid known values") {
  CHECK(log_sigmoid(0.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  // Frozen from a 50-digit evaluation of log(1 / (1 + exp(-5/2))).
  CHECK(log_sigmoid(2.5) == doctest::Approx(-0.0788897342925496).epsilon(1e-9));
}

TEST_CASE("log_sigmoid matches naive composition where that is finite") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-30.0, 30.0);
    CHECK(std::abs(log_sigmoid(x) - std::log(sigmoid(x))) < 1e-9);
  }
  // Below roughly -745 the naive composition underflows to log(0).
  CHECK(std::isfinite(log_sigmoid(-800.0)));
  CHECK(std::isinf(std::log(sigmoid(-800.0))));
}

TEST_CASE("logsumexp known values") {
  RealVector two(2);
  two << 0.0, 0.0;
  CHECK(logsumexp(two) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  RealVector one(1);
  for (double a : {-5.0, 0.0, 3.25, 1e300, -1e300}) {
    one[0] = a;
    CHECK(logsumexp(one) == a);  // exact for a single element
  }

  RealVector big(3);
  big << 1000.0, 1000.0, 1000.0;
  CHECK(logsumexp(big) == doctest::Approx(1000.0 + std::log(3.0)).epsilon(1e-12));

  RealVector empty(0);
  CHECK_THROWS_AS(logsumexp(empty), ValidationError);
}

TEST_CASE("logsumexp shift invariance") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    RealVector xs(5);
    for (Index i = 0; i < xs.size(); ++i) {
      xs[i] = rng.uniform(-10.0, 10.0);
    }
    const double c = rng.uniform(-100.0, 100.0);
    const double base = logsumexp(xs);
    RealVector shifted = xs.array() + c;
    CHECK(std::abs(logsumexp(shifted) - (base + c)) < 1e-9);
  }
}

TEST_CASE("cosine_sim known values") {
  RealVector a(3);
  a << 1.0, 2.0, -3.0;
  CHECK(cosine_sim(a, a) == 1.0);

  RealVector e1(2);
  RealVector e2(2);
  e1 << 1.0, 0.0;
  e2 << 0.0, 1.0;
  CHECK(cosine_sim(e1, e2) == 0.0);

  RealVector u(2);
  RealVector v(2);
  u << 1.0, 1.0;
  v << 1.0, 0.0;
  CHECK(cosine_sim(u, v) == doctest::Approx(0.7071067812).epsilon(1e-10));

  RealVector zero = RealVector::Zero(2);
  CHECK_THROWS_AS(cosine_sim(zero, e1), ValidationError);
  RealVector short_vec(3);
  CHECK_THROWS_AS(cosine_sim(short_vec, e1), ValidationError);
}

TEST_CASE("cosine_sim scale invariance") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    RealVector a(4);
    RealVector b(4);
    for (Index i = 0; i < 4; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    if (a.norm() == 0.0 || b.norm() == 0.0) {
      continue;
    }
    const double base = cosine_sim(a, b);
    const double s = rng.uniform(0.1, 10.0);
    RealVector scaled = s * a;
    CHECK(std::abs(cosine_sim(scaled, b) - base) < 1e-12);
    scaled = s * b;
    CHECK(std::abs(cosine_sim(a, scaled) - base) < 1e-12);
  }
}

TEST_CASE("rng determinism and basic stats") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(43);
  double mean = 0.0;
  for (int i = 0; i < 10000; ++i) {
    mean += c.uniform01();
  }
  mean /= 10000.0;
  CHECK(std::abs(mean - 0.5) < 0.02);

  Rng d(44);
  double nsum = 0.0;
  double nsq = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = d.normal();
    nsum += x;
    nsq += x * x;
  }
  CHECK(std::abs(nsum / 10000.0) < 0.05);
  CHECK(std::abs(nsq / 10000.0 - 1.0) < 0.05);
}

}  // TEST_SUITE
