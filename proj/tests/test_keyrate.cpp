#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "diqkd/entropy.hpp"
#include "diqkd/keyrate.hpp"

using namespace diqkd;
using namespace diqkd::keyrate;
using quantum::ChannelPoint;

namespace {

// Small nets keep the curve-backed tests fast; every certified value stays a
// valid lower bound at any resolution, only tightness varies.
bound::NetConfig small_nets() {
  bound::NetConfig cfg;
  cfg.bVertices = 360;
  cfg.phiPoints = 46;
  cfg.sGrid = 31;
  return cfg;
}

CurveCache& shared_cache() {
  static CurveCache cache(small_nets());
  return cache;
}

const std::vector<double> kSmallGrid = {0.0, 0.5, 1.0};

} // namespace

TEST_CASE("bias maps: reference points and inversion") {
  CHECK(lambda_from_p(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lambda_from_p(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lambda_from_p(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(lambda_from_p(0.6) == doctest::Approx(0.36 / 0.52).epsilon(1e-14));

  CHECK(p_from_lambda(0.0) == 0.0);
  CHECK(p_from_lambda(1.0) == 1.0);
  for (int i = 0; i <= 20; ++i) {
    const double p = i / 20.0;
    CHECK(p_from_lambda(lambda_from_p(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  double prev = -1.0;
  for (int i = 0; i <= 40; ++i) {
    const double val = p_from_lambda(i / 40.0);
    CHECK(val > prev);
    prev = val;
  }
  CHECK_THROWS_AS(lambda_from_p(1.5), std::invalid_argument);
  CHECK_THROWS_AS(p_from_lambda(-0.1), std::invalid_argument);
}

TEST_CASE("key rate inputs derive the weight and sifting factor") {
  const ChannelPoint ch(2.5, 0.02, 0.03);
  const KeyRateInputs in(0.6, ch);
  CHECK(in.pS == doctest::Approx(0.52).epsilon(1e-15));
  CHECK(in.lambda == doctest::Approx(0.36 / 0.52).epsilon(1e-14));

  const KeyRateInputs mirrored(0.4, ch);
  CHECK(mirrored.pS == doctest::Approx(in.pS).epsilon(1e-15));
  CHECK(mirrored.lambda == doctest::Approx(1.0 - in.lambda).epsilon(1e-12));

  const KeyRateInputs roundtrip = KeyRateInputs::from_lambda(in.lambda, ch);
  CHECK(roundtrip.p == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("secret fraction: endpoints, monotonicity, bias swap") {
  const KeyRateInputs clean(0.5, ChannelPoint(quantum::kTsirelson, 0.0, 0.0));
  CHECK(secret_fraction(clean, 1.0) == doctest::Approx(1.0).epsilon(1e-15));

  // Strictly decreasing in each error rate at fixed cStar.
  double prev = 2.0;
  for (int i = 0; i <= 10; ++i) {
    const double q = 0.01 + 0.4 * i / 10.0;
    const KeyRateInputs in(0.5, ChannelPoint(2.5, q, 0.05));
    const double f = secret_fraction(in, 0.8);
    CHECK(f < prev);
    prev = f;
  }

  // p <-> 1-p with q00 <-> q11 leaves the fraction unchanged.
  const KeyRateInputs a(0.7, ChannelPoint(2.6, 0.01, 0.08));
  const KeyRateInputs b(0.3, ChannelPoint(2.6, 0.08, 0.01));
  CHECK(secret_fraction(a, 0.77) ==
        doctest::Approx(secret_fraction(b, 0.77)).epsilon(1e-13));
  CHECK(key_rate(a, 0.77) == doctest::Approx(key_rate(b, 0.77)).epsilon(1e-13));
}

TEST_CASE("key rate scales the fraction by the sifting factor") {
  const ChannelPoint ch(2.7, 0.02, 0.02);
  const KeyRateInputs half(0.5, ch);
  CHECK(key_rate(half, 0.8) ==
        doctest::Approx(0.5 * secret_fraction(half, 0.8)).epsilon(1e-15));

  const KeyRateInputs full(1.0, ChannelPoint(quantum::kTsirelson, 0.0, 0.0));
  CHECK(key_rate(full, 1.0) == doctest::Approx(1.0).epsilon(1e-15));

  // r = 0 forces rate 0 regardless of bias.
  const KeyRateInputs any(0.37, ch);
  const double cZero = any.lambda * entropy::binary_entropy(0.02) +
                       (1.0 - any.lambda) * entropy::binary_entropy(0.02);
  CHECK(key_rate(any, cZero) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("curve cache folds the weight symmetry") {
  CurveCache& cache = shared_cache();
  const bound::BoundCurve& c03 = cache.curve(0.3);
  const bound::BoundCurve& c07 = cache.curve(0.7);
  CHECK(&c03 == &c07);
  CHECK(c03.lambda == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("optimize_basis_bias: grid validation, clean channel, dominance") {
  CurveCache& cache = shared_cache();
  CHECK_THROWS_AS(
      optimize_basis_bias(ChannelPoint(2.5, 0.0, 0.0), {0.0, 1.0}, cache),
      std::invalid_argument);

  // Zero noise at the Tsirelson point: the sifting factor decides, so the
  // full-bias protocol wins with rate close to 1.
  const BiasChoice clean = optimize_basis_bias(
      ChannelPoint(quantum::kTsirelson, 0.0, 0.0), kSmallGrid, cache);
  CHECK(clean.lambda == 1.0);
  CHECK(clean.p == 1.0);
  CHECK(clean.rate > 0.9);

  // Argmax dominance over the candidate weights.
  const ChannelPoint ch(2.45, 0.04, 0.04);
  const BiasChoice best = optimize_basis_bias(ch, kSmallGrid, cache);
  for (double lambda : kSmallGrid) {
    const KeyRateInputs in = KeyRateInputs::from_lambda(lambda, ch);
    const double rate = key_rate(in, cache.curve(lambda).value(ch.s));
    CHECK(best.rate >= rate - 1e-12);
  }
}

TEST_CASE("critical thresholds: ordering and depolarizing consistency") {
  CurveCache& cache = shared_cache();
  const double sHalf = critical_chsh(0.5, cache);
  const double sOne = critical_chsh(1.0, cache);

  // Looser nets shift the roots up, never below the ideal values.
  CHECK(sHalf > 2.34);
  CHECK(sHalf < 2.5);
  CHECK(sOne > 2.40);
  CHECK(sOne < 2.56);
  CHECK(sHalf < sOne);

  CHECK(critical_qber(0.5, cache) ==
        doctest::Approx(quantum::depolarizing_qber(sHalf)).epsilon(1e-9));

  // The fraction changes sign across the root.
  const auto fraction = [&](double lambda, double s) {
    const KeyRateInputs in =
        KeyRateInputs::from_lambda(lambda, ChannelPoint::depolarizing(s));
    return secret_fraction(in, cache.curve(lambda).value(s));
  };
  CHECK(fraction(0.5, sHalf - 0.02) < 0.0);
  CHECK(fraction(0.5, sHalf + 0.02) > 0.0);
}

TEST_CASE("feasibility grid: shape, monotonicity, contour") {
  CurveCache& cache = shared_cache();
  const FeasibilityGrid grid =
      feasibility_grid(2.3, 2.8, 6, 0.0, 0.14, 8, cache, kSmallGrid);
  CHECK(grid.sValues.size() == 6);
  CHECK(grid.qValues.size() == 8);
  CHECK(grid.rate.size() == 48);

  // Rates nondecreasing in S along fixed-QBER rows, nonincreasing in QBER
  // along fixed-S columns, and never negative after clamping.
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 6; ++i) {
      const double r = grid.rate[j * 6 + i];
      CHECK(r >= 0.0);
      if (i > 0) CHECK(r >= grid.rate[j * 6 + i - 1] - 1e-12);
      if (j > 0) CHECK(r <= grid.rate[(j - 1) * 6 + i] + 1e-12);
    }

  // The zero contour rises with S and stays inside the QBER range.
  double prevQ = -1.0;
  for (const auto& [s, qc] : grid.zeroContour) {
    CHECK(qc >= 0.0);
    CHECK(qc <= 0.14 + 1e-12);
    CHECK(qc >= prevQ - 1e-9);
    prevQ = qc;
  }
}

TEST_CASE("experiment evaluation floors infeasible rows") {
  CurveCache& cache = shared_cache();
  std::vector<ExperimentRecord> records;
  records.push_back({"no-violation", 2015, 2.0, 0.01, "synthetic"});
  records.push_back({"noisy", 2022, 2.3, 0.2, "synthetic"});
  records.push_back({"clean", 2023, 2.82, 0.001, "synthetic"});

  // Also prove the floor engages: the grid-optimal unfloored rate at the
  // noisy point is negative.
  const BiasChoice noisy =
      optimize_basis_bias(ChannelPoint(2.3, 0.2, 0.2), kSmallGrid, cache);
  CHECK(noisy.rate < 0.0);

  const auto results = evaluate_experiments(records, cache, kSmallGrid);
  REQUIRE(results.size() == 3);
  CHECK(results[0].rate == 0.0);
  CHECK(results[1].rate == 0.0);
  CHECK(results[2].rate > 0.5);
  CHECK(results[2].record.label == "clean");
}
