#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "diqkd/entropy.hpp"
#include "diqkd/quantum.hpp"

using namespace diqkd;
using namespace diqkd::entropy;
using quantum::DensityMatrix;
using quantum::Mat4;
using quantum::Vec4;

namespace {

constexpr double kPi = 3.14159265358979323846;

Mat4 random_ginibre_state(std::mt19937& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat4 g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = std::complex<double>(n(gen), n(gen));
  Mat4 rho = g * g.adjoint();
  rho /= rho.trace().real();
  return rho;
}

}  // namespace

TEST_CASE("binary entropy reference values") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(binary_entropy(0.25) == doctest::Approx(0.8112781244591328).epsilon(1e-14));
  CHECK(binary_entropy(0.05) == doctest::Approx(0.28639695711595625).epsilon(1e-14));
  CHECK_THROWS_AS(binary_entropy(-0.01), std::domain_error);
  CHECK_THROWS_AS(binary_entropy(1.01), std::domain_error);
}

TEST_CASE("von Neumann entropy reference values") {
  CHECK(von_neumann_entropy(DensityMatrix::singlet()) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(von_neumann_entropy(DensityMatrix::maximally_mixed()) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(von_neumann_entropy(DensityMatrix::werner(0.8)) ==
        doctest::Approx(0.847584679824574).epsilon(1e-12));
}

TEST_CASE("pinching the singlet in the z basis kills the coherences") {
  const PinchingSpec spec{0.0};
  const DensityMatrix out = pinching(DensityMatrix::singlet(), spec);
  Mat4 expected = Mat4::Zero();
  expected(1, 1) = 0.5;
  expected(2, 2) = 0.5;
  CHECK((out.matrix() - expected).norm() < 1e-14);
  CHECK(von_neumann_entropy(out) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pinching is idempotent and preserves the trace") {
  std::mt19937 gen(7);
  for (int trial = 0; trial < 25; ++trial) {
    const DensityMatrix rho = DensityMatrix::from_matrix(random_ginibre_state(gen));
    const PinchingSpec spec{0.3 + 0.1 * trial};
    const DensityMatrix once = pinching(rho, spec);
    const DensityMatrix twice = pinching(once, spec);
    CHECK((once.matrix() - twice.matrix()).norm() < 1e-12);
    CHECK(once.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pinching disturbance reference values") {
  const PinchingSpec z{0.0};
  CHECK(delta_trace_norm(DensityMatrix::singlet(), z) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(delta_trace_norm(DensityMatrix::maximally_mixed(), z) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // |+⟩⊗|0⟩ is maximally disturbed by the z pinching.
  Vec4 plus_zero;
  plus_zero << 1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0), 0.0;
  CHECK(delta_trace_norm(DensityMatrix::pure(plus_zero), z) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("disturbance equals the trace distance to the pinched state") {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 40; ++trial) {
    const DensityMatrix rho = DensityMatrix::from_matrix(random_ginibre_state(gen));
    const PinchingSpec spec{2.9 * (trial + 1) / 41.0};
    const Mat4 diff = rho.matrix() - pinching(rho, spec).matrix();
    Eigen::JacobiSVD<Mat4> svd(diff);
    const double tn = svd.singularValues().sum();
    CHECK(delta_trace_norm(rho, spec) == doctest::Approx(tn).epsilon(1e-10));
  }
}

TEST_CASE("refined pinsker bound reference values and shape") {
  CHECK(refined_pinsker(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(refined_pinsker(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(refined_pinsker(0.5) == doctest::Approx(0.18872187554086717).epsilon(1e-14));

  // Nondecreasing and convex on a grid.
  double prev = 0.0, prev_slope = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double d = i / 100.0;
    const double v = refined_pinsker(d);
    const double slope = (v - prev) / 0.01;
    CHECK(v >= prev - 1e-15);
    if (i > 1) CHECK(slope >= prev_slope - 1e-9);
    prev = v;
    prev_slope = slope;
  }
}

TEST_CASE("relative entropy basics") {
  const DensityMatrix w = DensityMatrix::werner(0.6);
  CHECK(relative_entropy(w, w) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(relative_entropy(DensityMatrix::singlet(), DensityMatrix::maximally_mixed()) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::isinf(relative_entropy(DensityMatrix::maximally_mixed(),
                                    DensityMatrix::singlet())));
}

TEST_CASE("entropy production of a pinching equals the relative entropy") {
  std::mt19937 gen(13);
  for (int trial = 0; trial < 30; ++trial) {
    const DensityMatrix rho = DensityMatrix::from_matrix(random_ginibre_state(gen));
    const PinchingSpec spec{0.1 + 3.0 * trial / 30.0};
    const DensityMatrix pinched = pinching(rho, spec);
    const double lhs = relative_entropy(rho, pinched);
    const double rhs = von_neumann_entropy(pinched) - von_neumann_entropy(rho);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("relative entropy dominates the refined pinsker bound") {
  std::mt19937 gen(17);
  for (int trial = 0; trial < 400; ++trial) {
    const DensityMatrix rho = DensityMatrix::from_matrix(random_ginibre_state(gen));
    const PinchingSpec spec{kPi * (trial % 20 + 1) / 21.0};
    const double d = relative_entropy(rho, pinching(rho, spec));
    const double g = refined_pinsker(delta_trace_norm(rho, spec));
    CHECK(d >= g - 1e-10);
  }
}

TEST_CASE("refined pinsker is tight on a maximally disturbed pure state") {
  Vec4 plus_zero;
  plus_zero << 1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0), 0.0;
  const DensityMatrix rho = DensityMatrix::pure(plus_zero);
  const PinchingSpec z{0.0};
  const double d = relative_entropy(rho, pinching(rho, z));
  CHECK(d == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(refined_pinsker(delta_trace_norm(rho, z)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conditional entropy oracle is one bit for the singlet") {
  for (double phi : {0.4, kPi / 2, 2.0}) {
    for (double lambda : {0.0, 0.3, 0.5, 1.0}) {
      CHECK(conditional_entropy_oracle(DensityMatrix::singlet(), phi, lambda) ==
            doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("conditional entropy oracle interpolates linearly in the weight") {
  std::mt19937 gen(23);
  const DensityMatrix rho = DensityMatrix::from_matrix(random_ginibre_state(gen));
  const double phi = 1.1;
  const double at0 = conditional_entropy_oracle(rho, phi, 0.0);
  const double at1 = conditional_entropy_oracle(rho, phi, 1.0);
  const double mid = conditional_entropy_oracle(rho, phi, 0.35);
  CHECK(mid == doctest::Approx(0.35 * at1 + 0.65 * at0).epsilon(1e-10));
}
