#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "diqkd/entropy.hpp"
#include "diqkd/quantum.hpp"
#include "diqkd/sdp.hpp"

using namespace diqkd;
using namespace diqkd::sdp;
using quantum::DensityMatrix;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRt2 = 1.4142135623730950488;

Mat4 random_ginibre_state(std::mt19937& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat4 g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = std::complex<double>(n(gen), n(gen));
  Mat4 rho = g * g.adjoint();
  rho /= rho.trace().real();
  return rho;
}

Vec4 top_eigenvector(const Mat4& g) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(g);
  return es.eigenvectors().col(3);
}

}  // namespace

TEST_CASE("decomposition reassembles the chsh operator for every omega") {
  for (double phi : {0.0, 0.7, kPi / 2, 2.4}) {
    const ChshDecomposition d = build_chsh_decomposition(phi);
    for (double omega : {0.1, kPi / 4, 1.1, 1.5}) {
      const quantum::MeasurementFrame f{phi, omega, {0.0, 0.0}};
      const Mat4 direct = quantum::chsh_operator(f);
      const Mat4 rebuilt = d.f0 + std::sin(omega) * d.fx + std::cos(omega) * d.fz;
      CHECK((direct - rebuilt).norm() < 1e-12);
    }
  }
}

TEST_CASE("largest violation matches the closed form") {
  for (double phi : {0.0, 0.4, kPi / 2, 2.0, kPi}) {
    for (double beta : {0.0, 0.3, kPi / 4, 1.2, kPi / 2}) {
      const ChshDecomposition d = build_chsh_decomposition(phi);
      const double bz = std::cos(beta), bx = std::sin(beta);
      const double expected = 2.0 * std::sqrt(1.0 + 2.0 * std::abs(bz * bx * std::sin(phi)));
      CHECK(max_violation(d, bz, bx) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("tsirelson point pins the objective to one") {
  const SdpSolution sol = solve_weighted_delta_sdp(kPi / 2, 1.0 / kRt2, 1.0 / kRt2,
                                                   0.5, 2.0 * kRt2, 0.0);
  CHECK(sol.status == SdpStatus::optimal);
  CHECK(sol.primal == doctest::Approx(1.0).epsilon(2e-6));
  CHECK(sol.dual == doctest::Approx(1.0).epsilon(2e-5));
  CHECK(sol.gap <= 1e-6);
  CHECK(sol.gap >= -1e-9);
}

TEST_CASE("classical threshold with aligned pinchings costs nothing") {
  const SdpSolution sol = solve_weighted_delta_sdp(0.0, 1.0, 0.0, 0.5, 2.0, 0.0);
  CHECK(sol.status == SdpStatus::optimal);
  CHECK(sol.primal <= 1e-7);
  CHECK(sol.primal >= 0.0);
  CHECK(std::abs(sol.dual) <= 1e-6);
}

TEST_CASE("window above the largest violation is infeasible") {
  const SdpSolution sol = solve_weighted_delta_sdp(0.0, 1.0, 0.0, 0.5, 2.5, 0.01);
  CHECK(sol.status == SdpStatus::infeasible);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(solve_weighted_delta_sdp(1.0, 1.0, 0.5, 0.5, 2.0, 0.0),
                  std::invalid_argument);  // non-unit b
  CHECK_THROWS_AS(solve_weighted_delta_sdp(1.0, 1.0, 0.0, 1.5, 2.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_weighted_delta_sdp(1.0, 1.0, 0.0, 0.5, 2.0, -0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_weighted_delta_sdp(1.0, 1.0, 0.0, 0.5, 2.0, 0.0, -1.0),
                  std::invalid_argument);
}

TEST_CASE("objective helper agrees with the entropy module") {
  std::mt19937 gen(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Mat4 rho = random_ginibre_state(gen);
    const double phi = 0.1 + 3.0 * trial / 30.0;
    const double lambda = (trial % 11) / 10.0;
    const DensityMatrix dm = DensityMatrix::from_matrix(rho);
    const double via_entropy =
        lambda * entropy::delta_trace_norm(dm, entropy::PinchingSpec{0.0}) +
        (1.0 - lambda) * entropy::delta_trace_norm(dm, entropy::PinchingSpec{phi});
    CHECK(weighted_delta_objective(rho, phi, lambda) ==
          doctest::Approx(via_entropy).epsilon(1e-10));
  }
}

TEST_CASE("weak duality against random feasible states") {
  std::mt19937 gen(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lambdas[] = {0.0, 0.3, 0.5, 0.77, 1.0};
  for (int trial = 0; trial < 120; ++trial) {
    const double phi = 0.05 + (kPi - 0.1) * u(gen);
    const double beta = 0.05 + (kPi / 2 - 0.1) * u(gen);
    const double lambda = lambdas[trial % 5];
    const double bz = std::cos(beta), bx = std::sin(beta);
    const ChshDecomposition d = build_chsh_decomposition(phi);
    const Mat4 rho = random_ginibre_state(gen);
    const double s = (d.operator_for(bz, bx) * rho).trace().real();

    const SdpSolution sol = solve_weighted_delta_sdp(d, bz, bx, lambda, s, 0.01);
    const double obj = weighted_delta_objective(rho, phi, lambda);
    CHECK(sol.certificate.value(s, 0.01) <= obj + 1e-9);
    CHECK(sol.dual <= obj + 1e-9);
    CHECK(sol.primal <= obj + 1e-6);
    CHECK(sol.gap >= -1e-9);
    CHECK(sol.gap <= 1e-6);
  }
}

TEST_CASE("primal value is nondecreasing in the violation") {
  const ChshDecomposition d = build_chsh_decomposition(1.9);
  const double bz = std::cos(0.9), bx = std::sin(0.9);
  double prev = -1.0;
  for (double s : {2.0, 2.2, 2.4, 2.6}) {
    const SdpSolution sol = solve_weighted_delta_sdp(d, bz, bx, 0.4, s, 0.0);
    REQUIRE(sol.status == SdpStatus::optimal);
    CHECK(sol.primal >= prev - 1e-7);
    prev = sol.primal;
  }
}

TEST_CASE("partially entangled witnesses meet the single-basis closed form") {
  // psi(a) = cos(a)|01> - sin(a)|10> has angle-0 disturbance sin(2a) and
  // reaches violation 2*sqrt(1 + sin(2a)^2) at its best frame, where the
  // single-basis optimum sqrt((s/2)^2 - 1) equals sin(2a) exactly.
  for (double alpha : {0.25, 0.45, kPi / 4}) {
    Vec4 psi = Vec4::Zero();
    psi(1) = std::cos(alpha);
    psi(2) = -std::sin(alpha);
    const double target = 2.0 * std::sqrt(1.0 + std::pow(std::sin(2.0 * alpha), 2));

    // Locate the frame whose largest-violation eigenvector is psi.
    double best_phi = 0.0, best_beta = 0.0, best_s = -10.0;
    for (int ip = 1; ip < 120; ++ip) {
      for (int ib = 1; ib < 60; ++ib) {
        const double phi = kPi * ip / 120.0;
        const double beta = kPi / 2 * ib / 60.0;
        const ChshDecomposition d = build_chsh_decomposition(phi);
        const double s =
            (d.operator_for(std::cos(beta), std::sin(beta)) * (psi * psi.adjoint()))
                .trace()
                .real();
        if (s > best_s) {
          best_s = s;
          best_phi = phi;
          best_beta = beta;
        }
      }
    }
    CHECK(best_s == doctest::Approx(target).epsilon(5e-4));

    const ChshDecomposition d = build_chsh_decomposition(best_phi);
    const SdpSolution sol = solve_weighted_delta_sdp(
        d, std::cos(best_beta), std::sin(best_beta), 1.0, best_s, 0.0);
    REQUIRE(sol.status == SdpStatus::optimal);
    const double analytic = std::sqrt(std::max(0.0, best_s * best_s / 4.0 - 1.0));
    CHECK(sol.primal >= analytic - 1e-7);
    CHECK(sol.primal <= std::sin(2.0 * alpha) + 5e-4);
    CHECK(sol.dual <= std::sin(2.0 * alpha) + 1e-9);
  }
}

TEST_CASE("brute-force sampling never beats the reported minimum") {
  std::mt19937 gen(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int inst = 0; inst < 6; ++inst) {
    const double phi = 0.3 + 2.4 * u(gen);
    const double beta = 0.15 + 1.25 * u(gen);
    const double lambda = inst / 5.0;
    const double bz = std::cos(beta), bx = std::sin(beta);
    const ChshDecomposition d = build_chsh_decomposition(phi);
    const Mat4 g = d.operator_for(bz, bx);
    const Vec4 psi = top_eigenvector(g);
    const Mat4 top = psi * psi.adjoint();
    const double lmax = (g * top).trace().real();
    const double s = 0.75 * lmax + 0.5;

    const SdpSolution sol = solve_weighted_delta_sdp(d, bz, bx, lambda, s, 0.0);
    REQUIRE(sol.status == SdpStatus::optimal);

    double brute = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4000; ++k) {
      const Mat4 base = random_ginibre_state(gen);
      const double c = (g * base).trace().real();
      if (lmax - c < 1e-9) continue;
      const double t = (s - c) / (lmax - c);
      if (t < 0.0 || t > 1.0) continue;
      const Mat4 cand = (1.0 - t) * base + t * top;
      brute = std::min(brute, weighted_delta_objective(cand, phi, lambda));
    }
    REQUIRE(std::isfinite(brute));
    CHECK(brute >= sol.primal - 1e-7);
    CHECK(brute >= sol.dual - 1e-9);
  }
}

TEST_CASE("certificates transfer to neighbouring instances") {
  const ChshDecomposition d0 = build_chsh_decomposition(1.3);
  const double b0 = 0.7;
  const SdpSolution sol =
      solve_weighted_delta_sdp(d0, std::cos(b0), std::sin(b0), 0.5, 2.4, 0.0);
  REQUIRE(sol.status == SdpStatus::optimal);

  const ChshDecomposition d1 = build_chsh_decomposition(1.31);
  const double b1 = 0.72;
  const DualCertificate moved =
      transfer_certificate(d1, std::cos(b1), std::sin(b1), 0.5, sol.certificate);
  const SdpSolution fresh =
      solve_weighted_delta_sdp(d1, std::cos(b1), std::sin(b1), 0.5, 2.4, 0.0);
  REQUIRE(fresh.status == SdpStatus::optimal);

  // Valid lower bound on the neighbour, and not far below its optimum.
  CHECK(moved.value(2.4, 0.0) <= fresh.primal + 1e-9);
  CHECK(moved.value(2.4, 0.0) >= fresh.dual - 0.1);

  // The certificate is affine in (s, kappa): widening the window by w costs
  // exactly nu*w.
  const double v0 = moved.value(2.4, 0.0);
  const double v1 = moved.value(2.4, 0.02);
  CHECK(v0 - v1 == doctest::Approx(moved.nu * 0.02).epsilon(1e-12));
}

TEST_CASE("slack floor does not spoil certificates at zero requested slack") {
  // Solving with slack 0 widens the window internally; the reported dual must
  // still be a valid bound for the exact-violation problem, checked here
  // against the known closed form at lambda = 1.
  const ChshDecomposition d = build_chsh_decomposition(kPi / 2);
  const SdpSolution sol =
      solve_weighted_delta_sdp(d, 1.0 / kRt2, 1.0 / kRt2, 1.0, 2.6, 0.0);
  REQUIRE(sol.status == SdpStatus::optimal);
  const double analytic = std::sqrt(std::max(0.0, 2.6 * 2.6 / 4.0 - 1.0));
  CHECK(sol.primal >= analytic - 1e-7);
  CHECK(sol.dual <= sol.primal + 1e-12);
}
