// Certified minimization of the weighted pinching disturbance
//
//     inf_rho  lambda·delta(rho, 0) + (1−lambda)·delta(rho, phi)
//     s.t.     |tr(rho·(f0 + bz·fz + bx·fx)) − S| ≤ slack,  rho a state,
//
// as a semidefinite program. delta(rho, a) = ‖rho − T_a[rho]‖₁ is the trace
// norm of the block off-diagonal part of rho in the angle-a pinching basis;
// it enters through the standard epigraph ‖B‖₁ ≤ (tr Y + tr Z)/2 with
// [[Y, B], [B†, Z]] ⪰ 0, where B is the 2×2 off-diagonal block of rho.
//
// The solver is a dense primal-dual interior-point method (HKM direction,
// Mehrotra predictor-corrector) over three 4×4 complex Hermitian cones plus
// two scalar slacks. Reported dual values are *repaired* to exact dual
// feasibility (operator-norm clipping of the epigraph duals, lambda_min shift
// of the state-block dual), so dualValue is a rigorous lower bound on the
// optimum by weak duality, independent of how far the interior-point
// iteration converged. Dual certificates are affine in (S, slack) and can be
// transferred to nearby instances, which the net pipeline uses for pruning.
#pragma once

#include "diqkd/quantum.hpp"

namespace diqkd::sdp {

using quantum::Mat2;
using quantum::Mat4;
using quantum::Vec4;

// CHSH operator split into frame-independent direction operators:
// chsh_operator(frame(phi, omega)) = f0 + sin(omega)·fx + cos(omega)·fz.
struct ChshDecomposition {
  double phi = 0.0;
  Mat4 f0, fx, fz;
  Mat4 operator_for(double bz, double bx) const { return f0 + bz * fz + bx * fx; }
};

ChshDecomposition build_chsh_decomposition(double phi);

enum class SdpStatus { optimal, infeasible, numerical_limit };

// Exactly dual-feasible certificate. For any state rho with
// |tr(rho·G) − s| ≤ kappa the objective is ≥ value(s, kappa); the bound is
// affine in (s, kappa) with slope nu, so one certificate serves a whole
// family of right-hand sides.
struct DualCertificate {
  Mat2 w0 = Mat2::Zero();  // epigraph dual, ‖w0‖ ≤ lambda
  Mat2 w1 = Mat2::Zero();  // epigraph dual, ‖w1‖ ≤ 1−lambda
  double nu = 0.0;         // multiplier of the violation constraint
  double y0 = 0.0;         // lambda_min of the repaired state-block dual
  double value(double s, double kappa) const {
    return y0 + nu * s - std::abs(nu) * kappa;
  }
};

struct SdpSolution {
  double primal = 0.0;  // objective of an exactly feasible state
  double dual = 0.0;    // repaired weak-duality lower bound
  double gap = 0.0;     // primal − dual
  SdpStatus status = SdpStatus::numerical_limit;
  DualCertificate certificate;
  int iterations = 0;
};

// Weight lambda on the angle-0 pinching, 1−lambda on the angle-phi pinching.
// b = (bz, bx) must be a unit vector; slack ≥ 0. tol controls the
// interior-point termination; the certificate is valid regardless.
SdpSolution solve_weighted_delta_sdp(const ChshDecomposition& decomp, double bz,
                                     double bx, double lambda, double s,
                                     double slack, double tol = 1e-9);

SdpSolution solve_weighted_delta_sdp(double phi, double bz, double bx,
                                     double lambda, double s, double slack,
                                     double tol = 1e-9);

// Rebuilds the lambda_min shift of an existing certificate against a
// different instance (other b or phi). The result is exactly dual-feasible
// for that instance; quality degrades smoothly with distance.
DualCertificate transfer_certificate(const ChshDecomposition& decomp, double bz,
                                     double bx, double lambda,
                                     const DualCertificate& cert);

// lambda·delta(rho,0) + (1−lambda)·delta(rho,phi) evaluated directly
// (closed-form 2×2 nuclear norms); used for primal values and tests.
double weighted_delta_objective(const Mat4& rho, double phi, double lambda);

double max_violation(const ChshDecomposition& decomp, double bz, double bx);

} // namespace diqkd::sdp
