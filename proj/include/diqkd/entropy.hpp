// Entropic quantities for the pinching-channel bound. All entropies are in
// bits (log base 2). Eigenvalues below 1e-14 are treated as exact zeros
// before taking logarithms.
#pragma once

#include "diqkd/quantum.hpp"

namespace diqkd::entropy {

using quantum::DensityMatrix;
using quantum::Mat2;
using quantum::Mat4;

inline constexpr double kEigenvalueFloor = 1e-14;

// h(x) = −x·log2(x) − (1−x)·log2(1−x); h(0) = h(1) = 0. Throws outside [0,1].
double binary_entropy(double x);

double von_neumann_entropy(const DensityMatrix& rho);

// The pinching direction on Alice's side: Q(phi) projects her qubit onto the
// +1 eigenspace of observable(phi). T[ρ] = QρQ + (I−Q)ρ(I−Q).
struct PinchingSpec {
  double phi = 0.0;
  // ((I + cosφ·σz + sinφ·σx)/2) ⊗ I, a rank-2 projector.
  Mat4 projector() const;
};

DensityMatrix pinching(const DensityMatrix& rho, const PinchingSpec& spec);

// ‖{ρ,Q} − 2QρQ‖₁, which equals ‖ρ − T[ρ]‖₁, the trace norm of the block
// off-diagonal part of ρ with respect to Q. Always in [0, 1].
double delta_trace_norm(const DensityMatrix& rho, const PinchingSpec& spec);

// g(δ) = 1 − h(1/2 − δ/2): the entropy-production lower bound as a function
// of the pinching disturbance. Convex and nondecreasing on [0, 1]; g(0) = 0,
// g(1) = 1.
double refined_pinsker(double delta);

// D(ρ‖σ) in bits; +inf when supp(ρ) ⊄ supp(σ).
double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma);

// λ·H(A0|E) + (1−λ)·H(A1|E) for an eavesdropper holding the purification,
// computed as the entropy production of the two pinchings:
// H(A_X|E) = H(T_X[ρ]) − H(ρ).
double conditional_entropy_oracle(const DensityMatrix& rho, double phi,
                                  double lambda);

} // namespace diqkd::entropy
