#include "diqkd/entropy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace diqkd::entropy {

namespace {

double xlog2x(double x) {
  return x < kEigenvalueFloor ? 0.0 : x * std::log2(x);
}

} // namespace

double binary_entropy(double x) {
  if (x < -1e-12 || x > 1.0 + 1e-12)
    throw std::domain_error("binary_entropy argument outside [0, 1]");
  if (x < 0.0) x = 0.0;
  if (x > 1.0) x = 1.0;
  return -xlog2x(x) - xlog2x(1.0 - x);
}

double von_neumann_entropy(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(rho.matrix(), Eigen::EigenvaluesOnly);
  double h = 0.0;
  for (int i = 0; i < 4; ++i) h -= xlog2x(std::max(es.eigenvalues()(i), 0.0));
  return h;
}

Mat4 PinchingSpec::projector() const {
  Mat2 p = (Mat2::Identity() + quantum::observable_from_angle(phi)) / 2.0;
  return quantum::kron(p, Mat2::Identity());
}

DensityMatrix pinching(const DensityMatrix& rho, const PinchingSpec& spec) {
  Mat4 q = spec.projector();
  Mat4 qbar = Mat4::Identity() - q;
  Mat4 out = q * rho.matrix() * q + qbar * rho.matrix() * qbar;
  return DensityMatrix::trusted((out + out.adjoint()) / 2.0);
}

double delta_trace_norm(const DensityMatrix& rho, const PinchingSpec& spec) {
  Mat4 q = spec.projector();
  Mat4 anti = rho.matrix() * q + q * rho.matrix() - 2.0 * q * rho.matrix() * q;
  Eigen::JacobiSVD<Mat4> svd(anti);
  return svd.singularValues().sum();
}

double refined_pinsker(double delta) {
  if (delta < -1e-12 || delta > 1.0 + 1e-12)
    throw std::domain_error("disturbance outside [0, 1]");
  if (delta < 0.0) delta = 0.0;
  if (delta > 1.0) delta = 1.0;
  return 1.0 - binary_entropy(0.5 - delta / 2.0);
}

double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Mat4> er(rho.matrix());
  Eigen::SelfAdjointEigenSolver<Mat4> es(sigma.matrix());

  // tr(ρ log ρ)
  double tr_rho_log_rho = 0.0;
  for (int i = 0; i < 4; ++i)
    tr_rho_log_rho += xlog2x(std::max(er.eigenvalues()(i), 0.0));

  // tr(ρ log σ) with a support check: mass of ρ on ker(σ) means D = +inf.
  double tr_rho_log_sigma = 0.0;
  for (int j = 0; j < 4; ++j) {
    double s = std::max(es.eigenvalues()(j), 0.0);
    double w = (es.eigenvectors().col(j).adjoint() * rho.matrix() *
                es.eigenvectors().col(j))(0).real();
    if (s < kEigenvalueFloor) {
      if (w > 1e-10) return std::numeric_limits<double>::infinity();
      continue;
    }
    tr_rho_log_sigma += w * std::log2(s);
  }
  return tr_rho_log_rho - tr_rho_log_sigma;
}

double conditional_entropy_oracle(const DensityMatrix& rho, double phi,
                                  double lambda) {
  if (lambda < -1e-12 || lambda > 1.0 + 1e-12)
    throw std::domain_error("weight outside [0, 1]");
  double h_rho = von_neumann_entropy(rho);
  double h0 = von_neumann_entropy(pinching(rho, PinchingSpec{0.0})) - h_rho;
  double h1 = von_neumann_entropy(pinching(rho, PinchingSpec{phi})) - h_rho;
  return lambda * h0 + (1.0 - lambda) * h1;
}

} // namespace diqkd::entropy
