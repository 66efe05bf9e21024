#include "diqkd/quantum.hpp"

#include <cmath>
#include <stdexcept>

namespace diqkd::quantum {

namespace {
const std::complex<double> kI(0.0, 1.0);
} // namespace

Mat2 pauli_x() {
  Mat2 m;
  m << 0, 1, 1, 0;
  return m;
}

Mat2 pauli_y() {
  Mat2 m;
  m << 0, -kI, kI, 0;
  return m;
}

Mat2 pauli_z() {
  Mat2 m;
  m << 1, 0, 0, -1;
  return m;
}

Mat2 observable_from_angle(double theta) {
  return std::cos(theta) * pauli_z() + std::sin(theta) * pauli_x();
}

Mat4 kron(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

DensityMatrix DensityMatrix::from_matrix(const Mat4& m) {
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermiticityTol)
    throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(m.trace().real() - 1.0) > kTraceTol ||
      std::abs(m.trace().imag()) > kTraceTol)
    throw std::invalid_argument("density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<Mat4> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kEigenvalueTol)
    throw std::invalid_argument("density matrix has a negative eigenvalue");
  return DensityMatrix((m + m.adjoint()) / 2.0);
}

DensityMatrix DensityMatrix::trusted(const Mat4& m) { return DensityMatrix(m); }

DensityMatrix DensityMatrix::pure(const Vec4& psi) {
  double n = psi.norm();
  if (n < 1e-12) throw std::invalid_argument("zero state vector");
  Vec4 u = psi / n;
  return DensityMatrix(u * u.adjoint());
}

DensityMatrix DensityMatrix::singlet() {
  Vec4 psi;
  psi << 0, 1, -1, 0;
  return pure(psi);
}

DensityMatrix DensityMatrix::werner(double v) {
  if (v < 0.0 || v > 1.0)
    throw std::invalid_argument("werner visibility outside [0, 1]");
  return DensityMatrix(v * singlet().matrix() +
                       (1.0 - v) * Mat4::Identity() / 4.0);
}

DensityMatrix DensityMatrix::maximally_mixed() {
  return DensityMatrix(Mat4::Identity() / 4.0);
}

MeasurementFrame MeasurementFrame::ideal() {
  MeasurementFrame f;
  f.phi = M_PI / 2.0;
  f.omega = M_PI / 4.0;
  f.bob_key_angles = {M_PI, -M_PI / 2.0}; // −σz, −σx
  return f;
}

Mat2 MeasurementFrame::alice(int x) const {
  switch (x) {
    case 0: return observable_from_angle(0.0);
    case 1: return observable_from_angle(phi);
    default: throw std::invalid_argument("alice setting must be 0 or 1");
  }
}

Mat2 MeasurementFrame::bob(int y) const {
  switch (y) {
    case 0: return observable_from_angle(bob_key_angles[0]);
    case 1: return observable_from_angle(bob_key_angles[1]);
    case 2: return observable_from_angle(-omega);
    case 3: return observable_from_angle(omega);
    default: throw std::invalid_argument("bob setting must be in {0,1,2,3}");
  }
}

Mat4 chsh_operator(const MeasurementFrame& frame) {
  Mat2 a0 = frame.alice(0);
  Mat2 a1 = frame.alice(1);
  Mat2 b2 = frame.bob(2);
  Mat2 b3 = frame.bob(3);
  return kron(a1 - a0, b2) - kron(a1 + a0, b3);
}

double chsh_value(const DensityMatrix& rho, const MeasurementFrame& frame) {
  return (rho.matrix() * chsh_operator(frame)).trace().real();
}

double correlation(const DensityMatrix& rho, const Mat2& a, const Mat2& b) {
  return (rho.matrix() * kron(a, b)).trace().real();
}

double qber(const DensityMatrix& rho, const Mat2& a, const Mat2& b) {
  return (1.0 - correlation(rho, a, b)) / 2.0;
}

double depolarizing_qber(double s) {
  if (s < -1e-12 || s > kTsirelson + 1e-12)
    throw std::invalid_argument("violation outside [0, 2*sqrt(2)]");
  return 0.5 * (1.0 - s / kTsirelson);
}

ChannelPoint::ChannelPoint(double s_, double q00_, double q11_)
    : s(s_), q00(q00_), q11(q11_) {
  if (s < 2.0 - 1e-9 || s > kTsirelson + 1e-9)
    throw std::invalid_argument("channel violation outside [2, 2*sqrt(2)]");
  if (q00 < -1e-12 || q00 > 0.5 + 1e-12 || q11 < -1e-12 || q11 > 0.5 + 1e-12)
    throw std::invalid_argument("channel error rate outside [0, 1/2]");
}

ChannelPoint ChannelPoint::depolarizing(double s_) {
  double q = depolarizing_qber(s_);
  return ChannelPoint(s_, q, q);
}

} // namespace diqkd::quantum
