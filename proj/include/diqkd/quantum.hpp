// Two-qubit states and planar measurement geometry for the CHSH setting.
//
// All measurement directions live in the x-z plane of the Bloch sphere:
// observable(theta) = cos(theta)·σz + sin(theta)·σx. Alice's key observables
// sit at angles 0 and phi; Bob's test observables B2/B3 sit at angles -omega
// and +omega. With the singlet state and (phi = π/2, omega = π/4) this frame
// reaches the Tsirelson value 2√2 and zero bit-error rate on the key pair.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>

namespace diqkd::quantum {

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

inline constexpr double kTsirelson = 2.0 * 1.4142135623730950488; // 2√2

// Validation tolerances for density-matrix construction.
inline constexpr double kHermiticityTol = 1e-12;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kEigenvalueTol = 1e-10;

Mat2 pauli_x();
Mat2 pauli_y();
Mat2 pauli_z();

// cosθ·σz + sinθ·σx; eigenvalues ±1 for every θ.
Mat2 observable_from_angle(double theta);

Mat4 kron(const Mat2& a, const Mat2& b);

// A unit-trace positive semidefinite Hermitian 4x4 matrix. Construction
// validates Hermiticity, trace and positivity and throws std::invalid_argument
// on violation.
class DensityMatrix {
public:
  static DensityMatrix from_matrix(const Mat4& m);
  // Skips validation; for internal use where the input is exact by
  // construction.
  static DensityMatrix trusted(const Mat4& m);
  static DensityMatrix pure(const Vec4& psi);
  // v·|ψ⁻⟩⟨ψ⁻| + (1−v)·I/4 with |ψ⁻⟩ = (|01⟩−|10⟩)/√2.
  static DensityMatrix werner(double v);
  static DensityMatrix singlet();
  static DensityMatrix maximally_mixed();

  const Mat4& matrix() const { return m_; }

private:
  explicit DensityMatrix(const Mat4& m) : m_(m) {}
  Mat4 m_;
};

// Measurement geometry of a protocol run. Alice: A0 = observable(0),
// A1 = observable(phi). Bob: B0/B1 at bob_key_angles (key generation),
// B2 = observable(-omega), B3 = observable(+omega) (test).
struct MeasurementFrame {
  double phi = 0.0;
  double omega = 0.0;
  std::array<double, 2> bob_key_angles{0.0, 0.0};

  // phi = π/2, omega = π/4, B0 = −σz, B1 = −σx.
  static MeasurementFrame ideal();

  Mat2 alice(int x) const;   // x ∈ {0,1}
  Mat2 bob(int y) const;     // y ∈ {0,1,2,3}
};

// (A1−A0)⊗B2 − (A1+A0)⊗B3 for the frame's (phi, omega).
Mat4 chsh_operator(const MeasurementFrame& frame);

double chsh_value(const DensityMatrix& rho, const MeasurementFrame& frame);

// ⟨A⊗B⟩ for ±1-valued observables.
double correlation(const DensityMatrix& rho, const Mat2& a, const Mat2& b);

// P(outcomes disagree) for the ±1 observables a, b on rho.
double qber(const DensityMatrix& rho, const Mat2& a, const Mat2& b);

// Bit-error rate of the depolarizing channel at violation S:
// Q = (1 − S/(2√2)) / 2. Requires S ∈ [0, 2√2].
double depolarizing_qber(double s);

// A channel working point: CHSH violation plus the two key-basis error rates.
struct ChannelPoint {
  double s;
  double q00;
  double q11;

  ChannelPoint(double s_, double q00_, double q11_);
  static ChannelPoint depolarizing(double s_);
};

} // namespace diqkd::quantum
