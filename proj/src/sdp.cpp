#include "diqkd/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace diqkd::sdp {
namespace {

using Cplx = std::complex<double>;

constexpr double kWeightDropTol = 1e-14;  // weights below this drop their epigraph block
constexpr double kSlackFloor = 2e-7;      // widens the violation window for strict feasibility
constexpr double kCertSafety = 1e-11;     // subtracted from repaired lambda_min values
constexpr double kGapLimit = 1e-6;        // optimal/numerical_limit boundary
constexpr int kMaxIterations = 64;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

Mat2 half_angle_rotation(double a) {
  const double c = std::cos(0.5 * a);
  const double s = std::sin(0.5 * a);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

// Columns are the angle-a pinching eigenbasis: range of the projector first.
Mat4 pinching_basis(double a) {
  return quantum::kron(half_angle_rotation(a), Mat2::Identity());
}

Mat4 embed_offdiag(const Mat2& w) {
  Mat4 m = Mat4::Zero();
  m.block<2, 2>(0, 2) = w;
  m.block<2, 2>(2, 0) = w.adjoint();
  return m;
}

Mat4 hsym(const Mat4& m) { return 0.5 * (m + m.adjoint()); }

// sigma_1 + sigma_2 and sigma_1 of a 2x2 complex matrix, closed form.
double nuclear_norm_2x2(const Mat2& b) {
  const double f2 = b.squaredNorm();
  const double d = std::abs(b.determinant());
  return std::sqrt(std::max(0.0, f2 + 2.0 * d));
}

double op_norm_2x2(const Mat2& b) {
  const double f2 = b.squaredNorm();
  const double d = std::abs(b.determinant());
  const double disc = std::sqrt(std::max(0.0, f2 * f2 - 4.0 * d * d));
  return std::sqrt(std::max(0.0, 0.5 * (f2 + disc)));
}

double lambda_min(const Mat4& h) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(hsym(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// One scalarized constraint row <A_k, X> = rhs. Every row touches the state
// block; coupling rows additionally touch one epigraph block.
struct Constraint {
  Mat4 a_rho = Mat4::Zero();
  int oblk = -1;
  Mat4 a_o = Mat4::Zero();
  double a_sp = 0.0;
  double a_sm = 0.0;
  double rhs = 0.0;
};

struct Instance {
  double lambda = 0.5;
  double lbar = 0.5;
  bool has[2] = {true, true};
  Mat4 g = Mat4::Zero();
  Mat4 u1 = Mat4::Identity();
  double s = 0.0;
  double kappa = 0.0;  // widened (solved) window half-width
  std::vector<Constraint> cons;
};

Instance build_instance(const ChshDecomposition& decomp, double bz, double bx,
                        double lambda, double s, double kappa) {
  Instance inst;
  inst.lambda = lambda;
  inst.lbar = 1.0 - lambda;
  inst.has[0] = inst.lambda > kWeightDropTol;
  inst.has[1] = inst.lbar > kWeightDropTol;
  inst.g = decomp.operator_for(bz, bx);
  inst.u1 = pinching_basis(decomp.phi);
  inst.s = s;
  inst.kappa = kappa;

  Constraint tr;
  tr.a_rho = Mat4::Identity();
  tr.rhs = 1.0;
  inst.cons.push_back(tr);

  Constraint up;  // <G,rho> + s_plus = s + kappa
  up.a_rho = inst.g;
  up.a_sp = 1.0;
  up.rhs = s + kappa;
  inst.cons.push_back(up);

  Constraint lo;  // <G,rho> - s_minus = s - kappa
  lo.a_rho = inst.g;
  lo.a_sm = -1.0;
  lo.rhs = s - kappa;
  inst.cons.push_back(lo);

  // Ties the epigraph off-diagonal block to the matching block of rho in the
  // pinching basis: real and imaginary part of each of the four entries.
  for (int blk = 0; blk < 2; ++blk) {
    if (!inst.has[blk]) continue;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        for (int part = 0; part < 2; ++part) {
          Mat4 e = Mat4::Zero();
          const Cplx v = part == 0 ? Cplx(1.0, 0.0) : Cplx(0.0, 1.0);
          e(i, 2 + j) = v;
          e(2 + j, i) = std::conj(v);
          Constraint c;
          c.oblk = blk;
          c.a_o = e;
          c.a_rho = blk == 0 ? Mat4(-e) : Mat4(-(inst.u1 * e * inst.u1.adjoint()));
          inst.cons.push_back(c);
        }
      }
    }
  }
  return inst;
}

struct Blocks {
  Mat4 r = Mat4::Zero();
  Mat4 m[2] = {Mat4::Zero(), Mat4::Zero()};
  double s[2] = {0.0, 0.0};
};

struct IpmResult {
  Eigen::VectorXd y;
  Blocks x;
  int iterations = 0;
};

// Primal-dual interior-point method, HKM direction with Mehrotra
// predictor-corrector, over the cone product (rho, M0, M1, s+, s-).
IpmResult run_ipm(const Instance& inst, double tol) {
  const int m = static_cast<int>(inst.cons.size());
  const bool h[2] = {inst.has[0], inst.has[1]};
  const double cweight[2] = {inst.lambda, inst.lbar};
  const double n_dim = 4.0 + (h[0] ? 4.0 : 0.0) + (h[1] ? 4.0 : 0.0) + 2.0;

  Blocks x, z;
  x.r = 0.25 * Mat4::Identity();
  z.r = Mat4::Identity();
  for (int b = 0; b < 2; ++b) {
    if (h[b]) {
      x.m[b] = Mat4::Identity();
      z.m[b] = Mat4::Identity();
    }
  }
  x.s[0] = x.s[1] = 1.0;
  z.s[0] = z.s[1] = 1.0;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  const auto pair_row = [&](const Constraint& c, const Blocks& blk) {
    double v = (c.a_rho * blk.r).trace().real();
    if (c.oblk >= 0) v += (c.a_o * blk.m[c.oblk]).trace().real();
    return v + c.a_sp * blk.s[0] + c.a_sm * blk.s[1];
  };
  const auto adjoint = [&](const Eigen::VectorXd& v) {
    Blocks out;
    for (int k = 0; k < m; ++k) {
      const Constraint& c = inst.cons[k];
      out.r += v[k] * c.a_rho;
      if (c.oblk >= 0) out.m[c.oblk] += v[k] * c.a_o;
      out.s[0] += v[k] * c.a_sp;
      out.s[1] += v[k] * c.a_sm;
    }
    return out;
  };
  const auto inner = [&](const Blocks& a, const Blocks& b) {
    double v = (a.r * b.r).trace().real();
    for (int blk = 0; blk < 2; ++blk) {
      if (h[blk]) v += (a.m[blk] * b.m[blk]).trace().real();
    }
    return v + a.s[0] * b.s[0] + a.s[1] * b.s[1];
  };
  const auto max_step_psd = [](const Mat4& p, const Mat4& d) {
    Eigen::LLT<Mat4> llt(p);
    if (llt.info() != Eigen::Success) return 0.0;
    Mat4 li = Mat4(llt.matrixL())
                  .triangularView<Eigen::Lower>()
                  .solve(Mat4::Identity());
    Eigen::SelfAdjointEigenSolver<Mat4> es(hsym(li * d * li.adjoint()),
                                           Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= -1e-14) return kInfinity;
    return -1.0 / lmin;
  };
  const auto max_step = [&](const Blocks& p, const Blocks& d) {
    double a = max_step_psd(p.r, d.r);
    for (int blk = 0; blk < 2; ++blk) {
      if (h[blk]) a = std::min(a, max_step_psd(p.m[blk], d.m[blk]));
    }
    for (int i = 0; i < 2; ++i) {
      if (d.s[i] < 0.0) a = std::min(a, -p.s[i] / d.s[i]);
    }
    return a;
  };

  int it = 0;
  for (; it < kMaxIterations; ++it) {
    Eigen::VectorXd rp(m);
    for (int k = 0; k < m; ++k) rp[k] = inst.cons[k].rhs - pair_row(inst.cons[k], x);

    const Blocks ay = adjoint(y);
    Blocks rd;
    rd.r = -ay.r - z.r;
    for (int b = 0; b < 2; ++b) {
      if (h[b]) rd.m[b] = cweight[b] * Mat4::Identity() - ay.m[b] - z.m[b];
    }
    rd.s[0] = -ay.s[0] - z.s[0];
    rd.s[1] = -ay.s[1] - z.s[1];

    const double mu = inner(x, z) / n_dim;
    double pobj = 0.0;
    for (int b = 0; b < 2; ++b) {
      if (h[b]) pobj += cweight[b] * x.m[b].trace().real();
    }
    double dobj = 0.0;
    for (int k = 0; k < m; ++k) dobj += inst.cons[k].rhs * y[k];

    double pinf = rp.cwiseAbs().maxCoeff();
    double dinf = std::max({rd.r.cwiseAbs().maxCoeff(),
                            h[0] ? rd.m[0].cwiseAbs().maxCoeff() : 0.0,
                            h[1] ? rd.m[1].cwiseAbs().maxCoeff() : 0.0,
                            std::abs(rd.s[0]), std::abs(rd.s[1])});
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if ((pinf <= 1e-10 && dinf <= 1e-10 && relgap <= tol) || mu <= 1e-13) break;
    if (!std::isfinite(mu) || !std::isfinite(pinf)) break;

    Eigen::LLT<Mat4> llt_r(z.r);
    if (llt_r.info() != Eigen::Success) break;
    Mat4 zir = llt_r.solve(Mat4::Identity());
    Mat4 zim[2];
    bool chol_ok = true;
    for (int b = 0; b < 2; ++b) {
      if (!h[b]) continue;
      Eigen::LLT<Mat4> llt_m(z.m[b]);
      if (llt_m.info() != Eigen::Success) {
        chol_ok = false;
        break;
      }
      zim[b] = llt_m.solve(Mat4::Identity());
    }
    if (!chol_ok) break;
    const double zis[2] = {1.0 / z.s[0], 1.0 / z.s[1]};

    // Schur complement B_kl = Re tr(A_k X A_l Z^-1), blockwise.
    std::vector<Mat4> tr_(m), to_(m);
    std::vector<double> ts0(m), ts1(m);
    for (int l = 0; l < m; ++l) {
      const Constraint& c = inst.cons[l];
      tr_[l] = x.r * c.a_rho * zir;
      if (c.oblk >= 0) to_[l] = x.m[c.oblk] * c.a_o * zim[c.oblk];
      ts0[l] = x.s[0] * c.a_sp * zis[0];
      ts1[l] = x.s[1] * c.a_sm * zis[1];
    }
    Eigen::MatrixXd schur(m, m);
    for (int k = 0; k < m; ++k) {
      const Constraint& ck = inst.cons[k];
      for (int l = 0; l < m; ++l) {
        double v = (ck.a_rho * tr_[l]).trace().real();
        if (ck.oblk >= 0 && ck.oblk == inst.cons[l].oblk)
          v += (ck.a_o * to_[l]).trace().real();
        v += ck.a_sp * ts0[l] + ck.a_sm * ts1[l];
        schur(k, l) = v;
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(schur);

    const auto solve_direction = [&](const Blocks& w, Blocks& dx, Blocks& dz,
                                     Eigen::VectorXd& dy) {
      Blocks mh;
      mh.r = w.r - x.r * rd.r * zir;
      for (int b = 0; b < 2; ++b) {
        if (h[b]) mh.m[b] = w.m[b] - x.m[b] * rd.m[b] * zim[b];
      }
      mh.s[0] = w.s[0] - x.s[0] * rd.s[0] * zis[0];
      mh.s[1] = w.s[1] - x.s[1] * rd.s[1] * zis[1];
      Eigen::VectorXd hvec(m);
      for (int k = 0; k < m; ++k) hvec[k] = rp[k] - pair_row(inst.cons[k], mh);
      dy = lu.solve(hvec);
      const Blocks ady = adjoint(dy);
      dz.r = rd.r - ady.r;
      dx.r = hsym(w.r - x.r * dz.r * zir);
      for (int b = 0; b < 2; ++b) {
        if (!h[b]) continue;
        dz.m[b] = rd.m[b] - ady.m[b];
        dx.m[b] = hsym(w.m[b] - x.m[b] * dz.m[b] * zim[b]);
      }
      for (int i = 0; i < 2; ++i) {
        dz.s[i] = rd.s[i] - (i == 0 ? ady.s[0] : ady.s[1]);
        dx.s[i] = w.s[i] - x.s[i] * dz.s[i] * zis[i];
      }
    };

    // Predictor (sigma = 0).
    Blocks waff;
    waff.r = -x.r;
    for (int b = 0; b < 2; ++b) {
      if (h[b]) waff.m[b] = -x.m[b];
    }
    waff.s[0] = -x.s[0];
    waff.s[1] = -x.s[1];
    Blocks dxa, dza;
    Eigen::VectorXd dya;
    solve_direction(waff, dxa, dza, dya);
    if (!dya.allFinite()) break;

    const double ap_aff = std::min(1.0, max_step(x, dxa));
    const double ad_aff = std::min(1.0, max_step(z, dza));
    Blocks xa = x, za = z;
    xa.r += ap_aff * dxa.r;
    za.r += ad_aff * dza.r;
    for (int b = 0; b < 2; ++b) {
      if (!h[b]) continue;
      xa.m[b] += ap_aff * dxa.m[b];
      za.m[b] += ad_aff * dza.m[b];
    }
    for (int i = 0; i < 2; ++i) {
      xa.s[i] += ap_aff * dxa.s[i];
      za.s[i] += ad_aff * dza.s[i];
    }
    const double mu_aff = std::max(0.0, inner(xa, za) / n_dim);
    const double ratio = mu > 0.0 ? mu_aff / mu : 0.0;
    const double sigma = std::clamp(ratio * ratio * ratio, 1e-8, 1.0);

    // Corrector.
    Blocks wc;
    wc.r = sigma * mu * zir - x.r - dxa.r * dza.r * zir;
    for (int b = 0; b < 2; ++b) {
      if (h[b]) wc.m[b] = sigma * mu * zim[b] - x.m[b] - dxa.m[b] * dza.m[b] * zim[b];
    }
    for (int i = 0; i < 2; ++i)
      wc.s[i] = sigma * mu * zis[i] - x.s[i] - dxa.s[i] * dza.s[i] * zis[i];
    Blocks dx, dz;
    Eigen::VectorXd dy;
    solve_direction(wc, dx, dz, dy);
    if (!dy.allFinite()) break;

    const double tau = it < 3 ? 0.9 : 0.98;
    const double ap = std::min(1.0, tau * max_step(x, dx));
    const double ad = std::min(1.0, tau * max_step(z, dz));
    if (ap <= 1e-14 && ad <= 1e-14) break;

    x.r = hsym(x.r + ap * dx.r);
    z.r = hsym(z.r + ad * dz.r);
    for (int b = 0; b < 2; ++b) {
      if (!h[b]) continue;
      x.m[b] = hsym(x.m[b] + ap * dx.m[b]);
      z.m[b] = hsym(z.m[b] + ad * dz.m[b]);
    }
    for (int i = 0; i < 2; ++i) {
      x.s[i] += ap * dx.s[i];
      z.s[i] += ad * dz.s[i];
    }
    y += ad * dy;
  }

  IpmResult out;
  out.y = y;
  out.x = x;
  out.iterations = it;
  return out;
}

Mat2 clip_op_norm(const Mat2& w, double limit) {
  if (limit <= 0.0) return Mat2::Zero();
  const double nrm = op_norm_2x2(w);
  if (nrm <= limit) return w;
  return w * ((limit * (1.0 - 1e-13)) / nrm);
}

// Builds an exactly feasible dual point from multipliers (w0, w1, nu ≥ 0):
// y0 = lambda_min(Omega(w0, w1) - nu G) makes the state-block dual PSD, the
// epigraph blocks are PSD because the w's are operator-norm clipped, and the
// slack signs follow from splitting nu between the two window rows.
DualCertificate make_certificate(const Instance& inst, const Mat2& w0_in,
                                 const Mat2& w1_in, double nu_seed,
                                 double kappa_value, bool polish) {
  DualCertificate cert;
  cert.w0 = inst.has[0] ? clip_op_norm(w0_in, inst.lambda) : Mat2::Zero();
  cert.w1 = inst.has[1] ? clip_op_norm(w1_in, inst.lbar) : Mat2::Zero();
  const Mat4 omega = embed_offdiag(cert.w0) +
                     inst.u1 * embed_offdiag(cert.w1) * inst.u1.adjoint();

  const auto value_at = [&](double nu) {
    return lambda_min(omega - nu * inst.g) + nu * inst.s - std::abs(nu) * kappa_value;
  };

  double nu = nu_seed;
  if (polish) {
    // The repaired value is concave in nu; ternary search on a symmetric
    // bracket around the seed.
    const double hw = std::max(4.0 * std::abs(nu) + 1.0, 8.0);
    double lo = -hw;
    double hi = hw;
    for (int i = 0; i < 48; ++i) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (value_at(m1) < value_at(m2))
        lo = m1;
      else
        hi = m2;
    }
    const double nu_t = 0.5 * (lo + hi);
    if (value_at(nu_t) > value_at(nu)) nu = nu_t;
  }
  cert.nu = nu;
  cert.y0 = lambda_min(omega - nu * inst.g) - kCertSafety;
  return cert;
}

DualCertificate certificate_from_ipm(const Instance& inst,
                                     const Eigen::VectorXd& y,
                                     double kappa_value, bool polish) {
  Mat2 w[2] = {Mat2::Zero(), Mat2::Zero()};
  int base = 3;
  for (int blk = 0; blk < 2; ++blk) {
    if (!inst.has[blk]) continue;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double re = y[base + (i * 2 + j) * 2];
        const double im = y[base + (i * 2 + j) * 2 + 1];
        w[blk](i, j) = Cplx(re, im);
      }
    }
    base += 8;
  }
  const double nu = y[1] + y[2];
  return make_certificate(inst, w[0], w[1], nu, kappa_value, polish);
}

struct GSpectrum {
  double lmax = 0.0;
  double lsecond = 0.0;
  Vec4 vmax = Vec4::Zero();
  Vec4 vsecond = Vec4::Zero();
};

GSpectrum spectrum_of(const Mat4& g) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(g);
  GSpectrum sp;
  sp.lmax = es.eigenvalues()(3);
  sp.lsecond = es.eigenvalues()(2);
  sp.vmax = es.eigenvectors().col(3);
  sp.vsecond = es.eigenvectors().col(2);
  return sp;
}

Mat4 project_to_state(const Mat4& raw) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(hsym(raw));
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  const double tr = ev.sum();
  if (tr <= 0.0) return 0.25 * Mat4::Identity();
  ev /= tr;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double objective_of(const Instance& inst, const Mat4& rho) {
  double v = 0.0;
  if (inst.has[0]) v += inst.lambda * 2.0 * nuclear_norm_2x2(rho.block<2, 2>(0, 2));
  if (inst.has[1]) {
    const Mat4 rot = inst.u1.adjoint() * rho * inst.u1;
    v += inst.lbar * 2.0 * nuclear_norm_2x2(rot.block<2, 2>(0, 2));
  }
  return v;
}

// Direct minimization over the top-two eigenspace of G, used when the window
// pins the state against a (nearly) degenerate maximal eigenvalue and the
// blended interior-point answer is not reliable. The objective is convex over
// the Bloch ball of the 2-dimensional subspace; pattern search suffices.
double pinned_subspace_minimum(const Instance& inst, const GSpectrum& sp,
                               double kappa_req) {
  Eigen::Matrix<Cplx, 4, 2> v;
  v.col(0) = sp.vmax;
  v.col(1) = sp.vsecond;

  const double l1 = sp.lmax;
  const double l2 = sp.lsecond;
  const double lo = inst.s - kappa_req;
  const double hi = inst.s + kappa_req;
  // <G> = l1 (1+rz)/2 + l2 (1-rz)/2 constrains rz.
  double rz_lo = -1.0, rz_hi = 1.0;
  const double dl = l1 - l2;
  if (dl > 1e-15) {
    rz_lo = std::max(-1.0, (2.0 * lo - l1 - l2) / dl);
    rz_hi = std::min(1.0, (2.0 * hi - l1 - l2) / dl);
  }
  if (rz_lo > rz_hi) return kInfinity;

  const auto eval = [&](double rx, double ry, double rz) {
    Eigen::Matrix2cd blob;
    blob << 1.0 + rz, Cplx(rx, -ry), Cplx(rx, ry), 1.0 - rz;
    const Mat4 rho = v * (0.5 * blob) * v.adjoint();
    return objective_of(inst, rho);
  };
  const auto clampr = [&](double& rx, double& ry, double& rz) {
    rz = std::clamp(rz, rz_lo, rz_hi);
    const double planar = 1.0 - rz * rz;
    const double pr2 = rx * rx + ry * ry;
    if (pr2 > planar) {
      const double f = planar > 0.0 ? std::sqrt(planar / pr2) : 0.0;
      rx *= f;
      ry *= f;
    }
  };

  double bx = 0.0, by = 0.0, bzv = std::clamp(0.0, rz_lo, rz_hi);
  double best = eval(bx, by, bzv);
  for (double rz : {rz_lo, rz_hi}) {
    const double cand = eval(0.0, 0.0, rz);
    if (cand < best) {
      best = cand;
      bx = by = 0.0;
      bzv = rz;
    }
  }
  double step = 0.5;
  while (step > 1e-9) {
    bool improved = false;
    for (int dim = 0; dim < 3; ++dim) {
      for (double sgn : {1.0, -1.0}) {
        double rx = bx + (dim == 0 ? sgn * step : 0.0);
        double ry = by + (dim == 1 ? sgn * step : 0.0);
        double rz = bzv + (dim == 2 ? sgn * step : 0.0);
        clampr(rx, ry, rz);
        const double cand = eval(rx, ry, rz);
        if (cand < best - 1e-16) {
          best = cand;
          bx = rx;
          by = ry;
          bzv = rz;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

double extract_primal(const Instance& inst, const Mat4& x_rho,
                      const GSpectrum& sp, double kappa_req) {
  Mat4 rho = project_to_state(x_rho);
  const double c = (inst.g * rho).trace().real();
  const double lo = inst.s - kappa_req;
  const double hi = inst.s + kappa_req;
  if (c < lo) {
    const Mat4 top = sp.vmax * sp.vmax.adjoint();
    const double denom = sp.lmax - c;
    if (denom <= 0.0) return kInfinity;
    const double t = std::min(1.0, (lo - c) / denom);
    rho = (1.0 - t) * rho + t * top;
  } else if (c > hi) {
    const double t = (c - hi) / c;  // blend toward I/4, which has <G> = 0
    rho = (1.0 - t) * rho + t * (0.25 * Mat4::Identity());
  }
  double val = objective_of(inst, rho);

  if (sp.lmax - lo <= 1e-9) {
    const double pinned = pinned_subspace_minimum(inst, sp, kappa_req);
    val = std::min(val, pinned);
  }
  return val;
}

}  // namespace

ChshDecomposition build_chsh_decomposition(double phi) {
  ChshDecomposition d;
  d.phi = phi;
  d.f0 = Mat4::Zero();
  d.fx = -2.0 * quantum::kron(quantum::observable_from_angle(phi), quantum::pauli_x());
  d.fz = -2.0 * quantum::kron(quantum::observable_from_angle(0.0), quantum::pauli_z());
  return d;
}

double weighted_delta_objective(const Mat4& rho, double phi, double lambda) {
  double v = 0.0;
  if (lambda > kWeightDropTol)
    v += lambda * 2.0 * nuclear_norm_2x2(rho.block<2, 2>(0, 2));
  if (1.0 - lambda > kWeightDropTol) {
    const Mat4 u = pinching_basis(phi);
    const Mat4 rot = u.adjoint() * rho * u;
    v += (1.0 - lambda) * 2.0 * nuclear_norm_2x2(rot.block<2, 2>(0, 2));
  }
  return v;
}

double max_violation(const ChshDecomposition& decomp, double bz, double bx) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(decomp.operator_for(bz, bx),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

SdpSolution solve_weighted_delta_sdp(const ChshDecomposition& decomp, double bz,
                                     double bx, double lambda, double s,
                                     double slack, double tol) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("bias weight must lie in [0, 1]");
  if (!(slack >= 0.0)) throw std::invalid_argument("slack must be nonnegative");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const double bn = std::hypot(bz, bx);
  if (std::abs(bn - 1.0) > 1e-9)
    throw std::invalid_argument("direction vector must have unit norm");
  bz /= bn;
  bx /= bn;

  const double kappa_eff = std::max(slack, kSlackFloor);
  Instance inst = build_instance(decomp, bz, bx, lambda, s, kappa_eff);
  const GSpectrum sp = spectrum_of(inst.g);

  SdpSolution sol;
  if (sp.lmax < s - slack - 1e-12) {
    sol.status = SdpStatus::infeasible;
    sol.primal = kInfinity;
    sol.dual = kInfinity;
    sol.gap = 0.0;
    return sol;
  }

  const IpmResult ipm = run_ipm(inst, tol);
  sol.iterations = ipm.iterations;
  sol.certificate = certificate_from_ipm(inst, ipm.y, slack, true);
  sol.dual = sol.certificate.value(s, slack);
  sol.primal = extract_primal(inst, ipm.x.r, sp, slack);
  sol.gap = sol.primal - sol.dual;
  sol.status = (std::isfinite(sol.gap) && sol.gap <= kGapLimit)
                   ? SdpStatus::optimal
                   : SdpStatus::numerical_limit;
  return sol;
}

SdpSolution solve_weighted_delta_sdp(double phi, double bz, double bx,
                                     double lambda, double s, double slack,
                                     double tol) {
  return solve_weighted_delta_sdp(build_chsh_decomposition(phi), bz, bx, lambda,
                                  s, slack, tol);
}

DualCertificate transfer_certificate(const ChshDecomposition& decomp, double bz,
                                     double bx, double lambda,
                                     const DualCertificate& cert) {
  Instance inst;
  inst.lambda = lambda;
  inst.lbar = 1.0 - lambda;
  inst.has[0] = inst.lambda > kWeightDropTol;
  inst.has[1] = inst.lbar > kWeightDropTol;
  inst.g = decomp.operator_for(bz, bx);
  inst.u1 = pinching_basis(decomp.phi);

  DualCertificate out;
  out.w0 = inst.has[0] ? clip_op_norm(cert.w0, inst.lambda) : Mat2::Zero();
  out.w1 = inst.has[1] ? clip_op_norm(cert.w1, inst.lbar) : Mat2::Zero();
  out.nu = cert.nu;
  const Mat4 omega = embed_offdiag(out.w0) +
                     inst.u1 * embed_offdiag(out.w1) * inst.u1.adjoint();
  out.y0 = lambda_min(omega - out.nu * inst.g) - kCertSafety;
  return out;
}

}  // namespace diqkd::sdp
