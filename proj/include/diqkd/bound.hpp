#pragma once

// Certified lower bounds on the weighted pinching defect as a function of
// the CHSH score, and their convex envelopes.
//
// The engine covers the measurement-direction continuum with a polygon net
// on the Bell-operator circle and an adaptively refined interval net on the
// pinching angle phi.  Every reported value is backed by a dual certificate
// of the trace-norm program (see sdp.hpp) transferred to the whole covering
// cell, so the output is a true lower bound regardless of solver accuracy.
// The covering constants are derived and proved in docs/certification.md.

#include <utility>
#include <vector>

#include "diqkd/sdp.hpp"

namespace diqkd::bound {

// Net resolutions for the optimization pipeline.  Defaults reproduce the
// shipped tables; coarser nets are useful for smoke tests.
struct NetConfig {
  // Vertices of the polygon inscribed in the Bell-operator circle.
  int bVertices = 1440;
  // Base pinching-angle grid on [0, pi/2].  The engine bisects these
  // intervals further where the minimum is attained.
  int phiPoints = 181;
  // Score grid on [2, 2*sqrt(2)] for curve sweeps.
  int sGrid = 121;

  // certified: use the closed-form covering constants proved in
  // docs/certification.md.  empirical: additionally validate those
  // constants by dense random sampling at construction time (slower,
  // intended for audits) before running the identical pipeline.
  enum class LipschitzMode { certified, empirical };
  LipschitzMode lipschitzMode = LipschitzMode::certified;

  void validate() const;  // throws std::invalid_argument on bad counts
};

// Dual-certificate record for one covering cell, kept for reporting.
// The certified cell value at score s is
//   y0 + nu*s - nu*kappa(theta, s) - deduction,   nu >= 0,
// where kappa is the score slack of a cell of angular radius theta and
// `deduction` accounts for the pinching-angle spread of the cell.
struct VertexCertificate {
  double phiAnchor = 0.0;  // pinching angle the dual was repaired against
  double bAngle = 0.0;     // polygon vertex angle on the operator circle
  double y0 = 0.0;
  double nu = 0.0;
  double theta = 0.0;      // covering radius the slack was charged for
  double deduction = 0.0;  // objective transfer charge across the cell
  double gap = 0.0;        // duality gap of the underlying solve
};

// One certified point of the score -> defect curve.
struct EntropyBoundPoint {
  double s = 0.0;
  double tStar = 0.0;      // certified lower bound on the weighted defect
  double cQubit = 0.0;     // refined_pinsker(tStar)
  double slackUsed = 0.0;  // total slack charged at the binding cell
  VertexCertificate certificate;  // binding cell
  sdp::SdpStatus status = sdp::SdpStatus::optimal;
};

// Curve over the score grid together with its convex envelope.  The
// envelope knots always start at (0, 0); value() evaluates the envelope,
// which is convex, nondecreasing, and everywhere a valid bound (it is
// built from the certificate family, not by interpolating grid values).
struct BoundCurve {
  double lambda = 0.5;
  NetConfig config;
  std::vector<EntropyBoundPoint> points;
  std::vector<double> hullS;  // envelope knot scores, hullS[0] == 0
  std::vector<double> hullC;  // envelope knot values, hullC[0] == 0

  double value(double s) const;
};

// Minimum over the polygon net at a fixed pinching angle.  Vertices whose
// operator cannot reach the score window are skipped; `feasible` is false
// when every vertex is skipped (the score is unattainable at this angle).
struct MinOverBOutcome {
  bool feasible = false;
  double tStar = 0.0;
  double slack = 0.0;  // score slack charged per vertex
  std::vector<VertexCertificate> certificates;
};

MinOverBOutcome min_over_b(double phi, double lambda, double s,
                           const NetConfig& cfg);

// Certified bound at a single score, minimizing over both nets.
EntropyBoundPoint qubit_bound_at(double s, double lambda,
                                 const NetConfig& cfg);

// Full sweep over the score grid plus envelope construction.  Shares one
// refinement tree across all grid points, so it is much cheaper than
// calling qubit_bound_at per point.
BoundCurve compute_bound_curve(double lambda, const NetConfig& cfg);

// Lower convex envelope (with the (0,0) anchor) of explicitly given
// points.  This is the plain geometric operation on the point set; curves
// produced by compute_bound_curve carry the stronger certificate-backed
// envelope instead.
BoundCurve convexify_curve(const std::vector<EntropyBoundPoint>& points,
                           double lambda);

// Intersection of the half-planes
//   { (x, y) in [0,1]^2 : lambda*x + (1-lambda)*y >= C*_lambda(s) }
// over lambdaGrid.  `bounds[i]` is the envelope value of lambda[i]'s curve
// at s; `boundary` walks the lower-left frontier of the admissible region
// from its top-left end to its bottom-right end.
struct UncertaintyRegion {
  std::vector<double> lambdas;
  std::vector<double> bounds;
  std::vector<std::pair<double, double>> boundary;
};

UncertaintyRegion uncertainty_region(double s,
                                     const std::vector<double>& lambdaGrid,
                                     const NetConfig& cfg);

namespace detail {

// Score slack of a covering cell of angular radius theta around a point
// with score s (kappa in docs/certification.md).  Monotone in theta.
double cell_slack(double theta, double s);

// Dense-sampling audit of the covering constants; throws std::logic_error
// with a counterexample description on violation.  Used by
// LipschitzMode::empirical and by the property tests.
void audit_covering_constants(int samples, unsigned seed);

}  // namespace detail

}  // namespace diqkd::bound
