// Asymptotic key rates for the two-basis protocol: secret fraction, rate,
// basis-bias optimization, critical thresholds, feasibility grids, and
// evaluation of published experiment working points.
//
// The sifting limit q -> 1 is assumed throughout, so a working point is just
// a ChannelPoint (violation S plus the two key-basis error rates) and the
// protocol parameter is Alice's bias p, equivalently the entropy weight
// lambda = p^2 / (p^2 + (1-p)^2).
#pragma once

#include <map>
#include <string>
#include <vector>

#include "diqkd/bound.hpp"
#include "diqkd/quantum.hpp"

namespace diqkd::keyrate {

using quantum::ChannelPoint;

double lambda_from_p(double p);
double p_from_lambda(double lambda);

struct KeyRateInputs {
  double p = 0.5;       // P(X = 0)
  double lambda = 0.5;  // entropy weight, lambda_from_p(p)
  double pS = 0.5;      // sifting factor p^2 + (1-p)^2
  ChannelPoint channel;

  KeyRateInputs(double p_, ChannelPoint channel_);
  static KeyRateInputs from_lambda(double lambda_, ChannelPoint channel_);
};

// cStar - lambda*h(q00) - (1-lambda)*h(q11); negative values are reported
// as-is so infeasible working points stay visible in analysis output.
double secret_fraction(const KeyRateInputs& inputs, double cStar);

// pS * secret_fraction, bits per (sifted-limit) round.
double key_rate(const KeyRateInputs& inputs, double cStar);

// Computes each weight's bound curve once and shares it; curves for lambda
// and 1-lambda coincide (relabeling the bases swaps the weights), so they
// share one cache slot.
class CurveCache {
 public:
  explicit CurveCache(const bound::NetConfig& cfg = {}) : cfg_(cfg) {}
  const bound::BoundCurve& curve(double lambda);
  const bound::NetConfig& config() const { return cfg_; }

 private:
  bound::NetConfig cfg_;
  std::map<long long, bound::BoundCurve> curves_;
};

// The default optimization grid {0, 0.05, ..., 1}; always contains 1/2 and 1.
std::vector<double> default_lambda_grid();

struct BiasChoice {
  double lambda = 0.5;
  double p = 0.5;
  double rate = 0.0;  // unfloored
};

// Argmax of key_rate over the grid, ties broken toward larger lambda (larger
// sifting factor). The grid must contain 1/2 and 1.
BiasChoice optimize_basis_bias(const ChannelPoint& channel,
                               const std::vector<double>& lambdaGrid,
                               CurveCache& cache);

// Root of the depolarizing-channel secret fraction at weight lambda,
// bisected on [2, 2*sqrt(2)] to 1e-4. Throws std::runtime_error when the
// fraction does not change sign on the interval.
double critical_chsh(double lambda, CurveCache& cache);

// depolarizing_qber(critical_chsh(lambda)).
double critical_qber(double lambda, CurveCache& cache);

struct FeasibilityGrid {
  std::vector<double> sValues;
  std::vector<double> qValues;
  // Row-major [iq * sValues.size() + is]; rates clamped at 0.
  std::vector<double> bestLambda;
  std::vector<double> rate;
  // Linear interpolation of the highest feasible QBER per S column; empty
  // columns (no feasible cell) are skipped.
  std::vector<std::pair<double, double>> zeroContour;
};

// lambdaGrid defaults to default_lambda_grid() when empty.
FeasibilityGrid feasibility_grid(double sMin, double sMax, int sCount,
                                 double qMin, double qMax, int qCount,
                                 CurveCache& cache,
                                 const std::vector<double>& lambdaGrid = {});

struct ExperimentRecord {
  std::string label;
  int year = 0;
  double s = 2.0;
  double qber = 0.0;
  std::string source;
};

struct ExperimentResult {
  ExperimentRecord record;
  BiasChoice choice;
  double rate = 0.0;  // floored at 0
};

// lambdaGrid defaults to default_lambda_grid() when empty.
std::vector<ExperimentResult> evaluate_experiments(
    const std::vector<ExperimentRecord>& records, CurveCache& cache,
    const std::vector<double>& lambdaGrid = {});

} // namespace diqkd::keyrate
