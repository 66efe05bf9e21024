#include "diqkd/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "diqkd/entropy.hpp"

namespace diqkd::keyrate {

namespace {

void check_unit(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

} // namespace

double lambda_from_p(double p) {
  check_unit(p, "p");
  const double ps = p * p + (1.0 - p) * (1.0 - p);
  return p * p / ps;
}

double p_from_lambda(double lambda) {
  check_unit(lambda, "lambda");
  const double a = std::sqrt(lambda);
  const double b = std::sqrt(1.0 - lambda);
  return a / (a + b);
}

KeyRateInputs::KeyRateInputs(double p_, ChannelPoint channel_)
    : p(p_), channel(channel_) {
  check_unit(p_, "p");
  pS = p * p + (1.0 - p) * (1.0 - p);
  lambda = p * p / pS;
}

KeyRateInputs KeyRateInputs::from_lambda(double lambda_, ChannelPoint channel_) {
  return KeyRateInputs(p_from_lambda(lambda_), channel_);
}

double secret_fraction(const KeyRateInputs& inputs, double cStar) {
  return cStar - inputs.lambda * entropy::binary_entropy(inputs.channel.q00) -
         (1.0 - inputs.lambda) * entropy::binary_entropy(inputs.channel.q11);
}

double key_rate(const KeyRateInputs& inputs, double cStar) {
  return inputs.pS * secret_fraction(inputs, cStar);
}

const bound::BoundCurve& CurveCache::curve(double lambda) {
  check_unit(lambda, "lambda");
  const double folded = std::min(lambda, 1.0 - lambda);
  const long long key = std::llround(folded * 1e9);
  auto it = curves_.find(key);
  if (it == curves_.end())
    it = curves_.emplace(key, bound::compute_bound_curve(folded, cfg_)).first;
  return it->second;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i * 0.05);
  return grid;
}

BiasChoice optimize_basis_bias(const ChannelPoint& channel,
                               const std::vector<double>& lambdaGrid,
                               CurveCache& cache) {
  const auto has = [&](double x) {
    return std::any_of(lambdaGrid.begin(), lambdaGrid.end(),
                       [&](double g) { return std::abs(g - x) < 1e-12; });
  };
  if (!has(0.5) || !has(1.0))
    throw std::invalid_argument("lambda grid must contain 1/2 and 1");

  BiasChoice best;
  bool first = true;
  for (double lambda : lambdaGrid) {
    const KeyRateInputs inputs = KeyRateInputs::from_lambda(lambda, channel);
    const double cStar = cache.curve(lambda).value(channel.s);
    const double rate = key_rate(inputs, cStar);
    if (first || rate > best.rate + 1e-15 ||
        (rate > best.rate - 1e-15 && lambda > best.lambda)) {
      best = {lambda, inputs.p, rate};
      first = false;
    }
  }
  return best;
}

double critical_chsh(double lambda, CurveCache& cache) {
  const bound::BoundCurve& curve = cache.curve(lambda);
  const auto fraction = [&](double s) {
    const KeyRateInputs inputs =
        KeyRateInputs::from_lambda(lambda, ChannelPoint::depolarizing(s));
    return secret_fraction(inputs, curve.value(s));
  };
  double lo = 2.0, hi = quantum::kTsirelson;
  double flo = fraction(lo), fhi = fraction(hi);
  if (flo > 0.0 || fhi < 0.0 || flo * fhi > 0.0)
    throw std::runtime_error(
        "secret fraction does not change sign on [2, 2*sqrt(2)]");
  while (hi - lo > 1e-4) {
    const double mid = 0.5 * (lo + hi);
    if (fraction(mid) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double critical_qber(double lambda, CurveCache& cache) {
  return quantum::depolarizing_qber(critical_chsh(lambda, cache));
}

FeasibilityGrid feasibility_grid(double sMin, double sMax, int sCount,
                                 double qMin, double qMax, int qCount,
                                 CurveCache& cache,
                                 const std::vector<double>& lambdaGridIn) {
  if (sCount < 2 || qCount < 2)
    throw std::invalid_argument("grid needs at least 2 points per axis");
  if (!(2.0 <= sMin && sMin < sMax && sMax <= quantum::kTsirelson + 1e-12))
    throw std::invalid_argument("S range must lie within [2, 2*sqrt(2)]");
  if (!(0.0 <= qMin && qMin < qMax && qMax <= 0.5))
    throw std::invalid_argument("QBER range must lie within [0, 1/2]");

  FeasibilityGrid grid;
  grid.sValues.resize(sCount);
  grid.qValues.resize(qCount);
  for (int i = 0; i < sCount; ++i)
    grid.sValues[i] = sMin + (sMax - sMin) * i / (sCount - 1);
  for (int j = 0; j < qCount; ++j)
    grid.qValues[j] = qMin + (qMax - qMin) * j / (qCount - 1);

  const std::vector<double> lambdaGrid =
      lambdaGridIn.empty() ? default_lambda_grid() : lambdaGridIn;
  // Warm the cache sequentially so the grid loop only reads.
  for (double lambda : lambdaGrid) cache.curve(lambda);

  grid.bestLambda.assign(static_cast<size_t>(sCount) * qCount, 0.0);
  grid.rate.assign(static_cast<size_t>(sCount) * qCount, 0.0);
  std::vector<std::vector<double>> raw(
      static_cast<size_t>(qCount), std::vector<double>(sCount, 0.0));
  for (int j = 0; j < qCount; ++j) {
    for (int i = 0; i < sCount; ++i) {
      const ChannelPoint channel(grid.sValues[i], grid.qValues[j],
                                 grid.qValues[j]);
      const BiasChoice choice =
          optimize_basis_bias(channel, lambdaGrid, cache);
      const size_t at = static_cast<size_t>(j) * sCount + i;
      grid.bestLambda[at] = choice.lambda;
      grid.rate[at] = std::max(0.0, choice.rate);
      raw[j][i] = choice.rate;
    }
  }

  // Zero contour: per S column, the QBER where the unfloored rate crosses
  // zero, linearly interpolated between the bracketing rows.
  for (int i = 0; i < sCount; ++i) {
    if (raw[0][i] <= 0.0) continue;  // infeasible even at qMin
    double qCross = grid.qValues[qCount - 1];
    bool crossed = false;
    for (int j = 1; j < qCount; ++j) {
      if (raw[j][i] <= 0.0) {
        const double r0 = raw[j - 1][i], r1 = raw[j][i];
        const double t = r0 / (r0 - r1);
        qCross = grid.qValues[j - 1] +
                 t * (grid.qValues[j] - grid.qValues[j - 1]);
        crossed = true;
        break;
      }
    }
    if (crossed || raw[qCount - 1][i] > 0.0)
      grid.zeroContour.emplace_back(grid.sValues[i], qCross);
  }
  return grid;
}

std::vector<ExperimentResult> evaluate_experiments(
    const std::vector<ExperimentRecord>& records, CurveCache& cache,
    const std::vector<double>& lambdaGridIn) {
  const std::vector<double> lambdaGrid =
      lambdaGridIn.empty() ? default_lambda_grid() : lambdaGridIn;
  std::vector<ExperimentResult> out;
  out.reserve(records.size());
  for (const ExperimentRecord& rec : records) {
    ExperimentResult res;
    res.record = rec;
    const ChannelPoint channel(rec.s, rec.qber, rec.qber);
    res.choice = optimize_basis_bias(channel, lambdaGrid, cache);
    res.rate = std::max(0.0, res.choice.rate);
    out.push_back(std::move(res));
  }
  return out;
}

} // namespace diqkd::keyrate
