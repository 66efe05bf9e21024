#include "diqkd/bound.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diqkd/entropy.hpp"
#include "diqkd/quantum.hpp"

namespace diqkd::bound {
namespace {

using quantum::kTsirelson;

constexpr double kPi = 3.14159265358979323846;
const double kInf = std::numeric_limits<double>::infinity();
const double kNan = std::numeric_limits<double>::quiet_NaN();

// Seeding solves a strided subset of polygon vertices per anchor angle at a
// ladder of low scores, then re-anchors the duals to every cell of every
// base branch.  The ladder is densest at the bottom, where the defect curve
// climbs with unbounded curvature and fresh tangents date quickly.  Transfer
// quality decays much faster in phi than along the polygon, so anchors are
// spent on phi density.
constexpr int kSeedAnchors = 25;
constexpr std::array<double, 6> kSeedScores = {2.0,  2.04, 2.09,
                                               2.15, 2.25, 2.4};

// Branches are bisected while the minimum sits on them and their objective
// deduction still matters at the current score.  The tolerance shrinks near
// the Tsirelson point, where the entropy map amplifies slack the most; flat
// parts of the curve stay coarse and cheap.  sqrt((s/2)^2 - 1) tracks how
// high the defect curve can sit at score s.
constexpr double kLeafHalfFloor = 5e-5;
constexpr int kMaxDepth = 14;
constexpr double kDeductionFloor = 1e-4;
constexpr double kDeductionScale = 0.02;

// Fresh-solve budget per score; on exhaustion the current certified value is
// reported (still sound, possibly loose).  Refinement also stops once a
// window of consecutive solves fails to lift any cell appreciably, which
// keeps flat stretches of the curve from consuming the full budget.  The
// budget is sized for the low-score regime, where certificates transferred
// across pinching angles lose almost their whole score window and tens of
// thousands of cells need one cheap fresh solve each before the true
// minimizer surfaces; those solves are paid once and reused by every later
// score.
constexpr int kMaxSolvesPerScore = 60000;
constexpr int kStallWindow = 400;
constexpr double kLiftTol = 1e-3;

// Each fresh dual is re-anchored onto this many polygon neighbours on each
// side; transfers cost microseconds and warm wide flat basins quickly.
constexpr int kSpread = 3;
constexpr int kSeedStride = 4;

// Scores probed when deciding which two certificate pieces a cell keeps, and
// the stand-in value for an unattainability claim at a probe.
constexpr std::array<double, 3> kProbes = {2.05, 2.45, 2.82};
constexpr double kDeathReward = 1e7;

// Fine evaluation points per coarse grid interval in the envelope pass.
constexpr int kFinePerInterval = 40;

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

double root8(double s) { return std::sqrt(std::max(0.0, 8.0 - s * s)); }

// Largest eigenvalue of the Bell operator at (phi, b): 2*sqrt(1 + 2|w1 w3|)
// with w = (bx cos phi, bx sin phi, bz).
double lam_max_at(double phi, double bz, double bx) {
  return 2.0 * std::sqrt(1.0 + 2.0 * std::abs(bx * std::sin(phi) * bz));
}

// One certified affine piece, valid for every configuration within angular
// distance `theta` of its anchor.  The piece claims
//   objective >= max(0, y0 + nu*u(s)) - deduction   for u(s) <= lamMax,
//   score s unattainable                            for u(s) >  lamMax,
// where u(s) = cos(theta)*s - sin(theta)*sqrt(8-s^2) is the low edge of the
// score window the dual was charged for.
struct Piece {
  double y0 = 0.0;
  double nu = 0.0;
  double theta = 0.0;
  double cosT = 1.0;
  double sinT = 0.0;
  double deduction = 0.0;
  double lamMax = 0.0;
  double anchorPhi = 0.0;
  double gap = kInf;
  bool ok = false;
  bool usable = false;

  double value(double s, double r8) const {
    const double u = cosT * s - sinT * r8;
    if (u > lamMax + 1e-12) return kInf;
    const double v = y0 + nu * u;
    return (v > 0.0 ? v : 0.0) - deduction;
  }
};

// A cell keeps up to two pieces (typically a low-score and a high-score
// profile); its bound is the best claim among them, and an unattainability
// claim by either piece is conclusive.  Fresh dual values are additionally
// recorded as (score, value) steps: the feasible set only shrinks as the
// score grows, so a value certified at s holds for every score above s.
// The step ledger keeps every non-dominated claim, which protects past
// certificates from slot eviction; in particular a weaker claim at a lower
// score must survive a stronger claim at a higher one, since it is the only
// record covering the scores in between.
struct Cell {
  Piece a;
  Piece b;
  std::vector<std::pair<double, double>> steps;  // ascending in both fields
  double solvedS = kNan;  // score of the last direct solve at this branch

  void record(double s, double v) {
    if (!std::isfinite(v) || v <= 0.0) return;
    auto it = std::lower_bound(
        steps.begin(), steps.end(), s,
        [](const std::pair<double, double>& e, double x) { return e.first < x; });
    if (it != steps.begin() && std::prev(it)->second >= v) return;
    while (it != steps.end() && it->second <= v) it = steps.erase(it);
    if (it != steps.end() && it->first <= s) return;
    steps.insert(it, {s, v});
  }

  double step_at(double s) const {
    auto it = std::upper_bound(
        steps.begin(), steps.end(), s,
        [](double x, const std::pair<double, double>& e) { return x < e.first; });
    return it == steps.begin() ? 0.0 : std::prev(it)->second;
  }

  double value(double s, double r8) const {
    double v = -kInf;
    if (a.usable) v = a.value(s, r8);
    if (b.usable) v = std::max(v, b.value(s, r8));
    if (v == kInf) return v;
    return std::max(v == -kInf ? 0.0 : v, step_at(s));
  }

  const Piece* binding(double s, double r8) const {
    const Piece* best = nullptr;
    double bv = -kInf;
    if (a.usable && a.value(s, r8) > bv) bv = a.value(s, r8), best = &a;
    if (b.usable && b.value(s, r8) > bv) best = &b;
    return best;
  }
};

struct Branch {
  double center = 0.0;
  double half = 0.0;
  double theta = 0.0;      // covering radius for fresh pieces
  double deduction = 0.0;  // objective charge for fresh pieces
  int depth = 0;
  bool active = true;
  sdp::ChshDecomposition decomp;
  std::vector<Cell> cells;

  // bound cache, invalidated by bumping `stamp`
  unsigned stamp = 1;
  unsigned cachedStamp = 0;
  double cachedS = kNan;
  double cachedBound = 0.0;
  int cachedArg = 0;
};

std::array<double, 3> probe_root8() {
  return {root8(kProbes[0]), root8(kProbes[1]), root8(kProbes[2])};
}

void ingest(Cell& cell, const Piece& p) {
  if (!p.usable) return;
  if (!cell.a.usable) {
    cell.a = p;
    return;
  }
  if (!cell.b.usable) {
    cell.b = p;
    return;
  }
  static const std::array<double, 3> r8 = probe_root8();
  const Piece* cand[3] = {&cell.a, &cell.b, &p};
  double bestScore = -kInf;
  int bi = 0, bj = 1;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      double sc = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double v = std::max(cand[i]->value(kProbes[k], r8[k]),
                                  cand[j]->value(kProbes[k], r8[k]));
        sc += std::min(v, kDeathReward);
      }
      // Death claims saturate the probe sum, so cells whose window dies
      // before the first probe tie every pairing; break ties toward the
      // incoming piece or the cell can never absorb new information.
      const bool preferred = sc > bestScore + 1e-15 ||
                             (j == 2 && sc > bestScore - 1e-15);
      if (preferred) {
        bestScore = sc;
        bi = i;
        bj = j;
      }
    }
  }
  const Piece na = *cand[bi];
  const Piece nb = *cand[bj];
  cell.a = na;
  cell.b = nb;
}

class Engine {
 public:
  Engine(double lambda, const NetConfig& cfg) : lambda_(lambda), cfg_(cfg) {
    cfg.validate();
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("lambda must lie in [0, 1]");
    lbar_ = 1.0 - lambda;
    thetaB_ = kPi / cfg.bVertices;

    if (cfg.lipschitzMode == NetConfig::LipschitzMode::empirical)
      detail::audit_covering_constants(20000, 20260816u);

    const int nv = cfg.bVertices;
    beta_.resize(nv);
    bz_.resize(nv);
    bx_.resize(nv);
    for (int v = 0; v < nv; ++v) {
      beta_[v] = 2.0 * kPi * v / nv;
      bz_[v] = std::cos(beta_[v]);
      bx_[v] = std::sin(beta_[v]);
    }

    const int np = cfg.phiPoints;
    const double step = (kPi / 2.0) / (np - 1);
    baseHalf_ = step / 2.0;
    for (int k = 0; k < np; ++k) {
      Branch br;
      br.center = k * step;
      br.half = baseHalf_;
      br.theta = std::hypot(br.half, thetaB_);
      br.deduction = 2.0 * lbar_ * br.half;
      br.decomp = sdp::build_chsh_decomposition(br.center);
      br.cells.assign(nv, Cell{});
      active_.push_back(static_cast<int>(branches_.size()));
      branches_.push_back(std::move(br));
    }
    seed();
  }

  EntropyBoundPoint refine_at(double s) {
    int solves = 0;
    int lowLiftStreak = 0;
    while (true) {
      const auto [best, bi, vi] = global_min(s);
      if (bi < 0)
        throw std::runtime_error("score unattainable across the angle net");
      Branch& br = branches_[bi];
      if (should_split(br, s)) {
        split(bi);
        continue;
      }
      Cell& cell = br.cells[vi];
      if (cell.solvedS == s || solves >= kMaxSolvesPerScore ||
          lowLiftStreak >= kStallWindow)
        return make_report(s, br, vi, best);
      const double before = cell.value(s, root8(s));
      solve_cell(br, vi, s);
      const double lift = cell.value(s, root8(s)) - before;
      lowLiftStreak = lift < kLiftTol ? lowLiftStreak + 1 : 0;
      ++solves;
    }
  }

  BoundCurve run_curve() {
    // The defect curve has unbounded curvature at both ends of the score
    // range, so the grid is spaced by a cosine map: dense near 2 and near
    // the Tsirelson bound, coarser in the gently curved middle.
    const int n = cfg_.sGrid;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) {
      const double w = 0.5 * (1.0 - std::cos(kPi * i / (n - 1)));
      grid[i] = 2.0 + (kTsirelson - 2.0) * w;
    }
    grid.front() = 2.0;
    grid.back() = kTsirelson;

    BoundCurve curve;
    curve.lambda = lambda_;
    curve.config = cfg_;
    curve.points.reserve(n);
    for (double s : grid) curve.points.push_back(refine_at(s));

    // Re-evaluate the grid on the settled tree: later refinement can lift a
    // point, but piece eviction must never sink one below the value that was
    // certified when the point itself was refined.
    for (int i = 0; i < n; ++i) {
      const auto [best, bi, vi] = global_min(grid[i]);
      if (bi >= 0 && best > curve.points[i].tStar)
        curve.points[i] = make_report(grid[i], branches_[bi], vi, best);
    }

    // The grid values floor the envelope on their right: the feasible set
    // only shrinks with the score, so a defect certified at grid[i] holds at
    // every higher score regardless of what the final tree retains there.
    std::vector<double> floors(n);
    for (int i = 0; i < n; ++i) floors[i] = curve.points[i].tStar;
    build_envelope(grid, floors, curve.hullS, curve.hullC);
    return curve;
  }

 private:
  bool should_split(const Branch& br, double s) const {
    if (br.depth >= kMaxDepth || br.half <= kLeafHalfFloor) return false;
    if (br.half > thetaB_ / 2.0 + 1e-15) return true;
    const double hint = std::sqrt(std::max(0.0, 0.25 * s * s - 1.0));
    const double tol =
        std::max(kDeductionFloor, kDeductionScale * (1.0 - std::min(1.0, hint)));
    return br.deduction > tol;
  }

  std::tuple<double, int, int> global_min(double s) {
    double best = kInf;
    int bbi = -1, bvi = 0;
    for (int idx : active_) {
      int av = 0;
      const double v = branch_bound(branches_[idx], s, &av);
      if (v < best) {
        best = v;
        bbi = idx;
        bvi = av;
      }
    }
    return {best, bbi, bvi};
  }

  double branch_bound(Branch& br, double s, int* argVertex) {
    if (br.cachedS == s && br.cachedStamp == br.stamp) {
      *argVertex = br.cachedArg;
      return br.cachedBound;
    }
    const double r8 = root8(s);
    double best = kInf;
    int arg = 0;
    const int nv = static_cast<int>(br.cells.size());
    for (int v = 0; v < nv; ++v) {
      const double val = br.cells[v].value(s, r8);
      if (val < best) {
        best = val;
        arg = v;
      }
    }
    br.cachedS = s;
    br.cachedStamp = br.stamp;
    br.cachedBound = best;
    br.cachedArg = arg;
    *argVertex = arg;
    return best;
  }

  Piece fresh_piece(const Branch& br, int v) const {
    Piece p;
    p.theta = br.theta;
    p.cosT = std::cos(br.theta);
    p.sinT = std::sin(br.theta);
    p.deduction = br.deduction;
    p.lamMax = lam_max_at(br.center, bz_[v], bx_[v]);
    p.anchorPhi = br.center;
    return p;
  }

  Piece piece_from_certificate(const Branch& br, int v,
                               sdp::DualCertificate cert, double gap,
                               bool ok) const {
    if (cert.nu < 0.0) {
      // The envelope construction needs nondecreasing pieces; re-repair the
      // multipliers with the slope pinned at zero.
      sdp::DualCertificate z = cert;
      z.nu = 0.0;
      cert = sdp::transfer_certificate(br.decomp, bz_[v], bx_[v], lambda_, z);
    }
    Piece p = fresh_piece(br, v);
    p.y0 = cert.y0;
    p.nu = cert.nu;
    p.gap = gap;
    p.ok = ok;
    p.usable = true;
    return p;
  }

  void solve_cell(Branch& br, int v, double s) {
    const double kap = detail::cell_slack(br.theta, s);
    br.cells[v].solvedS = s;
    // Closed-form unattainability: if even the anchor's maximal violation
    // cannot reach the slack-relaxed score, no point of the cell can reach
    // s, and the interior-point method would only grind on an empty
    // feasible set (worse, it may return a weak finite dual instead of an
    // infeasibility verdict when the margin is tiny).
    if (s - kap > lam_max_at(br.center, bz_[v], bx_[v]) + 1e-12) {
      Piece p = fresh_piece(br, v);
      p.gap = 0.0;
      p.ok = true;
      p.usable = true;
      ingest(br.cells[v], p);
      ++br.stamp;
      return;
    }
    const auto sol = sdp::solve_weighted_delta_sdp(br.decomp, bz_[v], bx_[v],
                                                   lambda_, s, kap);
    if (sol.status == sdp::SdpStatus::infeasible) {
      // Pure unattainability record: value 0 while alive, +inf past lamMax.
      Piece p = fresh_piece(br, v);
      p.gap = 0.0;
      p.ok = true;
      p.usable = true;
      ingest(br.cells[v], p);
      ++br.stamp;
      return;
    }
    const bool ok = sol.status == sdp::SdpStatus::optimal;
    const double r8 = root8(s);
    const Piece pv =
        piece_from_certificate(br, v, sol.certificate, sol.gap, ok);
    br.cells[v].record(s, pv.value(s, r8));
    ingest(br.cells[v], pv);
    const int nv = cfg_.bVertices;
    for (int d = -kSpread; d <= kSpread; ++d) {
      if (d == 0) continue;
      const int u = ((v + d) % nv + nv) % nv;
      const auto moved = sdp::transfer_certificate(br.decomp, bz_[u], bx_[u],
                                                   lambda_, sol.certificate);
      const Piece pu = piece_from_certificate(br, u, moved, sol.gap, ok);
      br.cells[u].record(s, pu.value(s, r8));
      ingest(br.cells[u], pu);
    }
    ++br.stamp;
  }

  void split(int idx) {
    branches_[idx].active = false;
    const double center = branches_[idx].center;
    const double h = branches_[idx].half / 2.0;
    const int depth = branches_[idx].depth + 1;
    active_.erase(std::find(active_.begin(), active_.end(), idx));
    for (int side = 0; side < 2; ++side) {
      Branch nb;
      nb.center = center + (side == 0 ? -h : h);
      nb.half = h;
      nb.depth = depth;
      nb.theta = std::hypot(h, thetaB_);
      nb.deduction = 2.0 * lbar_ * h;
      nb.decomp = sdp::build_chsh_decomposition(nb.center);
      nb.cells = branches_[idx].cells;  // inherited pieces stay valid
      for (Cell& c : nb.cells) c.solvedS = kNan;
      active_.push_back(static_cast<int>(branches_.size()));
      branches_.push_back(std::move(nb));
    }
  }

  void seed() {
    const int nv = cfg_.bVertices;
    const int nSolved = (nv + kSeedStride - 1) / kSeedStride;
    const int nScores = static_cast<int>(kSeedScores.size());
    const double anchorStep = (kPi / 2.0) / (kSeedAnchors - 1);
    const double theta = std::hypot(baseHalf_, thetaB_);

    struct SeedCert {
      sdp::DualCertificate cert;
      double gap = kInf;
      char ok = 0;
    };
    std::vector<SeedCert> certs(kSeedAnchors * nScores * nSolved);
    const auto at = [&](int a, int q, int k) -> SeedCert& {
      return certs[(a * nScores + q) * nSolved + k];
    };
    for (int a = 0; a < kSeedAnchors; ++a) {
      const auto dec = sdp::build_chsh_decomposition(a * anchorStep);
      for (int q = 0; q < nScores; ++q) {
        const double s = kSeedScores[q];
        const double kap = detail::cell_slack(theta, s);
        for (int k = 0; k < nSolved; ++k) {
          const int v = k * kSeedStride;
          const auto sol = sdp::solve_weighted_delta_sdp(dec, bz_[v], bx_[v],
                                                         lambda_, s, kap);
          if (sol.status == sdp::SdpStatus::infeasible) continue;
          at(a, q, k) = {sol.certificate, sol.gap,
                         sol.status == sdp::SdpStatus::optimal ? char(1)
                                                               : char(2)};
        }
      }
    }
    for (int idx : active_) {
      Branch& br = branches_[idx];
      int a = static_cast<int>(std::lround(br.center / anchorStep));
      a = std::max(0, std::min(kSeedAnchors - 1, a));
      for (int v = 0; v < nv; ++v) {
        const int k = ((v + kSeedStride / 2) / kSeedStride) % nSolved;
        for (int q = 0; q < nScores; ++q) {
          const SeedCert& sc = at(a, q, k);
          if (!sc.ok) continue;
          const auto moved = sdp::transfer_certificate(br.decomp, bz_[v],
                                                       bx_[v], lambda_, sc.cert);
          const Piece p =
              piece_from_certificate(br, v, moved, sc.gap, sc.ok == 1);
          br.cells[v].record(kSeedScores[q],
                             p.value(kSeedScores[q], root8(kSeedScores[q])));
          ingest(br.cells[v], p);
        }
      }
      ++br.stamp;
    }
  }

  EntropyBoundPoint make_report(double s, Branch& br, int v, double raw) {
    EntropyBoundPoint pt;
    pt.s = s;
    pt.tStar = clamp01(raw);
    pt.cQubit = entropy::refined_pinsker(pt.tStar);
    const Piece* bp = br.cells[v].binding(s, root8(s));
    if (bp != nullptr && raw > 0.0) {
      pt.slackUsed = detail::cell_slack(bp->theta, s) + bp->deduction;
      pt.certificate = {bp->anchorPhi, beta_[v], bp->y0,       bp->nu,
                        bp->theta,     bp->deduction, bp->gap};
      pt.status =
          bp->ok ? sdp::SdpStatus::optimal : sdp::SdpStatus::numerical_limit;
    } else {
      pt.slackUsed = detail::cell_slack(br.theta, s) + br.deduction;
      pt.certificate = {br.center, beta_[v], 0.0, 0.0, br.theta, br.deduction,
                        0.0};
      pt.status = sdp::SdpStatus::optimal;
    }
    return pt;
  }

  // Certified value of the whole family at arbitrary scores, evaluated on a
  // fine grid; its left-endpoint step minorant is convexified into the hull.
  // floors[i] is a certified defect bound at grid[i], applied to every fine
  // point at or above grid[i].
  void build_envelope(const std::vector<double>& grid,
                      const std::vector<double>& floors,
                      std::vector<double>& hs, std::vector<double>& hc) {
    const int n = static_cast<int>(grid.size());
    const int J = (n - 1) * kFinePerInterval + 1;
    std::vector<double> sig(J), stepVal(J, kInf);
    for (int i = 0; i + 1 < n; ++i)
      for (int jj = 0; jj < kFinePerInterval; ++jj)
        sig[i * kFinePerInterval + jj] =
            grid[i] + (grid[i + 1] - grid[i]) * jj / kFinePerInterval;
    sig[J - 1] = grid[n - 1];

    const auto branch_value = [&](Branch& br, double s) {
      int av = 0;
      return branch_bound(br, s, &av);
    };

    std::vector<double> cur(active_.size()), nxt(active_.size());
    for (size_t k = 0; k < active_.size(); ++k)
      cur[k] = branch_value(branches_[active_[k]], grid[0]);

    std::vector<int> cand;
    for (int i = 0; i + 1 < n; ++i) {
      double mNext = kInf;
      for (size_t k = 0; k < active_.size(); ++k) {
        nxt[k] = branch_value(branches_[active_[k]], grid[i + 1]);
        mNext = std::min(mNext, nxt[k]);
      }
      // Cell values are nondecreasing in s, so a branch already above the
      // next coarse minimum at the left end can never attain the minimum
      // inside this interval.
      cand.clear();
      for (size_t k = 0; k < active_.size(); ++k)
        if (cur[k] <= mNext + 1e-12) cand.push_back(active_[k]);

      const int extra = (i + 2 == n) ? 1 : 0;
      for (int jj = 0; jj < kFinePerInterval + extra; ++jj) {
        const int j = i * kFinePerInterval + jj;
        const double s = sig[j];
        const double r8 = root8(s);
        double m = kInf;
        for (int idx : cand) {
          Branch& br = branches_[idx];
          for (const Cell& c : br.cells) {
            const double v = c.value(s, r8);
            if (v < m) m = v;
          }
        }
        stepVal[j] = std::max(m, floors[i + (jj == kFinePerInterval ? 1 : 0)]);
      }
      cur.swap(nxt);
    }

    // Step minorant corners: stepVal[j] holds on [sig[j], sig[j+1]).
    std::vector<std::pair<double, double>> pts;
    pts.reserve(J + 2);
    const auto g = [](double t) {
      return entropy::refined_pinsker(clamp01(t));
    };
    pts.emplace_back(0.0, 0.0);
    pts.emplace_back(sig[0], g(stepVal[0]));
    for (int j = 0; j + 1 < J; ++j) pts.emplace_back(sig[j + 1], g(stepVal[j]));
    pts.emplace_back(sig[J - 1], g(stepVal[J - 1]));

    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> uniq;
    for (const auto& p : pts)
      if (uniq.empty() || p.first > uniq.back().first + 1e-15)
        uniq.push_back(p);

    std::vector<std::pair<double, double>> hull;
    for (const auto& p : uniq) {
      while (hull.size() >= 2) {
        const auto& o = hull[hull.size() - 2];
        const auto& l = hull.back();
        if ((l.second - o.second) * (p.first - l.first) >=
            (p.second - l.second) * (l.first - o.first))
          hull.pop_back();
        else
          break;
      }
      hull.push_back(p);
    }
    hs.clear();
    hc.clear();
    for (const auto& p : hull) {
      hs.push_back(p.first);
      hc.push_back(p.second);
    }
  }

  double lambda_ = 0.5;
  double lbar_ = 0.5;
  NetConfig cfg_;
  double thetaB_ = 0.0;
  double baseHalf_ = 0.0;
  std::vector<double> beta_, bz_, bx_;
  std::deque<Branch> branches_;
  std::vector<int> active_;
};

void validate_score(double s) {
  if (!(s >= 2.0 - 1e-9 && s <= kTsirelson + 1e-9))
    throw std::invalid_argument("score must lie in [2, 2*sqrt(2)]");
}

// Frontier walk for uncertainty_region.  Lines y = q + m*x come from the
// half-planes with lambda < 1; lambda = 1 contributes the vertical cut.
std::vector<std::pair<double, double>> region_boundary(
    const std::vector<double>& lambdas, const std::vector<double>& bounds) {
  struct Line {
    double m, q;
  };
  double xLo = 0.0;
  std::vector<Line> lines;
  for (size_t i = 0; i < lambdas.size(); ++i) {
    const double l = lambdas[i];
    const double c = std::max(0.0, bounds[i]);
    if (l >= 1.0 - 1e-12)
      xLo = std::max(xLo, c);
    else
      lines.push_back({-l / (1.0 - l), c / (1.0 - l)});
  }
  xLo = clamp01(xLo);

  const auto f = [&](double x) {
    double y = 0.0;
    for (const Line& l : lines) y = std::max(y, l.q + l.m * x);
    return y;
  };

  std::vector<double> xs{xLo, 1.0};
  for (size_t i = 0; i < lines.size(); ++i)
    for (size_t j = i + 1; j < lines.size(); ++j) {
      const double dm = lines[i].m - lines[j].m;
      if (std::abs(dm) < 1e-14) continue;
      const double x = (lines[j].q - lines[i].q) / dm;
      if (x > xLo + 1e-12 && x < 1.0 - 1e-12) xs.push_back(x);
    }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-12; }),
           xs.end());

  std::vector<std::pair<double, double>> poly;
  const auto push = [&](double x, double y) {
    if (!poly.empty() && std::abs(poly.back().first - x) < 1e-9 &&
        std::abs(poly.back().second - y) < 1e-9)
      return;
    poly.emplace_back(x, y);
  };

  size_t start = 0;
  if (f(xLo) >= 1.0 - 1e-12) {
    // Clip against the top edge of the unit square.
    for (size_t k = 0; k + 1 < xs.size(); ++k) {
      const double fa = f(xs[k]), fb = f(xs[k + 1]);
      if (fa >= 1.0 - 1e-12 && fb <= 1.0 + 1e-12) {
        const double x1 = (std::abs(fa - fb) < 1e-14)
                              ? xs[k]
                              : xs[k] + (fa - 1.0) * (xs[k + 1] - xs[k]) / (fa - fb);
        push(clamp01(x1), 1.0);
        start = k + 1;
        break;
      }
    }
  } else {
    push(xLo, 1.0);
    push(xLo, std::max(0.0, f(xLo)));
  }
  for (size_t k = start; k < xs.size(); ++k) {
    const double y = f(xs[k]);
    if (y <= 1e-12) {
      // Crossed the bottom edge; find where and finish along it.
      double x0 = xs[k];
      if (k > 0) {
        const double fa = f(xs[k - 1]);
        if (fa > 1e-12) x0 = xs[k - 1] + fa * (xs[k] - xs[k - 1]) / (fa - y);
      }
      push(clamp01(x0), 0.0);
      push(1.0, 0.0);
      break;
    }
    if (y <= 1.0 + 1e-12) push(xs[k], y);
  }

  // Drop collinear interior vertices.
  std::vector<std::pair<double, double>> out;
  for (const auto& p : poly) {
    while (out.size() >= 2) {
      const auto& o = out[out.size() - 2];
      const auto& l = out.back();
      const double crossv = (l.first - o.first) * (p.second - o.second) -
                            (l.second - o.second) * (p.first - o.first);
      if (std::abs(crossv) < 1e-12)
        out.pop_back();
      else
        break;
    }
    out.push_back(p);
  }
  return out;
}

struct GinibreSampler {
  std::mt19937 gen;
  std::normal_distribution<double> normal{0.0, 1.0};
  explicit GinibreSampler(unsigned seed) : gen(seed) {}

  quantum::DensityMatrix operator()() {
    quantum::Mat4 m;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        m(i, j) = std::complex<double>(normal(gen), normal(gen));
    quantum::Mat4 rho = m * m.adjoint();
    rho /= rho.trace().real();
    return quantum::DensityMatrix::trusted(0.5 * (rho + rho.adjoint()));
  }
};

}  // namespace

void NetConfig::validate() const {
  if (bVertices < 8 || phiPoints < 8 || sGrid < 8)
    throw std::invalid_argument("net resolutions must be at least 8");
}

double BoundCurve::value(double s) const {
  if (hullS.empty()) return 0.0;
  if (s <= hullS.front()) return hullC.front();
  if (s >= hullS.back()) return hullC.back();
  const auto it = std::upper_bound(hullS.begin(), hullS.end(), s);
  const size_t i = it - hullS.begin();
  const double t = (s - hullS[i - 1]) / (hullS[i] - hullS[i - 1]);
  return hullC[i - 1] + t * (hullC[i] - hullC[i - 1]);
}

MinOverBOutcome min_over_b(double phi, double lambda, double s,
                           const NetConfig& cfg) {
  cfg.validate();
  validate_score(s);
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("lambda must lie in [0, 1]");
  if (!(phi >= 0.0 && phi <= kPi / 2.0 + 1e-12))
    throw std::invalid_argument("phi must lie in [0, pi/2]");

  const auto dec = sdp::build_chsh_decomposition(phi);
  const double thetaB = kPi / cfg.bVertices;
  const double kap = detail::cell_slack(thetaB, s);

  MinOverBOutcome out;
  out.slack = kap;
  out.tStar = kInf;
  for (int v = 0; v < cfg.bVertices; ++v) {
    const double beta = 2.0 * kPi * v / cfg.bVertices;
    const double bz = std::cos(beta), bx = std::sin(beta);
    // Closed-form unattainability of the slack-relaxed score at this vertex.
    // Skipping here both saves the solve and avoids the weak finite duals
    // interior-point methods return on marginally empty feasible sets.
    if (s - kap > lam_max_at(phi, bz, bx) + 1e-12) continue;
    const auto sol = sdp::solve_weighted_delta_sdp(dec, bz, bx, lambda, s, kap);
    if (sol.status == sdp::SdpStatus::infeasible) continue;
    out.feasible = true;
    const double val = std::max(0.0, sol.certificate.value(s, kap));
    out.certificates.push_back({phi, beta, sol.certificate.y0,
                                sol.certificate.nu, thetaB, 0.0, sol.gap});
    out.tStar = std::min(out.tStar, val);
  }
  if (out.feasible) out.tStar = clamp01(out.tStar);
  return out;
}

EntropyBoundPoint qubit_bound_at(double s, double lambda,
                                 const NetConfig& cfg) {
  validate_score(s);
  Engine engine(lambda, cfg);
  // Approach the requested score from below so the refinement inherits
  // fresh tangents, as it would mid-sweep when computing a whole curve.
  for (double back : {0.15, 0.05, 0.015, 0.005, 0.0015, 0.0005, 0.00015}) {
    const double sigma = s - back;
    if (sigma > 2.0) engine.refine_at(sigma);
  }
  return engine.refine_at(s);
}

BoundCurve compute_bound_curve(double lambda, const NetConfig& cfg) {
  Engine engine(lambda, cfg);
  return engine.run_curve();
}

BoundCurve convexify_curve(const std::vector<EntropyBoundPoint>& points,
                           double lambda) {
  BoundCurve curve;
  curve.lambda = lambda;
  curve.points = points;
  std::sort(curve.points.begin(), curve.points.end(),
            [](const EntropyBoundPoint& a, const EntropyBoundPoint& b) {
              return a.s < b.s;
            });
  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(0.0, 0.0);
  for (const auto& p : curve.points) pts.emplace_back(p.s, p.cQubit);
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    if (!hull.empty() && p.first <= hull.back().first + 1e-15) continue;
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& l = hull.back();
      if ((l.second - o.second) * (p.first - l.first) >=
          (p.second - l.second) * (l.first - o.first))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  for (const auto& p : hull) {
    curve.hullS.push_back(p.first);
    curve.hullC.push_back(p.second);
  }
  return curve;
}

UncertaintyRegion uncertainty_region(double s,
                                     const std::vector<double>& lambdaGrid,
                                     const NetConfig& cfg) {
  validate_score(s);
  if (lambdaGrid.empty())
    throw std::invalid_argument("lambda grid must be non-empty");
  for (double l : lambdaGrid)
    if (!(l >= 0.0 && l <= 1.0))
      throw std::invalid_argument("lambda must lie in [0, 1]");

  UncertaintyRegion reg;
  // The defect objective is symmetric under swapping the two pinchings, so
  // the curves for lambda and 1-lambda coincide and one engine serves both.
  std::map<double, double> cache;
  for (double l : lambdaGrid) {
    const double key = std::min(l, 1.0 - l);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const BoundCurve curve = compute_bound_curve(key, cfg);
      it = cache.emplace(key, curve.value(s)).first;
    }
    reg.lambdas.push_back(l);
    reg.bounds.push_back(it->second);
  }
  reg.boundary = region_boundary(reg.lambdas, reg.bounds);
  return reg;
}

namespace detail {

double cell_slack(double theta, double s) {
  const double c = std::cos(theta);
  const double si = std::abs(std::sin(theta));
  return (1.0 - c) * std::abs(s) + si * root8(s);
}

void audit_covering_constants(int samples, unsigned seed) {
  GinibreSampler sample(seed);
  std::uniform_real_distribution<double> uPhi(0.0, kPi / 2.0);
  std::uniform_real_distribution<double> uBeta(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> uStep(-0.3, 0.3);

  const auto wvec = [](double phi, double beta) -> std::array<double, 3> {
    return {std::sin(beta) * std::cos(phi), std::sin(beta) * std::sin(phi),
            std::cos(beta)};
  };

  for (int k = 0; k < samples; ++k) {
    const double phi = uPhi(sample.gen);
    const double beta = uBeta(sample.gen);
    const double dPhi = uStep(sample.gen);
    const double dBeta = uStep(sample.gen);

    const auto w1 = wvec(phi, beta);
    const auto w2 = wvec(phi + dPhi, beta + dBeta);
    double dot = w1[0] * w2[0] + w1[1] * w2[1] + w1[2] * w2[2];
    dot = std::max(-1.0, std::min(1.0, dot));
    const double ang = std::acos(dot);
    if (ang > std::hypot(dPhi, dBeta) + 1e-9)
      throw std::logic_error(
          "covering audit: chart step fails to dominate the sphere angle");

    const auto rho = sample();
    const auto g1 = sdp::build_chsh_decomposition(phi).operator_for(
        std::cos(beta), std::sin(beta));
    const auto g2 = sdp::build_chsh_decomposition(phi + dPhi).operator_for(
        std::cos(beta + dBeta), std::sin(beta + dBeta));
    const double s1 = (g1 * rho.matrix()).trace().real();
    const double s2 = (g2 * rho.matrix()).trace().real();
    if (std::abs(s2 - s1) > cell_slack(ang, s1) + 1e-9)
      throw std::logic_error("covering audit: score slack violated");

    const double d1 = entropy::delta_trace_norm(rho, {phi});
    const double d2 = entropy::delta_trace_norm(rho, {phi + dPhi});
    if (std::abs(d1 - d2) > 2.0 * std::abs(dPhi) + 1e-9)
      throw std::logic_error("covering audit: objective slope violated");
  }
}

}  // namespace detail

}  // namespace diqkd::bound
