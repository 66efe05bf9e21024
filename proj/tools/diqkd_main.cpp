// Command-line surface for the bound, key-rate, and simulation pipelines.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure (an
// uncertified result, e.g. a score no net cell can attain).

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "diqkd/bound.hpp"
#include "diqkd/io.hpp"
#include "diqkd/keyrate.hpp"
#include "diqkd/parallel.hpp"
#include "diqkd/protocol.hpp"
#include "diqkd/version.hpp"

namespace {

using diqkd::io::Provenance;
using diqkd::io::Table;

struct NetFlags {
  int bVertices = diqkd::bound::NetConfig{}.bVertices;
  int phiPoints = diqkd::bound::NetConfig{}.phiPoints;
  int sGrid = diqkd::bound::NetConfig{}.sGrid;
  bool empiricalAudit = false;
};

void add_net_flags(CLI::App* sub, NetFlags* nf) {
  sub->add_option("--b-vertices", nf->bVertices,
                  "Polygon vertices on the Bell-operator circle")
      ->capture_default_str();
  sub->add_option("--phi-points", nf->phiPoints,
                  "Base pinching-angle grid points")
      ->capture_default_str();
  sub->add_option("--s-grid", nf->sGrid, "Score grid points for curve sweeps")
      ->capture_default_str();
  sub->add_flag("--empirical-audit", nf->empiricalAudit,
                "Re-validate covering constants by dense sampling first");
}

diqkd::bound::NetConfig to_config(const NetFlags& nf) {
  diqkd::bound::NetConfig cfg;
  cfg.bVertices = nf.bVertices;
  cfg.phiPoints = nf.phiPoints;
  cfg.sGrid = nf.sGrid;
  cfg.lipschitzMode = nf.empiricalAudit
                          ? diqkd::bound::NetConfig::LipschitzMode::empirical
                          : diqkd::bound::NetConfig::LipschitzMode::certified;
  return cfg;
}

void add_net_provenance(Provenance& prov, const diqkd::bound::NetConfig& cfg) {
  prov.add("b_vertices", cfg.bVertices);
  prov.add("phi_points", cfg.phiPoints);
  prov.add("s_grid", cfg.sGrid);
  prov.add("lipschitz_mode",
           cfg.lipschitzMode == diqkd::bound::NetConfig::LipschitzMode::empirical
               ? "empirical"
               : "certified");
  prov.add("workers", diqkd::default_worker_count());
}

std::vector<double> parse_lambda_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0' || !(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("bad lambda grid entry: " + item);
    grid.push_back(v);
  }
  if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
  return grid;
}

std::string grid_to_string(const std::vector<double>& grid) {
  std::string out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i) out += ",";
    out += diqkd::io::format_double(grid[i]);
  }
  return out;
}

diqkd::quantum::DensityMatrix parse_state(const std::string& spec) {
  if (spec == "singlet") return diqkd::quantum::DensityMatrix::singlet();
  if (spec == "mixed") return diqkd::quantum::DensityMatrix::maximally_mixed();
  if (spec.rfind("werner:", 0) == 0) {
    char* end = nullptr;
    const std::string arg = spec.substr(7);
    const double v = std::strtod(arg.c_str(), &end);
    if (end == arg.c_str() || *end != '\0' || !(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("werner visibility must lie in [0, 1]");
    return diqkd::quantum::DensityMatrix::werner(v);
  }
  throw std::invalid_argument(
      "unknown state spec (use singlet, mixed, or werner:<v>): " + spec);
}

void write_table(const std::string& outPath, const std::string& format,
                 const Provenance& prov, const Table& table) {
  const auto emit = [&](std::ostream& os) {
    if (format == "json")
      diqkd::io::write_json(os, prov, table);
    else
      diqkd::io::write_csv(os, prov, table);
  };
  if (outPath.empty()) {
    emit(std::cout);
    return;
  }
  std::ofstream out(outPath, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + outPath);
  emit(out);
  std::cout << prov.comment_block();
  std::cout << "wrote " << outPath << " (" << table.rows.size() << " rows)\n";
}

// ---- subcommand option blocks ----

struct BoundOpts {
  double lambda = 0.5;
  double s = -1.0;
  std::string out, format = "csv";
  NetFlags net;
};

struct KeyrateOpts {
  double s = 2.5, qber = 0.0, q11 = -1.0;
  double lambda = -1.0, p = -1.0;
  std::string lambdaGrid = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,"
                           "0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95,1";
  std::string out, format = "csv";
  NetFlags net;
};

struct CriticalOpts {
  double lambda = 0.5;
  std::string out, format = "csv";
  NetFlags net;
};

struct FeasibilityOpts {
  double sMin = 2.0, sMax = diqkd::quantum::kTsirelson;
  int sSteps = 25;
  double qMin = 0.0, qMax = 0.15;
  int qSteps = 16;
  std::string lambdaGrid = "0,0.5,1";
  std::string out, contourOut, format = "csv";
  NetFlags net;
};

struct RegionOpts {
  double s = 2.5;
  std::string lambdaGrid = "0,0.25,0.5,0.75,1";
  std::string out, boundsOut, format = "csv";
  NetFlags net;
};

struct ExperimentsOpts {
  std::string file;
  std::string lambdaGrid = "0,0.5,1";
  std::string out, format = "csv";
  NetFlags net;
};

struct SimulateOpts {
  std::uint64_t n = 100000;
  double p = 0.5, q = 0.9, sTol = 2.2;
  std::uint64_t seed = 1;
  std::string state = "singlet";
  double ecEfficiency = 1.1;
  int verifyBits = 64;
  double cStar = -1.0;
  std::string out, transcript;
  NetFlags net;
};

// ---- runners ----

int run_bound(const BoundOpts& o) {
  const auto cfg = to_config(o.net);
  const double folded = std::min(o.lambda, 1.0 - o.lambda);
  Provenance prov("bound");
  prov.add("lambda", o.lambda);
  prov.add("lambda_effective", folded);
  add_net_provenance(prov, cfg);

  const auto curve = diqkd::bound::compute_bound_curve(folded, cfg);
  const auto [maxGap, maxSlack] = diqkd::io::curve_certification(curve);
  prov.add("max_gap", maxGap);
  prov.add("max_slack", maxSlack);
  if (o.s >= 0.0) {
    prov.add("s_query", o.s);
    prov.add("c_hull_at_query", curve.value(o.s));
  }
  write_table(o.out, o.format, prov, diqkd::io::curve_table(curve));
  return 0;
}

int run_keyrate(const KeyrateOpts& o) {
  const auto cfg = to_config(o.net);
  const double q11 = o.q11 >= 0.0 ? o.q11 : o.qber;
  const diqkd::quantum::ChannelPoint channel(o.s, o.qber, q11);
  diqkd::keyrate::CurveCache cache(cfg);

  Provenance prov("keyrate");
  prov.add("s", o.s);
  prov.add("q00", o.qber);
  prov.add("q11", q11);

  diqkd::keyrate::KeyRateInputs inputs(0.5, channel);
  if (o.lambda >= 0.0 && o.p >= 0.0)
    throw std::invalid_argument("--lambda and --p are mutually exclusive");
  if (o.lambda >= 0.0) {
    inputs = diqkd::keyrate::KeyRateInputs::from_lambda(o.lambda, channel);
    prov.add("mode", "fixed-lambda");
  } else if (o.p >= 0.0) {
    inputs = diqkd::keyrate::KeyRateInputs(o.p, channel);
    prov.add("mode", "fixed-p");
  } else {
    const auto grid = parse_lambda_grid(o.lambdaGrid);
    const auto choice = diqkd::keyrate::optimize_basis_bias(channel, grid, cache);
    inputs = diqkd::keyrate::KeyRateInputs::from_lambda(choice.lambda, channel);
    prov.add("mode", "optimized");
    prov.add("lambda_grid", grid_to_string(grid));
  }
  add_net_provenance(prov, cfg);

  const auto& curve = cache.curve(inputs.lambda);
  const double cStar = curve.value(o.s);
  const double fraction = diqkd::keyrate::secret_fraction(inputs, cStar);
  const double rate = diqkd::keyrate::key_rate(inputs, cStar);
  const auto [maxGap, maxSlack] = diqkd::io::curve_certification(curve);

  Table t;
  t.columns = {{"s", true},        {"q00", true},
               {"q11", true},      {"lambda", true},
               {"p", true},        {"p_sift", true},
               {"c_star", true},   {"secret_fraction", true},
               {"key_rate", true}, {"max_gap", true},
               {"max_slack", true}};
  t.rows.push_back({diqkd::io::format_double(o.s),
                    diqkd::io::format_double(o.qber),
                    diqkd::io::format_double(q11),
                    diqkd::io::format_double(inputs.lambda),
                    diqkd::io::format_double(inputs.p),
                    diqkd::io::format_double(inputs.pS),
                    diqkd::io::format_double(cStar),
                    diqkd::io::format_double(fraction),
                    diqkd::io::format_double(std::max(0.0, rate)),
                    diqkd::io::format_double(maxGap),
                    diqkd::io::format_double(maxSlack)});
  write_table(o.out, o.format, prov, t);
  return 0;
}

int run_critical(const CriticalOpts& o) {
  const auto cfg = to_config(o.net);
  diqkd::keyrate::CurveCache cache(cfg);
  Provenance prov("critical");
  prov.add("lambda", o.lambda);
  add_net_provenance(prov, cfg);

  const double sStar = diqkd::keyrate::critical_chsh(o.lambda, cache);
  const double qStar = diqkd::keyrate::critical_qber(o.lambda, cache);
  const auto [maxGap, maxSlack] =
      diqkd::io::curve_certification(cache.curve(o.lambda));

  Table t;
  t.columns = {{"lambda", true},
               {"s_critical", true},
               {"qber_critical", true},
               {"max_gap", true},
               {"max_slack", true}};
  t.rows.push_back({diqkd::io::format_double(o.lambda),
                    diqkd::io::format_double(sStar),
                    diqkd::io::format_double(qStar),
                    diqkd::io::format_double(maxGap),
                    diqkd::io::format_double(maxSlack)});
  write_table(o.out, o.format, prov, t);
  return 0;
}

int run_feasibility(const FeasibilityOpts& o) {
  const auto cfg = to_config(o.net);
  const auto grid = parse_lambda_grid(o.lambdaGrid);
  diqkd::keyrate::CurveCache cache(cfg);

  Provenance prov("feasibility");
  prov.add("s_min", o.sMin);
  prov.add("s_max", o.sMax);
  prov.add("s_steps", o.sSteps);
  prov.add("q_min", o.qMin);
  prov.add("q_max", o.qMax);
  prov.add("q_steps", o.qSteps);
  prov.add("lambda_grid", grid_to_string(grid));
  add_net_provenance(prov, cfg);

  const auto table = diqkd::keyrate::feasibility_grid(
      o.sMin, o.sMax, o.sSteps, o.qMin, o.qMax, o.qSteps, cache, grid);
  write_table(o.out, o.format, prov, diqkd::io::grid_table(table));
  if (!o.contourOut.empty()) {
    Provenance cprov("feasibility-contour");
    cprov.add("s_min", o.sMin);
    cprov.add("s_max", o.sMax);
    cprov.add("lambda_grid", grid_to_string(grid));
    add_net_provenance(cprov, cfg);
    write_table(o.contourOut, o.format, cprov, diqkd::io::contour_table(table));
  }
  return 0;
}

int run_region(const RegionOpts& o) {
  const auto cfg = to_config(o.net);
  const auto grid = parse_lambda_grid(o.lambdaGrid);
  Provenance prov("region");
  prov.add("s", o.s);
  prov.add("lambda_grid", grid_to_string(grid));
  add_net_provenance(prov, cfg);

  const auto region = diqkd::bound::uncertainty_region(o.s, grid, cfg);
  for (std::size_t i = 0; i < region.lambdas.size(); ++i)
    prov.add("c_bound_" + diqkd::io::format_double(region.lambdas[i]),
             region.bounds[i]);
  write_table(o.out, o.format, prov, diqkd::io::region_boundary_table(region));
  if (!o.boundsOut.empty())
    write_table(o.boundsOut, o.format, prov,
                diqkd::io::region_bounds_table(region));
  return 0;
}

int run_experiments(const ExperimentsOpts& o) {
  const auto cfg = to_config(o.net);
  const auto grid = parse_lambda_grid(o.lambdaGrid);
  const auto load = diqkd::io::load_experiments_file(o.file);
  for (const auto& err : load.rowErrors)
    std::cerr << o.file << ": " << err << "\n";

  diqkd::keyrate::CurveCache cache(cfg);
  const auto results =
      diqkd::keyrate::evaluate_experiments(load.records, cache, grid);

  Provenance prov("experiments");
  prov.add("file", o.file);
  prov.add("rows_loaded", static_cast<int>(load.records.size()));
  prov.add("rows_rejected", static_cast<int>(load.rowErrors.size()));
  prov.add("lambda_grid", grid_to_string(grid));
  add_net_provenance(prov, cfg);
  write_table(o.out, o.format, prov, diqkd::io::experiments_table(results));
  return 0;
}

int run_simulate(const SimulateOpts& o) {
  diqkd::protocol::ProtocolConfig cfg;
  cfg.n = o.n;
  cfg.p = o.p;
  cfg.q = o.q;
  cfg.sTol = o.sTol;
  cfg.seed = o.seed;
  cfg.state = parse_state(o.state);
  cfg.ecEfficiency = o.ecEfficiency;
  cfg.verifyBits = o.verifyBits;
  cfg.validate();

  Provenance prov("simulate");
  prov.add("n", o.n);
  prov.add("p", o.p);
  prov.add("q", o.q);
  prov.add("s_tol", o.sTol);
  prov.add("state", o.state);
  prov.add("ec_efficiency", o.ecEfficiency);
  prov.add("verify_bits", o.verifyBits);
  prov.add("seed", o.seed);

  diqkd::bound::BoundCurve curve;
  if (o.cStar >= 0.0) {
    // User-supplied certified value; skips the curve computation.
    curve.lambda = diqkd::keyrate::lambda_from_p(o.p);
    curve.hullS = {0.0, 2.0, o.sTol};
    curve.hullC = {0.0, 0.0, o.cStar};
    if (o.sTol <= 2.0) {
      curve.hullS = {0.0, 2.0};
      curve.hullC = {0.0, o.cStar};
    }
    prov.add("c_star_override", o.cStar);
    prov.add("b_vertices", "n/a");
  } else {
    const auto netCfg = to_config(o.net);
    diqkd::keyrate::CurveCache cache(netCfg);
    const double lam = diqkd::keyrate::lambda_from_p(o.p);
    curve = cache.curve(lam);
    add_net_provenance(prov, netCfg);
  }

  std::vector<diqkd::protocol::RoundRecord> transcript;
  auto* rounds = o.transcript.empty() ? nullptr : &transcript;
  const auto result = diqkd::protocol::run_protocol(cfg, curve, rounds);

  if (!o.transcript.empty()) {
    std::ofstream out(o.transcript, std::ios::binary);
    if (!out)
      throw std::invalid_argument("cannot open output file: " + o.transcript);
    diqkd::io::write_csv(out, prov, diqkd::io::transcript_table(transcript));
  }

  const std::string json = diqkd::io::result_json(prov, result);
  if (o.out.empty()) {
    std::cout << json;
  } else {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file: " + o.out);
    out << json;
    std::cout << prov.comment_block();
    std::cout << (result.aborted ? "aborted: " + result.abortReason
                                 : "final key bits: " +
                                       std::to_string(result.finalKeyA.size()))
              << "\n";
    std::cout << "wrote " << o.out << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified device-independent QKD bounds, rates, and protocol "
               "simulation"};
  app.set_version_flag("--version",
                       std::string(diqkd::kToolName) + " " + diqkd::kToolVersion);
  app.require_subcommand(1);

  int workers = 0;

  BoundOpts bo;
  auto* boundSub =
      app.add_subcommand("bound", "Certified defect bound curve for a basis weight");
  boundSub->add_option("--lambda", bo.lambda, "Basis weight in [0, 1]")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  boundSub->add_option("--s", bo.s, "Also report the envelope value at this score")
      ->check(CLI::Range(0.0, diqkd::quantum::kTsirelson));
  boundSub->add_option("--out", bo.out, "Output file (default: stdout)");
  boundSub->add_option("--format", bo.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  add_net_flags(boundSub, &bo.net);

  KeyrateOpts ko;
  auto* keyrateSub =
      app.add_subcommand("keyrate", "Asymptotic key rate at one channel point");
  keyrateSub->add_option("--s", ko.s, "CHSH value")->required();
  keyrateSub->add_option("--qber", ko.qber, "Key-basis error rate (q00)")
      ->required()
      ->check(CLI::Range(0.0, 0.5));
  keyrateSub->add_option("--q11", ko.q11, "Second-basis error rate (default: --qber)")
      ->check(CLI::Range(0.0, 0.5));
  keyrateSub->add_option("--lambda", ko.lambda, "Fix the basis weight")
      ->check(CLI::Range(0.0, 1.0));
  keyrateSub->add_option("--p", ko.p, "Fix Alice's input bias instead")
      ->check(CLI::Range(0.0, 1.0));
  keyrateSub->add_option("--lambda-grid", ko.lambdaGrid,
                         "Optimization grid (comma-separated)")
      ->capture_default_str();
  keyrateSub->add_option("--out", ko.out, "Output file (default: stdout)");
  keyrateSub->add_option("--format", ko.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  add_net_flags(keyrateSub, &ko.net);

  CriticalOpts co;
  auto* criticalSub = app.add_subcommand(
      "critical", "Critical CHSH value and QBER for the depolarizing model");
  criticalSub->add_option("--lambda", co.lambda, "Basis weight in [0, 1]")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  criticalSub->add_option("--out", co.out, "Output file (default: stdout)");
  criticalSub->add_option("--format", co.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  add_net_flags(criticalSub, &co.net);

  FeasibilityOpts fo;
  auto* feasSub = app.add_subcommand(
      "feasibility", "Key-rate table over an (S, QBER) grid with zero contour");
  feasSub->add_option("--s-min", fo.sMin, "")->capture_default_str();
  feasSub->add_option("--s-max", fo.sMax, "")->capture_default_str();
  feasSub->add_option("--s-steps", fo.sSteps, "")->capture_default_str();
  feasSub->add_option("--q-min", fo.qMin, "")->capture_default_str();
  feasSub->add_option("--q-max", fo.qMax, "")->capture_default_str();
  feasSub->add_option("--q-steps", fo.qSteps, "")->capture_default_str();
  feasSub->add_option("--lambda-grid", fo.lambdaGrid,
                      "Optimization grid (comma-separated; must contain 0.5 and 1)")
      ->capture_default_str();
  feasSub->add_option("--out", fo.out, "Grid output file (default: stdout)");
  feasSub->add_option("--contour-out", fo.contourOut, "Zero-contour output file");
  feasSub->add_option("--format", fo.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  add_net_flags(feasSub, &fo.net);

  RegionOpts ro;
  auto* regionSub = app.add_subcommand(
      "region", "Admissible entropy-pair region at a CHSH value");
  regionSub->add_option("--s", ro.s, "CHSH value")->required();
  regionSub->add_option("--lambda-grid", ro.lambdaGrid,
                        "Supporting weights (comma-separated)")
      ->capture_default_str();
  regionSub->add_option("--out", ro.out, "Boundary output file (default: stdout)");
  regionSub->add_option("--bounds-out", ro.boundsOut, "Per-weight bound file");
  regionSub->add_option("--format", ro.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  add_net_flags(regionSub, &ro.net);

  ExperimentsOpts eo;
  auto* expSub = app.add_subcommand(
      "experiments", "Evaluate key rates for experiment working points");
  expSub->add_option("--file", eo.file, "CSV: label,year,S,qber,source")
      ->required();
  expSub->add_option("--lambda-grid", eo.lambdaGrid,
                     "Optimization grid (comma-separated)")
      ->capture_default_str();
  expSub->add_option("--out", eo.out, "Output file (default: stdout)");
  expSub->add_option("--format", eo.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  add_net_flags(expSub, &eo.net);

  SimulateOpts so;
  auto* simSub = app.add_subcommand("simulate", "Run the protocol end to end");
  simSub->add_option("--n", so.n, "Number of rounds")->capture_default_str();
  simSub->add_option("--p", so.p, "P(X=0)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  simSub->add_option("--q", so.q, "Key-generation bias")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  simSub->add_option("--s-tol", so.sTol, "Abort threshold")
      ->capture_default_str();
  simSub->add_option("--seed", so.seed, "RNG seed")->capture_default_str();
  simSub->add_option("--state", so.state, "singlet, mixed, or werner:<v>")
      ->capture_default_str();
  simSub->add_option("--ec-efficiency", so.ecEfficiency,
                     "Error-correction inefficiency factor")
      ->capture_default_str();
  simSub->add_option("--verify-bits", so.verifyBits, "Verification tag bits")
      ->capture_default_str();
  simSub->add_option("--c-star", so.cStar,
                     "Certified bound at --s-tol (skips the curve computation)");
  simSub->add_option("--out", so.out, "Result JSON file (default: stdout)");
  simSub->add_option("--transcript", so.transcript, "Round transcript CSV file");
  add_net_flags(simSub, &so.net);

  for (auto* sub : {boundSub, keyrateSub, criticalSub, feasSub, regionSub,
                    expSub, simSub}) {
    sub->add_option("--workers", workers,
                    "Worker threads (default: DIQKD_WORKERS or hardware)");
    sub->set_config("--config", "", "Read options from an INI file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (workers > 0) setenv("DIQKD_WORKERS", std::to_string(workers).c_str(), 1);

  try {
    if (app.got_subcommand(boundSub)) return run_bound(bo);
    if (app.got_subcommand(keyrateSub)) return run_keyrate(ko);
    if (app.got_subcommand(criticalSub)) return run_critical(co);
    if (app.got_subcommand(feasSub)) return run_feasibility(fo);
    if (app.got_subcommand(regionSub)) return run_region(ro);
    if (app.got_subcommand(expSub)) return run_experiments(eo);
    if (app.got_subcommand(simSub)) return run_simulate(so);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
