// Experiment runner: wires JSON configs to the construction, optimality,
// invariant, and dimension pipelines and writes JSON summaries plus CSV and
// two-column plot data. One experiment per invocation.
//
// Exit codes: 0 success, 2 hypothesis-gate failure, 3 construction or check
// failure, 4 configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ibp/cantor.hpp"
#include "ibp/invariants.hpp"
#include "ibp/martingale.hpp"
#include "ibp/optimality.hpp"
#include "ibp/schedule.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace ibp;

constexpr int kExitOk = 0;
constexpr int kExitGate = 2;
constexpr int kExitRun = 3;
constexpr int kExitConfig = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 17 significant digits: round-trips every double and keeps output byte-stable.
std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_keys(const json& j, const std::string& context,
                  const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError(context + ": unknown key \"" + key + "\"");
}

double get_number(const json& j, const std::string& context, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(context + ": missing key \"" + key + "\"");
  if (!j[key].is_number()) throw ConfigError(context + ": \"" + key + "\" must be a number");
  return j[key].get<double>();
}

double get_number_or(const json& j, const std::string& context, const std::string& key,
                     double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(context + ": \"" + key + "\" must be a number");
  return j[key].get<double>();
}

long get_integer_or(const json& j, const std::string& context, const std::string& key,
                    long fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigError(context + ": \"" + key + "\" must be an integer");
  return j[key].get<long>();
}

Complex parse_complex(const json& j, const std::string& context) {
  require_keys(j, context, {"re", "im"});
  return Complex(get_number(j, context, "re"), get_number(j, context, "im"));
}

BlaschkeProduct parse_blaschke(const json& j) {
  require_keys(j, "blaschke", {"rotation_turns", "origin_multiplicity", "zeros"});
  double rot = get_number_or(j, "blaschke", "rotation_turns", 0.0);
  int m = static_cast<int>(get_integer_or(j, "blaschke", "origin_multiplicity", 1));
  std::vector<DiskPoint> zeros;
  if (j.contains("zeros")) {
    if (!j["zeros"].is_array()) throw ConfigError("blaschke: \"zeros\" must be an array");
    for (const auto& z : j["zeros"]) {
      Complex c = parse_complex(z, "blaschke.zeros[]");
      if (std::abs(c) >= 1.0) throw ConfigError("blaschke: zeros must lie inside the disk");
      zeros.emplace_back(c);
    }
  }
  try {
    return BlaschkeProduct(rot, m, std::move(zeros));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("blaschke: ") + e.what());
  }
}

GaugeFunction parse_gauge(const json& j) {
  require_keys(j, "gauge", {"kind", "s", "p", "table"});
  if (!j.contains("kind") || !j["kind"].is_string())
    throw ConfigError("gauge: missing string key \"kind\"");
  std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "power") return GaugeFunction::power(get_number(j, "gauge", "s"));
    if (kind == "power_log")
      return GaugeFunction::power_log(get_number(j, "gauge", "s"),
                                      get_number(j, "gauge", "p"));
    if (kind == "table") {
      if (!j.contains("table") || !j["table"].is_array())
        throw ConfigError("gauge: table kind needs an array \"table\"");
      std::vector<std::pair<double, double>> rows;
      for (const auto& row : j["table"]) {
        if (!row.is_array() || row.size() != 2)
          throw ConfigError("gauge: table rows are [t, phi] pairs");
        rows.emplace_back(row[0].get<double>(), row[1].get<double>());
      }
      return GaugeFunction::from_table(std::move(rows));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("gauge: ") + e.what());
  }
  throw ConfigError("gauge: kind must be power, power_log, or table");
}

unsigned long resolve_seed(const json& cfg, const std::optional<unsigned long>& cli_seed) {
  if (cli_seed) return *cli_seed;
  if (!cfg.contains("seed")) throw ConfigError("config: \"seed\" is mandatory");
  if (!cfg["seed"].is_number_integer() || cfg["seed"].get<long long>() < 0)
    throw ConfigError("config: \"seed\" must be a nonnegative integer");
  return cfg["seed"].get<unsigned long>();
}

void write_text(const std::filesystem::path& dir, const std::string& name,
                const std::string& body) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out << body;
}

json check_entry(const std::string& name, bool pass, double margin) {
  json c;
  c["name"] = name;
  c["pass"] = pass;
  c["margin"] = std::isfinite(margin) ? json(margin) : json(nullptr);
  return c;
}

struct Overrides {
  std::optional<unsigned long> seed;
  std::optional<long> horizon;
  std::optional<long> depth;
  std::optional<double> tolerance;
};

// --- construct -------------------------------------------------------------

int cmd_construct(const json& cfg, const std::filesystem::path& out_dir,
                  const Overrides& ov) {
  require_keys(cfg, "config",
               {"blaschke", "gauge", "schedule", "target", "depth", "horizon",
                "tolerance", "seed", "constants"});
  if (!cfg.contains("blaschke") || !cfg.contains("gauge") || !cfg.contains("schedule") ||
      !cfg.contains("target"))
    throw ConfigError("config: construct needs blaschke, gauge, schedule, target");
  unsigned long seed = resolve_seed(cfg, ov.seed);
  BlaschkeProduct f = parse_blaschke(cfg["blaschke"]);
  GaugeFunction g = parse_gauge(cfg["gauge"]);
  Complex target = parse_complex(cfg["target"], "target");
  int depth = static_cast<int>(ov.depth.value_or(get_integer_or(cfg, "config", "depth", 5)));
  int horizon =
      static_cast<int>(ov.horizon.value_or(get_integer_or(cfg, "config", "horizon", 4000)));
  double tolerance = ov.tolerance.value_or(get_number_or(cfg, "config", "tolerance", 0.2));
  if (depth < 1) throw ConfigError("config: depth must be >= 1");
  if (horizon < 2) throw ConfigError("config: horizon must be >= 2");

  StepConfig step;
  std::string constants_provenance;
  if (cfg.contains("constants")) {
    const json& k = cfg["constants"];
    require_keys(k, "constants", {"epsilon", "c", "d", "delta1", "Q"});
    ArturConstants artur;
    artur.epsilon = get_number(k, "constants", "epsilon");
    artur.c = get_number(k, "constants", "c");
    artur.d = static_cast<int>(get_integer_or(k, "constants", "d", 1));
    artur.provenance = "config";
    step.artur = artur;
    step.delta1 = get_number_or(k, "constants", "delta1", 1.0 / 256);
    step.eta = step.delta1 / 4.0;
    step.gamma = 1.0 - step.eta;
    step.gamma1 = step.gamma;
    step.Q = static_cast<int>(get_integer_or(k, "constants", "Q", 10));
    constants_provenance = "config";
  } else {
    ArturConstants artur = calibrate_artur_constants(f, 64, 2, 4, seed);
    step = calibrate_step_config(f, artur, seed + 1);
    constants_provenance = "calibrated";
  }
  step.seed = seed;

  const json& sch = cfg["schedule"];
  require_keys(sch, "schedule", {"kind", "values"});
  if (!sch.contains("kind") || !sch["kind"].is_string())
    throw ConfigError("schedule: missing string key \"kind\"");
  std::string sched_kind = sch["kind"].get<std::string>();
  ConstructionConfig ccfg;
  ccfg.step = step;
  ccfg.N = horizon;
  ccfg.gate_vanish_tolerance = tolerance;

  CoefficientSchedule schedule = CoefficientSchedule::from_list({});
  if (sched_kind == "harmonic_blocks") {
    OuterSequences outer = compute_outer_sequences(g, f, ccfg.gate_c, ccfg.gate_d, ccfg.K,
                                                   step.Q, horizon, ccfg.gate_horizon);
    schedule = CoefficientSchedule::harmonic_blocks(outer);
  } else if (sched_kind == "list") {
    if (!sch.contains("values") || !sch["values"].is_array())
      throw ConfigError("schedule: list kind needs an array \"values\"");
    std::vector<Complex> values;
    for (const auto& v : sch["values"]) values.push_back(parse_complex(v, "schedule.values[]"));
    schedule = CoefficientSchedule::from_list(std::move(values));
  } else {
    throw ConfigError("schedule: kind must be harmonic_blocks or list");
  }

  ConstructionState st;
  try {
    st = build_cantor_set(f, schedule, g, target, depth, ccfg);
  } catch (const std::invalid_argument& e) {
    throw GateError(e.what());
  } catch (const std::runtime_error& e) {
    if (std::string(e.what()).rfind("hypothesis gate failed", 0) == 0)
      throw GateError(e.what());
    throw;  // construction failure
  }

  FrostmanMeasure fm = frostman_measure(st.families, g, 1000, seed);

  bool has_dimension = st.families.size() >= 4;
  DimensionEstimate dim;
  if (has_dimension) dim = construction_dimension_estimate(st.families);

  // Aggregate the per-generation step diagnostics into one margin per
  // asserted inequality.
  double size_margin = std::numeric_limits<double>::infinity();
  double cover_margin = std::numeric_limits<double>::infinity();
  double growth_margin = std::numeric_limits<double>::infinity();
  double floor_margin = std::numeric_limits<double>::infinity();
  for (size_t gidx = 1; gidx < st.families.size(); ++gidx)
    for (const StepDiagnostics& d : st.families[gidx].parent_diagnostics) {
      size_margin = std::min({size_margin, d.image_lo - d.eta, 4.0 * d.eta - d.image_hi});
      cover_margin = std::min(cover_margin, d.covering_ratio - d.covering_floor);
      growth_margin = std::min(growth_margin, d.log2_growth_bound - d.log2_growth_max);
      floor_margin = std::min(floor_margin, d.min_real_part - d.real_floor);
    }
  bool contraction_ok = true, contraction_checked = false;
  double contraction_slack = std::numeric_limits<double>::infinity();
  bool d_decreasing = true;
  for (size_t i = 0; i < st.generations.size(); ++i) {
    const GenerationSummary& gs = st.generations[i];
    contraction_ok = contraction_ok && gs.contraction_ok;
    if (gs.contraction_checked) {
      contraction_checked = true;
      contraction_slack = std::min(contraction_slack, gs.worst_contraction_slack);
    }
    if (i >= 2) d_decreasing = d_decreasing && gs.max_d < st.generations[i - 1].max_d;
  }

  json checks = json::array();
  checks.push_back(check_entry("first_block_count_inequality", st.gate.first_inequality.pass,
                               st.gate.first_inequality.margin));
  checks.push_back(check_entry("second_block_count_inequality",
                               st.gate.second_inequality.pass,
                               st.gate.second_inequality.margin));
  checks.push_back(check_entry("long_block_mass_vanishing", st.gate.long_blocks_vanish.pass,
                               st.gate.long_blocks_vanish.margin));
  checks.push_back(check_entry("reverse_cauchy_schwarz", st.gate.reverse_cauchy.pass,
                               st.gate.reverse_cauchy.margin));
  checks.push_back(check_entry("image_size_control", size_margin >= -1e-15, size_margin));
  checks.push_back(
      check_entry("covering_requirement", cover_margin >= 0.0, cover_margin));
  checks.push_back(check_entry("growth_condition", growth_margin >= -1e-9, growth_margin));
  checks.push_back(check_entry("real_part_floor", floor_margin >= -1e-12, floor_margin));
  checks.push_back(check_entry("target_distance_contraction",
                               contraction_ok && !st.stalled,
                               contraction_checked ? contraction_slack
                                                   : std::numeric_limits<double>::infinity()));
  checks.push_back(check_entry("target_distance_decreasing", d_decreasing,
                               std::numeric_limits<double>::infinity()));
  checks.push_back(check_entry("mass_conservation",
                               fm.report.conservation_error_max <= 1e-12,
                               1e-12 - fm.report.conservation_error_max));
  checks.push_back(check_entry("measure_growth_bound", fm.report.limit_growth_ok,
                               fm.report.min_covering_ratio - fm.report.covering_floor));
  checks.push_back(check_entry("gauge_ratio_finite",
                               fm.report.violation.empty() &&
                                   std::isfinite(fm.report.ratio_max_log2),
                               -fm.report.ratio_max_log2));

  bool all_pass = true;
  for (const auto& c : checks) all_pass = all_pass && c["pass"].get<bool>();

  json summary;
  summary["command"] = "construct";
  summary["seed"] = seed;
  summary["target"] = {{"re", target.real()}, {"im", target.imag()}};
  summary["depth"] = depth;
  summary["horizon"] = horizon;
  summary["constants"] = {{"provenance", constants_provenance},
                          {"epsilon", step.artur.epsilon},
                          {"c", step.artur.c},
                          {"d", step.artur.d},
                          {"delta1", step.delta1},
                          {"Q", step.Q}};
  summary["gate"] = {{"R", st.gate.R},
                     {"r", st.r},
                     {"beta1", st.gate.beta1},
                     {"pass", st.gate.all_pass()}};
  json gens = json::array();
  for (const GenerationSummary& gs : st.generations)
    gens.push_back({{"k", gs.k},
                    {"arcs", gs.arcs},
                    {"max_target_distance", gs.max_d},
                    {"max_oscillation", gs.max_alpha},
                    {"case1", gs.case1},
                    {"case2", gs.case2},
                    {"contraction_checked", gs.contraction_checked},
                    {"contraction_ok", gs.contraction_ok}});
  summary["generations"] = gens;
  summary["frostman"] = {
      {"conservation_error_max", fm.report.conservation_error_max},
      {"min_covering_ratio", fm.report.min_covering_ratio},
      {"covering_floor", fm.report.covering_floor},
      {"ratio_max_log2", fm.report.ratio_max_log2},
      {"probe_ratio_max_log2", fm.report.probe_ratio_max_log2},
      {"probes", fm.report.probes},
      {"violation", fm.report.violation}};
  if (has_dimension)
    summary["dimension"] = {{"slope", dim.slope}, {"r2", dim.r2}};
  summary["stalled"] = st.stalled;
  summary["checks"] = checks;
  summary["all_pass"] = all_pass;

  // Arc dump: one row per arc across every generation (generation 0 is the
  // root). Lengths are far below double range at depth, so they are logged.
  std::ostringstream arcs;
  arcs << "generation,index,parent,start,length_log2,log2_weight,min_real_part,"
          "value_re,value_im\n";
  for (size_t gidx = 0; gidx < st.families.size(); ++gidx) {
    const ArcFamily& fam = st.families[gidx];
    for (size_t i = 0; i < fam.arcs.size(); ++i) {
      const ChildArc& ca = fam.arcs[i];
      arcs << gidx << ',' << i << ',' << ca.parent << ','
           << fmt17(to_double(ca.arc.start)) << ',' << fmt17(log2_mpq(ca.arc.length))
           << ',' << fmt17(ca.log2_weight) << ',' << fmt17(ca.min_real_part) << ','
           << fmt17(ca.value.real()) << ',' << fmt17(ca.value.imag()) << '\n';
    }
  }
  std::ostringstream gcsv;
  gcsv << "k,arcs,max_target_distance,max_oscillation,case1,case2,contraction_ok\n";
  for (const GenerationSummary& gs : st.generations)
    gcsv << gs.k << ',' << gs.arcs << ',' << fmt17(gs.max_d) << ','
         << fmt17(gs.max_alpha) << ',' << gs.case1 << ',' << gs.case2 << ','
         << (gs.contraction_ok ? 1 : 0) << '\n';

  write_text(out_dir, "arcs.csv", arcs.str());
  write_text(out_dir, "generations.csv", gcsv.str());
  if (has_dimension) {
    std::ostringstream plot;
    for (size_t i = 0; i < dim.log10_inv_scale.size(); ++i)
      plot << fmt17(dim.log10_inv_scale[i]) << ' ' << fmt17(dim.log10_count[i]) << '\n';
    write_text(out_dir, "dimension_loglog.dat", plot.str());
  }
  write_text(out_dir, "summary.json", summary.dump(2) + "\n");
  return all_pass ? kExitOk : kExitRun;
}

// --- optimality ------------------------------------------------------------

int cmd_optimality(const json& cfg, const std::filesystem::path& out_dir,
                   const Overrides& ov) {
  require_keys(cfg, "config", {"gauge", "nu", "horizon", "depth", "radii", "seed"});
  if (!cfg.contains("gauge")) throw ConfigError("config: optimality needs a gauge");
  unsigned long seed = resolve_seed(cfg, ov.seed);
  GaugeFunction g = parse_gauge(cfg["gauge"]);
  int nu = static_cast<int>(get_integer_or(cfg, "config", "nu", 2));
  int horizon =
      static_cast<int>(ov.horizon.value_or(get_integer_or(cfg, "config", "horizon", 600)));
  int depth = static_cast<int>(ov.depth.value_or(get_integer_or(cfg, "config", "depth", 12)));
  if (nu < 2) throw ConfigError("config: nu must be >= 2");
  if (depth < 3) throw ConfigError("config: depth must be >= 3");
  std::vector<double> radii = {0.5, 1.0, 2.0};
  if (cfg.contains("radii")) {
    if (!cfg["radii"].is_array() || cfg["radii"].empty())
      throw ConfigError("config: \"radii\" must be a nonempty array");
    radii.clear();
    for (const auto& r : cfg["radii"]) radii.push_back(r.get<double>());
  }

  OptimalityRun run;
  try {
    run = generate_optimality_coefficients(g, nu, horizon);
  } catch (const std::invalid_argument& e) {
    throw GateError(e.what());
  }
  MartingaleState s = run.state();

  std::vector<int> nbar(depth + 1, -1);
  int depth_eff = 0;
  for (int k = 1; k <= depth; ++k) {
    nbar[k] = n_bar(s, static_cast<double>(k), horizon);
    if (nbar[k] < 0) break;
    depth_eff = k;
  }
  if (depth_eff < 3)
    throw GateError("horizon too short: fewer than 3 variance levels reached");
  int n_max = nbar[depth_eff];

  std::vector<SurvivorEstimate> est;
  for (double R : radii) est.push_back(estimate_survivor_measure(s, R, n_max, seed));

  auto measure_at = [&](size_t ri, int n) {
    const auto& m = est[ri].measure_by_level;
    return n >= 1 && n <= static_cast<int>(m.size()) ? m[n - 1] : 0.0;
  };

  // Decay of m(A(1, Nbar(k))) in k; radius 1 when present, else the first.
  size_t ref = 0;
  for (size_t i = 0; i < radii.size(); ++i)
    if (radii[i] == 1.0) ref = i;
  std::vector<double> ks, logs;
  bool nonincreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= depth_eff; ++k) {
    double m = measure_at(ref, nbar[k]);
    nonincreasing = nonincreasing && m <= prev + 1e-12;
    prev = m;
    if (k >= 3 && m > 0.0) {
      ks.push_back(static_cast<double>(k));
      logs.push_back(std::log10(m));
    }
  }
  RegressionFit decay;
  if (ks.size() >= 2) decay = fit_log_linear(ks, logs);
  bool decay_ok = ks.size() >= 2 && decay.slope < -0.05;

  // Fitted content bound C' * c^k * psi(nu^-Nbar(k)), evaluated in log10 so
  // the gauge factor survives far below double underflow.
  double log10_c = decay.slope;       // per-k decay, base 10
  double log10_C = decay.intercept - 3.0 * log10_c;  // anchored at k = 3
  const double log10_2 = std::log10(2.0);
  std::vector<double> bound_log10(depth_eff + 1, 0.0);
  bool bound_decreasing = true;
  for (int k = 1; k <= depth_eff; ++k) {
    double log2_t = -static_cast<double>(nbar[k]) * std::log2(static_cast<double>(nu));
    double log2_psi = log2_phi(g, log2_t) - log2_t;
    bound_log10[k] = log10_C + log10_c * k + log2_psi * log10_2;
    if (k >= 4) bound_decreasing = bound_decreasing && bound_log10[k] < bound_log10[k - 1];
  }

  // Radius monotonicity: larger R keeps every survivor of smaller R.
  bool radius_monotone = true;
  std::vector<size_t> order(radii.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return radii[a] < radii[b]; });
  for (size_t i = 1; i < order.size(); ++i)
    for (int n = 1; n <= n_max; ++n)
      radius_monotone = radius_monotone &&
                        measure_at(order[i - 1], n) <= measure_at(order[i], n) + 1e-9;

  // Upper-tail inequality, exact enumeration at a shallow level.
  int n_kol = std::min({14, n_max, horizon});
  json kol = json::array();
  bool kol_ok = true;
  for (double R : radii) {
    KolmogorovReport kr = kolmogorov_bound_check(s, R, n_kol);
    kol_ok = kol_ok && kr.holds;
    kol.push_back({{"R", R},
                   {"N", n_kol},
                   {"measure", kr.measure},
                   {"bound", kr.bound},
                   {"holds", kr.holds}});
  }

  json checks = json::array();
  checks.push_back(check_entry("survivor_measure_nonincreasing", nonincreasing,
                               std::numeric_limits<double>::infinity()));
  checks.push_back(
      check_entry("survivor_decay_slope", decay_ok, -0.05 - decay.slope));
  checks.push_back(check_entry("content_bound_decreasing", bound_decreasing,
                               depth_eff >= 4 ? bound_log10[depth_eff - 1] -
                                                    bound_log10[depth_eff]
                                              : std::numeric_limits<double>::infinity()));
  checks.push_back(check_entry("radius_monotonicity", radius_monotone,
                               std::numeric_limits<double>::infinity()));
  checks.push_back(check_entry("upper_tail_inequality", kol_ok,
                               std::numeric_limits<double>::infinity()));
  bool all_pass = true;
  for (const auto& c : checks) all_pass = all_pass && c["pass"].get<bool>();

  json summary;
  summary["command"] = "optimality";
  summary["seed"] = seed;
  summary["nu"] = nu;
  summary["horizon"] = horizon;
  summary["depth"] = depth_eff;
  summary["m0"] = run.m0;
  summary["c"] = run.c;
  summary["c_hat"] = run.c_hat;
  summary["c0"] = run.c0;
  summary["horizon_exhausted"] = run.horizon_exhausted;
  json blocks = json::array();
  for (const OptimalityBlock& b : run.blocks)
    blocks.push_back({{"l", b.l},
                      {"threshold", b.t_l},
                      {"Ntilde", b.Ntilde},
                      {"Nprime", b.Nprime},
                      {"N", b.N_l},
                      {"k", b.k_l},
                      {"skipped", b.skipped}});
  summary["blocks"] = blocks;
  summary["decay"] = {{"slope_log10_per_k", decay.slope}, {"r2", decay.r2}};
  summary["upper_tail"] = kol;
  summary["checks"] = checks;
  summary["all_pass"] = all_pass;

  std::ostringstream levels;
  levels << "k,Nbar";
  for (double R : radii) levels << ",measure_R" << fmt17(R);
  levels << ",bound_log10\n";
  for (int k = 1; k <= depth_eff; ++k) {
    levels << k << ',' << nbar[k];
    for (size_t ri = 0; ri < radii.size(); ++ri)
      levels << ',' << fmt17(measure_at(ri, nbar[k]));
    levels << ',' << fmt17(bound_log10[k]) << '\n';
  }
  std::ostringstream plot;
  for (size_t i = 0; i < ks.size(); ++i)
    plot << fmt17(ks[i]) << ' ' << fmt17(logs[i]) << '\n';

  write_text(out_dir, "levels.csv", levels.str());
  write_text(out_dir, "decay_loglog.dat", plot.str());
  write_text(out_dir, "summary.json", summary.dump(2) + "\n");
  return all_pass ? kExitOk : kExitRun;
}

// --- invariants ------------------------------------------------------------

int cmd_invariants(const json& cfg, const std::filesystem::path& out_dir,
                   const Overrides& ov) {
  require_keys(cfg, "config", {"blaschke", "trials", "seed"});
  if (!cfg.contains("blaschke")) throw ConfigError("config: invariants needs a blaschke");
  unsigned long seed = resolve_seed(cfg, ov.seed);
  BlaschkeProduct f = parse_blaschke(cfg["blaschke"]);
  int trials = static_cast<int>(get_integer_or(cfg, "config", "trials", 1000));
  InvariantReport rep;
  try {
    rep = run_invariant_suites(f, trials, seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  json checks = json::array();
  std::ostringstream csv;
  csv << "name,trials,worst_margin,pass\n";
  for (const InvariantCheck& c : rep.checks) {
    checks.push_back(check_entry(c.name, c.pass, c.worst_margin));
    csv << c.name << ',' << c.trials << ',' << fmt17(c.worst_margin) << ','
        << (c.pass ? 1 : 0) << '\n';
  }
  json summary;
  summary["command"] = "invariants";
  summary["seed"] = seed;
  summary["trials"] = trials;
  summary["expansion_constant"] = f.constants().K_min;
  summary["oscillation_constant"] = oscillation_constant(f);
  summary["quasiconstancy_constant"] = quasiconstancy_constant(f);
  summary["checks"] = checks;
  summary["all_pass"] = rep.all_pass();
  write_text(out_dir, "invariants.csv", csv.str());
  write_text(out_dir, "summary.json", summary.dump(2) + "\n");
  return rep.all_pass() ? kExitOk : kExitRun;
}

// --- dimension -------------------------------------------------------------

std::vector<Arc> middle_thirds_arcs(int depth) {
  std::vector<Arc> arcs = {Arc(0.0, 1.0 / 3.0)};
  // The set lives on [0, 1/3] of the circle so the full circle is never hit.
  for (int d = 0; d < depth; ++d) {
    std::vector<Arc> next;
    for (const Arc& a : arcs) {
      next.emplace_back(a.start.value, a.length / 3.0);
      next.emplace_back(a.start.value + 2.0 * a.length / 3.0, a.length / 3.0);
    }
    arcs = std::move(next);
  }
  return arcs;
}

int cmd_dimension(const json& cfg, const std::filesystem::path& out_dir,
                  const Overrides& ov) {
  require_keys(cfg, "config", {"input", "preset", "depth", "scales", "seed"});
  bool has_input = cfg.contains("input");
  bool has_preset = cfg.contains("preset");
  if (has_input == has_preset)
    throw ConfigError("config: dimension needs exactly one of \"input\", \"preset\"");

  DimensionEstimate dim;
  std::string source;
  if (has_preset) {
    std::string preset = cfg["preset"].get<std::string>();
    int depth = static_cast<int>(ov.depth.value_or(get_integer_or(cfg, "config", "depth", 10)));
    std::vector<Arc> arcs;
    std::vector<double> scales;
    if (preset == "full_circle") {
      arcs = {Arc(0.0, 1.0)};
      for (double p = 1.0; p <= 3.01; p += 0.5) scales.push_back(std::pow(10.0, -p));
    } else if (preset == "middle_thirds") {
      arcs = middle_thirds_arcs(depth);
      for (int k = 4; k <= 9; ++k) scales.push_back(std::pow(3.0, -k));
    } else {
      throw ConfigError("config: preset must be full_circle or middle_thirds");
    }
    if (cfg.contains("scales")) {
      if (!cfg["scales"].is_array()) throw ConfigError("config: \"scales\" must be an array");
      scales.clear();
      for (const auto& s : cfg["scales"]) scales.push_back(s.get<double>());
    }
    try {
      dim = box_dimension_estimate(arcs, scales);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    source = "preset:" + preset;
  } else {
    // Reload a construction dump: generation,index,parent,start,length_log2,
    // log2_weight columns are enough to rebuild the weighted tree.
    std::string path = cfg["input"].get<std::string>();
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read input \"" + path + "\"");
    std::string line;
    std::getline(in, line);  // header
    std::vector<ArcFamily> families;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(row, cell, ',')) cells.push_back(cell);
      if (cells.size() < 6) throw ConfigError("dimension input: malformed row");
      size_t gidx = std::stoul(cells[0]);
      while (families.size() <= gidx) {
        families.emplace_back();
        families.back().generation = static_cast<int>(families.size()) - 1;
      }
      ChildArc ca;
      ca.parent = std::stol(cells[2]);
      double start = std::stod(cells[3]);
      double len_log2 = std::stod(cells[4]);
      ca.log2_weight = std::stod(cells[5]);
      // Rebuild an arc whose log2 length matches the dump to double precision;
      // true deep lengths are not representable, only their logs are.
      long e = static_cast<long>(std::floor(len_log2));
      double frac = len_log2 - static_cast<double>(e);
      mpz_class mant(static_cast<long>(std::llround(std::ldexp(std::exp2(frac), 52))));
      long shift = 52 - e;
      ca.arc = ExactArc(Rational(start), Rational(mant) / Rational(pow_mpz(2, shift)));
      families[gidx].arcs.push_back(std::move(ca));
    }
    try {
      dim = construction_dimension_estimate(families);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    source = "input:" + path;
  }

  json summary;
  summary["command"] = "dimension";
  summary["source"] = source;
  summary["slope"] = dim.slope;
  summary["intercept"] = dim.intercept;
  summary["r2"] = dim.r2;
  std::ostringstream csv, plot;
  csv << "log10_inv_scale,log10_count\n";
  for (size_t i = 0; i < dim.log10_inv_scale.size(); ++i) {
    csv << fmt17(dim.log10_inv_scale[i]) << ',' << fmt17(dim.log10_count[i]) << '\n';
    plot << fmt17(dim.log10_inv_scale[i]) << ' ' << fmt17(dim.log10_count[i]) << '\n';
  }
  write_text(out_dir, "scales.csv", csv.str());
  write_text(out_dir, "boxcount_loglog.dat", plot.str());
  write_text(out_dir, "summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cantor-set construction and martingale optimality experiments"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  Overrides ov;
  unsigned long seed_opt = 0;
  long horizon_opt = 0, depth_opt = 0;
  double tol_opt = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_path, "output directory")->required();
    sub->add_option("--seed", seed_opt, "override the config seed")
        ->each([&](const std::string&) { ov.seed = seed_opt; });
    sub->add_option("--horizon", horizon_opt, "override the config horizon")
        ->each([&](const std::string&) { ov.horizon = horizon_opt; });
    sub->add_option("--depth", depth_opt, "override the config depth")
        ->each([&](const std::string&) { ov.depth = depth_opt; });
    sub->add_option("--tolerance", tol_opt, "override the config tolerance")
        ->each([&](const std::string&) { ov.tolerance = tol_opt; });
  };
  CLI::App* c_construct = app.add_subcommand("construct", "build a Cantor-type set");
  CLI::App* c_optimality = app.add_subcommand("optimality", "martingale optimality run");
  CLI::App* c_invariants = app.add_subcommand("invariants", "circle-map invariant suites");
  CLI::App* c_dimension = app.add_subcommand("dimension", "box-counting dimension");
  for (CLI::App* sub : {c_construct, c_optimality, c_invariants, c_dimension})
    add_common(sub);

  CLI11_PARSE(app, argc, argv);

  json cfg;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config \"" + config_path + "\"");
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }

  try {
    std::filesystem::path out_dir(out_path);
    if (app.got_subcommand(c_construct)) return cmd_construct(cfg, out_dir, ov);
    if (app.got_subcommand(c_optimality)) return cmd_optimality(cfg, out_dir, ov);
    if (app.got_subcommand(c_invariants)) return cmd_invariants(cfg, out_dir, ov);
    return cmd_dimension(cfg, out_dir, ov);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const GateError& e) {
    std::fprintf(stderr, "gate failure: %s\n", e.what());
    return kExitGate;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failure: %s\n", e.what());
    return kExitRun;
  }
}
