// Acceptance gate: one criterion per test case, each printing a single
// pass/fail line. Fixtures pinned here were frozen from the first verified
// run of the deterministic pipeline; every run must reproduce them exactly.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ibp/cantor.hpp"
#include "ibp/invariants.hpp"
#include "ibp/martingale.hpp"
#include "ibp/optimality.hpp"
#include "ibp/schedule.hpp"

using namespace ibp;

namespace {

struct CriterionLine {
  int id;
  const char* what;
  bool pass = true;
  void note(bool ok) { pass = pass && ok; }
  ~CriterionLine() {
    std::printf("criterion %2d: %s — %s\n", id, pass ? "PASS" : "FAIL", what);
    std::fflush(stdout);
  }
};

MartingaleState random_state(int nu, int horizon, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), z(0.0, 1.0);
  std::vector<Complex> a(horizon + 1, Complex(0, 0));
  for (int n = 1; n <= horizon; ++n)
    if (z(rng) > 0.3) a[n] = 0.7 * Complex(u(rng), u(rng));
  return MartingaleState::make(nu, a);
}

const OptimalityRun& acceptance_run() {
  static OptimalityRun run =
      generate_optimality_coefficients(GaugeFunction::power_log(1.0, 1.0), 2, 2000);
  return run;
}

// The pinned end-to-end construction shared by criteria 6, 7, and 9.
struct ConstructionFixture {
  BlaschkeProduct f = BlaschkeProduct::monomial(2);
  GaugeFunction gauge = GaugeFunction::power(0.5);
  ConstructionState state;
  ConstructionFixture() {
    StepConfig step;
    step.artur = {0.6, 0.05, 1, "pinned"};
    step.delta1 = 1.0 / 256;
    step.eta = step.delta1 / 4.0;
    step.gamma = 1.0 - step.eta;
    step.gamma1 = step.gamma;
    step.Q = 10;
    step.seed = 1;
    ConstructionConfig cfg;
    cfg.step = step;
    cfg.N = 4000;
    cfg.gate_vanish_tolerance = 0.2;
    OuterSequences outer =
        compute_outer_sequences(gauge, f, cfg.gate_c, cfg.gate_d, cfg.K, step.Q, cfg.N,
                                cfg.gate_horizon);
    CoefficientSchedule a = CoefficientSchedule::harmonic_blocks(outer);
    state = build_cantor_set(f, a, gauge, Complex(0.3, 0.1), 5, cfg);
  }
};

const ConstructionFixture& construction() {
  static ConstructionFixture fix;
  return fix;
}

}  // namespace

TEST_CASE("criterion 1: martingale exactness") {
  CriterionLine line{1, "variance Pythagoras and conditional-expectation identity"};
  MartingaleState s = random_state(2, 16, 2026);
  VarianceReport v = variance(s, 16);
  bool pyth = std::abs(v.sigma2 - v.increments_sum) <= 1e-9 * v.sigma2;
  line.note(pyth);
  CHECK(pyth);
  double worst = 0.0;
  for (int n = 1; n <= 16; ++n) {
    long cn = level_arc_count(2, n - 1);
    for (long i = 0; i < cn; ++i) {
      NuAdicArc par(2, n - 1, mpz_class(i));
      Complex mean = (martingale_value(s, n, par.child(0)) +
                      martingale_value(s, n, par.child(1))) /
                     2.0;
      worst = std::max(worst, std::abs(mean - martingale_value(s, n - 1, par)));
    }
  }
  line.note(worst <= 1e-12);
  CHECK(worst <= 1e-12);
}

TEST_CASE("criterion 2: quadrature oracle for arc averages") {
  CriterionLine line{2, "martingale values match adaptive quadrature on 100 arcs"};
  MartingaleState s = random_state(2, 12, 31);
  std::mt19937_64 rng(5150);
  auto F = [&s](double t) {
    Complex v(0, 0);
    for (int k : s.tau) v += s.coeff(k) * unit(std::pow(2.0, k) * t);
    return v;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int level = 3 + static_cast<int>(rng() % 10);
    std::uniform_int_distribution<long> pick(0, level_arc_count(2, level) - 1);
    NuAdicArc arc(2, level, mpz_class(pick(rng)));
    ExactArc e = arc.to_exact();
    double lo = to_double(e.start), len = to_double(e.length);
    double re =
        detail::integrate([&](double t) { return F(t).real(); }, lo, lo + len, 1e-13);
    double im =
        detail::integrate([&](double t) { return F(t).imag(); }, lo, lo + len, 1e-13);
    worst = std::max(worst,
                     std::abs(Complex(re, im) / len - martingale_value(s, level, arc)));
  }
  line.note(worst <= 1e-8);
  CHECK(worst <= 1e-8);
}

TEST_CASE("criterion 3: increment constant and gap decay") {
  CriterionLine line{3, "|dM| constant 2/pi and geometric deviation decay"};
  double c = sinc(std::numbers::pi / 2.0);
  bool cross = std::abs(c - std::abs(arc_average_z(Arc(0.0, 0.5))) * 1.0) <= 1e-12 &&
               std::abs(c - 2.0 / std::numbers::pi) <= 1e-12;
  line.note(cross);
  CHECK(cross);
  std::vector<double> gaps, logs;
  for (int m = 2; m <= 12; ++m) {
    std::vector<Complex> a(m + 2, Complex(0, 0));
    a[1] = Complex(1, 0);
    a[m + 1] = Complex(0.5, 0);
    MartingaleState s = MartingaleState::make(2, a);
    IncrementBoundReport rep = increment_bound_check(s, m + 1);
    REQUIRE(rep.gap == m - 1);  // zero coefficients strictly between 1 and m+1
    REQUIRE(rep.max_deviation > 0.0);
    gaps.push_back(static_cast<double>(m));
    logs.push_back(std::log(rep.max_deviation));
  }
  RegressionFit fit = fit_log_linear(gaps, logs);
  bool in_band = fit.slope >= -std::log(2.0) * 1.2 && fit.slope <= -std::log(2.0) * 0.8;
  line.note(in_band);
  CHECK(in_band);
}

TEST_CASE("criterion 4: survivor-measure decay on the generated run") {
  CriterionLine line{4, "survivor measures nonincreasing with log-linear decay"};
  const OptimalityRun& run = acceptance_run();
  MartingaleState s = run.state();
  int horizon = static_cast<int>(run.a.size()) - 1;
  std::vector<int> nbar(13, -1);
  for (int k = 1; k <= 12; ++k) nbar[k] = n_bar(s, static_cast<double>(k), horizon);
  REQUIRE(nbar[12] > 0);
  SurvivorEstimate est = estimate_survivor_measure(s, 1.0, nbar[12], 3);
  auto at = [&](int n) { return est.measure_by_level[n - 1]; };
  bool mono = true;
  for (int k = 2; k <= 12; ++k) mono = mono && at(nbar[k]) <= at(nbar[k - 1]) + 1e-12;
  line.note(mono);
  CHECK(mono);
  std::vector<double> ks, logs;
  for (int k = 3; k <= 12; ++k) {
    REQUIRE(at(nbar[k]) > 0.0);
    ks.push_back(static_cast<double>(k));
    logs.push_back(std::log10(at(nbar[k])));
  }
  RegressionFit fit = fit_log_linear(ks, logs);
  line.note(fit.slope < -0.05 && fit.r2 >= 0.8);
  CHECK(fit.slope < -0.05);
  CHECK(fit.r2 >= 0.8);
}

TEST_CASE("criterion 5: upper-tail inequality at every checked pair") {
  CriterionLine line{5, "survivor measure bounded by (R + K)^2 / sigma^2"};
  MartingaleState s = acceptance_run().state();
  for (double R : {0.5, 1.0, 2.0})
    for (int N : {8, 12, 14}) {
      KolmogorovReport rep = kolmogorov_bound_check(s, R, N);
      line.note(rep.holds);
      CHECK(rep.holds);
    }
}

TEST_CASE("criterion 6: five-generation construction suite") {
  CriterionLine line{6, "per-generation inequalities and pinned target distances"};
  const ConstructionState& st = construction().state;
  REQUIRE(st.generations.size() == 5);
  for (size_t g = 1; g < st.families.size(); ++g)
    for (const StepDiagnostics& d : st.families[g].parent_diagnostics) {
      bool size_ok = d.image_lo >= d.eta - 1e-15 && d.image_hi <= 4.0 * d.eta + 1e-15;
      bool cover_ok = d.covering_ratio >= d.covering_floor;
      bool growth_ok = d.log2_growth_max <= d.log2_growth_bound + 1e-9;
      bool floor_ok = d.min_real_part >= d.real_floor - 1e-12;
      line.note(size_ok && cover_ok && growth_ok && floor_ok);
      CHECK(size_ok);
      CHECK(cover_ok);
      CHECK(growth_ok);
      CHECK(floor_ok);
    }
  // Long-block masses vanish at the examined horizon (the gate's surrogate).
  line.note(st.gate.long_blocks_vanish.pass);
  CHECK(st.gate.long_blocks_vanish.pass);
  for (size_t i = 2; i < st.generations.size(); ++i) {
    bool dec = st.generations[i].max_d < st.generations[i - 1].max_d;
    line.note(dec);
    CHECK(dec);
  }
  // Regression fixture: the terminal max-branch distance of the pinned run.
  double d5 = st.generations.back().max_d;
  bool pinned = std::abs(d5 - 0.099569934085272399) <= 1e-9;
  line.note(pinned);
  CHECK_THAT(d5, Catch::Matchers::WithinAbs(0.099569934085272399, 1e-9));
}

TEST_CASE("criterion 7: Frostman measure on the pinned construction") {
  CriterionLine line{7, "mass conservation, growth bound, pinned probe ratios"};
  const ConstructionFixture& fix = construction();
  FrostmanMeasure fm = frostman_measure(fix.state.families, fix.gauge, 1000, 1);
  line.note(fm.report.conservation_error_max <= 1e-12);
  CHECK(fm.report.conservation_error_max <= 1e-12);
  line.note(fm.report.limit_growth_ok && fm.report.violation.empty());
  CHECK(fm.report.limit_growth_ok);
  CHECK(fm.report.violation.empty());
  bool finite = std::isfinite(fm.report.ratio_max_log2) &&
                std::isfinite(fm.report.probe_ratio_max_log2) &&
                fm.report.probes == 1000;
  line.note(finite);
  CHECK(finite);
  // Pinned fixtures from the first verified run.
  line.note(std::abs(fm.report.ratio_max_log2 - -11.871196803644278) <= 1e-6);
  CHECK_THAT(fm.report.ratio_max_log2,
             Catch::Matchers::WithinAbs(-11.871196803644278, 1e-6));
  line.note(std::abs(fm.report.probe_ratio_max_log2 - 19997.726705056204) <= 1e-6);
  CHECK_THAT(fm.report.probe_ratio_max_log2,
             Catch::Matchers::WithinAbs(19997.726705056204, 1e-6));
}

TEST_CASE("criterion 8: circle-map invariant suites") {
  CriterionLine line{8, "expansion, oscillation, quasi-constancy, Schwarz: 0 failures"};
  std::vector<BlaschkeProduct> maps = {
      BlaschkeProduct::monomial(2), BlaschkeProduct::monomial(3),
      BlaschkeProduct(0.0, 1, {DiskPoint(0.5, 0.0)})};
  for (const BlaschkeProduct& f : maps) {
    InvariantReport rep = run_invariant_suites(f, 1000, 17);
    line.note(rep.all_pass());
    CHECK(rep.all_pass());
    for (const InvariantCheck& c : rep.checks) CHECK(c.trials == 1000);
  }
}

TEST_CASE("criterion 9: box-dimension sanity") {
  CriterionLine line{9, "circle ~1, middle-thirds ~0.631, construction >= 0.4"};
  std::vector<double> decades;
  for (double p = 1.0; p <= 3.01; p += 0.5) decades.push_back(std::pow(10.0, -p));
  DimensionEstimate circle = box_dimension_estimate({Arc(0.0, 1.0)}, decades);
  line.note(std::abs(circle.slope - 1.0) <= 0.05);
  CHECK_THAT(circle.slope, Catch::Matchers::WithinAbs(1.0, 0.05));

  std::vector<Arc> thirds = {Arc(0.0, 1.0 / 3.0)};
  for (int d = 0; d < 10; ++d) {
    std::vector<Arc> next;
    for (const Arc& a : thirds) {
      next.emplace_back(a.start.value, a.length / 3.0);
      next.emplace_back(a.start.value + 2.0 * a.length / 3.0, a.length / 3.0);
    }
    thirds = std::move(next);
  }
  std::vector<double> tscales;
  for (int k = 4; k <= 9; ++k) tscales.push_back(std::pow(3.0, -k));
  DimensionEstimate cantor = box_dimension_estimate(thirds, tscales);
  line.note(std::abs(cantor.slope - 0.631) <= 0.05);
  CHECK_THAT(cantor.slope, Catch::Matchers::WithinAbs(0.631, 0.05));

  DimensionEstimate built = construction_dimension_estimate(construction().state.families);
  line.note(built.slope >= 0.4);
  CHECK(built.slope >= 0.4);
}

TEST_CASE("criterion 10: byte-identical reruns of every command") {
  CriterionLine line{10, "identical config and seed reproduce identical artifacts"};
  namespace fs = std::filesystem;
  fs::path base = fs::temp_directory_path() / "ibp_acceptance";
  fs::remove_all(base);
  fs::create_directories(base);
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream(base / name) << body;
  };
  write("construct.json", R"({
    "blaschke": {"origin_multiplicity": 2},
    "gauge": {"kind": "power", "s": 0.5},
    "schedule": {"kind": "harmonic_blocks"},
    "target": {"re": 0.3, "im": 0.1},
    "depth": 2, "horizon": 4000, "tolerance": 0.2, "seed": 1,
    "constants": {"epsilon": 0.6, "c": 0.05, "d": 1, "delta1": 0.00390625, "Q": 10}
  })");
  write("optimality.json", R"({
    "gauge": {"kind": "power_log", "s": 1.0, "p": 1.0},
    "nu": 2, "horizon": 1200, "depth": 8, "seed": 3
  })");
  write("invariants.json", R"({
    "blaschke": {"origin_multiplicity": 2}, "trials": 300, "seed": 11
  })");
  write("dimension.json", R"({"preset": "middle_thirds", "depth": 10})");

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  struct Cmd {
    const char* command;
    const char* config;
    std::vector<const char*> artifacts;
  };
  std::vector<Cmd> cmds = {
      {"construct", "construct.json", {"arcs.csv", "generations.csv", "summary.json"}},
      {"optimality", "optimality.json", {"levels.csv", "decay_loglog.dat", "summary.json"}},
      {"invariants", "invariants.json", {"invariants.csv", "summary.json"}},
      {"dimension", "dimension.json", {"scales.csv", "boxcount_loglog.dat", "summary.json"}},
  };
  for (const Cmd& c : cmds) {
    for (const char* run : {"a", "b"}) {
      std::string cmd = std::string(IBP_CLI_PATH) + " " + c.command + " --config " +
                        (base / c.config).string() + " --out " +
                        (base / (std::string(c.command) + "_" + run)).string() +
                        " > /dev/null 2>&1";
      int rc = std::system(cmd.c_str());
      line.note(rc == 0);
      REQUIRE(rc == 0);
    }
    for (const char* art : c.artifacts) {
      std::string a = slurp(base / (std::string(c.command) + "_a") / art);
      std::string b = slurp(base / (std::string(c.command) + "_b") / art);
      bool same = !a.empty() && a == b;
      line.note(same);
      CHECK(same);
    }
  }
}
