// End-to-end run orchestration: entropy traces, plateau detection, resume
// from checkpoints, parameter sweeps with partial-failure reporting, and
// conditional-density snapshots.
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "entdyn/runner.hpp"

using namespace entdyn;
namespace fs = std::filesystem;

namespace {
std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

// 30 fs of the two-wire problem on a small grid: fast but fully featured
SimulationConfig quick_wire_config() {
  SimulationConfig cfg = default_wires1d();
  cfg.grid1 = Grid1D(128, -190.5, 190.5);
  cfg.packets[0] = {-75.0, 0.0, 15.0, 50.0, +1.0, 0.0};
  cfg.packets[1] = {+75.0, 0.0, 15.0, 50.0, -1.0, 0.0};
  cfg.t_end = 30.0;
  cfg.entropy_stride = 50;
  cfg.output_prefix = "quick";
  return cfg;
}

EntropyTrace synthetic_trace(const std::vector<std::pair<double, double>>& pts) {
  EntropyTrace tr;
  for (auto [t, e] : pts) {
    TraceRow r;
    r.t = t;
    r.entropy = e;
    r.slater_rank = 1;
    r.norm = 1.0;
    r.total_energy = 100.0;
    r.coulomb_energy = 0.5;
    tr.rows.push_back(r);
  }
  return tr;
}
}  // namespace

TEST_CASE("plateau detection: convergence, onset, and failure modes") {
  EntropyTrace tr = synthetic_trace({{0, 0.70},
                                     {10, 0.90},
                                     {20, 1.05},
                                     {30, 1.0999},
                                     {40, 1.1001},
                                     {50, 1.1000},
                                     {60, 1.0998},
                                     {70, 1.1002},
                                     {80, 1.1000},
                                     {90, 1.0999},
                                     {100, 1.1001}});
  PlateauReport rep = detect_plateau(tr, 40.0, 1e-3);
  CHECK(rep.converged);
  CHECK(std::abs(rep.stationary_value - 1.1) < 1e-3);
  CHECK(rep.onset_time == 30.0);
  CHECK(rep.window == 40.0);

  // strictly rising trace never converges, but the window mean is reported
  EntropyTrace rising = synthetic_trace(
      {{0, 0.1}, {10, 0.2}, {20, 0.3}, {30, 0.4}, {40, 0.5}, {50, 0.6}});
  PlateauReport bad = detect_plateau(rising, 30.0, 1e-3);
  CHECK_FALSE(bad.converged);
  CHECK(bad.onset_time == -1.0);
  CHECK(std::abs(bad.stationary_value - 0.45) < 1e-12);

  // fewer than 3 rows in the window (or in total): no verdict
  PlateauReport tiny = detect_plateau(synthetic_trace({{0, 1.0}, {10, 1.0}}), 40.0, 1e-3);
  CHECK_FALSE(tiny.converged);
  CHECK(std::isnan(tiny.stationary_value));
  PlateauReport narrow = detect_plateau(tr, 10.0, 1e-3);
  CHECK_FALSE(narrow.converged);

  // a window covering the whole constant trace puts the onset at t = 0
  EntropyTrace flat = synthetic_trace({{0, 2.0}, {10, 2.0}, {20, 2.0}, {30, 2.0}});
  PlateauReport whole = detect_plateau(flat, 1e9, 1e-3);
  CHECK(whole.converged);
  CHECK(whole.onset_time == 0.0);
}

TEST_CASE("trace CSV round-trips exactly and detection is idempotent") {
  EntropyTrace tr = synthetic_trace({{0, constants::ln2}, {7.5, 0.7137}, {15, 1.0 / 3.0}});
  tr.rows[1].slater_rank = 3;
  tr.rows[2].norm = 0.99999999999999978;
  std::string csv = trace_csv(tr);
  CHECK(csv.rfind(kTraceHeader, 0) == 0);

  EntropyTrace back = parse_trace_csv(csv);
  REQUIRE(back.rows.size() == tr.rows.size());
  for (size_t i = 0; i < tr.rows.size(); i++) {
    CHECK(back.rows[i].t == tr.rows[i].t);
    CHECK(back.rows[i].entropy == tr.rows[i].entropy);
    CHECK(back.rows[i].slater_rank == tr.rows[i].slater_rank);
    CHECK(back.rows[i].norm == tr.rows[i].norm);
    CHECK(back.rows[i].total_energy == tr.rows[i].total_energy);
    CHECK(back.rows[i].coulomb_energy == tr.rows[i].coulomb_energy);
  }

  PlateauReport a = detect_plateau(tr, 10.0, 1e-2);
  PlateauReport b = detect_plateau(back, 10.0, 1e-2);
  CHECK(a.converged == b.converged);
  CHECK(((std::isnan(a.stationary_value) && std::isnan(b.stationary_value)) ||
         a.stationary_value == b.stationary_value));

  CHECK_THROWS_WITH(parse_trace_csv("wrong,header\n1,2,3,4,5,6\n"),
                    Catch::Matchers::ContainsSubstring("bad header"));
  CHECK_THROWS_WITH(parse_trace_csv(std::string(kTraceHeader) + "\n1,2,x,4,5,6\n"),
                    Catch::Matchers::ContainsSubstring("bad row"));
}

TEST_CASE("a short two-wire run produces the full output contract") {
  TempDir dir("entdyn_run_test");
  SimulationConfig cfg = quick_wire_config();
  RunResult res = run(cfg, dir.str());

  REQUIRE(res.trace.rows.size() == 7);  // steps 0,50,...,300
  for (size_t i = 0; i < res.trace.rows.size(); i++)
    CHECK(res.trace.rows[i].t == 5.0 * (double)i);

  const TraceRow& r0 = res.trace.rows.front();
  CHECK(std::abs(r0.entropy - constants::ln2) < 1e-9);  // disjoint product state
  CHECK(r0.slater_rank == 1);
  CHECK(std::abs(r0.norm - 1.0) < 1e-10);
  CHECK(std::abs(r0.coulomb_energy - 0.8205) < 0.02);  // ~123.07/150 meV

  std::string trace_text = read_file(dir.path / "quick_trace.csv");
  CHECK(trace_text.rfind(kTraceHeader, 0) == 0);
  EntropyTrace parsed = parse_trace_csv(trace_text);
  REQUIRE(parsed.rows.size() == res.trace.rows.size());
  for (size_t i = 0; i < parsed.rows.size(); i++)
    CHECK(parsed.rows[i].entropy == res.trace.rows[i].entropy);

  CHECK(read_file(dir.path / "quick_metadata.txt") == serialize_config(cfg));
  std::string plateau_text = read_file(dir.path / "quick_plateau.csv");
  CHECK(plateau_text.rfind("stationary_entropy_nats,onset_time_fs,window_fs,converged", 0) == 0);
}

TEST_CASE("repeated runs are byte-identical") {
  TempDir d1("entdyn_det_a"), d2("entdyn_det_b");
  SimulationConfig cfg = quick_wire_config();
  run(cfg, d1.str());
  run(cfg, d2.str());
  CHECK(read_file(d1.path / "quick_trace.csv") == read_file(d2.path / "quick_trace.csv"));
  CHECK(read_file(d1.path / "quick_plateau.csv") == read_file(d2.path / "quick_plateau.csv"));
}

TEST_CASE("resume from a mid-run checkpoint reproduces the trace") {
  TempDir dir("entdyn_resume_test");
  SimulationConfig cfg = quick_wire_config();
  RunResult ref = run(cfg, (dir.path / "ref").string());

  // evolve to step 150 by hand and store a checkpoint carrying the full t_end
  Pair1D state = make_initial_pair(cfg);
  PairPropagator1D prop(cfg);
  prop.step(state, 150);
  std::string ck = (dir.path / "mid.ck").string();
  write_checkpoint(ck, cfg, 150, {&state.amp});

  RunResult res = resume_run(ck, (dir.path / "res").string());
  REQUIRE(res.trace.rows.size() == 4);  // steps 150, 200, 250, 300
  for (const TraceRow& row : res.trace.rows) {
    bool matched = false;
    for (const TraceRow& rrow : ref.trace.rows)
      if (rrow.t == row.t) {
        matched = true;
        CHECK(std::abs(rrow.entropy - row.entropy) < 1e-12);
        CHECK(rrow.slater_rank == row.slater_rank);
        CHECK(std::abs(rrow.total_energy - row.total_energy) < 1e-12);
      }
    CHECK(matched);
  }

  // a checkpoint whose step lies beyond the configured horizon is rejected
  write_checkpoint(ck, cfg, 301, {&state.amp});
  CHECK_THROWS_WITH(resume_run(ck, ""), Catch::Matchers::ContainsSubstring("beyond t_end"));
}

TEST_CASE("contract violations abort the run with a diagnostic") {
  TempDir dir("entdyn_abort_test");
  SimulationConfig cfg = quick_wire_config();

  // denormalized resume state: the norm monitor trips at the first evaluation
  Pair1D state = make_initial_pair(cfg);
  MatC doubled = 2.0 * state.amp;
  std::string ck = (dir.path / "bad_norm.ck").string();
  write_checkpoint(ck, cfg, 0, {&doubled});
  CHECK_THROWS_WITH(resume_run(ck, ""), Catch::Matchers::ContainsSubstring("norm drift"));

  // packets aimed at the walls: the boundary monitor trips mid-run
  SimulationConfig tight = default_wires1d();
  tight.grid1 = Grid1D(128, -100.0, 100.0);
  tight.packets[0] = {-20.0, 0.0, 10.0, 50.0, +1.0, 0.0};
  tight.packets[1] = {+20.0, 0.0, 10.0, 50.0, -1.0, 0.0};
  tight.t_end = 500.0;
  tight.entropy_stride = 100;
  auto saved = warning_handler();
  warning_handler() = [](const std::string&) {};  // overlap advisory expected
  CHECK_THROWS_WITH(run(tight, ""), Catch::Matchers::ContainsSubstring("boundary probability"));
  warning_handler() = saved;
}

TEST_CASE("sweep axes modify the right fields and reject the wrong geometry") {
  SimulationConfig wires = quick_wire_config();
  SimulationConfig c = apply_sweep_axis(wires, "d", 2.0);
  CHECK(c.d == 2.0);
  c = apply_sweep_axis(wires, "sigma", 18.0);
  CHECK(c.packets[0].sigma == 18.0);
  CHECK(c.packets[1].sigma == 18.0);
  c = apply_sweep_axis(wires, "kinetic_energy", 30.0);
  CHECK(c.packets[0].kinetic_energy == 30.0);

  SimulationConfig trap = default_trap2d();
  CHECK_THROWS_WITH(apply_sweep_axis(trap, "sigma", 18.0),
                    Catch::Matchers::ContainsSubstring("wires1d"));
  CHECK_THROWS_WITH(apply_sweep_axis(trap, "d", 1.0),
                    Catch::Matchers::ContainsSubstring("wires1d"));
  CHECK_THROWS_WITH(apply_sweep_axis(wires, "softening", 1.0),
                    Catch::Matchers::ContainsSubstring("unknown sweep axis"));
  CHECK_THROWS_AS(apply_sweep_axis(wires, "d", -1.0), std::invalid_argument);
}

TEST_CASE("a sweep records failed values and keeps going") {
  TempDir dir("entdyn_sweep_test");
  SimulationConfig cfg = quick_wire_config();
  CHECK_THROWS_WITH(sweep(cfg, "d", {0.5}, ""),
                    Catch::Matchers::ContainsSubstring("at least 2"));

  SweepResult res = sweep(cfg, "d", {0.5, -1.0}, dir.str());
  CHECK(res.partial_failure);
  REQUIRE(res.entries.size() == 2);
  CHECK(res.entries[0].ok);
  CHECK(res.entries[0].error.empty());
  CHECK_FALSE(res.entries[1].ok);
  CHECK_FALSE(res.entries[1].error.empty());

  std::string csv = read_file(dir.path / "quick_sweep_d.csv");
  CHECK(csv.rfind("value,stationary_entropy_nats,onset_time_fs,converged,error", 0) == 0);
  size_t lines = (size_t)std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 3);  // header + one row per value, errors sanitized inline
  CHECK(read_file(dir.path / "quick_sweep_d_metadata.txt") == serialize_config(cfg));
  CHECK(fs::exists(dir.path / "quick_d0.5_trace.csv"));  // per-value artifacts
}

TEST_CASE("bilinear sampling is exact on bilinear fields") {
  Grid2D g(9, 9, 0.0, 8.0, -4.0, 4.0);
  Field2D f;
  f.grid = g;
  f.amp.resize(9, 9);
  for (int j = 0; j < 9; j++)
    for (int i = 0; i < 9; i++)
      f.amp(i, j) = cplx(2.0 * g.x(i) - g.y(j) + 0.25 * g.x(i) * g.y(j), 1.0);
  for (auto [x, y] : {std::pair{0.37, -3.1}, {7.99, 3.99}, {4.0, 0.0}, {0.0, -4.0}}) {
    cplx v = bilinear(f, x, y);
    CHECK(std::abs(v - cplx(2.0 * x - y + 0.25 * x * y, 1.0)) < 1e-12);
  }
  CHECK_THROWS_AS(bilinear(f, 8.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bilinear(f, 4.0, -4.5), std::invalid_argument);
}

TEST_CASE("conditional density: exchange zero, unit peak, grid guard") {
  auto saved = warning_handler();
  warning_handler() = [](const std::string&) {};
  // wide trap so the matched packet stays resolvable on the 16x16 toy grid
  SimulationConfig cfg = default_trap2d();
  cfg.grid2 = Grid2D(16, 16, 0.0, 360.0, 0.0, 360.0);
  cfg.hbar_omega = 0.2;
  double m = constants::electron_mass * cfg.material.effective_mass;
  double omega = cfg.hbar_omega / constants::hbar;
  cfg.packets[0].sigma = std::sqrt(constants::hbar / (2.0 * m * omega));
  Factorized2D f = assemble_cm_2d(cfg);
  warning_handler() = saved;

  Eigen::MatrixXd d = snapshot_conditional_density(f, cfg.grid2, 120.0, 240.0);
  CHECK(d.maxCoeff() == 1.0);
  CHECK(d.minCoeff() >= 0.0);
  // fixing the second electron at a node: the density vanishes there exactly
  CHECK(d(5, 10) == 0.0);  // x=120 -> i=5, y=240 -> j=10 on the 24 nm lattice

  CHECK_THROWS_AS(snapshot_conditional_density(f, cfg.grid2, -1.0, 10.0),
                  std::invalid_argument);
}

TEST_CASE("normalized cross-correlation bounds and guards") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(6, 6).cwiseAbs();
  CHECK(std::abs(normalized_cross_correlation(a, a) - 1.0) < 1e-12);
  CHECK(std::abs(normalized_cross_correlation(a, 3.7 * a) - 1.0) < 1e-12);

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 6), c = Eigen::MatrixXd::Zero(6, 6);
  b(0, 0) = 1.0;
  c(5, 5) = 1.0;
  CHECK(normalized_cross_correlation(b, c) == 0.0);
  CHECK_THROWS_AS(normalized_cross_correlation(a, Eigen::MatrixXd::Ones(5, 6)),
                  std::invalid_argument);
  CHECK_THROWS_AS(normalized_cross_correlation(b, Eigen::MatrixXd::Zero(6, 6)),
                  std::invalid_argument);
}

TEST_CASE("short 2D trap run, checkpoint, and snapshot files") {
  TempDir dir("entdyn_run2d_test");
  SimulationConfig cfg = default_trap2d();
  cfg.t_end = 1.0;  // 4 steps of dt = 0.25
  cfg.entropy_stride = 4;
  cfg.checkpoint_stride = 4;
  cfg.output_prefix = "trap";
  RunResult res = run(cfg, dir.str());

  REQUIRE(res.trace.rows.size() == 2);  // steps 0 and 4
  CHECK(std::abs(res.trace.rows[0].entropy - constants::ln2) < 1e-9);
  CHECK(res.trace.rows[0].slater_rank == 1);
  CHECK(std::abs(res.trace.rows[0].norm - 1.0) < 1e-10);
  // initial Coulomb expectation: separation 60 nm -> 111.6/60 ~ 1.9 meV,
  // pushed up by the convexity of 1/r over the packet spread
  CHECK(std::abs(res.trace.rows[0].coulomb_energy - 2.0) < 0.3);

  std::string ck = (dir.path / "trap_checkpoint.bin").string();
  REQUIRE(fs::exists(ck));
  snapshot_from_checkpoint(ck, 100.0, 100.0, dir.str());
  CHECK(fs::exists(dir.path / "trap_snapshot_100_100.csv"));
  std::string meta = read_file(dir.path / "trap_snapshot_100_100_metadata.txt");
  CHECK(meta.find("fix_x_nm = 100") != std::string::npos);
  CHECK(meta.find("step = 4") != std::string::npos);

  std::string csv = read_file(dir.path / "trap_snapshot_100_100.csv");
  CHECK(csv.rfind("x_nm,y_nm,density", 0) == 0);
  CHECK((size_t)std::count(csv.begin(), csv.end(), '\n') == 1 + 48u * 48u);

  // a 1D checkpoint is not a valid snapshot source
  SimulationConfig wires = quick_wire_config();
  Pair1D p = make_initial_pair(wires);
  std::string wck = (dir.path / "wire.ck").string();
  write_checkpoint(wck, wires, 0, {&p.amp});
  CHECK_THROWS_WITH(snapshot_from_checkpoint(wck, 10.0, 10.0, dir.str()),
                    Catch::Matchers::ContainsSubstring("not a 2D trap run"));
}
