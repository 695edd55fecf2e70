// runner.hpp -- orchestration: full runs, sweeps, plateau detection, figure
// recipes, conditional-density snapshots, CSV/metadata emission.
#pragma once

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "core.hpp"
#include "entanglement.hpp"
#include "propagate.hpp"
#include "slater.hpp"
#include "states.hpp"

namespace entdyn {

// ---------------------------------------------------------------------------
// Trace and plateau report
// ---------------------------------------------------------------------------

struct TraceRow {
  double t = 0.0;             // fs
  double entropy = 0.0;       // nats
  int slater_rank = 1;
  double norm = 0.0;
  double total_energy = 0.0;  // meV
  double coulomb_energy = 0.0;
};

struct EntropyTrace {
  std::vector<TraceRow> rows;
};

inline constexpr const char* kTraceHeader =
    "t_fs,entropy_nats,slater_rank,norm,total_energy_meV,coulomb_energy_meV";

inline std::string format_trace_row(const TraceRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g,%.17g,%.17g", r.t, r.entropy,
                r.slater_rank, r.norm, r.total_energy, r.coulomb_energy);
  return buf;
}

inline std::string trace_csv(const EntropyTrace& tr) {
  std::string s = std::string(kTraceHeader) + "\n";
  for (const TraceRow& r : tr.rows) s += format_trace_row(r) + "\n";
  return s;
}

inline EntropyTrace parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw std::runtime_error("trace CSV: bad header");
  EntropyTrace tr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRow r;
    if (std::sscanf(line.c_str(), "%lg,%lg,%d,%lg,%lg,%lg", &r.t, &r.entropy,
                    &r.slater_rank, &r.norm, &r.total_energy, &r.coulomb_energy) != 6)
      throw std::runtime_error("trace CSV: bad row: " + line);
    tr.rows.push_back(r);
  }
  return tr;
}

struct PlateauReport {
  double stationary_value = std::numeric_limits<double>::quiet_NaN();  // nats
  double onset_time = -1.0;  // fs, -1 if not converged
  double window = 0.0;       // fs
  bool converged = false;
};

// Trailing-window criterion: the trace has converged when the entropy spread
// (max - min) over the last `window` fs is at most `tol`.  The stationary
// value is the window mean; the onset is the earliest time from which the
// entropy stays within tol of the stationary value.  Pure function of the
// trace: rerunning detection on a stored trace reproduces the report.
inline PlateauReport detect_plateau(const EntropyTrace& tr, double window, double tol) {
  PlateauReport rep;
  rep.window = window;
  if (tr.rows.size() < 3) return rep;
  double t_last = tr.rows.back().t;
  size_t first = tr.rows.size();
  double emin = 0, emax = 0, esum = 0;
  size_t count = 0;
  for (size_t i = tr.rows.size(); i-- > 0;) {
    if (tr.rows[i].t < t_last - window - 1e-9) break;
    first = i;
    double e = tr.rows[i].entropy;
    if (count == 0) { emin = emax = e; }
    emin = std::min(emin, e);
    emax = std::max(emax, e);
    esum += e;
    count++;
  }
  if (count < 3) return rep;
  rep.stationary_value = esum / (double)count;
  rep.converged = (emax - emin) <= tol;
  if (rep.converged) {
    size_t onset = first;
    while (onset > 0 && std::abs(tr.rows[onset - 1].entropy - rep.stationary_value) <= tol)
      onset--;
    rep.onset_time = tr.rows[onset].t;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

namespace detail {

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Full pipeline: states -> propagate -> slater -> entanglement at each
// entropy stride, trace written incrementally, checkpoints optional.
// Entropy evaluations run on a small async pipeline behind propagation;
// rows are committed in time order, so outputs are deterministic.
// ---------------------------------------------------------------------------

struct RunResult {
  SimulationConfig config;
  EntropyTrace trace;
  PlateauReport plateau;
};

namespace detail {

// contract thresholds for a running simulation
inline constexpr double kNormDriftTol = 1e-8;
inline constexpr double kBoundaryTol = 1e-6;

struct TraceWriter {
  std::ofstream out;
  bool enabled = false;

  void open(const std::string& path) {
    out.open(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open trace for writing: " + path);
    out << kTraceHeader << "\n";
    out.flush();
    enabled = true;
  }
  void row(const TraceRow& r) {
    if (!enabled) return;
    out << format_trace_row(r) << "\n";
    out.flush();
  }
};

template <class Task>
class EvalPipeline {
 public:
  EvalPipeline(size_t depth, EntropyTrace& trace, TraceWriter& writer)
      : depth_(depth), trace_(trace), writer_(writer) {}

  void submit(Task task) {
    inflight_.push_back(std::async(std::launch::async, std::move(task)));
    while (inflight_.size() > depth_) drain_one();
  }
  void drain_all() {
    while (!inflight_.empty()) drain_one();
  }

 private:
  void drain_one() {
    TraceRow r = inflight_.front().get();  // rethrows pipeline failures in order
    inflight_.pop_front();
    if (!trace_.rows.empty() && r.t <= trace_.rows.back().t)
      throw std::logic_error("trace rows out of order");
    trace_.rows.push_back(r);
    writer_.row(r);
  }

  size_t depth_;
  std::deque<std::future<TraceRow>> inflight_;
  EntropyTrace& trace_;
  TraceWriter& writer_;
};

inline SpinConfig trace_spin(const SimulationConfig& cfg) { return cfg.spin; }

inline RunResult run_impl(const SimulationConfig& cfg, const std::string& out_dir,
                          const CheckpointData* resume) {
  cfg.validate();
  RunResult result;
  result.config = cfg;

  namespace fs = std::filesystem;
  std::string prefix;
  TraceWriter writer;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    prefix = (fs::path(out_dir) / cfg.output_prefix).string();
    write_text_file(prefix + "_metadata.txt", serialize_config(cfg));
    writer.open(prefix + "_trace.csv");
  }

  int64_t total_steps = (int64_t)std::llround(std::ceil(cfg.t_end / cfg.dt - 1e-9));
  if (total_steps < 0) total_steps = 0;
  int64_t start_step = resume ? resume->step : 0;
  if (start_step > total_steps)
    throw std::invalid_argument("resume: checkpoint step is beyond t_end_fs");

  auto checkpoint_due = [&](int64_t step) {
    return cfg.checkpoint_stride > 0 && !prefix.empty() &&
           (step == total_steps || (step > start_step && (step - start_step) %
                                                             cfg.checkpoint_stride == 0));
  };
  auto eval_due = [&](int64_t step) {
    return step == total_steps || step % cfg.entropy_stride == 0;
  };

  if (cfg.geometry == Geometry::wires1d) {
    auto prop = std::make_shared<PairPropagator1D>(cfg);
    Pair1D state;
    if (resume) {
      if (resume->arrays.size() != 1 || resume->arrays[0].rows() != cfg.grid1.n ||
          resume->arrays[0].cols() != cfg.grid1.n)
        throw std::runtime_error("resume: checkpoint arrays do not match a 1D run");
      state = Pair1D{cfg.grid1, resume->arrays[0]};
    } else {
      state = make_initial_pair(cfg);
    }

    SpinConfig spin = cfg.spin;
    Grid1D grid = cfg.grid1;
    double dt = cfg.dt;
    auto analyze = [prop, spin, grid, dt](MatC amp, int64_t step) -> TraceRow {
      Pair1D snap{grid, std::move(amp)};
      TraceRow r;
      r.t = (double)step * dt;
      r.norm = std::sqrt(norm2(snap));
      // unitarity is checked on the uniform-weight sum, the exact invariant of
      // the Cayley sweeps; mass reaching the walls (which lowers the trapezoid
      // norm first) is diagnosed by the boundary check below instead
      double plain = std::sqrt(grid.spacing * grid.spacing * snap.amp.squaredNorm());
      if (std::abs(plain - 1.0) > kNormDriftTol)
        throw std::runtime_error("norm drift contract violated at step " +
                                 std::to_string(step) + ": norm = " + std::to_string(plain));
      double bp = boundary_probability(snap);
      if (bp > kBoundaryTol)
        throw std::runtime_error("boundary probability " + std::to_string(bp) +
                                 " exceeds 1e-6 at step " + std::to_string(step) +
                                 " (domain too small for this configuration)");
      r.total_energy = prop->total_energy(snap);
      r.coulomb_energy = prop->coulomb_energy(snap);
      EntropyResult er = analyze_w(assemble_w(symmetrize_blocks(snap.amp), spin));
      r.entropy = er.entropy;
      r.slater_rank = er.slater_rank;
      return r;
    };

    EvalPipeline<std::function<TraceRow()>> pipe(2, result.trace, writer);
    for (int64_t step = start_step;; step++) {
      if (eval_due(step))
        pipe.submit([analyze, amp = state.amp, step] { return analyze(amp, step); });
      if (checkpoint_due(step))
        write_checkpoint(prefix + "_checkpoint.bin", cfg, step, {&state.amp});
      if (step == total_steps) break;
      prop->step(state);
    }
    pipe.drain_all();
  } else {
    auto prop = std::make_shared<TrapPropagator2D>(cfg);
    Factorized2D state;
    Grid2D gcm = cm_grid(cfg.grid2), grel = rel_grid(cfg.grid2);
    if (resume) {
      if (resume->arrays.size() != 2 || resume->arrays[0].rows() != gcm.nx() ||
          resume->arrays[0].cols() != gcm.ny() || resume->arrays[1].rows() != grel.nx() ||
          resume->arrays[1].cols() != grel.ny())
        throw std::runtime_error("resume: checkpoint arrays do not match a 2D run");
      state = Factorized2D{Field2D{gcm, resume->arrays[0]}, Field2D{grel, resume->arrays[1]}};
    } else {
      state = assemble_cm_2d(cfg);
    }

    SpinConfig spin = cfg.spin;
    Grid2D particle = cfg.grid2;
    double dt = cfg.dt;
    auto analyze = [prop, spin, particle, dt](Factorized2D snap, int64_t step) -> TraceRow {
      TraceRow r;
      r.t = (double)step * dt;
      r.norm = std::sqrt(norm2(snap));
      // same division of labor as the 1D branch: uniform-weight invariant for
      // unitarity, boundary check for wall contamination
      auto plain2 = [](const Field2D& f) {
        return f.grid.gx.spacing * f.grid.gy.spacing * f.amp.squaredNorm();
      };
      double plain = std::sqrt(plain2(snap.cm) * plain2(snap.rel));
      if (std::abs(plain - 1.0) > kNormDriftTol)
        throw std::runtime_error("norm drift contract violated at step " +
                                 std::to_string(step) + ": norm = " + std::to_string(plain));
      double bp = boundary_probability(snap);
      if (bp > kBoundaryTol)
        throw std::runtime_error("boundary probability " + std::to_string(bp) +
                                 " exceeds 1e-6 at step " + std::to_string(step) +
                                 " (packet reached the domain wall)");
      r.total_energy = prop->total_energy(snap);
      r.coulomb_energy = prop->coulomb_energy(snap);
      MatC phi = reconstruct_pair_2d(snap, particle);
      EntropyResult er = analyze_w(assemble_w_2d(phi, spin));
      r.entropy = er.entropy;
      r.slater_rank = er.slater_rank;
      return r;
    };

    // depth 1: the 2D analysis holds two dense N^2 x N^2 matrices
    EvalPipeline<std::function<TraceRow()>> pipe(1, result.trace, writer);
    for (int64_t step = start_step;; step++) {
      if (eval_due(step))
        pipe.submit([analyze, snap = state, step] { return analyze(snap, step); });
      if (checkpoint_due(step))
        write_checkpoint(prefix + "_checkpoint.bin", cfg, step,
                         {&state.cm.amp, &state.rel.amp});
      if (step == total_steps) break;
      prop->step(state);
    }
    pipe.drain_all();
  }

  result.plateau = detect_plateau(result.trace, cfg.plateau_window, cfg.plateau_tol);
  if (!prefix.empty()) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "stationary_entropy_nats,onset_time_fs,window_fs,converged\n"
                  "%.17g,%.17g,%.17g,%d\n",
                  result.plateau.stationary_value, result.plateau.onset_time,
                  result.plateau.window, result.plateau.converged ? 1 : 0);
    write_text_file(prefix + "_plateau.csv", buf);
  }
  return result;
}

}  // namespace detail

inline RunResult run(const SimulationConfig& cfg, const std::string& out_dir = "") {
  return detail::run_impl(cfg, out_dir, nullptr);
}

// Continue a checkpointed run to its configured t_end.  The stored state is
// bit-exact, time is reconstructed as step*dt, and evaluation steps follow
// the same stride arithmetic, so the resumed trace rows coincide with the
// uninterrupted run's rows.
inline RunResult resume_run(const std::string& checkpoint_path,
                            const std::string& out_dir = "") {
  CheckpointData cd = read_checkpoint(checkpoint_path);
  return detail::run_impl(cd.config, out_dir, &cd);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepEntry {
  double value = 0.0;
  PlateauReport plateau;
  bool ok = false;
  std::string error;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepEntry> entries;
  bool partial_failure = false;
};

// Axis-name and geometry applicability are value-independent, so they are
// validated once up front; a bad axis aborts the whole sweep rather than
// failing every value individually.
inline void validate_sweep_axis(const SimulationConfig& c, const std::string& axis) {
  if (axis == "d") {
    if (c.geometry != Geometry::wires1d)
      throw std::invalid_argument("sweep axis 'd' applies to wires1d runs only");
  } else if (axis == "sigma") {
    if (c.geometry != Geometry::wires1d)
      throw std::invalid_argument(
          "sweep axis 'sigma' applies to wires1d runs only (2D width is fixed by the trap)");
  } else if (axis != "kinetic_energy") {
    throw std::invalid_argument("unknown sweep axis '" + axis +
                                "' (expected d, sigma, or kinetic_energy)");
  }
}

inline SimulationConfig apply_sweep_axis(SimulationConfig c, const std::string& axis,
                                         double value) {
  validate_sweep_axis(c, axis);
  if (axis == "d") {
    c.d = value;
  } else if (axis == "sigma") {
    for (auto& p : c.packets) p.sigma = value;
  } else {
    for (auto& p : c.packets) p.kinetic_energy = value;
  }
  c.validate();
  return c;
}

inline std::string sweep_csv(const SweepResult& s) {
  std::string out = "value,stationary_entropy_nats,onset_time_fs,converged,error\n";
  for (const SweepEntry& e : s.entries) {
    char buf[256];
    std::string err = e.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,", e.value,
                  e.plateau.stationary_value, e.plateau.onset_time,
                  e.plateau.converged ? 1 : 0);
    out += buf + err + "\n";
  }
  return out;
}

// Independent runs, one worker per config up to the hardware concurrency;
// results are assembled in input order, so output does not depend on the
// execution schedule.  A failing run is recorded and the sweep continues.
inline SweepResult sweep(const SimulationConfig& base, const std::string& axis,
                         const std::vector<double>& values,
                         const std::string& out_dir = "") {
  if (values.size() < 2)
    throw std::invalid_argument("sweep: need at least 2 axis values");
  validate_sweep_axis(base, axis);
  SweepResult result;
  result.axis = axis;
  result.entries.resize(values.size());

  auto worker = [&](size_t i) {
    SweepEntry e;
    e.value = values[i];
    try {
      SimulationConfig c = apply_sweep_axis(base, axis, values[i]);
      c.output_prefix = base.output_prefix + "_" + axis + detail::fmt_g(values[i]);
      RunResult r = run(c, out_dir);
      e.plateau = r.plateau;
      e.ok = true;
    } catch (const std::exception& ex) {
      e.ok = false;
      e.error = ex.what();
    }
    return e;
  };

  size_t pool = std::max<size_t>(1, std::min<size_t>(std::thread::hardware_concurrency(),
                                                     values.size()));
  std::deque<std::pair<size_t, std::future<SweepEntry>>> inflight;
  for (size_t i = 0; i < values.size(); i++) {
    inflight.emplace_back(i, std::async(std::launch::async, worker, i));
    while (inflight.size() >= pool) {
      auto& [idx, fut] = inflight.front();
      result.entries[idx] = fut.get();
      inflight.pop_front();
    }
  }
  while (!inflight.empty()) {
    auto& [idx, fut] = inflight.front();
    result.entries[idx] = fut.get();
    inflight.pop_front();
  }

  for (const SweepEntry& e : result.entries)
    if (!e.ok) result.partial_failure = true;

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::string prefix = (fs::path(out_dir) / base.output_prefix).string();
    detail::write_text_file(prefix + "_sweep_" + axis + ".csv", sweep_csv(result));
    detail::write_text_file(prefix + "_sweep_" + axis + "_metadata.txt",
                            serialize_config(base));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Conditional density snapshots (2D)
// ---------------------------------------------------------------------------

inline cplx bilinear(const Field2D& f, double x, double y) {
  const Grid1D& gx = f.grid.gx;
  const Grid1D& gy = f.grid.gy;
  if (!gx.contains(x) || !gy.contains(y))
    throw std::invalid_argument("bilinear: point outside the grid");
  double fx = (x - gx.x_min) / gx.spacing, fy = (y - gy.x_min) / gy.spacing;
  int i0 = std::min((int)std::floor(fx), gx.n - 2);
  int j0 = std::min((int)std::floor(fy), gy.n - 2);
  double tx = fx - i0, ty = fy - j0;
  return (1 - tx) * (1 - ty) * f.amp(i0, j0) + tx * (1 - ty) * f.amp(i0 + 1, j0) +
         (1 - tx) * ty * f.amp(i0, j0 + 1) + tx * ty * f.amp(i0 + 1, j0 + 1);
}

// |Phi_A(r, R)|^2 over the particle grid for a pinned second electron at R,
// with Phi_A(r,R) = Phi(r,R) - Phi(R,r); normalized to unit maximum.
inline Eigen::MatrixXd snapshot_conditional_density(const Factorized2D& f,
                                                    const Grid2D& particle, double rx,
                                                    double ry) {
  if (!particle.gx.contains(rx) || !particle.gy.contains(ry))
    throw std::invalid_argument("snapshot: fixed point outside the grid");
  Eigen::MatrixXd out(particle.nx(), particle.ny());
  for (int j = 0; j < particle.ny(); j++)
    for (int i = 0; i < particle.nx(); i++) {
      double x = particle.x(i), y = particle.y(j);
      cplx cm = bilinear(f.cm, 0.5 * (x + rx), 0.5 * (y + ry));
      cplx fwd = bilinear(f.rel, x - rx, y - ry);
      cplx bwd = bilinear(f.rel, rx - x, ry - y);
      out(i, j) = std::norm(cm * (fwd - bwd));
    }
  double m = out.maxCoeff();
  if (m > 0.0) out /= m;
  return out;
}

inline double normalized_cross_correlation(const Eigen::MatrixXd& a,
                                           const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("normalized_cross_correlation: shape mismatch");
  double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0))
    throw std::invalid_argument("normalized_cross_correlation: zero field");
  return a.cwiseProduct(b).sum() / (na * nb);
}

inline std::string density_csv(const Grid2D& g, const Eigen::MatrixXd& d) {
  std::string out = "x_nm,y_nm,density\n";
  char buf[128];
  for (int j = 0; j < g.ny(); j++)
    for (int i = 0; i < g.nx(); i++) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.x(i), g.y(j), d(i, j));
      out += buf;
    }
  return out;
}

// Snapshot entry point for the CLI: load a 2D checkpoint, pin one electron.
inline void snapshot_from_checkpoint(const std::string& checkpoint_path, double rx,
                                     double ry, const std::string& out_dir) {
  CheckpointData cd = read_checkpoint(checkpoint_path);
  if (cd.config.geometry != Geometry::trap2d)
    throw std::invalid_argument("snapshot: checkpoint is not a 2D trap run");
  Grid2D gcm = cm_grid(cd.config.grid2), grel = rel_grid(cd.config.grid2);
  if (cd.arrays.size() != 2 || cd.arrays[0].rows() != gcm.nx() ||
      cd.arrays[0].cols() != gcm.ny() || cd.arrays[1].rows() != grel.nx() ||
      cd.arrays[1].cols() != grel.ny())
    throw std::runtime_error("snapshot: checkpoint arrays do not match a 2D run");
  Factorized2D state{Field2D{gcm, cd.arrays[0]}, Field2D{grel, cd.arrays[1]}};
  Eigen::MatrixXd d = snapshot_conditional_density(state, cd.config.grid2, rx, ry);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::string prefix = (fs::path(out_dir) / cd.config.output_prefix).string();
  std::string tag = "_snapshot_" + detail::fmt_g(rx) + "_" + detail::fmt_g(ry);
  detail::write_text_file(prefix + tag + ".csv", density_csv(cd.config.grid2, d));
  detail::write_text_file(prefix + tag + "_metadata.txt",
                          serialize_config(cd.config) + "fix_x_nm = " +
                              detail::fmt_g(rx) + "\nfix_y_nm = " + detail::fmt_g(ry) +
                              "\nstep = " + std::to_string(cd.step) + "\n");
}

// ---------------------------------------------------------------------------
// Figure recipes: named, fixed configurations emitting CSV bundles.
// desk scale = the default grids; paper scale doubles the grids and extends
// the 1D horizon (slower, closer to the published resolution).
// ---------------------------------------------------------------------------

inline SimulationConfig figure_base_1d(SpinConfig spin, const std::string& scale) {
  SimulationConfig c = default_wires1d();
  c.spin = spin;
  if (scale == "paper") {
    c.grid1 = Grid1D(1024, -766.5, 766.5);
    c.t_end = 2500.0;
  } else if (scale != "desk") {
    throw std::invalid_argument("figure scale must be desk or paper");
  }
  return c;
}

inline SimulationConfig figure_base_2d(const std::string& scale) {
  SimulationConfig c = default_trap2d();
  if (scale == "paper") {
    c.grid2 = Grid2D(64, 64, 0.0, 360.0, 0.0, 360.0);
  } else if (scale != "desk") {
    throw std::invalid_argument("figure scale must be desk or paper");
  }
  return c;
}

inline void reproduce_figure(const std::string& id, const std::string& scale,
                             const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  if (id == "fig2") {
    SimulationConfig c = figure_base_1d(SpinConfig::same_spin, scale);
    c.output_prefix = "fig2";
    run(c, out_dir);
    sweep(c, "d", {0.5, 1.0, 2.0, 5.0}, out_dir);
  } else if (id == "fig3") {
    SimulationConfig c = figure_base_1d(SpinConfig::opposite_nonfactorizable, scale);
    c.d = 1.0;
    c.output_prefix = "fig3";
    run(c, out_dir);
    sweep(c, "d", {0.25, 0.5, 1.0, 2.0, 4.0}, out_dir);
  } else if (id == "fig4") {
    SimulationConfig c = figure_base_1d(SpinConfig::same_spin, scale);
    c.output_prefix = "fig4";
    sweep(c, "sigma", {10.0, 20.0, 30.0}, out_dir);
  } else if (id == "fig5") {
    for (SpinConfig s : {SpinConfig::same_spin, SpinConfig::opposite_nonfactorizable,
                         SpinConfig::singlet, SpinConfig::triplet}) {
      SimulationConfig c = figure_base_1d(s, scale);
      c.output_prefix = std::string("fig5_") + to_string(s);
      run(c, out_dir);
    }
  } else if (id == "fig6") {
    SimulationConfig c = figure_base_2d(scale);
    c.output_prefix = "fig6";
    sweep(c, "kinetic_energy", {10.0, 20.0, 30.0}, out_dir);
  } else if (id == "fig7") {
    SimulationConfig c = figure_base_2d(scale);
    c.output_prefix = "fig7";
    c.checkpoint_stride = 1;  // final checkpoint of every pass
    RunResult full = run(c, out_dir);
    // minimum-entanglement state (typically t0) vs the post-plateau state
    double t_min = full.trace.rows.front().t;
    double e_min = full.trace.rows.front().entropy;
    for (const TraceRow& r : full.trace.rows)
      if (r.entropy < e_min) { e_min = r.entropy; t_min = r.t; }
    std::string full_ckpt =
        (fs::path(out_dir) / (c.output_prefix + "_checkpoint.bin")).string();
    SimulationConfig cmin = c;
    cmin.t_end = t_min;
    cmin.output_prefix = "fig7_tmin";
    run(cmin, out_dir);
    std::string min_ckpt =
        (fs::path(out_dir) / (cmin.output_prefix + "_checkpoint.bin")).string();
    double fixed[2][2] = {{100.0, 100.0}, {50.0, 150.0}};
    for (auto& p : fixed) {
      snapshot_from_checkpoint(min_ckpt, p[0], p[1], out_dir);
      snapshot_from_checkpoint(full_ckpt, p[0], p[1], out_dir);
    }
  } else {
    throw std::invalid_argument("unknown figure id '" + id +
                                "' (expected fig2..fig7)");
  }
}

}  // namespace entdyn
