// Command-line front end: run / sweep / figure / snapshot.
// Exit codes: 0 success, 1 contract violation (bad config, bad input,
// runtime contract breach), 2 sweep completed with partial failures.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "entdyn/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> parse_value_list(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t pos = 0;
    double v = std::stod(item, &pos);
    while (pos < item.size() && std::isspace((unsigned char)item[pos])) pos++;
    if (pos != item.size())
      throw std::invalid_argument("bad value in --values list: '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("--values list is empty");
  return values;
}

std::pair<double, double> parse_point(const std::string& s) {
  size_t comma = s.find(',');
  if (comma == std::string::npos)
    throw std::invalid_argument("--fix expects 'x,y' in nm, got '" + s + "'");
  size_t p1 = 0, p2 = 0;
  std::string xs = s.substr(0, comma), ys = s.substr(comma + 1);
  double x = std::stod(xs, &p1);
  double y = std::stod(ys, &p2);
  if (p1 != xs.size() || p2 != ys.size())
    throw std::invalid_argument("--fix expects 'x,y' in nm, got '" + s + "'");
  return {x, y};
}

}  // namespace

int main(int argc, char** argv) {
  entdyn::use_single_thread_blas();

  CLI::App app{"two-electron entanglement dynamics simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, axis, values_csv, figure_id, scale = "desk";
  std::string checkpoint_path, fix_point;

  CLI::App* cmd_run = app.add_subcommand("run", "propagate one configuration");
  cmd_run->add_option("--config", config_path, "flat key = value config file")->required();
  cmd_run->add_option("--out", out_dir, "output directory")->required();

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a family of configurations");
  cmd_sweep->add_option("--config", config_path, "base config file")->required();
  cmd_sweep->add_option("--axis", axis, "d | sigma | kinetic_energy")->required();
  cmd_sweep->add_option("--values", values_csv, "comma-separated axis values")->required();
  cmd_sweep->add_option("--out", out_dir, "output directory")->required();

  CLI::App* cmd_figure = app.add_subcommand("figure", "reproduce a named result bundle");
  cmd_figure->add_option("id", figure_id, "fig2 .. fig7")->required();
  cmd_figure->add_option("--scale", scale, "desk (default) or paper");
  cmd_figure->add_option("--out", out_dir, "output directory")->required();

  CLI::App* cmd_snapshot =
      app.add_subcommand("snapshot", "conditional density from a 2D checkpoint");
  cmd_snapshot->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  cmd_snapshot->add_option("--fix", fix_point, "pinned electron position 'x,y' in nm")
      ->required();
  cmd_snapshot->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      entdyn::SimulationConfig cfg = entdyn::parse_config(read_file(config_path));
      entdyn::RunResult r = entdyn::run(cfg, out_dir);
      std::printf("run complete: %zu trace rows, plateau %s (stationary %.6f nats)\n",
                  r.trace.rows.size(), r.plateau.converged ? "converged" : "not converged",
                  r.plateau.stationary_value);
    } else if (cmd_sweep->parsed()) {
      entdyn::SimulationConfig base = entdyn::parse_config(read_file(config_path));
      std::vector<double> values = parse_value_list(values_csv);
      entdyn::SweepResult s = entdyn::sweep(base, axis, values, out_dir);
      for (const entdyn::SweepEntry& e : s.entries) {
        if (e.ok)
          std::printf("%s = %g: stationary entropy %.6f nats%s\n", axis.c_str(), e.value,
                      e.plateau.stationary_value,
                      e.plateau.converged ? "" : " (no plateau)");
        else
          std::printf("%s = %g: FAILED: %s\n", axis.c_str(), e.value, e.error.c_str());
      }
      if (s.partial_failure) {
        std::fprintf(stderr, "sweep finished with partial failures\n");
        return 2;
      }
    } else if (cmd_figure->parsed()) {
      entdyn::reproduce_figure(figure_id, scale, out_dir);
      std::printf("figure %s written to %s\n", figure_id.c_str(), out_dir.c_str());
    } else if (cmd_snapshot->parsed()) {
      auto [x, y] = parse_point(fix_point);
      entdyn::snapshot_from_checkpoint(checkpoint_path, x, y, out_dir);
      std::printf("snapshot at (%g, %g) written to %s\n", x, y, out_dir.c_str());
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
