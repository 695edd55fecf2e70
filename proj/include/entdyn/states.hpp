// states.hpp -- single-particle fields and initial two-particle assemblies.
#pragma once

#include <cmath>
#include <complex>

#include "core.hpp"
#include "linalg.hpp"

namespace entdyn {

struct Field1D {
  Grid1D grid;
  VecC amp;
};

struct Field2D {
  Grid2D grid;
  MatC amp;  // amp(i, j) at (x_i, y_j)
};

// Two-particle 1D amplitude Phi(x_a, x_b) sampled on grid x grid;
// amp(l, m) = Phi(x_l, x_m), row index = particle a.
struct Pair1D {
  Grid1D grid;
  MatC amp;
};

// Two-particle 2D state kept in factorized form cm((r_a+r_b)/2) * rel(r_a-r_b).
// The factorization is exact for matched Gaussian widths because the Coulomb
// term depends on the relative coordinate only.
struct Factorized2D {
  Field2D cm;
  Field2D rel;
};

inline double trap_weight(const Grid1D& g, int i) {
  return (i == 0 || i == g.n - 1) ? 0.5 * g.spacing : g.spacing;
}

inline double norm2(const Field1D& f) {
  double s = 0.0;
  for (int i = 0; i < f.grid.n; i++) s += trap_weight(f.grid, i) * std::norm(f.amp[i]);
  return s;
}

inline double norm2(const Field2D& f) {
  double s = 0.0;
  for (int j = 0; j < f.grid.ny(); j++) {
    double wj = trap_weight(f.grid.gy, j);
    for (int i = 0; i < f.grid.nx(); i++)
      s += wj * trap_weight(f.grid.gx, i) * std::norm(f.amp(i, j));
  }
  return s;
}

inline double norm2(const Pair1D& p) {
  double s = 0.0;
  for (int m = 0; m < p.grid.n; m++) {
    double wm = trap_weight(p.grid, m);
    for (int l = 0; l < p.grid.n; l++)
      s += wm * trap_weight(p.grid, l) * std::norm(p.amp(l, m));
  }
  return s;
}

inline double norm2(const Factorized2D& f) { return norm2(f.cm) * norm2(f.rel); }

// Probability mass in the cells adjacent to the domain wall; a cheap leak
// monitor for the hard-wall boundary conditions.
inline double boundary_probability(const Pair1D& p) {
  double s = 0.0;
  int n = p.grid.n;
  for (int m = 0; m < n; m++) {
    double wm = trap_weight(p.grid, m);
    for (int l : {0, n - 1}) s += trap_weight(p.grid, l) * wm * std::norm(p.amp(l, m));
  }
  for (int l = 1; l < n - 1; l++) {
    double wl = trap_weight(p.grid, l);
    for (int m : {0, n - 1}) s += wl * trap_weight(p.grid, m) * std::norm(p.amp(l, m));
  }
  return s;
}

inline double boundary_probability(const Field2D& f) {
  double s = 0.0;
  int nx = f.grid.nx(), ny = f.grid.ny();
  for (int j = 0; j < ny; j++) {
    double wj = trap_weight(f.grid.gy, j);
    for (int i : {0, nx - 1})
      s += trap_weight(f.grid.gx, i) * wj * std::norm(f.amp(i, j));
  }
  for (int i = 1; i < nx - 1; i++) {
    double wi = trap_weight(f.grid.gx, i);
    for (int j : {0, ny - 1})
      s += wi * trap_weight(f.grid.gy, j) * std::norm(f.amp(i, j));
  }
  return s;
}

inline double boundary_probability(const Factorized2D& f) {
  return boundary_probability(f.cm) + boundary_probability(f.rel);
}

template <class F>
inline void normalize(F& f) {
  double n = std::sqrt(norm2(f));
  if (!(n > 0.0)) throw std::runtime_error("normalize: zero-norm field");
  f.amp /= n;
}

inline void normalize(Factorized2D& f) {
  normalize(f.cm);
  normalize(f.rel);
}

// Gaussian packet, |psi|^2 has standard deviation sigma:
//   psi(x) ~ exp(-(x-x0)^2/(4 sigma^2) + i k x),  k = sqrt(E_k / kinetic_scale)
inline Field1D gaussian_1d(const Grid1D& g, const WavepacketSpec& spec,
                           const Material& mat) {
  if (spec.sigma < 2.0 * g.spacing)
    throw std::invalid_argument("gaussian_1d: sigma < 2 grid spacings, packet unresolved");
  if (spec.center_x - 5.0 * spec.sigma < g.x_min ||
      spec.center_x + 5.0 * spec.sigma > g.x_max)
    warn("gaussian_1d: packet closer than 5 sigma to a domain edge");
  double k = std::sqrt(spec.kinetic_energy / kinetic_scale(mat));
  double kx = (spec.dir_x < 0 ? -1.0 : 1.0) * k;
  Field1D f{g, VecC(g.n)};
  for (int i = 0; i < g.n; i++) {
    double dx = g.x(i) - spec.center_x;
    f.amp[i] = std::polar(std::exp(-dx * dx / (4.0 * spec.sigma * spec.sigma)), kx * g.x(i));
  }
  normalize(f);
  return f;
}

// General 2D Gaussian with wavevector (used for packets and for the exact
// CM/relative factors).
inline Field2D gaussian_2d(const Grid2D& g, double cx, double cy, double sigma,
                           double kx, double ky) {
  if (sigma < 2.0 * std::max(g.gx.spacing, g.gy.spacing))
    throw std::invalid_argument("gaussian_2d: sigma < 2 grid spacings, packet unresolved");
  if (cx - 5.0 * sigma < g.gx.x_min || cx + 5.0 * sigma > g.gx.x_max ||
      cy - 5.0 * sigma < g.gy.x_min || cy + 5.0 * sigma > g.gy.x_max)
    warn("gaussian_2d: packet closer than 5 sigma to a domain edge");
  Field2D f{g, MatC(g.nx(), g.ny())};
  for (int j = 0; j < g.ny(); j++) {
    double dy = g.y(j) - cy;
    for (int i = 0; i < g.nx(); i++) {
      double dx = g.x(i) - cx;
      f.amp(i, j) = std::polar(std::exp(-(dx * dx + dy * dy) / (4.0 * sigma * sigma)),
                               kx * g.x(i) + ky * g.y(j));
    }
  }
  normalize(f);
  return f;
}

// Harmonic trap ground state for a particle of mass mass_factor * m* * m_e;
// width sigma = sqrt(hbar / (2 M omega)).
inline Field2D harmonic_ground_2d(const Grid2D& g, const Material& mat,
                                  double hbar_omega, double cx, double cy,
                                  double mass_factor = 1.0) {
  double M = constants::electron_mass * mat.effective_mass * mass_factor;
  double omega = hbar_omega / constants::hbar;
  double osc_len = std::sqrt(constants::hbar / (M * omega));
  double hmax = std::max(g.gx.spacing, g.gy.spacing);
  double extent = std::min(g.gx.x_max - g.gx.x_min, g.gy.x_max - g.gy.x_min);
  if (osc_len < 3.0 * hmax)
    throw std::invalid_argument("harmonic_ground_2d: oscillator length under 3 grid spacings");
  if (osc_len > extent / 8.0)
    throw std::invalid_argument("harmonic_ground_2d: oscillator length above domain/8");
  return gaussian_2d(g, cx, cy, osc_len / std::sqrt(2.0), 0.0, 0.0);
}

// Initial product Phi = psi_a(x_a) psi_b(x_b).  Warns when the initial
// Coulomb expectation is not negligible against the total kinetic energy.
inline Pair1D assemble_pair_1d(const Field1D& a, const Field1D& b, const Material& mat,
                               double d, double kinetic_sum_mev) {
  if (!(a.grid == b.grid))
    throw std::invalid_argument("assemble_pair_1d: packets on different grids");
  Pair1D p{a.grid, a.amp * b.amp.transpose()};
  double pf = coulomb_prefactor(mat);
  double vexp = 0.0;
  for (int m = 0; m < p.grid.n; m++) {
    double wm = trap_weight(p.grid, m) * std::norm(b.amp[m]);
    if (wm == 0.0) continue;
    for (int l = 0; l < p.grid.n; l++) {
      double dx = p.grid.x(l) - p.grid.x(m);
      vexp += trap_weight(p.grid, l) * std::norm(a.amp[l]) * wm /
              std::sqrt(dx * dx + d * d);
    }
  }
  vexp *= pf;
  if (kinetic_sum_mev > 0 && vexp > 0.01 * kinetic_sum_mev)
    warn("assemble_pair_1d: initial Coulomb energy " + std::to_string(vexp) +
         " meV exceeds 1% of the kinetic energy");
  return p;
}

// Grids for the CM/relative representation.  The cm grid halves the particle
// spacing on the same extents; the rel grid keeps the particle spacing on
// symmetric extents.  Both choices make the reconstruction
// Phi(r_i, r_j) = cm((r_i+r_j)/2) rel(r_i-r_j) land on grid nodes exactly.
inline Grid2D cm_grid(const Grid2D& g) {
  return Grid2D(2 * g.nx() - 1, 2 * g.ny() - 1, g.gx.x_min, g.gx.x_max, g.gy.x_min,
                g.gy.x_max);
}

inline Grid2D rel_grid(const Grid2D& g) {
  double lx = g.gx.x_max - g.gx.x_min, ly = g.gy.x_max - g.gy.x_min;
  return Grid2D(2 * g.nx() - 1, 2 * g.ny() - 1, -lx, lx, -ly, ly);
}

// Exact CM/relative split of psi(r_a) phi(r_b) for matched Gaussian widths
// sigma = sqrt(hbar/(2 m omega)):
//   cm : mass 2m, center (r1+r0)/2, width sigma/sqrt(2), wavevector k
//   rel: mass m/2, center  r1-r0,   width sigma*sqrt(2), wavevector k/2
// The cm grid halves the particle spacing on the same extents; the rel grid
// keeps the particle spacing on symmetric extents.  Both choices make the
// reconstruction Phi(r_i, r_j) = cm((r_i+r_j)/2) rel(r_i-r_j) land on grid
// nodes exactly.
inline Factorized2D assemble_cm_2d(const SimulationConfig& cfg) {
  cfg.validate();
  if (cfg.geometry != Geometry::trap2d)
    throw std::invalid_argument("assemble_cm_2d: trap2d geometry required");
  const Grid2D& g = cfg.grid2;
  const WavepacketSpec& p = cfg.packets[0];
  double k = std::sqrt(p.kinetic_energy / kinetic_scale(cfg.material));
  double dn = std::hypot(p.dir_x, p.dir_y);
  double kx = k * p.dir_x / dn, ky = k * p.dir_y / dn;

  Grid2D gcm = cm_grid(g);
  Grid2D grel = rel_grid(g);

  double s = p.sigma;
  Field2D cm = gaussian_2d(gcm, 0.5 * (p.center_x + cfg.trap_x),
                           0.5 * (p.center_y + cfg.trap_y), s / std::sqrt(2.0), kx, ky);
  Field2D rel = gaussian_2d(grel, p.center_x - cfg.trap_x, p.center_y - cfg.trap_y,
                            s * std::sqrt(2.0), 0.5 * kx, 0.5 * ky);

  double sep = std::hypot(p.center_x - cfg.trap_x, p.center_y - cfg.trap_y);
  double v0 = coulomb_prefactor(cfg.material) /
              std::sqrt(sep * sep + cfg.softening * cfg.softening);
  double kin = p.kinetic_energy + 0.5 * cfg.hbar_omega;  // packet + trap zero point
  if (v0 > 0.01 * kin)
    warn("assemble_cm_2d: initial Coulomb energy " + std::to_string(v0) +
         " meV exceeds 1% of the kinetic energy");
  return {std::move(cm), std::move(rel)};
}

// Initial product state for the two-wire geometry.
inline Pair1D make_initial_pair(const SimulationConfig& cfg) {
  cfg.validate();
  if (cfg.geometry != Geometry::wires1d)
    throw std::invalid_argument("make_initial_pair: wires1d geometry required");
  Field1D a = gaussian_1d(cfg.grid1, cfg.packets[0], cfg.material);
  Field1D b = gaussian_1d(cfg.grid1, cfg.packets[1], cfg.material);
  return assemble_pair_1d(a, b, cfg.material, cfg.d,
                          cfg.packets[0].kinetic_energy + cfg.packets[1].kinetic_energy);
}

}  // namespace entdyn
