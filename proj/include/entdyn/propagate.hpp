// propagate.hpp -- Crank-Nicolson / split-step time evolution and checkpoints.
//
// All propagators use the Cayley form (I + i dt H_k / 2 hbar) psi^{n+1} =
// (I - i dt H_k / 2 hbar) psi^n for each kinetic axis and exact phase factors
// for diagonal potentials, Strang-split as  P(dt/2) K_axes(dt) P(dt/2).
// Every factor is exactly unitary, so the discrete norm is conserved to
// roundoff regardless of dt; dt only controls the splitting accuracy.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <utility>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "core.hpp"
#include "linalg.hpp"
#include "states.hpp"

namespace entdyn {

// Tridiagonal Cayley factor for the kinetic term -kappa d^2/dx^2 on a uniform
// Dirichlet grid.  Constant coefficients, so the Thomas forward-elimination
// multipliers are precomputed once.
class CnAxis {
 public:
  CnAxis() = default;
  CnAxis(int n, double kappa, double dt, double h) : n_(n) {
    if (n < 3) throw std::invalid_argument("CnAxis: need at least 3 points");
    double alpha = kappa * dt / (2.0 * constants::hbar * h * h);
    cplx ia(0.0, alpha);
    dl_ = 1.0 + 2.0 * ia;
    ol_ = -ia;
    dr_ = 1.0 - 2.0 * ia;
    or_ = ia;
    cp_.resize(n);
    inv_den_.resize(n);
    cplx prev = 0.0;
    for (int i = 0; i < n; i++) {
      cplx den = dl_ - ol_ * prev;
      inv_den_[i] = 1.0 / den;
      cp_[i] = ol_ * inv_den_[i];
      prev = cp_[i];
    }
  }

  int size() const { return n_; }

  // Cayley step along the column index (vectorized over rows).
  void sweep_cols(Eigen::Ref<MatC> a, MatC& work) const {
    int m = (int)a.cols();
    if (m != n_) throw std::invalid_argument("CnAxis::sweep_cols: size mismatch");
    work.resize(a.rows(), m);
    work.col(0) = dr_ * a.col(0) + or_ * a.col(1);
    for (int j = 1; j < m - 1; j++)
      work.col(j) = dr_ * a.col(j) + or_ * (a.col(j - 1) + a.col(j + 1));
    work.col(m - 1) = dr_ * a.col(m - 1) + or_ * a.col(m - 2);
    a.col(0) = work.col(0) * inv_den_[0];
    for (int j = 1; j < m; j++)
      a.col(j) = (work.col(j) - ol_ * a.col(j - 1)) * inv_den_[j];
    for (int j = m - 2; j >= 0; j--) a.col(j) -= cp_[j] * a.col(j + 1);
  }

  // Cayley step along the row index (sequential Thomas per column; rows of a
  // column are contiguous in memory).
  void sweep_rows(Eigen::Ref<MatC> a, VecC& work) const {
    int n = (int)a.rows();
    if (n != n_) throw std::invalid_argument("CnAxis::sweep_rows: size mismatch");
    work.resize(n);
    for (int c = 0; c < (int)a.cols(); c++) {
      auto col = a.col(c);
      work[0] = dr_ * col[0] + or_ * col[1];
      for (int i = 1; i < n - 1; i++)
        work[i] = dr_ * col[i] + or_ * (col[i - 1] + col[i + 1]);
      work[n - 1] = dr_ * col[n - 1] + or_ * col[n - 2];
      col[0] = work[0] * inv_den_[0];
      for (int i = 1; i < n; i++) col[i] = (work[i] - ol_ * col[i - 1]) * inv_den_[i];
      for (int i = n - 2; i >= 0; i--) col[i] -= cp_[i] * col[i + 1];
    }
  }

  void apply_vec(VecC& v) const {
    Eigen::Map<MatC> m(v.data(), v.size(), 1);
    VecC work;
    sweep_rows(m, work);
  }

 private:
  int n_ = 0;
  cplx dl_, ol_, dr_, or_;
  VecC cp_, inv_den_;
};

namespace detail {

inline MatC half_phase(const Eigen::MatrixXd& v, double dt) {
  MatC p(v.rows(), v.cols());
  double f = -0.5 * dt / constants::hbar;
  for (Eigen::Index j = 0; j < v.cols(); j++)
    for (Eigen::Index i = 0; i < v.rows(); i++) p(i, j) = std::polar(1.0, f * v(i, j));
  return p;
}

// -kappa (d^2/drow^2 + d^2/dcol^2) psi with Dirichlet walls.
inline MatC discrete_kinetic(const MatC& a, double kappa, double h_row, double h_col) {
  MatC t = MatC::Zero(a.rows(), a.cols());
  Eigen::Index n = a.rows(), m = a.cols();
  t.topRows(n - 1) += a.bottomRows(n - 1);
  t.bottomRows(n - 1) += a.topRows(n - 1);
  t -= 2.0 * a;
  t /= h_row * h_row;
  MatC s = MatC::Zero(n, m);
  s.leftCols(m - 1) += a.rightCols(m - 1);
  s.rightCols(m - 1) += a.leftCols(m - 1);
  s -= 2.0 * a;
  s /= h_col * h_col;
  return -kappa * (t + s);
}

inline double weighted_real_inner(const Grid1D& gr, const Grid1D& gc, const MatC& a,
                                  const MatC& b) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); j++) {
    double wj = trap_weight(gc, (int)j);
    for (Eigen::Index i = 0; i < a.rows(); i++)
      s += wj * trap_weight(gr, (int)i) * std::real(std::conj(a(i, j)) * b(i, j));
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Two electrons in parallel wires: H = -kappa (d2/dxa2 + d2/dxb2)
//                                      + pf / sqrt((xa-xb)^2 + d^2).
// amp(l, m), row = particle a.  Kinetic factors for the two particles commute
// exactly (they act on different indices), so the only splitting error is the
// kinetic/potential commutator.
// ---------------------------------------------------------------------------
class PairPropagator1D {
 public:
  explicit PairPropagator1D(const SimulationConfig& cfg)
      : grid_(cfg.grid1), dt_(cfg.dt), kappa_(kinetic_scale(cfg.material)) {
    if (cfg.geometry != Geometry::wires1d)
      throw std::invalid_argument("PairPropagator1D: wires1d geometry required");
    cfg.validate();
    axis_ = CnAxis(grid_.n, kappa_, dt_, grid_.spacing);
    double pf = coulomb_prefactor(cfg.material);
    v_.resize(grid_.n, grid_.n);
    for (int m = 0; m < grid_.n; m++)
      for (int l = 0; l < grid_.n; l++) {
        double dx = grid_.x(l) - grid_.x(m);
        v_(l, m) = pf / std::sqrt(dx * dx + cfg.d * cfg.d);
      }
    // the interaction peaks on the diagonal at exactly pf/d
    double vmax = pf / std::sqrt(cfg.d * cfg.d);
    if (v_.maxCoeff() != vmax || !(v_(0, 1) < vmax))
      throw std::logic_error("PairPropagator1D: interaction maximum is off the diagonal");
    if (dt_ * vmax / constants::hbar > 0.5)
      warn("PairPropagator1D: dt rotates the Coulomb phase by more than 0.5 rad "
           "per step; reduce dt_fs or increase d_nm");
    phase_half_ = detail::half_phase(v_, dt_);
  }

  void step(Pair1D& p, int nsteps = 1) {
    if (!(p.grid == grid_))
      throw std::invalid_argument("PairPropagator1D::step: grid mismatch");
    for (int s = 0; s < nsteps; s++) {
      p.amp = phase_half_.cwiseProduct(p.amp);
      axis_.sweep_cols(p.amp, work_);  // particle b
      axis_.sweep_rows(p.amp, vwork_); // particle a
      p.amp = phase_half_.cwiseProduct(p.amp);
    }
  }

  double coulomb_energy(const Pair1D& p) const {
    double s = 0.0;
    for (int m = 0; m < grid_.n; m++) {
      double wm = trap_weight(grid_, m);
      for (int l = 0; l < grid_.n; l++)
        s += wm * trap_weight(grid_, l) * v_(l, m) * std::norm(p.amp(l, m));
    }
    return s;
  }

  double kinetic_energy(const Pair1D& p) const {
    MatC t = detail::discrete_kinetic(p.amp, kappa_, grid_.spacing, grid_.spacing);
    return detail::weighted_real_inner(grid_, grid_, p.amp, t);
  }

  double total_energy(const Pair1D& p) const {
    return kinetic_energy(p) + coulomb_energy(p);
  }

  double boundary_max(const Pair1D& p) const {
    double m = 0.0;
    int n = grid_.n;
    for (int i = 0; i < n; i++) {
      m = std::max(m, std::abs(p.amp(i, 0)));
      m = std::max(m, std::abs(p.amp(i, n - 1)));
      m = std::max(m, std::abs(p.amp(0, i)));
      m = std::max(m, std::abs(p.amp(n - 1, i)));
    }
    return m;
  }

  const Eigen::MatrixXd& potential() const { return v_; }
  const Grid1D& grid() const { return grid_; }
  double dt() const { return dt_; }

 private:
  Grid1D grid_;
  double dt_, kappa_;
  CnAxis axis_;
  Eigen::MatrixXd v_;
  MatC phase_half_, work_;
  VecC vwork_;
};

// ---------------------------------------------------------------------------
// Single 1D field with an arbitrary static potential (tests, wire channels).
// ---------------------------------------------------------------------------
class FieldPropagator1D {
 public:
  FieldPropagator1D(const Grid1D& g, double kappa, const Eigen::VectorXd& v, double dt)
      : grid_(g), kappa_(kappa), axis_(g.n, kappa, dt, g.spacing) {
    if (v.size() != g.n) throw std::invalid_argument("FieldPropagator1D: potential size");
    phase_half_.resize(g.n);
    double f = -0.5 * dt / constants::hbar;
    for (int i = 0; i < g.n; i++) phase_half_[i] = std::polar(1.0, f * v[i]);
    v_ = v;
  }

  void step(Field1D& f, int nsteps = 1) {
    if (!(f.grid == grid_)) throw std::invalid_argument("FieldPropagator1D: grid mismatch");
    for (int s = 0; s < nsteps; s++) {
      f.amp = phase_half_.cwiseProduct(f.amp);
      axis_.apply_vec(f.amp);
      f.amp = phase_half_.cwiseProduct(f.amp);
    }
  }

  double total_energy(const Field1D& f) const {
    double h = grid_.spacing, e = 0.0;
    for (int i = 0; i < grid_.n; i++) {
      cplx lap = -2.0 * f.amp[i];
      if (i > 0) lap += f.amp[i - 1];
      if (i < grid_.n - 1) lap += f.amp[i + 1];
      e += trap_weight(grid_, i) *
           std::real(std::conj(f.amp[i]) * (-kappa_ * lap / (h * h) + v_[i] * f.amp[i]));
    }
    return e;
  }

 private:
  Grid1D grid_;
  double kappa_;
  CnAxis axis_;
  VecC phase_half_;
  Eigen::VectorXd v_;
};

// ---------------------------------------------------------------------------
// Single 2D field with a static potential, ADI over x (rows) and y (cols).
// ---------------------------------------------------------------------------
class FieldPropagator2D {
 public:
  FieldPropagator2D() = default;
  FieldPropagator2D(const Grid2D& g, double kappa, const Eigen::MatrixXd& v, double dt)
      : grid_(g),
        kappa_(kappa),
        ax_(g.nx(), kappa, dt, g.gx.spacing),
        ay_(g.ny(), kappa, dt, g.gy.spacing),
        v_(v) {
    if (v.rows() != g.nx() || v.cols() != g.ny())
      throw std::invalid_argument("FieldPropagator2D: potential shape");
    phase_half_ = detail::half_phase(v, dt);
  }

  void step(Field2D& f, int nsteps = 1) {
    if (!(f.grid == grid_)) throw std::invalid_argument("FieldPropagator2D: grid mismatch");
    for (int s = 0; s < nsteps; s++) {
      f.amp = phase_half_.cwiseProduct(f.amp);
      ax_.sweep_rows(f.amp, vwork_);
      ay_.sweep_cols(f.amp, work_);
      f.amp = phase_half_.cwiseProduct(f.amp);
    }
  }

  double kinetic_energy(const Field2D& f) const {
    MatC t = detail::discrete_kinetic(f.amp, kappa_, grid_.gx.spacing, grid_.gy.spacing);
    return detail::weighted_real_inner(grid_.gx, grid_.gy, f.amp, t);
  }

  double potential_energy(const Field2D& f) const {
    double s = 0.0;
    for (int j = 0; j < grid_.ny(); j++) {
      double wj = trap_weight(grid_.gy, j);
      for (int i = 0; i < grid_.nx(); i++)
        s += wj * trap_weight(grid_.gx, i) * v_(i, j) * std::norm(f.amp(i, j));
    }
    return s;
  }

  double boundary_max(const Field2D& f) const {
    double m = 0.0;
    for (int i = 0; i < grid_.nx(); i++) {
      m = std::max(m, std::abs(f.amp(i, 0)));
      m = std::max(m, std::abs(f.amp(i, grid_.ny() - 1)));
    }
    for (int j = 0; j < grid_.ny(); j++) {
      m = std::max(m, std::abs(f.amp(0, j)));
      m = std::max(m, std::abs(f.amp(grid_.nx() - 1, j)));
    }
    return m;
  }

  const Eigen::MatrixXd& potential() const { return v_; }
  const Grid2D& grid() const { return grid_; }

 private:
  Grid2D grid_;
  double kappa_ = 0.0;
  CnAxis ax_, ay_;
  Eigen::MatrixXd v_;
  MatC phase_half_, work_;
  VecC vwork_;
};

// ---------------------------------------------------------------------------
// Two electrons in one 2D harmonic trap (both centered at r0):
//   H = sum_i [ -kappa lap_i + m w^2 (r_i - r0)^2 / 2 ] + pf/sqrt(|ra-rb|^2+s^2)
// separates exactly in R = (ra+rb)/2 (mass 2m, coherent center motion) and
// r = ra-rb (mass m/2, trap + softened Coulomb), so the product form is
// preserved for all times and each factor evolves on its own 2D grid.
// ---------------------------------------------------------------------------
class TrapPropagator2D {
 public:
  explicit TrapPropagator2D(const SimulationConfig& cfg) : dt_(cfg.dt) {
    if (cfg.geometry != Geometry::trap2d)
      throw std::invalid_argument("TrapPropagator2D: trap2d geometry required");
    cfg.validate();
    double kappa = kinetic_scale(cfg.material);
    double m = constants::electron_mass * cfg.material.effective_mass;
    double omega = cfg.hbar_omega / constants::hbar;
    double pf = coulomb_prefactor(cfg.material);
    Grid2D gcm = cm_grid(cfg.grid2), grel = rel_grid(cfg.grid2);

    Eigen::MatrixXd vcm(gcm.nx(), gcm.ny());
    for (int j = 0; j < gcm.ny(); j++)
      for (int i = 0; i < gcm.nx(); i++) {
        double dx = gcm.x(i) - cfg.trap_x, dy = gcm.y(j) - cfg.trap_y;
        vcm(i, j) = m * omega * omega * (dx * dx + dy * dy);  // (1/2)(2m) w^2 |R-r0|^2
      }
    Eigen::MatrixXd vrel(grel.nx(), grel.ny());
    vcoul_.resize(grel.nx(), grel.ny());
    for (int j = 0; j < grel.ny(); j++)
      for (int i = 0; i < grel.nx(); i++) {
        double r2 = grel.x(i) * grel.x(i) + grel.y(j) * grel.y(j);
        vcoul_(i, j) = pf / std::sqrt(r2 + cfg.softening * cfg.softening);
        vrel(i, j) = 0.25 * m * omega * omega * r2 + vcoul_(i, j);
      }
    double vmax = pf / cfg.softening;
    if (dt_ * vmax / constants::hbar > 0.5)
      warn("TrapPropagator2D: dt rotates the Coulomb phase by more than 0.5 rad "
           "per step; reduce dt_fs or increase softening_nm");
    cm_ = FieldPropagator2D(gcm, 0.5 * kappa, vcm, dt_);   // mass 2m
    rel_ = FieldPropagator2D(grel, 2.0 * kappa, vrel, dt_); // mass m/2
  }

  void step(Factorized2D& f, int nsteps = 1) {
    for (int s = 0; s < nsteps; s++) {
      cm_.step(f.cm);
      rel_.step(f.rel);
    }
  }

  // expectation values for a normalized product state
  double total_energy(const Factorized2D& f) const {
    return cm_.kinetic_energy(f.cm) + cm_.potential_energy(f.cm) +
           rel_.kinetic_energy(f.rel) + rel_.potential_energy(f.rel);
  }

  double coulomb_energy(const Factorized2D& f) const {
    double s = 0.0;
    const Grid2D& g = rel_.grid();
    for (int j = 0; j < g.ny(); j++) {
      double wj = trap_weight(g.gy, j);
      for (int i = 0; i < g.nx(); i++)
        s += wj * trap_weight(g.gx, i) * vcoul_(i, j) * std::norm(f.rel.amp(i, j));
    }
    return s;
  }

  double boundary_max(const Factorized2D& f) const {
    return std::max(cm_.boundary_max(f.cm), rel_.boundary_max(f.rel));
  }

  const FieldPropagator2D& cm() const { return cm_; }
  const FieldPropagator2D& rel() const { return rel_; }
  double dt() const { return dt_; }

 private:
  double dt_;
  FieldPropagator2D cm_, rel_;
  Eigen::MatrixXd vcoul_;
};

// ---------------------------------------------------------------------------
// Reference propagator: full Crank-Nicolson on the flattened two-particle
// grid with no operator splitting (sparse LU of the Cayley factor).  Used to
// cross-check the split-step scheme; memory-bounded to small grids.
// ---------------------------------------------------------------------------
class ExactPairPropagator {
 public:
  explicit ExactPairPropagator(const SimulationConfig& cfg) : grid_(cfg.grid1) {
    if (cfg.geometry != Geometry::wires1d)
      throw std::invalid_argument("ExactPairPropagator: wires1d geometry required");
    if (grid_.n > 128)
      throw std::invalid_argument("ExactPairPropagator: grid larger than 128 points");
    cfg.validate();
    double kappa = kinetic_scale(cfg.material);
    double pf = coulomb_prefactor(cfg.material);
    int n = grid_.n;
    double h2 = grid_.spacing * grid_.spacing;
    cplx f(0.0, 0.5 * cfg.dt / constants::hbar);  // i dt / (2 hbar)
    typedef Eigen::Triplet<cplx> T;
    std::vector<T> plus, minus;
    auto idx = [n](int l, int m) { return l + n * m; };
    for (int m = 0; m < n; m++)
      for (int l = 0; l < n; l++) {
        double dx = grid_.x(l) - grid_.x(m);
        double v = pf / std::sqrt(dx * dx + cfg.d * cfg.d);
        cplx hd = 4.0 * kappa / h2 + v;
        plus.emplace_back(idx(l, m), idx(l, m), 1.0 + f * hd);
        minus.emplace_back(idx(l, m), idx(l, m), 1.0 - f * hd);
        cplx ho = -kappa / h2;
        for (auto [dl, dm] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          int l2 = l + dl, m2 = m + dm;
          if (l2 < 0 || l2 >= n || m2 < 0 || m2 >= n) continue;
          plus.emplace_back(idx(l, m), idx(l2, m2), f * ho);
          minus.emplace_back(idx(l, m), idx(l2, m2), -f * ho);
        }
      }
    Eigen::SparseMatrix<cplx> ap(n * n, n * n);
    a_minus_.resize(n * n, n * n);
    ap.setFromTriplets(plus.begin(), plus.end());
    a_minus_.setFromTriplets(minus.begin(), minus.end());
    lu_.compute(ap);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("ExactPairPropagator: sparse LU failed");
  }

  void step(Pair1D& p, int nsteps = 1) {
    if (!(p.grid == grid_))
      throw std::invalid_argument("ExactPairPropagator::step: grid mismatch");
    int n = grid_.n;
    Eigen::Map<VecC> x(p.amp.data(), n * n);
    for (int s = 0; s < nsteps; s++) {
      VecC rhs = a_minus_ * x;
      x = lu_.solve(rhs);
    }
  }

 private:
  Grid1D grid_;
  Eigen::SparseMatrix<cplx> a_minus_;
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu_;
};

// ---------------------------------------------------------------------------
// Brute-force two-particle 2D evolution without the product ansatz: the state
// lives on the full four-dimensional tensor grid (cm x rel points) and every
// axis is advanced by its own Cayley factor, with a single joint phase for
// V_cm + V_rel.  If the product ansatz is exact this must agree with the
// factorized evolution; the comparison exercises the 4D bookkeeping and the
// separability claim independently.
// ---------------------------------------------------------------------------
class Brute4D {
 public:
  Brute4D(const Grid2D& gcm, const Grid2D& grel, double kcm, double krel,
          const Eigen::MatrixXd& vcm, const Eigen::MatrixXd& vrel, double dt)
      : gcm_(gcm), grel_(grel) {
    size_t total = (size_t)gcm.nx() * gcm.ny() * grel.nx() * grel.ny();
    if (total > (8u << 20))
      throw std::invalid_argument("Brute4D: tensor grid larger than 8M points");
    ax_cm_ = CnAxis(gcm.nx(), kcm, dt, gcm.gx.spacing);
    ay_cm_ = CnAxis(gcm.ny(), kcm, dt, gcm.gy.spacing);
    ax_rel_ = CnAxis(grel.nx(), krel, dt, grel.gx.spacing);
    ay_rel_ = CnAxis(grel.ny(), krel, dt, grel.gy.spacing);
    MatC pcm = detail::half_phase(vcm, dt), prel = detail::half_phase(vrel, dt);
    pcm_flat_ = Eigen::Map<VecC>(pcm.data(), pcm.size());
    prel_flat_ = Eigen::Map<VecC>(prel.data(), prel.size());
  }

  // psi(cmflat, relflat) = cm * rel^T
  void set_product(const Field2D& cm, const Field2D& rel) {
    if (!(cm.grid == gcm_) || !(rel.grid == grel_))
      throw std::invalid_argument("Brute4D::set_product: grid mismatch");
    Eigen::Map<const VecC> c(cm.amp.data(), cm.amp.size());
    Eigen::Map<const VecC> r(rel.amp.data(), rel.amp.size());
    psi_ = c * r.transpose();
  }

  void step(int nsteps = 1) {
    for (int s = 0; s < nsteps; s++) {
      phase_half();
      for (Eigen::Index c = 0; c < psi_.cols(); c++) {
        Eigen::Map<MatC> slab(psi_.col(c).data(), gcm_.nx(), gcm_.ny());
        ax_cm_.sweep_rows(slab, vwork_);
        ay_cm_.sweep_cols(slab, work_);
      }
      psi_.transposeInPlace();
      for (Eigen::Index c = 0; c < psi_.cols(); c++) {
        Eigen::Map<MatC> slab(psi_.col(c).data(), grel_.nx(), grel_.ny());
        ax_rel_.sweep_rows(slab, vwork_);
        ay_rel_.sweep_cols(slab, work_);
      }
      psi_.transposeInPlace();
      phase_half();
    }
  }

  // sup-norm distance to a product state, |psi - cm x rel|_inf
  double max_product_deviation(const Field2D& cm, const Field2D& rel) const {
    Eigen::Map<const VecC> c(cm.amp.data(), cm.amp.size());
    Eigen::Map<const VecC> r(rel.amp.data(), rel.amp.size());
    return (psi_ - c * r.transpose()).cwiseAbs().maxCoeff();
  }

  const MatC& state() const { return psi_; }

 private:
  void phase_half() {
    for (Eigen::Index c = 0; c < psi_.cols(); c++)
      psi_.col(c) = prel_flat_[c] * psi_.col(c).cwiseProduct(pcm_flat_);
  }

  Grid2D gcm_, grel_;
  CnAxis ax_cm_, ay_cm_, ax_rel_, ay_rel_;
  VecC pcm_flat_, prel_flat_;
  MatC psi_, work_;
  VecC vwork_;
};

// ---------------------------------------------------------------------------
// Pair amplitude on the particle grid from the factorized form.  Both factor
// grids are aligned with the particle grid, so (r_i + r_j)/2 and r_i - r_j
// are grid nodes and no interpolation is involved.  Flattened index a = i +
// nx * j (column-major).  The result is renormalized on the particle grid.
// ---------------------------------------------------------------------------
inline MatC reconstruct_pair_2d(const Factorized2D& f, const Grid2D& particle,
                                double* raw_norm2 = nullptr) {
  if (!(f.cm.grid == cm_grid(particle)) || !(f.rel.grid == rel_grid(particle)))
    throw std::invalid_argument("reconstruct_pair_2d: factor grids do not match the particle grid");
  int nx = particle.nx(), ny = particle.ny();
  Eigen::Index np = (Eigen::Index)nx * ny;
  MatC phi(np, np);
  for (int q = 0; q < ny; q++)
    for (int p = 0; p < nx; p++) {
      Eigen::Index b = p + (Eigen::Index)nx * q;
      for (int j = 0; j < ny; j++)
        for (int i = 0; i < nx; i++)
          phi(i + (Eigen::Index)nx * j, b) =
              f.cm.amp(i + p, j + q) * f.rel.amp(i - p + nx - 1, j - q + ny - 1);
    }
  double h2 = particle.gx.spacing * particle.gy.spacing;
  double n2 = phi.squaredNorm() * h2 * h2;
  if (raw_norm2) *raw_norm2 = n2;
  phi /= std::sqrt(n2);
  return phi;
}

// ---------------------------------------------------------------------------
// Versioned binary checkpoints.  Layout (little-endian):
//   bytes 0..7   magic "ENTDYNCK"
//   u32 version (=1), u32 n_arrays, u64 config_len, config text
//   i64 step, then per array: i64 rows, i64 cols, rows*cols complex<double>
//   u64 FNV-1a hash of everything between the magic and the hash
// Time is reconstructed as step * dt, so a resumed run continues with
// bit-identical time arithmetic.
// ---------------------------------------------------------------------------
namespace detail {
inline uint64_t fnv1a64(const unsigned char* p, size_t n) {
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < n; i++) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}
}  // namespace detail

struct CheckpointData {
  SimulationConfig config;
  int64_t step = 0;
  std::vector<MatC> arrays;
};

inline void write_checkpoint(const std::string& path, const SimulationConfig& cfg,
                             int64_t step, const std::vector<const MatC*>& arrays) {
  std::string payload;
  auto put = [&payload](const void* p, size_t n) {
    payload.append(static_cast<const char*>(p), n);
  };
  std::string cfgtext = serialize_config(cfg);
  uint32_t version = 1, nar = (uint32_t)arrays.size();
  uint64_t clen = cfgtext.size();
  put(&version, 4);
  put(&nar, 4);
  put(&clen, 8);
  payload += cfgtext;
  put(&step, 8);
  for (const MatC* a : arrays) {
    int64_t r = a->rows(), c = a->cols();
    put(&r, 8);
    put(&c, 8);
    put(a->data(), sizeof(cplx) * (size_t)r * (size_t)c);
  }
  uint64_t h =
      detail::fnv1a64(reinterpret_cast<const unsigned char*>(payload.data()), payload.size());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write("ENTDYNCK", 8);
  out.write(payload.data(), (std::streamsize)payload.size());
  out.write(reinterpret_cast<const char*>(&h), 8);
  out.flush();
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

inline CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 + 24 + 8 || bytes.compare(0, 8, "ENTDYNCK") != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  size_t body = bytes.size() - 16;
  uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  uint64_t h = detail::fnv1a64(
      reinterpret_cast<const unsigned char*>(bytes.data() + 8), body);
  if (h != stored) throw std::runtime_error("checkpoint hash mismatch (corrupted): " + path);

  size_t pos = 8;
  auto take = [&](void* p, size_t n) {
    if (pos + n > bytes.size() - 8)
      throw std::runtime_error("checkpoint truncated: " + path);
    std::memcpy(p, bytes.data() + pos, n);
    pos += n;
  };
  uint32_t version, nar;
  uint64_t clen;
  take(&version, 4);
  take(&nar, 4);
  take(&clen, 8);
  if (version != 1)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  if (clen > bytes.size() - 8 - pos)
    throw std::runtime_error("checkpoint truncated: " + path);
  std::string cfgtext(bytes, pos, clen);
  pos += clen;
  CheckpointData data;
  data.config = parse_config(cfgtext);
  take(&data.step, 8);
  data.arrays.resize(nar);
  for (uint32_t k = 0; k < nar; k++) {
    int64_t r, c;
    take(&r, 8);
    take(&c, 8);
    if (r <= 0 || c <= 0 || (uint64_t)r * (uint64_t)c > (1ull << 28))
      throw std::runtime_error("checkpoint array shape out of range: " + path);
    data.arrays[k].resize(r, c);
    take(data.arrays[k].data(), sizeof(cplx) * (size_t)r * (size_t)c);
  }
  if (pos != bytes.size() - 8)
    throw std::runtime_error("checkpoint has trailing bytes: " + path);
  return data;
}

}  // namespace entdyn
