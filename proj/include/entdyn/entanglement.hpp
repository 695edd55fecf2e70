// entanglement.hpp -- reduced density matrix, Schmidt/Slater spectrum,
// von Neumann entropy, Slater rank, and the canonical-form oracle.
//
// For a two-fermion state with antisymmetric coefficient matrix W the
// one-particle reduced density matrix is rho = W^dag W / Tr[W^dag W]; its
// eigenvalues come in degenerate pairs |z_i|^2 and the entropy is
//   eps = ln 2 - 2 sum |z_i|^2 ln(2 |z_i|^2) = -Tr[rho ln rho].
// eps = ln 2 (Slater rank 1) means no correlation beyond exchange symmetry;
// eps > ln 2 signals genuine entanglement.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include "linalg.hpp"
#include "slater.hpp"

namespace entdyn {

// rho in block form: the distinct Hermitian sectors with multiplicities plus
// an explicit zero eigenspace.  Sector matrices store valid data in the
// lower triangle (BLAS herk convention).  Total trace is normalized to 1.
struct ReducedDensity {
  std::vector<MatC> sectors;
  std::vector<int> multiplicity;
  Eigen::Index zero_dim = 0;

  Eigen::Index dim() const {
    Eigen::Index d = zero_dim;
    for (size_t k = 0; k < sectors.size(); k++) d += multiplicity[k] * sectors[k].rows();
    return d;
  }
  double trace() const {
    double t = 0.0;
    for (size_t k = 0; k < sectors.size(); k++)
      t += multiplicity[k] * sectors[k].diagonal().real().sum();
    return t;
  }
};

// rho = W^dag W normalized to unit trace, computed from the stored blocks.
// With G_{-+} = (W_A -+ W_S)^dag (W_A -+ W_S), every 1D layout reduces to the
// two sectors G- and G+ (the spin/wire rotations diagonalize the block
// pattern), with layout-dependent multiplicities and zero padding; the 2D
// layouts reduce to the single sector W_A^dag W_A.
inline ReducedDensity reduced_density(const SlaterMatrix& w) {
  ReducedDensity rd;
  Eigen::Index n = w.block_dim();
  switch (w.layout) {
    case WLayout::same_spin_1d:
    case WLayout::opposite_1d:
      rd.sectors.push_back(aherm_a(w.wa - w.ws));
      rd.sectors.push_back(aherm_a(w.wa + w.ws));
      rd.multiplicity = {1, 1};
      rd.zero_dim = 2 * n;
      break;
    case WLayout::singlet_1d:
    case WLayout::triplet_1d:
      rd.sectors.push_back(aherm_a(w.wa - w.ws));
      rd.sectors.push_back(aherm_a(w.wa + w.ws));
      rd.multiplicity = {2, 2};
      rd.zero_dim = 0;
      break;
    case WLayout::same_spin_2d:
      rd.sectors.push_back(aherm_a(w.wa));
      rd.multiplicity = {1};
      rd.zero_dim = n;
      break;
    case WLayout::triplet_2d:
      rd.sectors.push_back(aherm_a(w.wa));
      rd.multiplicity = {2};
      rd.zero_dim = 0;
      break;
  }
  double t = rd.trace();
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::invalid_argument("reduced_density: zero or non-finite trace");
  for (MatC& s : rd.sectors) s /= t;
  return rd;
}

// Spectrum of rho folded into one weight per degenerate pair.
struct SchmidtSpectrum {
  VecR pair_weights;      // |z_i|^2, descending, one entry per pair
  double pair_tol = 1e-6; // mismatch above this is a structural error
};

inline SchmidtSpectrum schmidt_spectrum(const ReducedDensity& rd) {
  std::vector<double> lam;
  lam.reserve((size_t)rd.dim());
  for (size_t k = 0; k < rd.sectors.size(); k++) {
    VecR e = eigvalsh(rd.sectors[k]);
    for (int m = 0; m < rd.multiplicity[k]; m++)
      lam.insert(lam.end(), e.data(), e.data() + e.size());
  }
  lam.insert(lam.end(), (size_t)rd.zero_dim, 0.0);
  std::sort(lam.begin(), lam.end(), std::greater<double>());
  if (!lam.empty() && lam.back() < -1e-9)
    throw std::runtime_error("schmidt_spectrum: reduced density has a negative eigenvalue " +
                             std::to_string(lam.back()));
  for (double& v : lam) v = std::max(v, 0.0);
  if (lam.size() % 2 != 0)
    throw std::runtime_error("schmidt_spectrum: odd spectrum size, cannot pair");
  SchmidtSpectrum spec;
  spec.pair_weights.resize((Eigen::Index)lam.size() / 2);
  for (size_t i = 0; i + 1 < lam.size(); i += 2) {
    if (std::abs(lam[i] - lam[i + 1]) > spec.pair_tol)
      throw std::runtime_error(
          "schmidt_spectrum: eigenvalue pairing failure (mismatch " +
          std::to_string(std::abs(lam[i] - lam[i + 1])) +
          "), the state is not a valid two-fermion reduced density");
    spec.pair_weights[(Eigen::Index)i / 2] = 0.5 * (lam[i] + lam[i + 1]);
  }
  double total = 2.0 * spec.pair_weights.sum();
  if (std::abs(total - 1.0) > 1e-9)
    throw std::runtime_error("schmidt_spectrum: weights sum to " + std::to_string(total) +
                             ", expected 1");
  return spec;
}

// eps = ln 2 - 2 sum w ln(2w), with the convention 0 ln 0 = 0.  Equal to
// -sum lambda ln lambda over the full paired spectrum.
inline double von_neumann_entropy(const SchmidtSpectrum& spec) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < spec.pair_weights.size(); i++) {
    double w = spec.pair_weights[i];
    if (w > 0.0) s += w * std::log(2.0 * w);
  }
  return constants::ln2 - 2.0 * s;
}

// Number of nonzero |z_i| relative to the largest weight.
inline int slater_rank(const SchmidtSpectrum& spec, double tol = 1e-8) {
  if (!(tol > 0.0 && tol < 1.0))
    throw std::invalid_argument("slater_rank: tol must be in (0, 1)");
  double wmax = spec.pair_weights.size() ? spec.pair_weights.maxCoeff() : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < spec.pair_weights.size(); i++)
    if (spec.pair_weights[i] > tol * wmax) r++;
  return r;
}

struct EntropyResult {
  double entropy = 0.0;  // nats
  int slater_rank = 1;
  SchmidtSpectrum spectrum;
  bool genuine = false;  // entropy > ln 2 + 1e-6
};

inline EntropyResult analyze_w(const SlaterMatrix& w) {
  EntropyResult r;
  r.spectrum = schmidt_spectrum(reduced_density(w));
  r.entropy = von_neumann_entropy(r.spectrum);
  r.slater_rank = slater_rank(r.spectrum);
  r.genuine = r.entropy > constants::ln2 + 1e-6;
  return r;
}

// ---------------------------------------------------------------------------
// Canonical (fermionic Schmidt) form W = U Z U^T with Z block-diagonal in
// 2x2 blocks [[0, z_i], [-z_i, 0]], z_i >= 0.  Greedy SVD deflation: the top
// singular triple (s, p, v) of an antisymmetric W satisfies W conj(v) ...
// W v = s p and W conj(p) = -s conj(v), so (u1, u2) = (p, conj(v)) is an
// orthonormal canonical pair carrying W's action s (u1 u2^T - u2 u1^T),
// which is subtracted and the process repeated.  Verification scale only.
// ---------------------------------------------------------------------------
struct CanonicalForm {
  MatC u;  // unitary
  VecR z;  // one entry per 2x2 block, z_i >= 0, descending

  MatC z_dense() const {
    MatC d = MatC::Zero(u.rows(), u.rows());
    for (Eigen::Index i = 0; i < z.size(); i++) {
      d(2 * i, 2 * i + 1) = z[i];
      d(2 * i + 1, 2 * i) = -z[i];
    }
    return d;
  }
};

inline CanonicalForm slater_canonical_form(const MatC& w) {
  Eigen::Index dim = w.rows();
  if (w.cols() != dim) throw std::invalid_argument("slater_canonical_form: square input required");
  if (dim > 256)
    throw std::invalid_argument("slater_canonical_form: dimension above the 256 oracle guard");
  if ((w + w.transpose()).norm() > 1e-10)
    throw std::invalid_argument("slater_canonical_form: input is not antisymmetric");

  MatC rest = w;
  std::vector<VecC> cols;
  std::vector<double> zs;
  double smax0 = -1.0;
  for (Eigen::Index iter = 0; iter < dim / 2; iter++) {
    Eigen::JacobiSVD<MatC> svd(rest, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double s = svd.singularValues()(0);
    if (smax0 < 0.0) smax0 = s;
    if (!(s > 1e-12 * smax0) || smax0 == 0.0) break;
    VecC u1 = svd.matrixU().col(0);
    VecC u2 = svd.matrixV().col(0).conjugate();
    // re-orthogonalize against the pairs already extracted (guards the
    // degenerate-singular-value case)
    for (const VecC& c : cols) {
      u1 -= c * (c.dot(u1));
      u2 -= c * (c.dot(u2));
    }
    u1.normalize();
    u2 -= u1 * (u1.dot(u2));
    u2.normalize();
    rest -= s * (u1 * u2.transpose() - u2 * u1.transpose());
    cols.push_back(u1);
    cols.push_back(u2);
    zs.push_back(s);
  }

  CanonicalForm cf;
  cf.u = MatC::Identity(dim, dim);
  Eigen::Index r = (Eigen::Index)cols.size();
  if (r > 0) {
    MatC m(dim, r);
    for (Eigen::Index k = 0; k < r; k++) m.col(k) = cols[(size_t)k];
    cf.u.leftCols(r) = m;
    if (r < dim) {
      // orthonormal completion: trailing columns of the full QR basis of m
      Eigen::HouseholderQR<MatC> qr(m);
      MatC q = qr.householderQ();
      cf.u.rightCols(dim - r) = q.rightCols(dim - r);
    }
  }
  cf.z = zs.empty() ? VecR() : VecR(Eigen::Map<VecR>(zs.data(), (Eigen::Index)zs.size()));

  double resid = (cf.u * cf.z_dense() * cf.u.transpose() - w).norm();
  if (resid > 1e-8)
    throw std::runtime_error("slater_canonical_form: reconstruction residual " +
                             std::to_string(resid) + " exceeds 1e-8");
  return cf;
}

// Schmidt entropy of the amplitude treated as a distinguishable-particle
// state: eps_dist = -sum s_k^2 ln s_k^2 over normalized singular values.
inline double distinguishable_entropy(const MatC& phi) {
  VecR s = singular_values(phi);
  double t = s.squaredNorm();
  if (!(t > 0.0)) throw std::invalid_argument("distinguishable_entropy: zero amplitude");
  double e = 0.0;
  for (Eigen::Index k = 0; k < s.size(); k++) {
    double w = s[k] * s[k] / t;
    if (w > 0.0) e -= w * std::log(w);
  }
  return e;
}

}  // namespace entdyn
