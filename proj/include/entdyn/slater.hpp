// slater.hpp -- antisymmetric coefficient matrix W for each spin layout.
//
// A two-fermion pure state is encoded by a complex antisymmetric matrix W
// over the single-particle modes (wire x spin x orbital in 1D, spin x
// orbital in 2D).  For a given evolved spatial amplitude Phi the four 1D
// spin configurations and the two 2D ones produce W built from just two
// blocks, the antisymmetrized and symmetrized amplitudes
//     W_A = Phi - Phi^T,   W_S = Phi + Phi^T,
// arranged in fixed block patterns in the rotated wire/spin bases.  W is
// stored block-sparse (the two blocks plus a layout tag and a scale); the
// dense matrix is materialized only at verification scale.
#pragma once

#include <cmath>

#include "core.hpp"
#include "linalg.hpp"
#include "propagate.hpp"

namespace entdyn {

struct SymmetrizedBlocks {
  MatC wa;  // Phi - Phi^T, exactly antisymmetric
  MatC ws;  // Phi + Phi^T, exactly symmetric
};

inline SymmetrizedBlocks symmetrize_blocks(const MatC& phi) {
  if (phi.rows() != phi.cols())
    throw std::invalid_argument("symmetrize_blocks: amplitude matrix must be square");
  return {phi - phi.transpose(), phi + phi.transpose()};
}

enum class WLayout {
  same_spin_1d,  // [[A,-S],[S,-A]] in the spin-up wire sector, zeros on spin-down
  opposite_1d,   // 4x4 block pattern mixing both spins and wires
  singlet_1d,    // off-diagonal 2x2-of-2x2 pattern
  triplet_1d,    // block-diagonal pair of 2x2 patterns with opposite sign
  same_spin_2d,  // diag(A, 0) over spin
  triplet_2d     // diag(A, -A) over spin
};

inline const char* to_string(WLayout l) {
  switch (l) {
    case WLayout::same_spin_1d: return "same_spin_1d";
    case WLayout::opposite_1d: return "opposite_1d";
    case WLayout::singlet_1d: return "singlet_1d";
    case WLayout::triplet_1d: return "triplet_1d";
    case WLayout::same_spin_2d: return "same_spin_2d";
    case WLayout::triplet_2d: return "triplet_2d";
  }
  return "?";
}

// Squared Frobenius norm of the full block pattern per unit block norm:
// how many times |A|^2 and |S|^2 appear in |W_pattern|^2.
inline void pattern_block_counts(WLayout l, int& ca, int& cs) {
  switch (l) {
    case WLayout::same_spin_1d: ca = 2; cs = 2; break;
    case WLayout::opposite_1d: ca = 8; cs = 8; break;
    case WLayout::singlet_1d: ca = 4; cs = 4; break;
    case WLayout::triplet_1d: ca = 4; cs = 4; break;
    case WLayout::same_spin_2d: ca = 1; cs = 0; break;
    case WLayout::triplet_2d: ca = 2; cs = 0; break;
  }
}

// Block-sparse W with Tr[W^dag W] = 1 enforced through `scale`.
struct SlaterMatrix {
  WLayout layout;
  MatC wa, ws;   // ws is empty for the 2D layouts
  double scale;  // dense W = scale * pattern(wa, ws)

  Eigen::Index block_dim() const { return wa.rows(); }
  Eigen::Index dimension() const {
    switch (layout) {
      case WLayout::same_spin_1d:
      case WLayout::opposite_1d:
      case WLayout::singlet_1d:
      case WLayout::triplet_1d: return 4 * block_dim();
      case WLayout::same_spin_2d:
      case WLayout::triplet_2d: return 2 * block_dim();
    }
    return 0;
  }
  // Tr[W^dag W] of the scaled pattern; 1 by construction.
  double gram() const {
    int ca, cs;
    pattern_block_counts(layout, ca, cs);
    double t = ca * wa.squaredNorm() + (cs ? cs * ws.squaredNorm() : 0.0);
    return scale * scale * t;
  }
};

namespace detail {

inline double normalization_scale(WLayout l, const MatC& wa, const MatC& ws) {
  int ca, cs;
  pattern_block_counts(l, ca, cs);
  double t = ca * wa.squaredNorm() + (cs ? cs * ws.squaredNorm() : 0.0);
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::invalid_argument(
        "assemble_w: degenerate state, the antisymmetric component vanishes");
  return 1.0 / std::sqrt(t);
}

}  // namespace detail

// 1D layouts from the symmetrized blocks.  The analytic prefactors of the
// continuum derivation (1/(2 sqrt 2), 1/(4 sqrt 2), 1/4) drop out in the
// discrete renormalization Tr[W^dag W] = 1, which is applied exactly.
inline SlaterMatrix assemble_w(const SymmetrizedBlocks& blocks, SpinConfig spin) {
  if (blocks.wa.rows() != blocks.wa.cols() || blocks.ws.rows() != blocks.ws.cols() ||
      blocks.wa.rows() != blocks.ws.rows())
    throw std::invalid_argument("assemble_w: mismatched block shapes");
  WLayout l;
  switch (spin) {
    case SpinConfig::same_spin: l = WLayout::same_spin_1d; break;
    case SpinConfig::opposite_nonfactorizable: l = WLayout::opposite_1d; break;
    case SpinConfig::singlet: l = WLayout::singlet_1d; break;
    case SpinConfig::triplet: l = WLayout::triplet_1d; break;
    default: throw std::invalid_argument("assemble_w: unsupported spin configuration");
  }
  SlaterMatrix w{l, blocks.wa, blocks.ws, 0.0};
  w.scale = detail::normalization_scale(l, w.wa, w.ws);
  return w;
}

// 2D layouts from the flattened-grid amplitude.
inline SlaterMatrix assemble_w_2d(const MatC& phi, SpinConfig spin) {
  if (phi.rows() != phi.cols())
    throw std::invalid_argument("assemble_w_2d: amplitude matrix must be square");
  WLayout l;
  switch (spin) {
    case SpinConfig::same_spin: l = WLayout::same_spin_2d; break;
    case SpinConfig::triplet: l = WLayout::triplet_2d; break;
    default:
      throw std::invalid_argument(
          "assemble_w_2d: 2D geometry supports only same_spin and triplet");
  }
  SlaterMatrix w{l, phi - phi.transpose(), MatC(), 0.0};
  if (w.wa.norm() < 1e-14 * phi.norm())
    throw std::invalid_argument(
        "assemble_w_2d: symmetric amplitude, the antisymmetric component vanishes");
  w.scale = detail::normalization_scale(l, w.wa, MatC::Zero(1, 1));
  return w;
}

// Basis rotations used in deriving the block patterns: Hadamard-type mixes
// of the two wires (|V1>,|V2> = (|L> +- |R>)/sqrt2) and of the two spins.
inline Eigen::Matrix2d wire_basis_rotation() {
  Eigen::Matrix2d h;
  double r = 1.0 / std::sqrt(2.0);
  h << r, r, r, -r;
  return h;
}

inline Eigen::Matrix2d spin_basis_rotation() { return wire_basis_rotation(); }

// Dense materialization for verification; guarded to small dimensions.
inline MatC dense_w(const SlaterMatrix& w) {
  Eigen::Index dim = w.dimension();
  if (dim > 512)
    throw std::invalid_argument("dense_w: dimension " + std::to_string(dim) +
                                " exceeds the verification guard (512)");
  Eigen::Index n = w.block_dim();
  MatC d = MatC::Zero(dim, dim);
  const MatC& a = w.wa;
  const MatC& s = w.ws;
  auto blk = [&](int bi, int bj, const MatC& m, double f) {
    d.block(bi * n, bj * n, n, n) = f * m;
  };
  switch (w.layout) {
    case WLayout::same_spin_1d:
      // basis: (wire a, up), (wire b, up), (wire a, down), (wire b, down)
      blk(0, 0, a, 1); blk(0, 1, s, -1);
      blk(1, 0, s, 1); blk(1, 1, a, -1);
      break;
    case WLayout::opposite_1d:
      blk(0, 0, a, 1);  blk(0, 1, s, -1); blk(0, 2, s, -1); blk(0, 3, a, 1);
      blk(1, 0, s, 1);  blk(1, 1, a, -1); blk(1, 2, a, -1); blk(1, 3, s, 1);
      blk(2, 0, s, 1);  blk(2, 1, a, -1); blk(2, 2, a, -1); blk(2, 3, s, 1);
      blk(3, 0, a, 1);  blk(3, 1, s, -1); blk(3, 2, s, -1); blk(3, 3, a, 1);
      break;
    case WLayout::singlet_1d:
      blk(0, 2, s, -1); blk(0, 3, a, 1);
      blk(1, 2, a, -1); blk(1, 3, s, 1);
      blk(2, 0, s, 1);  blk(2, 1, a, -1);
      blk(3, 0, a, 1);  blk(3, 1, s, -1);
      break;
    case WLayout::triplet_1d:
      blk(0, 0, a, 1);  blk(0, 1, s, -1);
      blk(1, 0, s, 1);  blk(1, 1, a, -1);
      blk(2, 2, a, -1); blk(2, 3, s, 1);
      blk(3, 2, s, -1); blk(3, 3, a, 1);
      break;
    case WLayout::same_spin_2d:
      blk(0, 0, a, 1);
      break;
    case WLayout::triplet_2d:
      blk(0, 0, a, 1); blk(1, 1, a, -1);
      break;
  }
  return w.scale * d;
}

// Binary export of the dense matrix: same container conventions as the
// checkpoints (magic, version, payload, FNV-1a hash) with a layout tag.
inline void write_w_dense(const std::string& path, const SlaterMatrix& w) {
  MatC d = dense_w(w);
  std::string payload;
  auto put = [&payload](const void* p, size_t n) {
    payload.append(static_cast<const char*>(p), n);
  };
  uint32_t version = 1, tag = (uint32_t)w.layout;
  int64_t rows = d.rows(), cols = d.cols();
  put(&version, 4);
  put(&tag, 4);
  put(&rows, 8);
  put(&cols, 8);
  put(d.data(), sizeof(cplx) * (size_t)rows * (size_t)cols);
  uint64_t h =
      detail::fnv1a64(reinterpret_cast<const unsigned char*>(payload.data()), payload.size());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open W export for writing: " + path);
  out.write("ENTDYNWM", 8);
  out.write(payload.data(), (std::streamsize)payload.size());
  out.write(reinterpret_cast<const char*>(&h), 8);
  if (!out) throw std::runtime_error("W export write failed: " + path);
}

struct DenseWExport {
  WLayout layout;
  MatC w;
};

inline DenseWExport read_w_dense(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open W export: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 + 24 + 8 || bytes.compare(0, 8, "ENTDYNWM") != 0)
    throw std::runtime_error("W export: bad magic or truncated file: " + path);
  size_t payload_len = bytes.size() - 16;
  uint64_t h = detail::fnv1a64(
      reinterpret_cast<const unsigned char*>(bytes.data()) + 8, payload_len);
  uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  if (h != stored) throw std::runtime_error("W export: hash mismatch (corrupt file)");
  size_t pos = 8;
  auto get = [&](void* p, size_t n) {
    if (pos + n > bytes.size() - 8) throw std::runtime_error("W export: truncated payload");
    std::memcpy(p, bytes.data() + pos, n);
    pos += n;
  };
  uint32_t version = 0, tag = 0;
  int64_t rows = 0, cols = 0;
  get(&version, 4);
  get(&tag, 4);
  if (version != 1)
    throw std::runtime_error("W export: unsupported version " + std::to_string(version));
  if (tag > (uint32_t)WLayout::triplet_2d)
    throw std::runtime_error("W export: unknown layout tag " + std::to_string(tag));
  get(&rows, 8);
  get(&cols, 8);
  if (rows <= 0 || cols <= 0 || rows > 65536 || cols > 65536)
    throw std::runtime_error("W export: implausible dimensions");
  DenseWExport e;
  e.layout = (WLayout)tag;
  e.w.resize(rows, cols);
  get(e.w.data(), sizeof(cplx) * (size_t)rows * (size_t)cols);
  return e;
}

}  // namespace entdyn
