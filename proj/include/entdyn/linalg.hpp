// linalg.hpp -- thin LAPACKE wrappers over Eigen containers.
// Production spectra go through zheevd/zgesdd (OpenBLAS); the dense
// verification paths in the tests use Eigen's JacobiSVD instead so the two
// routes do not share a backend.
#pragma once

#define LAPACK_COMPLEX_CPP
#include <cblas.h>
#include <lapacke.h>

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace entdyn {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;

// Pin the BLAS backend to one thread: reductions then have a fixed
// association order and repeated runs produce bit-identical output.
inline void use_single_thread_blas() { openblas_set_num_threads(1); }

// Eigenvalues (ascending) of a Hermitian matrix; destroys a local copy.
inline VecR eigvalsh(MatC a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eigvalsh: square matrix required");
  lapack_int n = (lapack_int)a.rows();
  VecR w(n);
  lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                                   reinterpret_cast<lapack_complex_double*>(a.data()), n,
                                   w.data());
  if (info != 0)
    throw std::runtime_error("zheevd failed, info = " + std::to_string(info));
  return w;
}

// Eigen-decomposition of a Hermitian matrix: values ascending, vectors in
// the returned matrix columns.
inline std::pair<VecR, MatC> eigh(MatC a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eigh: square matrix required");
  lapack_int n = (lapack_int)a.rows();
  VecR w(n);
  lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                   reinterpret_cast<lapack_complex_double*>(a.data()), n,
                                   w.data());
  if (info != 0)
    throw std::runtime_error("zheevd failed, info = " + std::to_string(info));
  return {w, std::move(a)};
}

// Singular values (descending) via divide and conquer; destroys a local copy.
inline VecR singular_values(MatC a) {
  lapack_int m = (lapack_int)a.rows(), n = (lapack_int)a.cols();
  VecR s(std::min(m, n));
  lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n,
                                   reinterpret_cast<lapack_complex_double*>(a.data()), m,
                                   s.data(), nullptr, 1, nullptr, 1);
  if (info != 0)
    throw std::runtime_error("zgesdd failed, info = " + std::to_string(info));
  return s;
}

// C = A^dagger A through the Hermitian rank-k update (half the flops of a
// general product); only the lower triangle is meaningful for eigvalsh.
inline MatC aherm_a(const MatC& a) {
  lapack_int n = (lapack_int)a.cols(), k = (lapack_int)a.rows();
  MatC c = MatC::Zero(n, n);
  cblas_zherk(CblasColMajor, CblasLower, CblasConjTrans, n, k, 1.0, a.data(), k, 0.0,
              c.data(), n);
  return c;
}

// Eigenvalues/vectors of a real symmetric tridiagonal matrix (test oracles).
inline std::pair<VecR, Eigen::MatrixXd> eig_sym_tridiag(VecR diag, VecR off) {
  lapack_int n = (lapack_int)diag.size();
  Eigen::MatrixXd z(n, n);
  lapack_int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', n, diag.data(), off.data(),
                                  z.data(), n);
  if (info != 0)
    throw std::runtime_error("dstev failed, info = " + std::to_string(info));
  return {std::move(diag), std::move(z)};
}

}  // namespace entdyn
