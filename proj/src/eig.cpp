// eig.cpp — symmetric eigensolve backends.
#include "treewalk/eig.hpp"

#include <cstdlib>
#include <mutex>
#include <stdexcept>

#if defined(TREEWALK_HAVE_LAPACKE)
#include <lapacke.h>
#endif

namespace treewalk {

namespace {
int g_backend = 0;  // 0 auto, 1 eigen, 2 lapack
std::once_flag g_blas_once;
}  // namespace

void set_eig_backend(int which) { g_backend = which; }

void pin_blas_threads() {
  std::call_once(g_blas_once, [] { setenv("OPENBLAS_NUM_THREADS", "1", 0); });
}

namespace {

sym_eig eigen_solve(const Eigen::MatrixXd& A, bool want_vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      A, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolve failed");
  sym_eig r;
  r.values = es.eigenvalues().reverse();  // ascending -> descending
  if (want_vectors) r.vectors = es.eigenvectors().rowwise().reverse();
  return r;
}

#if defined(TREEWALK_HAVE_LAPACKE)
sym_eig lapack_solve(const Eigen::MatrixXd& A, bool want_vectors) {
  pin_blas_threads();
  lapack_int n = (lapack_int)A.rows();
  Eigen::MatrixXd work = A;  // dsyevd overwrites with eigenvectors
  Eigen::VectorXd w(n);
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N',
                                   'L', n, work.data(), n, w.data());
  if (info != 0) throw std::runtime_error("dsyevd failed");
  sym_eig r;
  r.values = w.reverse();
  if (want_vectors) r.vectors = work.rowwise().reverse();
  return r;
}
#endif

}  // namespace

sym_eig sym_eigensolve(const Eigen::MatrixXd& A, bool want_vectors) {
  if (A.rows() != A.cols()) throw std::runtime_error("eigensolve needs a square matrix");
#if defined(TREEWALK_HAVE_LAPACKE)
  bool use_lapack = g_backend == 2 || (g_backend == 0 && A.rows() >= 512);
  if (use_lapack) return lapack_solve(A, want_vectors);
#endif
  if (g_backend == 2) throw std::runtime_error("LAPACK backend not built in");
  return eigen_solve(A, want_vectors);
}

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& A) {
  return sym_eigensolve(A, false).values;
}

}  // namespace treewalk
