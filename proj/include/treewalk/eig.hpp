// eig.hpp — dense symmetric eigensolves.  LAPACK (dsyevd) for larger
// matrices when linked, Eigen's SelfAdjointEigenSolver otherwise; the two
// backends cross-check each other in tests.
#pragma once
#include <Eigen/Dense>

namespace treewalk {

struct sym_eig {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns aligned with values (empty if not requested)
};

sym_eig sym_eigensolve(const Eigen::MatrixXd& A, bool want_vectors = true);
Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& A);

// Forces an eigen backend for cross-checks: 0 = auto, 1 = Eigen, 2 = LAPACK.
void set_eig_backend(int which);

// Pins BLAS to one thread (first call only) so results do not depend on the
// run's worker-thread setting.
void pin_blas_threads();

}  // namespace treewalk
