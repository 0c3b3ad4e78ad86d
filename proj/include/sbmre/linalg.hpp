#pragma once

#include <complex>

#include <Eigen/Dense>

namespace sbmre::linalg {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

struct EigPair {
  double value = 0.0;
  CVector vector;  // unit norm, arbitrary phase
};

struct EigPairs {
  Eigen::VectorXd values;  // ascending
  CMatrix vectors;         // orthonormal columns
};

struct SolveResult {
  CMatrix x;
  double ridge = 0.0;         // ridge actually applied
  bool regularized = false;   // automatic ridge had to fire
};

// Throws DomainError when any entry is NaN or infinite.
void require_finite(const CMatrix& m, const char* what);

// (m + m^H) / 2.
CMatrix symmetrized(const CMatrix& m);

// Smallest eigenpair of a Hermitian matrix. The input is checked for
// Hermitian symmetry (1e-9 relative to the largest entry) and symmetrized.
EigPair hermitian_smallest_eigpair(const CMatrix& m);

// The `count` smallest eigenpairs. Large positive semidefinite inputs go
// through shift-invert subspace iteration, everything else through a dense
// Hermitian eigensolver.
EigPairs hermitian_smallest_eigpairs(const CMatrix& m, Index count);

// Solves (m + ridge I) x = b for Hermitian positive (semi)definite m.
// When the system is numerically singular a ridge of 1e-10 trace(m)/dim is
// added and `regularized` is set.
SolveResult solve_hpd(const CMatrix& m, const CMatrix& b, double ridge = 0.0);

// argmin_X ||a X - b||_F for tall a. Rank-deficient a falls back to the
// ridged normal equations.
SolveResult least_squares(const CMatrix& a, const CMatrix& b);

}  // namespace sbmre::linalg
