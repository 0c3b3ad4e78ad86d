#include "sbmre/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>

#include "sbmre/errors.hpp"

namespace sbmre::linalg {
namespace {

// Dense path below this size, shift-invert subspace iteration above it.
constexpr Index kIterativeMinDim = 200;
constexpr int kSubspaceMaxIter = 300;

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + ": expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

CMatrix checked_hermitian(const CMatrix& m, const char* what) {
  require_square(m, what);
  require_finite(m, what);
  const double scale = m.cwiseAbs().maxCoeff();
  const double skew = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (skew > 1e-9 * std::max(scale, 1e-300)) {
    throw DomainError(std::string(what) + ": matrix is not Hermitian (skew " + std::to_string(skew) +
                      ")");
  }
  return symmetrized(m);
}

EigPairs dense_smallest(const CMatrix& h, Index count) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) {
    throw NumericalError("hermitian eigensolver did not converge");
  }
  return {es.eigenvalues().head(count), es.eigenvectors().leftCols(count)};
}

CMatrix orthonormalized(const CMatrix& q) {
  Eigen::HouseholderQR<CMatrix> qr(q);
  return qr.householderQ() * CMatrix::Identity(q.rows(), q.cols());
}

// Block inverse iteration on (h + shift I). The Rayleigh-Ritz step is done
// on the inverse, so each sweep costs one block solve; h itself is only
// applied to the `count` wanted vectors for the residual test. Returns
// nothing if h is not numerically PSD or the sweep budget runs out.
std::optional<EigPairs> shift_invert_smallest(const CMatrix& h, Index count) {
  const Index n = h.rows();
  const double trace = h.trace().real();
  if (!(trace > 0.0)) return std::nullopt;

  CMatrix shifted = h;
  shifted.diagonal().array() += 1e-12 * trace / static_cast<double>(n);
  Eigen::LLT<CMatrix> llt(shifted);
  if (llt.info() != Eigen::Success) return std::nullopt;

  const Index block = std::min(n, count + std::max<Index>(count, 6));
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss;
  CMatrix q(n, block);
  for (Index j = 0; j < block; ++j) {
    for (Index i = 0; i < n; ++i) q(i, j) = Complex(gauss(rng), gauss(rng));
  }
  q = orthonormalized(q);

  const double tol = 1e-11 * h.norm();
  for (int sweep = 0; sweep < kSubspaceMaxIter; ++sweep) {
    const CMatrix y = llt.solve(q);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(symmetrized(q.adjoint() * y));
    if (es.info() != Eigen::Success) return std::nullopt;
    // Largest eigenvalues of the projected inverse come last.
    const CMatrix w = es.eigenvectors().rowwise().reverse();
    const CMatrix ritz = q * w.leftCols(count);
    const CMatrix h_ritz = h * ritz;
    Eigen::VectorXd values(count);
    bool converged = true;
    for (Index j = 0; j < count; ++j) {
      values(j) = ritz.col(j).dot(h_ritz.col(j)).real();
      converged = converged && (h_ritz.col(j) - values(j) * ritz.col(j)).norm() <= tol;
    }
    if (converged) return EigPairs{values, ritz};
    q = orthonormalized(y * w);
  }
  return std::nullopt;
}

std::optional<CMatrix> try_cholesky_solve(const CMatrix& h, const CMatrix& b, double ridge,
                                          bool demand_residual) {
  CMatrix a = h;
  a.diagonal().array() += ridge;
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd pivots = llt.matrixLLT().diagonal().real().cwiseAbs2();
  if (!(pivots.minCoeff() > 1e-14 * pivots.maxCoeff())) return std::nullopt;

  CMatrix x = llt.solve(b);
  // One step of refinement keeps the residual near machine precision on
  // moderately conditioned systems.
  x += llt.solve(b - a * x);
  const double bnorm = b.norm();
  const double resid = (a * x - b).norm();
  if (!x.allFinite()) return std::nullopt;
  if (demand_residual && resid > 1e-8 * bnorm) return std::nullopt;
  return x;
}

}  // namespace

void require_finite(const CMatrix& m, const char* what) {
  if (!m.allFinite()) {
    throw DomainError(std::string(what) + ": non-finite entries");
  }
}

CMatrix symmetrized(const CMatrix& m) { return (m + m.adjoint()) * 0.5; }

EigPair hermitian_smallest_eigpair(const CMatrix& m) {
  EigPairs pairs = hermitian_smallest_eigpairs(m, 1);
  return {pairs.values(0), pairs.vectors.col(0)};
}

EigPairs hermitian_smallest_eigpairs(const CMatrix& m, Index count) {
  const CMatrix h = checked_hermitian(m, "hermitian_smallest_eigpairs");
  if (count < 1 || count > h.rows()) {
    throw DimensionError("hermitian_smallest_eigpairs: requested " + std::to_string(count) +
                         " pairs of a " + std::to_string(h.rows()) + "-dim matrix");
  }
  if (h.rows() >= kIterativeMinDim) {
    if (auto pairs = shift_invert_smallest(h, count)) return *std::move(pairs);
  }
  return dense_smallest(h, count);
}

SolveResult solve_hpd(const CMatrix& m, const CMatrix& b, double ridge) {
  require_square(m, "solve_hpd");
  if (b.rows() != m.rows() || b.cols() == 0) {
    throw DimensionError("solve_hpd: rhs has " + std::to_string(b.rows()) + " rows, matrix " +
                         std::to_string(m.rows()));
  }
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw DomainError("solve_hpd: ridge must be finite and nonnegative");
  }
  require_finite(m, "solve_hpd");
  require_finite(b, "solve_hpd rhs");
  const CMatrix h = symmetrized(m);

  if (auto x = try_cholesky_solve(h, b, ridge, true)) return {*std::move(x), ridge, false};

  const double extra = 1e-10 * h.trace().real() / static_cast<double>(h.rows());
  if (extra > 0.0) {
    if (auto x = try_cholesky_solve(h, b, ridge + extra, false)) {
      return {*std::move(x), ridge + extra, true};
    }
  }
  throw NumericalError("solve_hpd: matrix is not positive definite after ridging");
}

SolveResult least_squares(const CMatrix& a, const CMatrix& b) {
  if (a.rows() == 0 || a.cols() == 0 || a.rows() < a.cols()) {
    throw DimensionError("least_squares: expected a tall matrix, got " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()));
  }
  if (b.rows() != a.rows()) {
    throw DimensionError("least_squares: row mismatch " + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()));
  }
  require_finite(a, "least_squares");
  require_finite(b, "least_squares rhs");

  Eigen::ColPivHouseholderQR<CMatrix> qr(a);
  if (qr.rank() == a.cols()) {
    return {qr.solve(b), 0.0, false};
  }
  SolveResult ridged = solve_hpd(a.adjoint() * a, a.adjoint() * b, 0.0);
  ridged.regularized = true;
  return ridged;
}

}  // namespace sbmre::linalg
