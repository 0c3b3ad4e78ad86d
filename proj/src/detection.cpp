#include "sbmre/detection.hpp"

#include <algorithm>
#include <string>

#include "sbmre/errors.hpp"

namespace sbmre {
namespace {

void require_region(const CMatrix& m, IndexRange region, const char* what) {
  if (region.size() < 1) throw DomainError(std::string(what) + ": empty region");
  if (region.first < 0 || region.last >= m.cols()) {
    throw DimensionError(std::string(what) + ": region [" + std::to_string(region.first) + ", " +
                         std::to_string(region.last) + "] outside " + std::to_string(m.cols()) + " samples");
  }
}

bool same_point(Complex a, Complex b) {
  return (a.real() < 0.0) == (b.real() < 0.0) && (a.imag() < 0.0) == (b.imag() < 0.0);
}

}  // namespace

CMatrix qpsk_detect(const CMatrix& z) {
  linalg::require_finite(z, "qpsk_detect");
  return z.unaryExpr([](const Complex& v) {
    return Complex(v.real() < 0.0 ? -kQpskAmplitude : kQpskAmplitude,
                   v.imag() < 0.0 ? -kQpskAmplitude : kQpskAmplitude);
  });
}

Alignment genie_align(const CMatrix& est, const CMatrix& truth, IndexRange region) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols()) {
    throw DimensionError("genie_align: estimated and true streams differ in shape");
  }
  require_region(est, region, "genie_align");
  if (region.size() < est.rows()) throw DomainError("genie_align: region shorter than the stream count");

  // truth^H ~ est^H C^H over the region.
  const auto e = est.middleCols(region.first, region.size());
  const auto s = truth.middleCols(region.first, region.size());
  const auto fit = linalg::least_squares(e.adjoint(), s.adjoint());
  if (fit.regularized) throw NumericalError("genie_align: estimated streams are rank deficient");

  Alignment out{CMatrix::Zero(est.rows(), est.cols()), fit.x.adjoint()};
  out.aligned.middleCols(region.first, region.size()) = out.C * e;
  return out;
}

SerEstimate compute_ser(const CMatrix& detected, const CMatrix& truth, IndexRange region) {
  if (detected.rows() != truth.rows() || detected.cols() != truth.cols()) {
    throw DimensionError("compute_ser: detected and true streams differ in shape");
  }
  require_region(detected, region, "compute_ser");
  SerEstimate est{0, static_cast<std::int64_t>(detected.rows()) * region.size()};
  for (Index t = 0; t < detected.rows(); ++t) {
    for (int n = region.first; n <= region.last; ++n) {
      if (!same_point(detected(t, n), truth(t, n))) ++est.errors;
    }
  }
  return est;
}

IndexRange data_region(const SystemConfig& cfg) {
  return {std::max(cfg.Np, cfg.N - 1), cfg.Ns - 1};
}

}  // namespace sbmre
