#pragma once

#include <cstdint>

#include "sbmre/equalizers.hpp"
#include "sbmre/model.hpp"

namespace sbmre {

struct SerEstimate {
  std::int64_t errors = 0;
  std::int64_t total = 0;

  /// errors / total.
  [[nodiscard]] double ser() const { return static_cast<double>(errors) / static_cast<double>(total); }
  /// As ser(), but 1/total when no error was observed, so a log stays finite.
  [[nodiscard]] double floored_ser() const {
    return errors > 0 ? ser() : 1.0 / static_cast<double>(total);
  }
};

/// Nearest QPSK point per entry. Zero components map to the positive side.
CMatrix qpsk_detect(const CMatrix& z);

struct Alignment {
  CMatrix aligned;  ///< C * streams over the region, zero elsewhere
  CMatrix C;        ///< T x T unmixing matrix
};

/// Truth-aided T x T linear unmixing, C = argmin sum_n |truth(n) - C est(n)|^2
/// over `region`. Evaluation-only resolution of blind ambiguities.
Alignment genie_align(const CMatrix& est, const CMatrix& truth, IndexRange region);

/// Symbol-exact comparison of every stream over `region`.
SerEstimate compute_ser(const CMatrix& detected, const CMatrix& truth, IndexRange region);

/// Data symbols that every detector is scored on: [max(N_p, N-1), N_s-1].
IndexRange data_region(const SystemConfig& cfg);

}  // namespace sbmre
