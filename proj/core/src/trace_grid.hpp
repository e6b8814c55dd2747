#pragma once

#include <cmath>
#include <cstddef>

#include "gridinertia/model.hpp"

namespace gridinertia::detail {

// Tolerance for mapping absolute times onto the sampling grid: a millionth
// of a step absorbs representation error without moving a boundary by a
// whole sample.
inline constexpr double kGridSnapEps = 1e-6;

/// Smallest k with time_at(k) >= t, up to grid snap. May be out of range.
inline std::ptrdiff_t index_at_or_after(const FrequencyTrace& trace, double t) {
  return static_cast<std::ptrdiff_t>(
      std::ceil((t - trace.t_start) / trace.dt - kGridSnapEps));
}

/// Largest k with time_at(k) <= t, up to grid snap. May be out of range.
inline std::ptrdiff_t index_at_or_before(const FrequencyTrace& trace, double t) {
  return static_cast<std::ptrdiff_t>(
      std::floor((t - trace.t_start) / trace.dt + kGridSnapEps));
}

}  // namespace gridinertia::detail
