#pragma once

#include <optional>
#include <vector>

namespace ztcsense {

struct PwlPoint {
  double time = 0.0;
  double value = 0.0;
  bool operator==(const PwlPoint&) const = default;
};

/// Independent voltage source definition: DC level, optional piecewise-linear
/// time course and optional small-signal AC magnitude.
struct Waveform {
  double dc = 0.0;
  std::vector<PwlPoint> pwl;
  std::optional<double> ac_magnitude;

  bool operator==(const Waveform&) const = default;

  /// Value at time t. Without PWL points this is the DC level; before the first
  /// and after the last breakpoint the PWL is held constant.
  double value_at(double t) const;

  /// Shortest positive breakpoint spacing, or nullopt when there is none.
  std::optional<double> shortest_segment() const;

  bool has_pwl() const noexcept { return !pwl.empty(); }
};

}  // namespace ztcsense
