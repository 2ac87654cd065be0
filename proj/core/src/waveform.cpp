#include "ztcsense/waveform.hpp"

#include <algorithm>

namespace ztcsense {

double Waveform::value_at(double t) const {
  if (pwl.empty()) return dc;
  if (t <= pwl.front().time) return pwl.front().value;
  if (t >= pwl.back().time) return pwl.back().value;
  auto hi = std::upper_bound(pwl.begin(), pwl.end(), t,
                             [](double x, const PwlPoint& p) { return x < p.time; });
  auto lo = hi - 1;
  const double span = hi->time - lo->time;
  if (span <= 0.0) return hi->value;
  const double frac = (t - lo->time) / span;
  // Exact at both breakpoints.
  if (frac == 0.0) return lo->value;
  return lo->value + frac * (hi->value - lo->value);
}

std::optional<double> Waveform::shortest_segment() const {
  std::optional<double> best;
  for (std::size_t i = 1; i < pwl.size(); ++i) {
    const double span = pwl[i].time - pwl[i - 1].time;
    if (span > 0.0 && (!best || span < *best)) best = span;
  }
  return best;
}

}  // namespace ztcsense
