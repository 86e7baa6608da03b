#pragma once

#include <array>
#include <cstddef>

namespace bierl {

/// Open interval (lo, hi) a hyperparameter must stay inside.
struct HyperRange {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double v) const noexcept { return lo < v && v < hi; }
  double midpoint() const noexcept { return lo + 0.5 * (hi - lo); }
  double width() const noexcept { return hi - lo; }
};

/// Ranges for the adapted quantities. `allow_degenerate` lets lo == hi, which
/// pins the value to lo; it exists for tests that need a zero step.
struct HyperRanges {
  HyperRange sigma{0.01, 0.10};
  HyperRange alpha{0.016, 0.024};
  bool allow_degenerate = false;

  static constexpr std::size_t kCount = 2;

  /// Throws ConfigError when a range is empty or inverted.
  void validate() const;
  const HyperRange& operator[](std::size_t i) const { return i == 0 ? sigma : alpha; }
};

/// H = (sigma, alpha): inner-level noise scale and learning rate.
struct HyperParams {
  double sigma = 0.05;
  double alpha = 0.02;

  bool within(const HyperRanges& r) const noexcept;

  /// Map a point u in [0,1]^2 to ranges and back. The forward map is
  /// nudged so the result is strictly inside each open range.
  static HyperParams from_unit(const std::array<double, 2>& u, const HyperRanges& r);
  std::array<double, 2> to_unit(const HyperRanges& r) const;
};

/// lo + o * (hi - lo), forced strictly inside (lo, hi) when rounding or a
/// saturated o would land on an endpoint.
double map_into_range(double o, const HyperRange& r, bool allow_degenerate = false);

}  // namespace bierl
