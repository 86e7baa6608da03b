#include "bierl/hyperparams.hpp"

#include <cmath>
#include <string>

#include "bierl/errors.hpp"

namespace bierl {

namespace {

void check_range(const char* name, const HyperRange& r, bool allow_degenerate) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi))
    throw ConfigError(std::string("range for ") + name + " is not finite");
  if (r.lo > r.hi || (r.lo == r.hi && !allow_degenerate))
    throw ConfigError(std::string("range for ") + name + " needs lo < hi, got [" +
                      std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
}

}  // namespace

void HyperRanges::validate() const {
  check_range("sigma", sigma, allow_degenerate);
  check_range("alpha", alpha, allow_degenerate);
}

bool HyperParams::within(const HyperRanges& r) const noexcept {
  auto ok = [&](double v, const HyperRange& range) {
    return r.allow_degenerate && range.lo == range.hi ? v == range.lo : range.contains(v);
  };
  return ok(sigma, r.sigma) && ok(alpha, r.alpha);
}

double map_into_range(double o, const HyperRange& r, bool allow_degenerate) {
  if (r.lo == r.hi && allow_degenerate) return r.lo;
  if (!(r.lo < r.hi)) throw ConfigError("hyperparameter range needs lo < hi");
  double v = r.lo + o * (r.hi - r.lo);
  if (!(v > r.lo)) v = std::nextafter(r.lo, r.hi);
  if (!(v < r.hi)) v = std::nextafter(r.hi, r.lo);
  return v;
}

HyperParams HyperParams::from_unit(const std::array<double, 2>& u, const HyperRanges& r) {
  return {map_into_range(u[0], r.sigma, r.allow_degenerate),
          map_into_range(u[1], r.alpha, r.allow_degenerate)};
}

std::array<double, 2> HyperParams::to_unit(const HyperRanges& r) const {
  auto unit = [](double v, const HyperRange& range) {
    return range.hi == range.lo ? 0.5 : (v - range.lo) / (range.hi - range.lo);
  };
  return {unit(sigma, r.sigma), unit(alpha, r.alpha)};
}

}  // namespace bierl
