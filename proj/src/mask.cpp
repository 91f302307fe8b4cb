#include "mplc/mask.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "mplc/common.hpp"

namespace mplc {

double similarity(const PhaseMask& a, const PhaseMask& b) {
  if (a.nx != b.nx || a.ny != b.ny) {
    throw GridMismatchError("similarity: mask dimensions differ");
  }
  std::complex<double> acc(0.0, 0.0);
  for (std::size_t i = 0; i < a.phi.size(); ++i) {
    const double d = a.phi[i] - b.phi[i];
    acc += std::complex<double>(std::cos(d), std::sin(d));
  }
  return std::abs(acc) / static_cast<double>(a.phi.size());
}

double wrap_phase(double phi) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = phi - two_pi * std::floor((phi + std::numbers::pi) / two_pi);
  // guard against FP rounding pushing the result onto +pi
  if (w >= std::numbers::pi) w -= two_pi;
  return w;
}

PhaseMask wrapped(const PhaseMask& mask) {
  PhaseMask out = mask;
  for (auto& p : out.phi) p = wrap_phase(p);
  return out;
}

}  // namespace mplc
