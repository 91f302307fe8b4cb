#pragma once

#include <vector>

namespace mplc {

/// Real-valued phase mask, radians, unwrapped/unbounded during optimization.
struct PhaseMask {
  int nx = 0;
  int ny = 0;
  std::vector<double> phi;

  PhaseMask() = default;
  PhaseMask(int nx_, int ny_) : nx(nx_), ny(ny_), phi(static_cast<std::size_t>(nx_) * ny_, 0.0) {}

  double& at(int ix, int iy) { return phi[static_cast<std::size_t>(iy) * nx + ix]; }
  double at(int ix, int iy) const { return phi[static_cast<std::size_t>(iy) * nx + ix]; }
  std::size_t size() const { return phi.size(); }
};

/// Cross-correlation magnitude of the masks' phasors:
/// S = |sum exp(i(phi1 - phi2))| / N_pixels, in [0, 1]. Invariant to adding a
/// constant to either mask.
double similarity(const PhaseMask& a, const PhaseMask& b);

/// Wraps to [-pi, pi).
double wrap_phase(double phi);
PhaseMask wrapped(const PhaseMask& mask);

}  // namespace mplc
