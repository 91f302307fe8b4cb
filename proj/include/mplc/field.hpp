#pragma once

#include <complex>
#include <vector>

#include "mplc/grid.hpp"

namespace mplc {

/// Discretized complex optical field. Row-major storage, v[iy*nx + ix].
struct ComplexField {
  GridSpec grid;
  std::vector<std::complex<double>> v;

  ComplexField() = default;
  explicit ComplexField(const GridSpec& g) : grid(g), v(g.size()) {}

  std::complex<double>& at(int ix, int iy) { return v[static_cast<std::size_t>(iy) * grid.nx + ix]; }
  const std::complex<double>& at(int ix, int iy) const {
    return v[static_cast<std::size_t>(iy) * grid.nx + ix];
  }
};

/// Discrete inner product sum(conj(a).b). No pitch^2 area weighting; all
/// reported metrics act on normalized fields so the choice cancels.
std::complex<double> inner_product(const ComplexField& a, const ComplexField& b);

/// Total discrete power sum(|v|^2).
double total_power(const ComplexField& f);

/// Scales so that <out,out> = 1. Throws DegenerateFieldError on zero input.
ComplexField normalize(const ComplexField& f);

/// Normalized flat-phase Gaussian exp(-((x-x0)^2+(y-y0)^2)/w0^2).
/// Warns when the waist is under-resolved (w0 < 2*pitch) or when more than
/// 0.1% of the analytic power falls outside the grid.
ComplexField gaussian_spot(const GridSpec& grid, double x0, double y0, double waist);

/// Normalized Hermite-Gaussian mode HG_{mn} at its waist plane:
/// H_m(sqrt(2)x/w0) H_n(sqrt(2)y/w0) exp(-(x^2+y^2)/w0^2), flat phase.
/// Warns when more than 0.1% of the analytic power is clipped by the grid.
ComplexField hermite_gaussian(const GridSpec& grid, int m, int n, double waist, double x0 = 0.0,
                              double y0 = 0.0);

/// Physicists' Hermite polynomial H_k(u) by the three-term recurrence.
double hermite_polynomial(int k, double u);

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

}  // namespace mplc
