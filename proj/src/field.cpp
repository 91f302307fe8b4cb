#include "mplc/field.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mplc/common.hpp"

namespace mplc {

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) {
    throw GridMismatchError(std::string(what) + ": operands live on different grids");
  }
}

std::complex<double> inner_product(const ComplexField& a, const ComplexField& b) {
  require_same_grid(a.grid, b.grid, "inner_product");
  std::complex<double> acc(0.0, 0.0);
  const std::size_t n = a.v.size();
  for (std::size_t i = 0; i < n; ++i) acc += std::conj(a.v[i]) * b.v[i];
  return acc;
}

double total_power(const ComplexField& f) {
  double acc = 0.0;
  for (const auto& c : f.v) acc += std::norm(c);
  return acc;
}

ComplexField normalize(const ComplexField& f) {
  const double p = total_power(f);
  if (p <= 0.0) throw DegenerateFieldError("normalize: field has zero total power");
  ComplexField out = f;
  const double s = 1.0 / std::sqrt(p);
  for (auto& c : out.v) c *= s;
  return out;
}

namespace {

// Riemann-sum power deficit check against the continuous normalization.
void check_clipping(const ComplexField& f, double pitch, const char* what) {
  const double captured = total_power(f) * pitch * pitch;
  if (captured < 0.999) {
    warn(std::string(what) + ": " + std::to_string((1.0 - captured) * 100.0) +
         "% of mode power falls outside the grid");
  }
}

}  // namespace

ComplexField gaussian_spot(const GridSpec& grid, double x0, double y0, double waist) {
  if (waist <= 0.0) throw ConfigError("gaussian_spot: waist must be positive");
  if (std::abs(x0) > grid.extent_x() / 2 || std::abs(y0) > grid.extent_y() / 2) {
    throw ConfigError("gaussian_spot: center lies outside the grid extent");
  }
  if (waist < 2.0 * grid.pitch) {
    warn("gaussian_spot: waist " + std::to_string(waist) + " m under-resolved at pitch " +
         std::to_string(grid.pitch) + " m");
  }
  ComplexField f(grid);
  // continuous normalization so the clipping check is meaningful
  const double amp = std::sqrt(2.0 / (std::numbers::pi * waist * waist));
  const double inv_w2 = 1.0 / (waist * waist);
  for (int iy = 0; iy < grid.ny; ++iy) {
    const double dy = grid.y(iy) - y0;
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double dx = grid.x(ix) - x0;
      f.at(ix, iy) = amp * std::exp(-(dx * dx + dy * dy) * inv_w2);
    }
  }
  check_clipping(f, grid.pitch, "gaussian_spot");
  return normalize(f);
}

double hermite_polynomial(int k, double u) {
  double hkm1 = 1.0;  // H_0
  if (k == 0) return hkm1;
  double hk = 2.0 * u;  // H_1
  for (int j = 1; j < k; ++j) {
    const double hkp1 = 2.0 * u * hk - 2.0 * j * hkm1;
    hkm1 = hk;
    hk = hkp1;
  }
  return hk;
}

ComplexField hermite_gaussian(const GridSpec& grid, int m, int n, double waist, double x0,
                              double y0) {
  if (m < 0 || n < 0) throw ConfigError("hermite_gaussian: mode orders must be non-negative");
  if (waist <= 0.0) throw ConfigError("hermite_gaussian: waist must be positive");

  // 1D continuous normalization: (2/pi)^(1/4) / sqrt(2^m m! w0)
  auto norm_1d = [&](int order) {
    double fact = 1.0;
    for (int j = 2; j <= order; ++j) fact *= j;
    return std::pow(2.0 / std::numbers::pi, 0.25) / std::sqrt(std::ldexp(fact, order) * waist);
  };
  const double amp = norm_1d(m) * norm_1d(n);
  const double su = std::numbers::sqrt2 / waist;
  const double inv_w2 = 1.0 / (waist * waist);

  ComplexField f(grid);
  for (int iy = 0; iy < grid.ny; ++iy) {
    const double dy = grid.y(iy) - y0;
    const double hy = hermite_polynomial(n, su * dy);
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double dx = grid.x(ix) - x0;
      f.at(ix, iy) =
          amp * hermite_polynomial(m, su * dx) * hy * std::exp(-(dx * dx + dy * dy) * inv_w2);
    }
  }
  check_clipping(f, grid.pitch, "hermite_gaussian");
  return normalize(f);
}

}  // namespace mplc
