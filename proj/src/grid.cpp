#include "mplc/grid.hpp"

#include <numbers>
#include <string>

#include "mplc/common.hpp"

namespace mplc {

GridSpec::GridSpec(int nx_, int ny_, double pitch_, double wavelength_)
    : nx(nx_), ny(ny_), pitch(pitch_), wavelength(wavelength_) {
  if (nx < 2 || ny < 2) {
    throw ConfigError("grid must have at least 2x2 pixels, got " + std::to_string(nx) + "x" +
                      std::to_string(ny));
  }
  if (pitch <= 0.0) throw ConfigError("grid pitch must be positive");
  if (wavelength <= 0.0) throw ConfigError("wavelength must be positive");
}

double GridSpec::k0() const { return 2.0 * std::numbers::pi / wavelength; }

double GridSpec::kx(int ix) const {
  const int f = (2 * ix < nx) ? ix : ix - nx;
  return 2.0 * std::numbers::pi * f / (nx * pitch);
}

double GridSpec::ky(int iy) const {
  const int f = (2 * iy < ny) ? iy : iy - ny;
  return 2.0 * std::numbers::pi * f / (ny * pitch);
}

}  // namespace mplc
