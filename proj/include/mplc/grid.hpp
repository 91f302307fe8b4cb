#pragma once

#include <cstddef>

namespace mplc {

/// Uniform 2D sampling grid shared by fields, masks and propagators.
///
/// Real-space origin sits at pixel (nx/2, ny/2). Spatial frequencies follow
/// DFT ordering: kx(0) = 0 and the axis spans [-pi/pitch, pi/pitch).
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double pitch = 0.0;       // pixel size, meters
  double wavelength = 0.0;  // vacuum wavelength, meters

  GridSpec() = default;
  GridSpec(int nx_, int ny_, double pitch_, double wavelength_);

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }

  double k0() const;  // vacuum wave number 2*pi/lambda, rad/m

  // pixel-center coordinates, meters
  double x(int ix) const { return (ix - nx / 2) * pitch; }
  double y(int iy) const { return (iy - ny / 2) * pitch; }
  double extent_x() const { return nx * pitch; }
  double extent_y() const { return ny * pitch; }

  // DFT-ordered spatial frequencies, rad/m
  double kx(int ix) const;
  double ky(int iy) const;

  bool operator==(const GridSpec&) const = default;
};

}  // namespace mplc
