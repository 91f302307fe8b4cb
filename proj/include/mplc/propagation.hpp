#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "mplc/field.hpp"

// opaque FFTW handles
struct fftw_plan_s;

namespace mplc {

using Spectrum = std::vector<std::complex<double>>;

/// Angular-spectrum free-space propagator on a fixed grid.
///
/// kz = sqrt(k0^2 - kx^2 - ky^2) on the propagating band; evanescent
/// components carry kz = i*sqrt(kx^2 + ky^2 - k0^2) so the transfer factor
/// exp(i*kz*z) attenuates (never amplifies) for z >= 0. Backward fields use
/// the conjugated transfer factor, not propagation over negative distances.
///
/// DFT convention: unnormalized forward, 1/N inverse. Transfer factors are
/// cached keyed by the bit pattern of z; the cache is safe for concurrent
/// reads with occasional exclusive inserts, so propagate() may be called from
/// multiple threads at once.
class SpectralPropagator {
 public:
  explicit SpectralPropagator(const GridSpec& grid);
  ~SpectralPropagator();

  SpectralPropagator(const SpectralPropagator&) = delete;
  SpectralPropagator& operator=(const SpectralPropagator&) = delete;

  const GridSpec& grid() const { return grid_; }

  /// Longitudinal wave vector per spectral pixel (DFT ordering; kz[0] = k0).
  const Spectrum& kz() const { return kz_; }

  /// F^-1 diag(exp(i kz z)) F. Requires z >= 0.
  ComplexField propagate(const ComplexField& f, double z) const;

  /// Conjugate-transpose of propagate: F^-1 diag(conj(exp(i kz z))) F.
  ComplexField propagate_adjoint(const ComplexField& f, double z) const;

  /// Cached transfer factors exp(i kz z), one per spectral pixel.
  std::shared_ptr<const Spectrum> transfer(double z) const;

  /// Elementwise d/dz of the transfer factor: i*kz*exp(i kz z).
  Spectrum transfer_derivative(double z) const;

  /// Unnormalized forward DFT of a field.
  Spectrum to_spectrum(const ComplexField& f) const;

  /// Inverse DFT (including the 1/N factor) back to a field.
  ComplexField from_spectrum(const Spectrum& s) const;

  /// Warms the transfer cache so later parallel lookups are read-only.
  void prefetch(double z) const { (void)transfer(z); }

 private:
  Spectrum raw_fft(const std::complex<double>* in) const;

  GridSpec grid_;
  Spectrum kz_;
  fftw_plan_s* fwd_ = nullptr;
  fftw_plan_s* bwd_ = nullptr;

  mutable std::shared_mutex cache_mutex_;
  mutable std::unordered_map<std::uint64_t, std::shared_ptr<const Spectrum>> cache_;
};

}  // namespace mplc
