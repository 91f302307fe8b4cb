#include "mplc/propagation.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include "mplc/common.hpp"

namespace mplc {

namespace {

// FFTW planner calls are not thread-safe; plan execution is.
std::mutex g_planner_mutex;

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

fftw_complex* as_fftw_const(const std::complex<double>* p) {
  // out-of-place c2c plans preserve their input
  return reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(p));
}

}  // namespace

SpectralPropagator::SpectralPropagator(const GridSpec& grid) : grid_(grid) {
  if (grid_.size() == 0) throw ConfigError("propagator: empty grid");

  const double k0 = grid_.k0();
  kz_.resize(grid_.size());
  for (int iy = 0; iy < grid_.ny; ++iy) {
    const double ky = grid_.ky(iy);
    for (int ix = 0; ix < grid_.nx; ++ix) {
      const double kx = grid_.kx(ix);
      const double arg = k0 * k0 - kx * kx - ky * ky;
      std::complex<double> kz;
      if (ix == 0 && iy == 0) {
        kz = {k0, 0.0};  // exact at DC
      } else if (arg >= 0.0) {
        kz = {std::sqrt(arg), 0.0};
      } else {
        kz = {0.0, std::sqrt(-arg)};  // evanescent: positive imaginary part
      }
      kz_[static_cast<std::size_t>(iy) * grid_.nx + ix] = kz;
    }
  }

  std::vector<std::complex<double>> scratch_in(grid_.size());
  std::vector<std::complex<double>> scratch_out(grid_.size());
  std::lock_guard<std::mutex> lock(g_planner_mutex);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;  // deterministic planning
  fwd_ = fftw_plan_dft_2d(grid_.ny, grid_.nx, as_fftw(scratch_in.data()),
                          as_fftw(scratch_out.data()), FFTW_FORWARD, flags);
  bwd_ = fftw_plan_dft_2d(grid_.ny, grid_.nx, as_fftw(scratch_in.data()),
                          as_fftw(scratch_out.data()), FFTW_BACKWARD, flags);
  if (!fwd_ || !bwd_) throw Error("propagator: FFTW plan creation failed");
}

SpectralPropagator::~SpectralPropagator() {
  std::lock_guard<std::mutex> lock(g_planner_mutex);
  if (fwd_) fftw_destroy_plan(fwd_);
  if (bwd_) fftw_destroy_plan(bwd_);
}

Spectrum SpectralPropagator::raw_fft(const std::complex<double>* in) const {
  Spectrum out(grid_.size());
  fftw_execute_dft(fwd_, as_fftw_const(in), as_fftw(out.data()));
  return out;
}

Spectrum SpectralPropagator::to_spectrum(const ComplexField& f) const {
  require_same_grid(f.grid, grid_, "to_spectrum");
  return raw_fft(f.v.data());
}

ComplexField SpectralPropagator::from_spectrum(const Spectrum& s) const {
  if (s.size() != grid_.size()) throw GridMismatchError("from_spectrum: size mismatch");
  ComplexField out(grid_);
  fftw_execute_dft(bwd_, as_fftw_const(s.data()), as_fftw(out.v.data()));
  const double inv_n = 1.0 / static_cast<double>(grid_.size());
  for (auto& c : out.v) c *= inv_n;
  return out;
}

std::shared_ptr<const Spectrum> SpectralPropagator::transfer(double z) const {
  if (z < 0.0) throw std::invalid_argument("propagate: negative distance rejected");
  const std::uint64_t key = std::bit_cast<std::uint64_t>(z);
  {
    std::shared_lock lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  auto h = std::make_shared<Spectrum>(grid_.size());
  for (std::size_t i = 0; i < kz_.size(); ++i) {
    // exp(i*(a+ib)z) = exp(-b z) * (cos(az) + i sin(az)); b >= 0 -> |h| <= 1
    const double phase = kz_[i].real() * z;
    const double att = std::exp(-kz_[i].imag() * z);
    (*h)[i] = std::complex<double>(att * std::cos(phase), att * std::sin(phase));
  }
  std::unique_lock lock(cache_mutex_);
  if (cache_.size() > 64) cache_.clear();  // distances change during training
  return cache_.try_emplace(key, std::move(h)).first->second;
}

Spectrum SpectralPropagator::transfer_derivative(double z) const {
  auto h = transfer(z);
  Spectrum d(grid_.size());
  for (std::size_t i = 0; i < kz_.size(); ++i) {
    d[i] = std::complex<double>(0.0, 1.0) * kz_[i] * (*h)[i];
  }
  return d;
}

ComplexField SpectralPropagator::propagate(const ComplexField& f, double z) const {
  require_same_grid(f.grid, grid_, "propagate");
  auto h = transfer(z);
  Spectrum s = raw_fft(f.v.data());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= (*h)[i];
  return from_spectrum(s);
}

ComplexField SpectralPropagator::propagate_adjoint(const ComplexField& f, double z) const {
  require_same_grid(f.grid, grid_, "propagate_adjoint");
  auto h = transfer(z);
  Spectrum s = raw_fft(f.v.data());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= std::conj((*h)[i]);
  return from_spectrum(s);
}

}  // namespace mplc
