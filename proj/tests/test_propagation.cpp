#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "mplc/common.hpp"
#include "mplc/propagation.hpp"
#include "mplc/rng.hpp"
#include "test_helpers.hpp"

using namespace mplc;

TEST_SUITE_BEGIN("propagation");

TEST_CASE("kz layout and invariants") {
  const GridSpec g = mplc_test::small_grid(32);
  const SpectralPropagator prop(g);
  const double k0 = g.k0();

  CHECK(prop.kz()[0] == std::complex<double>(k0, 0.0));  // exact at DC
  for (const auto& kz : prop.kz()) {
    CHECK(kz.real() >= 0.0);
    CHECK(kz.imag() >= 0.0);
    if (kz.imag() == 0.0) CHECK(std::abs(kz) <= k0 * (1 + 1e-15));
  }
}

TEST_CASE("transfer factor magnitude never exceeds 1") {
  // pitch below lambda/2 so an evanescent band exists
  const GridSpec g(32, 32, 0.5e-6, 1.55e-6);
  const SpectralPropagator prop(g);
  bool has_evanescent = false;
  for (const auto& kz : prop.kz()) has_evanescent |= kz.imag() > 0.0;
  CHECK(has_evanescent);
  for (double z : {0.0, 1e-6, 1e-3}) {
    auto h = prop.transfer(z);
    for (const auto& v : *h) CHECK(std::abs(v) <= 1.0 + 1e-12);
  }
  // evanescent attenuation grows with distance
  auto h1 = prop.transfer(1e-6);
  auto h2 = prop.transfer(2e-6);
  for (std::size_t i = 0; i < prop.kz().size(); ++i) {
    if (prop.kz()[i].imag() > 0.0) CHECK(std::abs((*h2)[i]) < std::abs((*h1)[i]));
  }
}

TEST_CASE("propagate identity at z = 0") {
  Rng rng(21);
  const GridSpec g = mplc_test::small_grid(64);
  const SpectralPropagator prop(g);
  const ComplexField e = mplc_test::random_field(g, rng);
  const ComplexField out = prop.propagate(e, 0.0);
  for (std::size_t i = 0; i < e.v.size(); ++i) CHECK(std::abs(out.v[i] - e.v[i]) < 1e-12);
}

TEST_CASE("negative distance rejected") {
  const GridSpec g = mplc_test::small_grid(16);
  const SpectralPropagator prop(g);
  ComplexField e(g);
  e.v[0] = 1.0;
  CHECK_THROWS_AS((void)prop.propagate(e, -1e-6), std::invalid_argument);
}

TEST_CASE("uniform field picks up exp(i k0 z)") {
  const GridSpec g = mplc_test::small_grid(32);
  const SpectralPropagator prop(g);
  ComplexField e(g);
  for (auto& c : e.v) c = std::complex<double>(1.0 / 32.0, 0.0);
  const double z = 2.7e-3;
  const ComplexField out = prop.propagate(e, z);
  const std::complex<double> expected =
      std::complex<double>(1.0 / 32.0, 0.0) *
      std::exp(std::complex<double>(0.0, g.k0() * z));
  for (const auto& c : out.v) CHECK(std::abs(c - expected) < 1e-12);
  CHECK(total_power(out) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gaussian beam expansion matches the analytic radius") {
  // w(z) = w0 sqrt(1 + (z/zR)^2), zR = pi w0^2 / lambda
  const GridSpec g(512, 512, 3e-6, 1.55e-6);
  const SpectralPropagator prop(g);
  const double w0 = 50e-6;
  const double z = 6e-3;
  const double zr = std::numbers::pi * w0 * w0 / g.wavelength;
  const double w_analytic = w0 * std::sqrt(1.0 + (z / zr) * (z / zr));

  const ComplexField beam = gaussian_spot(g, 0.0, 0.0, w0);
  const ComplexField out = prop.propagate(beam, z);

  // 1/e^2 intensity radius from the second moment: w = 2 sigma
  double pw = 0.0, mx2 = 0.0;
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const double p = std::norm(out.at(ix, iy));
      pw += p;
      mx2 += p * g.x(ix) * g.x(ix);
    }
  }
  const double w_numeric = 2.0 * std::sqrt(mx2 / pw);
  CHECK(w_numeric == doctest::Approx(w_analytic).epsilon(0.01));
}

TEST_CASE("group property") {
  Rng rng(22);
  const GridSpec g = mplc_test::small_grid(64);
  const SpectralPropagator prop(g);
  const ComplexField e = mplc_test::random_field(g, rng);
  const ComplexField two_step = prop.propagate(prop.propagate(e, 1.3e-3), 2.4e-3);
  const ComplexField one_step = prop.propagate(e, 3.7e-3);
  for (std::size_t i = 0; i < e.v.size(); ++i) {
    CHECK(std::abs(two_step.v[i] - one_step.v[i]) < 1e-10);
  }
}

TEST_CASE("unitarity on the propagating band") {
  Rng rng(23);
  const GridSpec g = mplc_test::small_grid(64);  // fully propagating grid
  const SpectralPropagator prop(g);
  const ComplexField e = mplc_test::random_field(g, rng);
  for (double z : {0.5e-3, 4e-3, 25e-3}) {
    CHECK(std::abs(total_power(prop.propagate(e, z)) - 1.0) < 1e-10);
  }
}

TEST_CASE("adjoint identity") {
  Rng rng(24);
  const GridSpec g = mplc_test::small_grid(48);
  const SpectralPropagator prop(g);
  const ComplexField a = mplc_test::random_field(g, rng);
  const ComplexField b = mplc_test::random_field(g, rng);
  const double z = 3.3e-3;
  const auto lhs = inner_product(prop.propagate(a, z), b);
  const auto rhs = inner_product(a, prop.propagate_adjoint(b, z));
  CHECK(std::abs(lhs - rhs) < 1e-10);
}

TEST_CASE("adjoint never amplifies evanescent content") {
  Rng rng(29);
  const GridSpec g(32, 32, 0.5e-6, 1.55e-6);
  const SpectralPropagator prop(g);
  const ComplexField e = mplc_test::random_field(g, rng);
  CHECK(total_power(prop.propagate_adjoint(e, 5e-6)) <= 1.0 + 1e-12);
}

TEST_CASE("linearity") {
  Rng rng(25);
  const GridSpec g = mplc_test::small_grid(32);
  const SpectralPropagator prop(g);
  const ComplexField a = mplc_test::random_field(g, rng);
  const ComplexField b = mplc_test::random_field(g, rng);
  const std::complex<double> alpha(0.3, -1.1), beta(-0.7, 0.2);
  ComplexField mix(g);
  for (std::size_t i = 0; i < mix.v.size(); ++i) mix.v[i] = alpha * a.v[i] + beta * b.v[i];
  const double z = 2e-3;
  const ComplexField lhs = prop.propagate(mix, z);
  const ComplexField pa = prop.propagate(a, z);
  const ComplexField pb = prop.propagate(b, z);
  for (std::size_t i = 0; i < mix.v.size(); ++i) {
    CHECK(std::abs(lhs.v[i] - (alpha * pa.v[i] + beta * pb.v[i])) < 1e-12);
  }
}

TEST_CASE("transfer derivative") {
  const GridSpec g = mplc_test::small_grid(32);
  const SpectralPropagator prop(g);

  SUBCASE("DC value at z = 0 is i*k0") {
    const Spectrum d = prop.transfer_derivative(0.0);
    CHECK(std::abs(d[0] - std::complex<double>(0.0, g.k0())) < 1e-9);
  }

  SUBCASE("central differences") {
    // differencing exp(i kz z) carries kz^2 h^2/6 truncation; a long
    // wavelength keeps the oracle itself below the 1e-6 tolerance
    const GridSpec gl(32, 32, 12e-6, 6e-6);
    const SpectralPropagator pl(gl);
    const double z = 4e-3;
    const double h = 1e-9;
    const Spectrum d = pl.transfer_derivative(z);
    const auto hp = pl.transfer(z + h);
    const auto hm = pl.transfer(z - h);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const std::complex<double> fd = ((*hp)[i] - (*hm)[i]) / (2.0 * h);
      CHECK(std::abs(fd - d[i]) / std::abs(d[i]) < 1e-6);
    }
  }

  SUBCASE("evanescent derivative decays with z") {
    const GridSpec ge(16, 16, 0.5e-6, 1.55e-6);
    const SpectralPropagator pe(ge);
    const Spectrum d1 = pe.transfer_derivative(1e-6);
    const Spectrum d2 = pe.transfer_derivative(3e-6);
    for (std::size_t i = 0; i < d1.size(); ++i) {
      if (pe.kz()[i].imag() > 0.0) CHECK(std::abs(d2[i]) < std::abs(d1[i]));
    }
  }
}

TEST_CASE("spectrum round trip") {
  Rng rng(26);
  const GridSpec g = mplc_test::small_grid(32);
  const SpectralPropagator prop(g);
  const ComplexField e = mplc_test::random_field(g, rng);
  const ComplexField back = prop.from_spectrum(prop.to_spectrum(e));
  for (std::size_t i = 0; i < e.v.size(); ++i) CHECK(std::abs(back.v[i] - e.v[i]) < 1e-13);
}

TEST_SUITE_END();
