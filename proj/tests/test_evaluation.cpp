#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <limits>

#include "doctest.h"
#include "mplc/common.hpp"
#include "mplc/evaluation.hpp"
#include "test_helpers.hpp"

using namespace mplc;

namespace {

ModeSet orthonormal_modeset(const GridSpec& g, int count, double waist = 24e-6) {
  // identity-converter problem: targets equal inputs (HG basis)
  ModeSet set;
  set.grid = g;
  const auto modes = hermite_gaussian_mode_list(count, true);
  for (const auto& mi : modes) {
    set.inputs.push_back(hermite_gaussian(g, mi.m, mi.n, waist));
    set.targets.push_back(set.inputs.back());
  }
  return set;
}

// fine grid so the HG basis is orthonormal well below 1e-8
GridSpec fine_grid() { return GridSpec(96, 96, 2e-6, 1.55e-6); }

}  // namespace

TEST_SUITE_BEGIN("evaluation");

TEST_CASE("coupling efficiency") {
  const GridSpec g = mplc_test::small_grid(64);
  const SpectralPropagator prop(g);
  const MPLCModel identity = MPLCModel::zeros(g, 1, {0.0, 0.0});
  const ComplexField e0 = hermite_gaussian(g, 0, 0, 40e-6);

  SUBCASE("identity model with matching target") {
    CHECK(coupling_efficiency(prop, identity, e0, e0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("orthogonal target gives zero") {
    const ComplexField hg10 = hermite_gaussian(g, 1, 0, 40e-6);
    CHECK(coupling_efficiency(prop, identity, e0, hg10) < 1e-10);
  }

  SUBCASE("unnormalized inputs are rejected") {
    ComplexField big = e0;
    for (auto& c : big.v) c *= 2.0;
    CHECK_THROWS_AS((void)coupling_efficiency(prop, identity, big, e0), Error);
    CHECK_THROWS_AS((void)coupling_efficiency(prop, identity, e0, big), Error);
  }
}

TEST_CASE("crosstalk matrix") {
  const GridSpec g = fine_grid();
  const SpectralPropagator prop(g);

  SUBCASE("perfect converter gives the identity matrix") {
    const MPLCModel identity = MPLCModel::zeros(g, 1, {0.0, 0.0});
    const ModeSet modes = orthonormal_modeset(g, 6);
    const CrosstalkMatrix ct = crosstalk_matrix(prop, identity, modes);
    for (int j = 0; j < 6; ++j) {
      for (int k = 0; k < 6; ++k) {
        const double expect = (j == k) ? 1.0 : 0.0;
        CHECK(std::abs(ct.power(j, k) - expect) < 1e-8);
      }
    }
    CHECK(insertion_loss_db(ct) == doctest::Approx(0.0).epsilon(1e-9));
  }

  SUBCASE("column power never exceeds unity") {
    Rng rng(71);
    const MPLCModel model = mplc_test::random_model(g, 2, rng);
    const ModeSet modes = orthonormal_modeset(g, 6);
    const CrosstalkMatrix ct = crosstalk_matrix(prop, model, modes);
    for (int k = 0; k < 6; ++k) {
      double col = 0.0;
      for (int j = 0; j < 6; ++j) col += ct.power(j, k);
      CHECK(col <= 1.0 + 1e-8);
    }
  }

  SUBCASE("single-mode matrix reduces to eta") {
    Rng rng(72);
    const MPLCModel model = mplc_test::random_model(g, 1, rng);
    ModeSet one;
    one.grid = g;
    one.inputs.push_back(hermite_gaussian(g, 0, 0, 40e-6));
    one.targets.push_back(hermite_gaussian(g, 1, 0, 40e-6));
    const CrosstalkMatrix ct = crosstalk_matrix(prop, model, one);
    REQUIRE(ct.m == 1);
    const double eta = coupling_efficiency(prop, model, one.inputs[0], one.targets[0]);
    CHECK(ct.power(0, 0) == doctest::Approx(eta).epsilon(1e-12));
  }
}

TEST_CASE("crosstalk eigenvalues and insertion loss") {
  SUBCASE("diagonal sqrt(0.5) -> 3.01 dB") {
    CrosstalkMatrix ct;
    ct.m = 4;
    ct.h.assign(16, {0.0, 0.0});
    for (int j = 0; j < 4; ++j) ct.h[static_cast<std::size_t>(j) * 4 + j] = std::sqrt(0.5);
    const auto eig = crosstalk_eigenvalues(ct);
    for (double e : eig) CHECK(e == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(insertion_loss_db(ct) == doctest::Approx(-10.0 * std::log10(0.5)).epsilon(1e-12));
    CHECK(insertion_loss_db(ct) == doctest::Approx(3.0103).epsilon(1e-4));
  }

  SUBCASE("zero matrix returns the +inf sentinel") {
    CrosstalkMatrix ct;
    ct.m = 3;
    ct.h.assign(9, {0.0, 0.0});
    CHECK(std::isinf(insertion_loss_db(ct)));
  }

  SUBCASE("eigensolver contract on a random transfer matrix") {
    Rng rng(73);
    const GridSpec g = fine_grid();
    const SpectralPropagator prop(g);
    const MPLCModel model = mplc_test::random_model(g, 2, rng);
    const ModeSet modes = orthonormal_modeset(g, 6);
    const CrosstalkMatrix ct = crosstalk_matrix(prop, model, modes);
    const auto eig = crosstalk_eigenvalues(ct);

    // real, sorted descending, inside [0, 1 + eps]
    for (std::size_t i = 0; i + 1 < eig.size(); ++i) CHECK(eig[i] >= eig[i + 1]);
    for (double e : eig) {
      CHECK(e >= -1e-10);
      CHECK(e <= 1.0 + 1e-8);
    }

    // mean eigenvalue equals trace(H^dag H)/M
    double trace = 0.0;
    for (int j = 0; j < ct.m; ++j) {
      for (int k = 0; k < ct.m; ++k) trace += ct.power(j, k);
    }
    double sum = 0.0;
    for (double e : eig) sum += e;
    CHECK(sum == doctest::Approx(trace).epsilon(1e-10));

    // independent route: squared singular values of H
    Eigen::MatrixXcd h(ct.m, ct.m);
    for (int j = 0; j < ct.m; ++j) {
      for (int k = 0; k < ct.m; ++k) h(j, k) = ct.at(j, k);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
    for (int i = 0; i < ct.m; ++i) {
      const double sv2 = svd.singularValues()(i) * svd.singularValues()(i);
      CHECK(std::abs(eig[static_cast<std::size_t>(i)] - sv2) < 1e-8);
    }
  }
}

TEST_CASE("sharpness") {
  Rng rng(74);
  const GridSpec g = mplc_test::small_grid(48);
  const SpectralPropagator prop(g);
  const MPLCModel model = mplc_test::random_model(g, 2, rng);
  const ModeSet modes = orthonormal_modeset(g, 3);

  SUBCASE("zero perturbation gives exactly zero") {
    const PerturbStats st = sharpness(prop, model, modes, 0.0, 5, 42);
    CHECK(st.mean == 0.0);
    CHECK(st.stddev == 0.0);
    const PerturbStats tol = optical_tolerance_db(prop, model, modes, 0.0, 5, 42);
    CHECK(tol.mean == 0.0);
    CHECK(tol.stddev == 0.0);
  }

  SUBCASE("deterministic for a fixed seed") {
    const PerturbStats a = sharpness(prop, model, modes, 0.05, 6, 1234);
    const PerturbStats b = sharpness(prop, model, modes, 0.05, 6, 1234);
    CHECK(a.mean == b.mean);
    CHECK(a.stddev == b.stddev);
  }

  SUBCASE("monotone in the perturbation level for shared seeds") {
    const PerturbStats lo = sharpness(prop, model, modes, 0.05, 8, 7);
    const PerturbStats hi = sharpness(prop, model, modes, 0.10, 8, 7);
    CHECK(hi.mean >= lo.mean);
  }

  SUBCASE("single instance has zero std") {
    const PerturbStats st = sharpness(prop, model, modes, 0.05, 1, 9);
    CHECK(st.stddev == 0.0);
    CHECK(st.mean > 0.0);
  }
}

TEST_CASE("evaluate_model is consistent with the standalone metrics") {
  Rng rng(75);
  const GridSpec g = mplc_test::small_grid(48);
  const SpectralPropagator prop(g);
  const MPLCModel model = mplc_test::random_model(g, 2, rng);
  const ModeSet modes = orthonormal_modeset(g, 3);

  const EvalReport report = evaluate_model(prop, model, modes, 0.05, 5, 99);
  CHECK(report.loss == doctest::Approx(dataset_loss(prop, model, modes)).epsilon(1e-14));

  const PerturbStats sh = sharpness(prop, model, modes, 0.05, 5, 99);
  CHECK(report.sharpness.mean == doctest::Approx(sh.mean).epsilon(1e-12));
  CHECK(report.sharpness.stddev == doctest::Approx(sh.stddev).epsilon(1e-12));

  const PerturbStats tol = optical_tolerance_db(prop, model, modes, 0.05, 5, 99);
  CHECK(report.tolerance_db.mean == doctest::Approx(tol.mean).epsilon(1e-12));
  CHECK(report.tolerance_db.stddev == doctest::Approx(tol.stddev).epsilon(1e-12));

  for (double e : report.eta) {
    CHECK(e >= 0.0);
    CHECK(e <= 1.0 + 1e-8);
  }
}

TEST_SUITE_END();
