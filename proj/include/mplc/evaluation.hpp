#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "mplc/gradients.hpp"
#include "mplc/model.hpp"
#include "mplc/modeset.hpp"
#include "mplc/rng.hpp"

namespace mplc {

/// eta = |<E_N, E_t>|^2 for one input/target pair. Both fields must be
/// normalized (callers normalize explicitly).
double coupling_efficiency(const SpectralPropagator& prop, const MPLCModel& model,
                           const ComplexField& input, const ComplexField& target);

/// Complex transfer matrix h[j][k] = <E_t_j, forward(E0_k)>.
struct CrosstalkMatrix {
  int m = 0;
  std::vector<std::complex<double>> h;  // row-major m x m

  std::complex<double> at(int j, int k) const { return h[static_cast<std::size_t>(j) * m + k]; }
  double power(int j, int k) const { return std::norm(at(j, k)); }
};

CrosstalkMatrix crosstalk_matrix(const SpectralPropagator& prop, const MPLCModel& model,
                                 const ModeSet& modes);

/// Eigenvalues of H^dag H (squared singular values of H), real, descending.
std::vector<double> crosstalk_eigenvalues(const CrosstalkMatrix& ct);

/// IL = -10 log10(mean eigenvalue of H^dag H), dB. Zero matrix -> +infinity.
double insertion_loss_db(const CrosstalkMatrix& ct);

struct PerturbStats {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Copy of the model with every mask pixel shifted by U[-dphi, dphi],
/// i.i.d. across pixels, masks and instances.
MPLCModel perturbed_model(const MPLCModel& model, double dphi, Rng& rng);

/// Normalized loss change under K random phase perturbations:
/// dL_k = |L_perturbed - L| / (1 + |L|). Deterministic given the seed; the
/// same draws are regenerated by optical_tolerance_db for the same seed.
PerturbStats sharpness(const SpectralPropagator& prop, const MPLCModel& model,
                       const ModeSet& modes, double dphi, int k_instances, std::uint64_t seed);

/// dIL_k = |IL_perturbed - IL| in dB over the same K perturbation draws.
PerturbStats optical_tolerance_db(const SpectralPropagator& prop, const MPLCModel& model,
                                  const ModeSet& modes, double dphi, int k_instances,
                                  std::uint64_t seed);

struct EvalReport {
  std::vector<double> eta;        // per mode
  double loss = 0.0;              // 1 - mean eta
  PerturbStats sharpness;         // dL
  double insertion_loss_db = 0.0;
  PerturbStats tolerance_db;      // dIL
  double dphi = 0.0;
  int k_instances = 0;
  std::uint64_t seed = 0;
  CrosstalkMatrix crosstalk;
};

/// Full metric suite in one pass: base crosstalk plus K perturbed crosstalks
/// shared between the sharpness and tolerance statistics.
EvalReport evaluate_model(const SpectralPropagator& prop, const MPLCModel& model,
                          const ModeSet& modes, double dphi, int k_instances, std::uint64_t seed);

}  // namespace mplc
