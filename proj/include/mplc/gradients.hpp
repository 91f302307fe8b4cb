#pragma once

#include <complex>
#include <vector>

#include "mplc/model.hpp"
#include "mplc/modeset.hpp"

namespace mplc {

/// Loss value plus analytic gradients for one batch of modes.
///
/// mask_grads[i] is empty when mask i+1 is untrainable (gradients for frozen
/// parameters are never computed); distance_grads entries for untrainable
/// distances stay zero.
struct GradientBundle {
  std::vector<std::vector<double>> mask_grads;   // N entries
  std::vector<double> distance_grads;            // N+1 entries
  double loss = 0.0;                             // 1 - mean(eta) over the batch
  std::vector<std::complex<double>> overlaps;    // <E_N, E_t> per batch mode
};

/// Per-mode bundles (batch size 1 each) for the given mode indices, computed
/// independently and in parallel. Slot order matches `indices`.
std::vector<GradientBundle> per_mode_gradients(const SpectralPropagator& prop,
                                               const MPLCModel& model, const ModeSet& modes,
                                               const std::vector<int>& indices);

/// Mini-batch loss L = (1/B) sum_b (1 - eta_b) and its gradients, one forward
/// plus one backward trace per mode.
GradientBundle loss_and_grads(const SpectralPropagator& prop, const MPLCModel& model,
                              const ModeSet& modes, const std::vector<int>& batch);

/// Mode-count-weighted mean of bundles. Aggregating the bundles of any
/// partition of the dataset reproduces the full-dataset bundle.
GradientBundle aggregate_gradients(const std::vector<GradientBundle>& bundles,
                                   const std::vector<int>& mode_counts);

/// Full-dataset loss (Eq.-(5) form, 1 - mean eta); forward passes only.
double dataset_loss(const SpectralPropagator& prop, const MPLCModel& model, const ModeSet& modes);

/// Per-mode coupling efficiencies |<E_N, E_t>|^2, forward passes only.
std::vector<double> per_mode_eta(const SpectralPropagator& prop, const MPLCModel& model,
                                 const ModeSet& modes);

}  // namespace mplc
