#pragma once

#include <map>
#include <vector>

#include "mplc/gradients.hpp"
#include "mplc/model.hpp"
#include "mplc/modeset.hpp"
#include "mplc/rng.hpp"
#include "mplc/stage.hpp"

namespace mplc {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second-moment accumulators for the trainable set of one stage.
struct AdamState {
  AdamConfig cfg;
  int t = 0;
  std::map<int, std::vector<double>> mask_m;  // keyed by 0-based mask index
  std::map<int, std::vector<double>> mask_v;
  std::vector<double> dist_m;  // N+1, only trainable entries used
  std::vector<double> dist_v;

  explicit AdamState(const MPLCModel& model, AdamConfig cfg = {});
};

/// One bias-corrected ADAM step on every trainable parameter in the bundle.
/// Phase masks use `lr_phase`; distances use `lr_distance` and are clamped to
/// z >= 0 afterwards. Distances within an equality group move by the mean of
/// their gradients. Throws StageError on non-finite gradients.
void adam_step(AdamState& state, MPLCModel& model, const GradientBundle& grads, double lr_phase,
               double lr_distance,
               const std::vector<std::vector<int>>& equal_distance_groups = {});

/// Analytic wavefront-matching update for mask i (1-based): sets each pixel
/// to minus the argument of the mode-summed phasor product of backward and
/// forward fields, which maximizes the aligned real matched sum. Pixels with
/// an exactly zero phasor sum keep their previous phase.
PhaseMask wfm_update(const SpectralPropagator& prop, const MPLCModel& model, const ModeSet& modes,
                     int mask_index);

enum class StopReason { kTolerance, kMaxIters };

struct StageResult {
  int iterations = 0;
  std::vector<double> loss_history;      // full-dataset loss after each iteration
  std::vector<double> mean_eta_history;  // 1 - loss
  std::vector<double> elapsed_history;   // seconds since stage start
  double final_loss = 0.0;
  StopReason stop_reason = StopReason::kTolerance;
};

/// Runs one stage until the relative full-dataset loss change drops below the
/// stage tolerance or max_iters is reached. An iteration is one epoch for
/// ADAM stages (mini-batch or aggregated) and one full mask sweep for WFM
/// stages. Sets the model's trainable flags from the stage.
StageResult run_stage(const SpectralPropagator& prop, MPLCModel& model, const ModeSet& modes,
                      const Stage& stage, Rng& rng);

}  // namespace mplc
