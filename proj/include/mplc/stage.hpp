#pragma once

#include <string>
#include <vector>

namespace mplc {

enum class StageMethod {
  kAdam,      // gradient updates on the stage's trainable set
  kWfmSweep,  // analytic wavefront-matching sweeps over the trainable masks
};

enum class GradientMode {
  kPerBatchUpdate,   // one ADAM step after every mini-batch
  kEpochAggregate,   // accumulate per-mode gradients over the epoch, one step
};

/// One training stage of a macro program.
struct Stage {
  std::string label;
  StageMethod method = StageMethod::kAdam;
  std::vector<int> trainable_masks;      // 1-based mask indices (phi_1..phi_N)
  std::vector<int> trainable_distances;  // 0-based distance indices (z_0..z_N)
  int batch_size = 0;                    // 0 = full dataset
  double learning_rate = 0.1;            // gamma, radians per unit scaled gradient
  double distance_rate_scale = 1e-3;     // gamma_z = gamma * scale (meters)
  double tolerance = 1e-3;               // epsilon for the relative-loss stop
  int max_iters = 10000;
  GradientMode gradient_mode = GradientMode::kPerBatchUpdate;
  std::vector<std::vector<int>> equal_distance_groups;  // 0-based distance indices

  void validate(int n_masks, int n_modes) const;
};

}  // namespace mplc
