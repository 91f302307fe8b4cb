#include "mplc/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "mplc/common.hpp"
#include "mplc/macro.hpp"

namespace mplc {

void Stage::validate(int n_masks, int n_modes) const {
  auto check_unique = [](std::vector<int> v, const char* what) {
    std::sort(v.begin(), v.end());
    if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
      throw ConfigError(std::string("stage: duplicate ") + what + " index");
    }
  };
  for (int i : trainable_masks) {
    if (i < 1 || i > n_masks) {
      throw ConfigError("stage: mask index " + std::to_string(i) + " outside 1.." +
                        std::to_string(n_masks));
    }
  }
  for (int d : trainable_distances) {
    if (d < 0 || d > n_masks) {
      throw ConfigError("stage: distance index " + std::to_string(d) + " outside 0.." +
                        std::to_string(n_masks));
    }
  }
  check_unique(trainable_masks, "mask");
  check_unique(trainable_distances, "distance");
  if (trainable_masks.empty() && trainable_distances.empty()) {
    throw ConfigError("stage: trainable set is empty");
  }
  if (batch_size < 0 || batch_size > n_modes) {
    throw ConfigError("stage: batch size " + std::to_string(batch_size) + " exceeds mode count " +
                      std::to_string(n_modes));
  }
  if (!(tolerance > 0.0)) throw ConfigError("stage: tolerance must be positive");
  if (max_iters < 1) throw ConfigError("stage: max_iters must be >= 1");
  if (method == StageMethod::kAdam && !(learning_rate > 0.0)) {
    throw ConfigError("stage: learning rate must be positive");
  }
  if (method == StageMethod::kWfmSweep) {
    if (!trainable_distances.empty()) {
      throw ConfigError("stage: wfm sweeps cannot train distances");
    }
    if (batch_size != 0 && batch_size != n_modes) {
      throw ConfigError("stage: wfm sweeps use the full dataset");
    }
  }
  for (const auto& group : equal_distance_groups) {
    if (group.size() < 2) throw ConfigError("stage: distance-equality group needs >= 2 members");
    for (int d : group) {
      if (std::find(trainable_distances.begin(), trainable_distances.end(), d) ==
          trainable_distances.end()) {
        throw ConfigError("stage: equality group member z_" + std::to_string(d) +
                          " is not trainable in this stage");
      }
    }
  }
}

AdamState::AdamState(const MPLCModel& model, AdamConfig cfg_) : cfg(cfg_) {
  for (int i = 0; i < model.mask_count(); ++i) {
    if (!model.trainable_masks[static_cast<std::size_t>(i)]) continue;
    mask_m[i].assign(model.masks[static_cast<std::size_t>(i)].size(), 0.0);
    mask_v[i].assign(model.masks[static_cast<std::size_t>(i)].size(), 0.0);
  }
  dist_m.assign(model.distances.size(), 0.0);
  dist_v.assign(model.distances.size(), 0.0);
}

void adam_step(AdamState& state, MPLCModel& model, const GradientBundle& grads, double lr_phase,
               double lr_distance, const std::vector<std::vector<int>>& equal_distance_groups) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.cfg.beta1, state.t);
  const double bc2 = 1.0 - std::pow(state.cfg.beta2, state.t);
  const double b1 = state.cfg.beta1;
  const double b2 = state.cfg.beta2;
  const double eps = state.cfg.eps;

  for (auto& [idx, m] : state.mask_m) {
    const auto& g = grads.mask_grads[static_cast<std::size_t>(idx)];
    if (g.size() != m.size()) {
      throw StageError("adam: gradient missing for trainable mask " + std::to_string(idx + 1));
    }
    auto& v = state.mask_v[idx];
    auto& phi = model.masks[static_cast<std::size_t>(idx)].phi;
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (!std::isfinite(g[p])) {
        throw StageError("adam: non-finite gradient on mask " + std::to_string(idx + 1));
      }
      m[p] = b1 * m[p] + (1.0 - b1) * g[p];
      v[p] = b2 * v[p] + (1.0 - b2) * g[p] * g[p];
      phi[p] -= lr_phase * (m[p] / bc1) / (std::sqrt(v[p] / bc2) + eps);
    }
  }

  std::vector<double> g_z = grads.distance_grads;
  for (const auto& group : equal_distance_groups) {
    double mean = 0.0;
    for (int d : group) mean += g_z[static_cast<std::size_t>(d)];
    mean /= static_cast<double>(group.size());
    for (int d : group) g_z[static_cast<std::size_t>(d)] = mean;
  }
  for (std::size_t d = 0; d < model.distances.size(); ++d) {
    if (!model.trainable_distances[d]) continue;
    if (!std::isfinite(g_z[d])) {
      throw StageError("adam: non-finite gradient on distance z_" + std::to_string(d));
    }
    state.dist_m[d] = b1 * state.dist_m[d] + (1.0 - b1) * g_z[d];
    state.dist_v[d] = b2 * state.dist_v[d] + (1.0 - b2) * g_z[d] * g_z[d];
    model.distances[d] -=
        lr_distance * (state.dist_m[d] / bc1) / (std::sqrt(state.dist_v[d] / bc2) + eps);
    if (model.distances[d] < 0.0) model.distances[d] = 0.0;  // physical clamp
  }
}

PhaseMask wfm_update(const SpectralPropagator& prop, const MPLCModel& model, const ModeSet& modes,
                     int mask_index) {
  const int n = model.mask_count();
  if (mask_index < 1 || mask_index > n) throw Error("wfm_update: mask index out of range");
  if (modes.size() < 1) throw Error("wfm_update: empty modeset");
  require_same_grid(modes.grid, model.grid, "wfm_update");
  for (double z : model.distances) prop.prefetch(z);

  const int m_count = modes.size();
  const std::size_t pixels = model.grid.size();
  std::vector<std::vector<std::complex<double>>> products(static_cast<std::size_t>(m_count));

#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < m_count; ++j) {
    // forward field at mask i, before modulation
    ComplexField eps = modes.inputs[static_cast<std::size_t>(j)];
    for (int k = 1; k < mask_index; ++k) eps = apply_layer(prop, model, k, eps);
    eps = prop.propagate(eps, model.distances[static_cast<std::size_t>(mask_index) - 1]);
    // adjoint of the chain after mask i's modulation, applied to the target
    ComplexField zeta =
        prop.propagate_adjoint(modes.targets[static_cast<std::size_t>(j)], model.distances.back());
    for (int k = n - 1; k >= mask_index; --k) {
      modulate_conj(zeta, model.masks[static_cast<std::size_t>(k)]);
      zeta = prop.propagate_adjoint(zeta, model.distances[static_cast<std::size_t>(k)]);
    }
    auto& prod = products[static_cast<std::size_t>(j)];
    prod.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) prod[p] = std::conj(zeta.v[p]) * eps.v[p];
  }

  // mode-summed phasor in deterministic mode order
  std::vector<std::complex<double>> s(pixels, {0.0, 0.0});
  for (int j = 0; j < m_count; ++j) {
    const auto& prod = products[static_cast<std::size_t>(j)];
    for (std::size_t p = 0; p < pixels; ++p) s[p] += prod[p];
  }

  PhaseMask out = model.masks[static_cast<std::size_t>(mask_index) - 1];
  for (std::size_t p = 0; p < pixels; ++p) {
    if (s[p].real() != 0.0 || s[p].imag() != 0.0) {
      out.phi[p] = std::atan2(-s[p].imag(), s[p].real());  // -arg(s)
    }
  }
  return out;
}

namespace {

class StageRunner {
 public:
  StageRunner(const SpectralPropagator& prop, MPLCModel& model, const ModeSet& modes,
              const Stage& stage, Rng& rng)
      : prop_(prop), model_(model), modes_(modes), stage_(stage), rng_(rng),
        start_(std::chrono::steady_clock::now()) {}

  StageResult run() {
    stage_.validate(model_.mask_count(), modes_.size());
    apply_trainable_flags();
    snap_equality_groups();

    loss_prev_ = dataset_loss(prop_, model_, modes_);
    best_ = loss_prev_;

    if (stage_.method == StageMethod::kWfmSweep) {
      run_wfm();
    } else if (full_batch() || stage_.gradient_mode == GradientMode::kEpochAggregate) {
      run_adam_aggregated();
    } else {
      run_adam_per_batch();
    }
    result_.final_loss = result_.loss_history.empty() ? loss_prev_ : result_.loss_history.back();
    return result_;
  }

 private:
  bool full_batch() const {
    return stage_.batch_size == 0 || stage_.batch_size >= modes_.size();
  }

  void apply_trainable_flags() {
    std::fill(model_.trainable_masks.begin(), model_.trainable_masks.end(), false);
    std::fill(model_.trainable_distances.begin(), model_.trainable_distances.end(), false);
    for (int i : stage_.trainable_masks) model_.trainable_masks[static_cast<std::size_t>(i) - 1] = true;
    for (int d : stage_.trainable_distances) model_.trainable_distances[static_cast<std::size_t>(d)] = true;
  }

  void snap_equality_groups() {
    for (const auto& group : stage_.equal_distance_groups) {
      double mean = 0.0;
      for (int d : group) mean += model_.distances[static_cast<std::size_t>(d)];
      mean /= static_cast<double>(group.size());
      for (int d : group) model_.distances[static_cast<std::size_t>(d)] = mean;
    }
  }

  // Appends a completed iteration and returns true when the stage should stop.
  bool record(double loss) {
    result_.iterations += 1;
    result_.loss_history.push_back(loss);
    result_.mean_eta_history.push_back(1.0 - loss);
    result_.elapsed_history.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
    if (loss > 10.0 * best_ + 1e-12) {
      throw StageError("stage '" + stage_.label + "' diverged: loss " + std::to_string(loss) +
                       " vs best " + std::to_string(best_));
    }
    best_ = std::min(best_, loss);
    const double denom = std::abs(loss_prev_);
    const double delta = (denom < 1e-12) ? std::abs(loss - loss_prev_)
                                         : std::abs(loss - loss_prev_) / denom;
    loss_prev_ = loss;
    if (delta <= stage_.tolerance) {
      result_.stop_reason = StopReason::kTolerance;
      return true;
    }
    return false;
  }

  void run_wfm() {
    std::vector<int> order = stage_.trainable_masks;
    std::sort(order.begin(), order.end());
    for (int it = 1; it <= stage_.max_iters; ++it) {
      for (int mi : order) {
        model_.masks[static_cast<std::size_t>(mi) - 1] = wfm_update(prop_, model_, modes_, mi);
      }
      if (record(dataset_loss(prop_, model_, modes_))) return;
    }
    result_.stop_reason = StopReason::kMaxIters;
  }

  // Full-batch and epoch-aggregate stages: the gradient pass at the current
  // parameters already yields the full-dataset loss, so it doubles as the
  // convergence probe for the previous iteration's update.
  void run_adam_aggregated() {
    AdamState adam(model_);
    for (int it = 1; it <= stage_.max_iters; ++it) {
      GradientBundle agg = epoch_gradient();
      if (it > 1 && record(agg.loss)) return;
      adam_step(adam, model_, agg, stage_.learning_rate,
                stage_.learning_rate * stage_.distance_rate_scale, stage_.equal_distance_groups);
    }
    // probe the last update; the loop covered all earlier iterations
    if (record(dataset_loss(prop_, model_, modes_))) return;
    result_.stop_reason = StopReason::kMaxIters;
  }

  GradientBundle epoch_gradient() {
    const int m = modes_.size();
    std::vector<int> all(static_cast<std::size_t>(m));
    std::iota(all.begin(), all.end(), 0);
    if (full_batch()) {
      return loss_and_grads(prop_, model_, modes_, all);
    }
    std::vector<GradientBundle> slots(static_cast<std::size_t>(m));
    for (const auto& batch : epoch_batches(m, stage_.batch_size, rng_)) {
      std::vector<GradientBundle> bundles = per_mode_gradients(prop_, model_, modes_, batch);
      for (std::size_t k = 0; k < batch.size(); ++k) {
        slots[static_cast<std::size_t>(batch[k])] = std::move(bundles[k]);
      }
    }
    // canonical mode order makes the aggregate independent of the partition
    return aggregate_gradients(slots, std::vector<int>(slots.size(), 1));
  }

  void run_adam_per_batch() {
    AdamState adam(model_);
    const int m = modes_.size();
    for (int it = 1; it <= stage_.max_iters; ++it) {
      for (const auto& batch : epoch_batches(m, stage_.batch_size, rng_)) {
        GradientBundle bundle = loss_and_grads(prop_, model_, modes_, batch);
        adam_step(adam, model_, bundle, stage_.learning_rate,
                  stage_.learning_rate * stage_.distance_rate_scale,
                  stage_.equal_distance_groups);
      }
      if (record(dataset_loss(prop_, model_, modes_))) return;
    }
    result_.stop_reason = StopReason::kMaxIters;
  }

  const SpectralPropagator& prop_;
  MPLCModel& model_;
  const ModeSet& modes_;
  Stage stage_;
  Rng& rng_;
  std::chrono::steady_clock::time_point start_;
  StageResult result_;
  double loss_prev_ = 1.0;
  double best_ = 1.0;
};

}  // namespace

StageResult run_stage(const SpectralPropagator& prop, MPLCModel& model, const ModeSet& modes,
                      const Stage& stage, Rng& rng) {
  return StageRunner(prop, model, modes, stage, rng).run();
}

}  // namespace mplc
