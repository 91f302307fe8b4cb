#include "mplc/model.hpp"

#include <cmath>
#include <string>

#include "mplc/common.hpp"

namespace mplc {

void MPLCModel::validate() const {
  if (masks.empty()) throw ConfigError("model: needs at least one mask");
  if (distances.size() != masks.size() + 1) {
    throw ConfigError("model: expected N+1 distances for N masks");
  }
  for (double z : distances) {
    if (!(z >= 0.0)) throw ConfigError("model: distances must be >= 0");
  }
  for (const auto& m : masks) {
    if (m.nx != grid.nx || m.ny != grid.ny) throw ConfigError("model: mask/grid size mismatch");
  }
  if (trainable_masks.size() != masks.size() || trainable_distances.size() != distances.size()) {
    throw ConfigError("model: trainable flag lengths do not match parameters");
  }
}

MPLCModel MPLCModel::zeros(const GridSpec& grid, int n_masks, const std::vector<double>& distances) {
  MPLCModel model;
  model.grid = grid;
  model.masks.assign(n_masks, PhaseMask(grid.nx, grid.ny));
  model.distances = distances;
  model.trainable_masks.assign(n_masks, false);
  model.trainable_distances.assign(distances.size(), false);
  model.validate();
  return model;
}

void modulate(ComplexField& f, const PhaseMask& mask) {
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    f.v[i] *= std::complex<double>(std::cos(mask.phi[i]), std::sin(mask.phi[i]));
  }
}

void modulate_conj(ComplexField& f, const PhaseMask& mask) {
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    f.v[i] *= std::complex<double>(std::cos(mask.phi[i]), -std::sin(mask.phi[i]));
  }
}

ComplexField apply_layer(const SpectralPropagator& prop, const MPLCModel& model, int layer,
                         const ComplexField& f) {
  if (layer < 1 || layer > model.mask_count()) {
    throw Error("apply_layer: layer index " + std::to_string(layer) + " out of range");
  }
  ComplexField out = prop.propagate(f, model.distances[static_cast<std::size_t>(layer) - 1]);
  modulate(out, model.masks[static_cast<std::size_t>(layer) - 1]);
  return out;
}

ComplexField forward(const SpectralPropagator& prop, const MPLCModel& model,
                     const ComplexField& e0) {
  require_same_grid(e0.grid, model.grid, "forward");
  ComplexField f = e0;
  for (int i = 1; i <= model.mask_count(); ++i) f = apply_layer(prop, model, i, f);
  return prop.propagate(f, model.distances.back());
}

ForwardTrace forward_trace(const SpectralPropagator& prop, const MPLCModel& model,
                           const ComplexField& e0) {
  require_same_grid(e0.grid, model.grid, "forward_trace");
  const int n = model.mask_count();
  ForwardTrace trace;
  trace.at_mask.reserve(n);
  ComplexField f = e0;
  for (int i = 0; i < n; ++i) {
    f = prop.propagate(f, model.distances[static_cast<std::size_t>(i)]);
    trace.at_mask.push_back(f);
    modulate(f, model.masks[static_cast<std::size_t>(i)]);
  }
  trace.output = prop.propagate(f, model.distances.back());
  return trace;
}

BackwardTrace backward_trace(const SpectralPropagator& prop, const MPLCModel& model,
                             const ComplexField& target) {
  require_same_grid(target.grid, model.grid, "backward_trace");
  const int n = model.mask_count();
  BackwardTrace trace;
  trace.at_mask.resize(n);
  // peel conjugate-transposed layers off the output side:
  // zeta_N = P_N^dag E_t;  zeta_{i} = P_i^dag diag(exp(-i phi_{i+1})) zeta_{i+1}
  ComplexField b = prop.propagate_adjoint(target, model.distances.back());
  trace.at_mask[static_cast<std::size_t>(n) - 1] = b;
  for (int i = n - 1; i >= 1; --i) {
    modulate_conj(b, model.masks[static_cast<std::size_t>(i)]);
    b = prop.propagate_adjoint(b, model.distances[static_cast<std::size_t>(i)]);
    trace.at_mask[static_cast<std::size_t>(i) - 1] = b;
  }
  return trace;
}

}  // namespace mplc
