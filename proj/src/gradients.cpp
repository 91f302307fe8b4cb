#include "mplc/gradients.hpp"

#include <cmath>
#include <string>

#include "mplc/common.hpp"

namespace mplc {

namespace {

void check_batch(const ModeSet& modes, const std::vector<int>& batch) {
  if (batch.empty()) throw Error("gradient batch is empty");
  for (int j : batch) {
    if (j < 0 || j >= modes.size()) {
      throw Error("gradient batch index " + std::to_string(j) + " out of range");
    }
  }
}

// d eta / d phi_i[p] = 2 Im[ conj(o) * conj(exp(i phi) eps_i) * zeta_i ](p);
// the loss carries -eta, hence the leading minus.
void accumulate_mask_grad(std::vector<double>& g, const PhaseMask& mask, const ComplexField& eps,
                          const ComplexField& zeta, std::complex<double> overlap_conj) {
  const std::size_t n = eps.v.size();
  g.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::complex<double> phasor(std::cos(mask.phi[p]), std::sin(mask.phi[p]));
    const std::complex<double> w = overlap_conj * std::conj(phasor * eps.v[p]) * zeta.v[p];
    g[p] = -2.0 * w.imag();
  }
}

GradientBundle single_mode_gradient(const SpectralPropagator& prop, const MPLCModel& model,
                                    const ComplexField& e0, const ComplexField& target) {
  const int n = model.mask_count();
  GradientBundle out;
  out.mask_grads.resize(n);
  out.distance_grads.assign(n + 1, 0.0);

  const ForwardTrace fwd = forward_trace(prop, model, e0);
  const std::complex<double> o = inner_product(fwd.output, target);
  out.overlaps.push_back(o);
  out.loss = 1.0 - std::norm(o);
  const std::complex<double> oc = std::conj(o);

  bool any_distance = false;
  for (bool t : model.trainable_distances) any_distance |= t;
  bool any_mask = false;
  for (bool t : model.trainable_masks) any_mask |= t;
  if (!any_mask && !any_distance) return out;

  const BackwardTrace bwd = backward_trace(prop, model, target);

  for (int i = 0; i < n; ++i) {
    if (!model.trainable_masks[static_cast<std::size_t>(i)]) continue;
    accumulate_mask_grad(out.mask_grads[static_cast<std::size_t>(i)],
                         model.masks[static_cast<std::size_t>(i)],
                         fwd.at_mask[static_cast<std::size_t>(i)],
                         bwd.at_mask[static_cast<std::size_t>(i)], oc);
  }

  if (any_distance) {
    const double inv_pixels = 1.0 / static_cast<double>(model.grid.size());
    for (int d = 0; d <= n; ++d) {
      if (!model.trainable_distances[static_cast<std::size_t>(d)]) continue;
      // field entering the z_d propagation
      ComplexField psi = (d == 0) ? e0 : fwd.at_mask[static_cast<std::size_t>(d) - 1];
      if (d > 0) modulate(psi, model.masks[static_cast<std::size_t>(d) - 1]);
      // adjoint field just past the z_d propagation
      ComplexField chi = (d == n) ? target : bwd.at_mask[static_cast<std::size_t>(d)];
      if (d < n) modulate_conj(chi, model.masks[static_cast<std::size_t>(d)]);

      const Spectrum psi_s = prop.to_spectrum(psi);
      const Spectrum chi_s = prop.to_spectrum(chi);
      const Spectrum dh = prop.transfer_derivative(model.distances[static_cast<std::size_t>(d)]);
      std::complex<double> s(0.0, 0.0);
      for (std::size_t k = 0; k < psi_s.size(); ++k) {
        s += std::conj(psi_s[k] * dh[k]) * chi_s[k];
      }
      s *= inv_pixels;
      out.distance_grads[static_cast<std::size_t>(d)] = -2.0 * (oc * s).real();
    }
  }
  return out;
}

}  // namespace

std::vector<GradientBundle> per_mode_gradients(const SpectralPropagator& prop,
                                               const MPLCModel& model, const ModeSet& modes,
                                               const std::vector<int>& indices) {
  check_batch(modes, indices);
  require_same_grid(modes.grid, model.grid, "per_mode_gradients");
  for (double z : model.distances) prop.prefetch(z);

  std::vector<GradientBundle> bundles(indices.size());
  const int count = static_cast<int>(indices.size());
#pragma omp parallel for schedule(dynamic)
  for (int slot = 0; slot < count; ++slot) {
    const int j = indices[static_cast<std::size_t>(slot)];
    bundles[static_cast<std::size_t>(slot)] =
        single_mode_gradient(prop, model, modes.inputs[static_cast<std::size_t>(j)],
                             modes.targets[static_cast<std::size_t>(j)]);
  }
  return bundles;
}

GradientBundle aggregate_gradients(const std::vector<GradientBundle>& bundles,
                                   const std::vector<int>& mode_counts) {
  if (bundles.empty() || bundles.size() != mode_counts.size()) {
    throw Error("aggregate_gradients: bundle/count length mismatch");
  }
  if (bundles.size() == 1) return bundles.front();
  const std::size_t n_masks = bundles.front().mask_grads.size();
  const std::size_t n_dist = bundles.front().distance_grads.size();

  GradientBundle out;
  out.mask_grads.resize(n_masks);
  out.distance_grads.assign(n_dist, 0.0);

  double total = 0.0;
  double eta_sum = 0.0;
  for (std::size_t q = 0; q < bundles.size(); ++q) {
    const GradientBundle& b = bundles[q];
    if (b.mask_grads.size() != n_masks || b.distance_grads.size() != n_dist) {
      throw Error("aggregate_gradients: bundle shapes differ");
    }
    const double w = static_cast<double>(mode_counts[q]);
    total += w;
    eta_sum += w * (1.0 - b.loss);
    for (std::size_t i = 0; i < n_masks; ++i) {
      if (b.mask_grads[i].empty()) continue;
      auto& acc = out.mask_grads[i];
      if (acc.empty()) acc.assign(b.mask_grads[i].size(), 0.0);
      if (acc.size() != b.mask_grads[i].size()) {
        throw Error("aggregate_gradients: mask gradient shapes differ");
      }
      for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += w * b.mask_grads[i][p];
    }
    for (std::size_t d = 0; d < n_dist; ++d) out.distance_grads[d] += w * b.distance_grads[d];
    out.overlaps.insert(out.overlaps.end(), b.overlaps.begin(), b.overlaps.end());
  }

  const double inv_total = 1.0 / total;
  for (auto& g : out.mask_grads) {
    for (double& v : g) v *= inv_total;
  }
  for (double& v : out.distance_grads) v *= inv_total;
  out.loss = 1.0 - eta_sum * inv_total;
  return out;
}

GradientBundle loss_and_grads(const SpectralPropagator& prop, const MPLCModel& model,
                              const ModeSet& modes, const std::vector<int>& batch) {
  const std::vector<GradientBundle> bundles = per_mode_gradients(prop, model, modes, batch);
  return aggregate_gradients(bundles, std::vector<int>(bundles.size(), 1));
}

std::vector<double> per_mode_eta(const SpectralPropagator& prop, const MPLCModel& model,
                                 const ModeSet& modes) {
  require_same_grid(modes.grid, model.grid, "per_mode_eta");
  for (double z : model.distances) prop.prefetch(z);
  const int m = modes.size();
  std::vector<double> etas(static_cast<std::size_t>(m), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < m; ++j) {
    const ComplexField out = forward(prop, model, modes.inputs[static_cast<std::size_t>(j)]);
    etas[static_cast<std::size_t>(j)] =
        std::norm(inner_product(out, modes.targets[static_cast<std::size_t>(j)]));
  }
  return etas;
}

double dataset_loss(const SpectralPropagator& prop, const MPLCModel& model, const ModeSet& modes) {
  const std::vector<double> etas = per_mode_eta(prop, model, modes);
  double sum = 0.0;
  for (double e : etas) sum += e;
  return 1.0 - sum / static_cast<double>(etas.size());
}

}  // namespace mplc
