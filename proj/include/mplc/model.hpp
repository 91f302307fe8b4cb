#pragma once

#include <vector>

#include "mplc/field.hpp"
#include "mplc/mask.hpp"
#include "mplc/propagation.hpp"

namespace mplc {

/// Cascaded phase masks phi_1..phi_N plus distances z_0..z_N. Layer i
/// propagates by z_{i-1} and then modulates by exp(i*phi_i); a final pure
/// propagation by z_N produces the output field.
struct MPLCModel {
  GridSpec grid;
  std::vector<PhaseMask> masks;            // N
  std::vector<double> distances;           // N+1, meters, all >= 0
  std::vector<bool> trainable_masks;       // N
  std::vector<bool> trainable_distances;   // N+1

  int mask_count() const { return static_cast<int>(masks.size()); }
  void validate() const;

  /// All-zero masks, given distances, nothing trainable.
  static MPLCModel zeros(const GridSpec& grid, int n_masks, const std::vector<double>& distances);
};

/// Intermediate forward fields: at_mask[i-1] is the field arriving at mask i
/// after the z_{i-1} propagation, before modulation.
struct ForwardTrace {
  std::vector<ComplexField> at_mask;
  ComplexField output;
};

/// Adjoint fields: at_mask[i-1] is the conjugate-transposed chain of all
/// layers after mask i's modulation, applied to the target field.
struct BackwardTrace {
  std::vector<ComplexField> at_mask;
};

/// field *= exp(+i*phi) / exp(-i*phi)
void modulate(ComplexField& f, const PhaseMask& mask);
void modulate_conj(ComplexField& f, const PhaseMask& mask);

/// One layer W_i: propagate by z_{i-1}, then modulate by exp(i*phi_i).
/// `layer` is 1-based, 1..N.
ComplexField apply_layer(const SpectralPropagator& prop, const MPLCModel& model, int layer,
                         const ComplexField& f);

/// Full chain E_N = W_{N+1} ... W_1 E_0.
ComplexField forward(const SpectralPropagator& prop, const MPLCModel& model,
                     const ComplexField& e0);

ForwardTrace forward_trace(const SpectralPropagator& prop, const MPLCModel& model,
                           const ComplexField& e0);

BackwardTrace backward_trace(const SpectralPropagator& prop, const MPLCModel& model,
                             const ComplexField& target);

}  // namespace mplc
