#pragma once

#include <string>
#include <vector>

#include "mplc/field.hpp"

namespace mplc {

struct ModeIndex {
  int m = 0;
  int n = 0;
  bool operator==(const ModeIndex&) const = default;
};

/// Paired, normalized input/target fields on a shared grid.
struct ModeSet {
  GridSpec grid;
  std::vector<ComplexField> inputs;
  std::vector<ComplexField> targets;

  int size() const { return static_cast<int>(inputs.size()); }
  void validate() const;
};

/// Enumerates the first complete Hermite-Gaussian mode groups in raster order
/// over (group, m): group g holds (m, g-m) for m = 0..g. `count` must be a
/// triangular number 1+2+...+G unless partial groups are allowed.
std::vector<ModeIndex> hermite_gaussian_mode_list(int count, bool allow_partial_group = false);

/// Which input spot maps onto which target mode.
enum class ModeOrdering {
  kGroupRaster,  // spot j -> j-th mode in (group, m) raster order
  kReversed,     // spot j -> (M-1-j)-th mode
  kCustom,       // explicit permutation supplied
};

ModeOrdering mode_ordering_from_string(const std::string& s);
std::string to_string(ModeOrdering ordering);

struct LinearArraySpec {
  int count = 0;
  double spot_spacing = 0.0;  // m
  double spot_waist = 0.0;    // m
  double target_waist = 0.0;  // m
  ModeOrdering ordering = ModeOrdering::kGroupRaster;
  std::vector<int> permutation;         // used when ordering == kCustom (spot -> mode slot)
  std::vector<ModeIndex> explicit_modes;  // overrides the pyramid enumeration
};

/// Builds the linear-spot-array -> Hermite-Gaussian modeset: `count` input
/// spots centered symmetrically about the grid origin along x, paired with
/// HG targets centered at the origin.
ModeSet build_linear_array_modeset(const GridSpec& grid, const LinearArraySpec& spec);

}  // namespace mplc
