#include "mplc/modeset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mplc/common.hpp"

namespace mplc {

void ModeSet::validate() const {
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw ConfigError("modeset: inputs and targets must be non-empty and paired");
  }
  for (const auto& f : inputs) require_same_grid(f.grid, grid, "modeset input");
  for (const auto& f : targets) require_same_grid(f.grid, grid, "modeset target");
  for (const auto& f : inputs) {
    if (std::abs(total_power(f) - 1.0) > 1e-12) throw ConfigError("modeset: input not normalized");
  }
  for (const auto& f : targets) {
    if (std::abs(total_power(f) - 1.0) > 1e-12) throw ConfigError("modeset: target not normalized");
  }
}

std::vector<ModeIndex> hermite_gaussian_mode_list(int count, bool allow_partial_group) {
  if (count < 1) throw ConfigError("mode count must be >= 1");
  std::vector<ModeIndex> modes;
  for (int g = 0; static_cast<int>(modes.size()) < count; ++g) {
    for (int m = 0; m <= g && static_cast<int>(modes.size()) < count; ++m) {
      modes.push_back({m, g - m});
    }
    if (static_cast<int>(modes.size()) == count) {
      const bool complete = (modes.back().m == g && modes.back().n == 0);
      if (!complete && !allow_partial_group) {
        throw ConfigError("mode count " + std::to_string(count) +
                          " is not a complete mode-group pyramid (1+2+...+G); "
                          "supply an explicit mode list instead");
      }
    }
  }
  return modes;
}

ModeOrdering mode_ordering_from_string(const std::string& s) {
  if (s == "group_raster") return ModeOrdering::kGroupRaster;
  if (s == "reversed") return ModeOrdering::kReversed;
  if (s == "custom") return ModeOrdering::kCustom;
  throw ConfigError("unknown mode ordering '" + s + "'");
}

std::string to_string(ModeOrdering ordering) {
  switch (ordering) {
    case ModeOrdering::kGroupRaster: return "group_raster";
    case ModeOrdering::kReversed: return "reversed";
    case ModeOrdering::kCustom: return "custom";
  }
  return "group_raster";
}

ModeSet build_linear_array_modeset(const GridSpec& grid, const LinearArraySpec& spec) {
  const int count = spec.count;
  if (count < 1) throw ConfigError("linear array: count must be >= 1");
  if (spec.spot_spacing < 0.0 || spec.spot_waist <= 0.0 || spec.target_waist <= 0.0) {
    throw ConfigError("linear array: spacing must be >= 0 and waists positive");
  }

  const double half_span = 0.5 * (count - 1) * spec.spot_spacing;
  if (half_span + 2.0 * spec.spot_waist > grid.extent_x() / 2) {
    throw ConfigError("linear array: spot array extent exceeds the grid");
  }

  std::vector<ModeIndex> modes = spec.explicit_modes;
  if (modes.empty()) {
    modes = hermite_gaussian_mode_list(count);
  } else if (static_cast<int>(modes.size()) != count) {
    throw ConfigError("linear array: explicit mode list length must equal count");
  }

  std::vector<int> perm(count);
  switch (spec.ordering) {
    case ModeOrdering::kGroupRaster:
      for (int j = 0; j < count; ++j) perm[j] = j;
      break;
    case ModeOrdering::kReversed:
      for (int j = 0; j < count; ++j) perm[j] = count - 1 - j;
      break;
    case ModeOrdering::kCustom: {
      if (static_cast<int>(spec.permutation.size()) != count) {
        throw ConfigError("linear array: custom ordering needs a permutation of length count");
      }
      std::vector<bool> seen(count, false);
      for (int p : spec.permutation) {
        if (p < 0 || p >= count || seen[p]) {
          throw ConfigError("linear array: invalid permutation entry");
        }
        seen[p] = true;
      }
      perm = spec.permutation;
      break;
    }
  }

  ModeSet set;
  set.grid = grid;
  set.inputs.reserve(count);
  set.targets.reserve(count);
  for (int j = 0; j < count; ++j) {
    const double x0 = (j - 0.5 * (count - 1)) * spec.spot_spacing;
    set.inputs.push_back(gaussian_spot(grid, x0, 0.0, spec.spot_waist));
    const ModeIndex mi = modes[static_cast<std::size_t>(perm[j])];
    set.targets.push_back(hermite_gaussian(grid, mi.m, mi.n, spec.target_waist));
  }
  set.validate();
  return set;
}

}  // namespace mplc
