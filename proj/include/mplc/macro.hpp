#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mplc/optimizer.hpp"
#include "mplc/stage.hpp"

namespace mplc {

/// Ordered list of training stages plus the RNG seed driving batch sampling.
struct MacroProgram {
  std::string name;
  std::string description;
  std::uint64_t seed = 0;
  std::vector<Stage> stages;
};

/// Parses and validates a macro config (JSON document) against the model
/// topology. Builtin names: "default", "sequential", "wfm", "refocus",
/// "batch", "full-aggregate"; alternatively an explicit "stages" list.
/// Unknown keys are rejected with their field path.
MacroProgram parse_macro(const nlohmann::json& doc, int n_masks, int n_modes);

/// Normalized dump of a validated program with every default filled in.
nlohmann::json normalized_dump(const MacroProgram& program);

/// Random permutation of 0..M-1 split into ceil(M/B) consecutive batches
/// (last batch may be short). Every index appears exactly once per epoch.
/// Batches are index sets and are returned sorted ascending within a batch.
std::vector<std::vector<int>> epoch_batches(int m, int b, Rng& rng);

/// Per-stage results of a program run.
struct RunLog {
  std::vector<std::string> stage_labels;
  std::vector<StageResult> stage_results;
};

/// Executes the stages in order, mutating the model. On stage failure the
/// completed prefix is preserved in `log` before the error propagates.
void run_program(const SpectralPropagator& prop, MPLCModel& model, const ModeSet& modes,
                 const MacroProgram& program, RunLog& log);

}  // namespace mplc
