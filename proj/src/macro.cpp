#include "mplc/macro.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "mplc/common.hpp"

namespace mplc {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown key '" + it.key() + "' at " + path);
    }
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "' at " + path);
  }
}

std::vector<int> all_masks(int n_masks) {
  std::vector<int> v(static_cast<std::size_t>(n_masks));
  std::iota(v.begin(), v.end(), 1);
  return v;
}

std::vector<int> parse_mask_list(const json& val, int n_masks, const std::string& path) {
  if (val.is_string()) {
    if (val.get<std::string>() == "all") return all_masks(n_masks);
    throw ConfigError("bad mask list at " + path + " (expected \"all\" or an index array)");
  }
  if (!val.is_array()) throw ConfigError("bad mask list at " + path);
  return val.get<std::vector<int>>();
}

int parse_batch_size(const json& obj, const std::string& path) {
  if (!obj.contains("batch_size")) return 0;
  const json& val = obj.at("batch_size");
  if (val.is_string()) {
    if (val.get<std::string>() == "full") return 0;
    throw ConfigError("bad batch_size at " + path);
  }
  return val.get<int>();
}

Stage parse_stage(const json& obj, int n_masks, const std::string& path) {
  reject_unknown_keys(obj,
                      {"label", "method", "masks", "distances", "batch_size", "gamma",
                       "gamma_z_scale_mm", "epsilon", "max_iters", "gradient_mode",
                       "equal_distance_groups"},
                      path);
  Stage st;
  st.label = get_or<std::string>(obj, "label", "", path);
  const std::string method = get_or<std::string>(obj, "method", "adam", path);
  if (method == "adam") {
    st.method = StageMethod::kAdam;
  } else if (method == "wfm") {
    st.method = StageMethod::kWfmSweep;
  } else {
    throw ConfigError("unknown method '" + method + "' at " + path);
  }
  if (obj.contains("masks")) st.trainable_masks = parse_mask_list(obj.at("masks"), n_masks, path);
  st.trainable_distances = get_or<std::vector<int>>(obj, "distances", {}, path);
  st.batch_size = parse_batch_size(obj, path);
  st.learning_rate = get_or<double>(obj, "gamma", 0.1, path);
  st.distance_rate_scale = get_or<double>(obj, "gamma_z_scale_mm", 1.0, path) * 1e-3;
  st.tolerance = get_or<double>(obj, "epsilon", 1e-3, path);
  st.max_iters = get_or<int>(obj, "max_iters", 10000, path);
  const std::string gm = get_or<std::string>(obj, "gradient_mode", "per_batch", path);
  if (gm == "per_batch") {
    st.gradient_mode = GradientMode::kPerBatchUpdate;
  } else if (gm == "epoch_aggregate") {
    st.gradient_mode = GradientMode::kEpochAggregate;
  } else {
    throw ConfigError("unknown gradient_mode '" + gm + "' at " + path);
  }
  st.equal_distance_groups =
      get_or<std::vector<std::vector<int>>>(obj, "equal_distance_groups", {}, path);
  return st;
}

Stage base_stage(const json& doc, int n_masks, const std::string& path) {
  Stage st;
  st.trainable_masks = all_masks(n_masks);
  st.learning_rate = get_or<double>(doc, "gamma", 0.1, path);
  st.tolerance = get_or<double>(doc, "epsilon", 1e-3, path);
  st.max_iters = get_or<int>(doc, "max_iters", 10000, path);
  return st;
}

std::vector<Stage> expand_builtin(const std::string& name, const json& doc, int n_masks,
                                  const std::string& path) {
  std::vector<Stage> stages;
  if (name == "default") {
    reject_unknown_keys(doc, {"name", "seed", "description", "gamma", "epsilon", "max_iters"},
                        path);
    Stage st = base_stage(doc, n_masks, path);
    st.label = "default";
    stages.push_back(st);
  } else if (name == "sequential") {
    reject_unknown_keys(doc,
                        {"name", "seed", "description", "gamma", "epsilon", "max_iters",
                         "global_iters", "inner_max_iters"},
                        path);
    const int global_iters = get_or<int>(doc, "global_iters", 2, path);
    const int inner = get_or<int>(doc, "inner_max_iters", 500, path);
    if (global_iters < 1) throw ConfigError("global_iters must be >= 1 at " + path);
    for (int k = 1; k <= global_iters; ++k) {
      for (int i = 1; i <= n_masks; ++i) {
        Stage st = base_stage(doc, n_masks, path);
        st.trainable_masks = {i};
        st.max_iters = inner;
        st.label = "seq k=" + std::to_string(k) + " mask=" + std::to_string(i);
        stages.push_back(st);
      }
    }
  } else if (name == "wfm") {
    reject_unknown_keys(doc, {"name", "seed", "description", "epsilon", "max_iters"}, path);
    Stage st = base_stage(doc, n_masks, path);
    st.method = StageMethod::kWfmSweep;
    st.max_iters = get_or<int>(doc, "max_iters", 500, path);
    st.label = "wfm";
    stages.push_back(st);
  } else if (name == "refocus") {
    reject_unknown_keys(doc,
                        {"name", "seed", "description", "gamma", "epsilon", "max_iters",
                         "gamma_z_scale_mm"},
                        path);
    const double scale = get_or<double>(doc, "gamma_z_scale_mm", 1.0, path) * 1e-3;
    Stage round1 = base_stage(doc, n_masks, path);
    round1.trainable_masks = {1, n_masks};
    round1.trainable_distances = {0, n_masks};
    round1.distance_rate_scale = scale;
    round1.label = "refocus round 1";
    Stage round2 = base_stage(doc, n_masks, path);
    round2.trainable_distances = {0, n_masks};
    round2.distance_rate_scale = scale;
    round2.label = "refocus round 2";
    stages.push_back(round1);
    stages.push_back(round2);
  } else if (name == "batch" || name == "full-aggregate") {
    reject_unknown_keys(
        doc, {"name", "seed", "description", "gamma", "epsilon", "max_iters", "batch_size"}, path);
    Stage st = base_stage(doc, n_masks, path);
    st.batch_size = parse_batch_size(doc, path);
    if (name == "full-aggregate") {
      st.gradient_mode = GradientMode::kEpochAggregate;
      if (!doc.contains("batch_size")) st.batch_size = 8;
    }
    st.label = name;
    stages.push_back(st);
  } else {
    throw ConfigError("unknown builtin macro '" + name + "' at " + path);
  }
  return stages;
}

}  // namespace

MacroProgram parse_macro(const json& doc, int n_masks, int n_modes) {
  if (!doc.is_object()) throw ConfigError("macro: expected an object");
  MacroProgram program;
  program.seed = get_or<std::uint64_t>(doc, "seed", 0, "macro");
  program.description = get_or<std::string>(doc, "description", "", "macro");

  if (doc.contains("name") && doc.contains("stages")) {
    throw ConfigError("macro: give either a builtin 'name' or explicit 'stages', not both");
  }
  if (doc.contains("name")) {
    program.name = doc.at("name").get<std::string>();
    program.stages = expand_builtin(program.name, doc, n_masks, "macro");
  } else if (doc.contains("stages")) {
    reject_unknown_keys(doc, {"stages", "seed", "description"}, "macro");
    program.name = "custom";
    const json& stages = doc.at("stages");
    if (!stages.is_array() || stages.empty()) {
      throw ConfigError("macro.stages must be a non-empty array");
    }
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const std::string path = "macro.stages[" + std::to_string(s) + "]";
      Stage st = parse_stage(stages.at(s), n_masks, path);
      if (st.label.empty()) st.label = "stage " + std::to_string(s + 1);
      program.stages.push_back(st);
    }
  } else {
    throw ConfigError("macro: needs a builtin 'name' or a 'stages' list");
  }

  for (std::size_t s = 0; s < program.stages.size(); ++s) {
    try {
      program.stages[s].validate(n_masks, n_modes);
    } catch (const ConfigError& e) {
      throw ConfigError("macro.stages[" + std::to_string(s) + "]: " + e.what());
    }
  }
  return program;
}

json normalized_dump(const MacroProgram& program) {
  json stages = json::array();
  for (const Stage& st : program.stages) {
    json groups = json::array();
    for (const auto& g : st.equal_distance_groups) groups.push_back(g);
    stages.push_back({
        {"label", st.label},
        {"method", st.method == StageMethod::kAdam ? "adam" : "wfm"},
        {"masks", st.trainable_masks},
        {"distances", st.trainable_distances},
        {"batch_size", st.batch_size},
        {"gamma", st.learning_rate},
        {"gamma_z_scale_mm", st.distance_rate_scale * 1e3},
        {"epsilon", st.tolerance},
        {"max_iters", st.max_iters},
        {"gradient_mode",
         st.gradient_mode == GradientMode::kPerBatchUpdate ? "per_batch" : "epoch_aggregate"},
        {"equal_distance_groups", groups},
    });
  }
  return json{{"name", program.name},
              {"description", program.description},
              {"seed", program.seed},
              {"stages", stages}};
}

std::vector<std::vector<int>> epoch_batches(int m, int b, Rng& rng) {
  if (m < 1 || b < 1 || b > m) {
    throw ConfigError("epoch_batches: need 1 <= B <= M, got B=" + std::to_string(b) +
                      " M=" + std::to_string(m));
  }
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < m; start += b) {
    const int end = std::min(start + b, m);
    std::vector<int> batch(perm.begin() + start, perm.begin() + end);
    std::sort(batch.begin(), batch.end());  // batches are index sets
    batches.push_back(std::move(batch));
  }
  return batches;
}

void run_program(const SpectralPropagator& prop, MPLCModel& model, const ModeSet& modes,
                 const MacroProgram& program, RunLog& log) {
  if (program.stages.empty()) throw ConfigError("macro program has no stages");
  Rng rng(program.seed);
  for (const Stage& stage : program.stages) {
    StageResult result = run_stage(prop, model, modes, stage, rng);
    log.stage_labels.push_back(stage.label);
    log.stage_results.push_back(std::move(result));
  }
}

}  // namespace mplc
