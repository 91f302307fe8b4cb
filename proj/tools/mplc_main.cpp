#include <omp.h>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mplc/common.hpp"
#include "mplc/io.hpp"

namespace {

using nlohmann::json;

std::string mask_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", index + 1);
  return buf;
}

void print_error_record(const char* kind, const std::string& message) {
  std::cerr << json{{"error", {{"type", kind}, {"message", message}}}}.dump() << "\n";
}

int cmd_design(const std::string& config_path, const std::string& outdir,
               std::optional<std::uint64_t> seed_override) {
  mplc::DesignConfig cfg = mplc::load_design_config_file(config_path);
  if (seed_override) {
    cfg.seed = *seed_override;
    cfg.normalized["seed"] = *seed_override;
  }
  mplc::MacroProgram program = mplc::parse_macro(cfg.macro_doc, cfg.n_masks, cfg.array.count);
  if (!cfg.macro_doc.contains("seed")) program.seed = cfg.seed;

  mplc::DirLock lock(outdir);
  std::cout << "building modeset (" << cfg.array.count << " modes, " << cfg.grid.nx << "x"
            << cfg.grid.ny << " @ " << cfg.grid.pitch * 1e6 << " um, lambda "
            << cfg.grid.wavelength * 1e9 << " nm)\n";
  const mplc::ModeSet modes = mplc::build_modeset(cfg);
  const mplc::SpectralPropagator prop(cfg.grid);
  mplc::MPLCModel model = mplc::build_initial_model(cfg);

  mplc::RunLog log;
  try {
    mplc::run_program(prop, model, modes, program, log);
  } catch (...) {
    mplc::write_run_log_csv(outdir + "/convergence.csv", log);  // completed prefix
    throw;
  }
  mplc::write_run_log_csv(outdir + "/convergence.csv", log);
  std::vector<double> losses;
  for (const auto& res : log.stage_results) {
    losses.insert(losses.end(), res.loss_history.begin(), res.loss_history.end());
  }
  mplc::write_line_plot_png(outdir + "/convergence.png", losses);

  json extra = {{"config_hash", mplc::fnv1a_hex(cfg.normalized.dump())},
                {"config", cfg.normalized},
                {"seed", cfg.seed},
                {"macro", mplc::normalized_dump(program)},
                {"modeset", mplc::modeset_spec_json(cfg)},
                {"adam", {{"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}}};
  mplc::save_bundle(outdir, model, extra);

  // report metrics of the masks as stored on disk (float32)
  mplc::Bundle bundle = mplc::load_bundle(outdir);
  const mplc::EvalReport report =
      mplc::evaluate_model(prop, bundle.model, modes, cfg.eval_dphi, cfg.eval_k, cfg.seed);
  mplc::write_text_file(outdir + "/eval_report.json",
                        mplc::eval_report_to_json(report).dump(2) + "\n");
  mplc::write_crosstalk_csv(outdir + "/crosstalk.csv", report.crosstalk);
  mplc::write_crosstalk_heatmap_png(outdir + "/crosstalk.png", report.crosstalk);
  for (int i = 0; i < bundle.model.mask_count(); ++i) {
    const auto& mask = bundle.model.masks[static_cast<std::size_t>(i)];
    mplc::write_png_gray16(outdir + "/phase_" + mask_stem(i) + ".png", mask.nx, mask.ny,
                           mplc::phase_to_cyclic_gray(mplc::wrapped(mask)));
  }

  bundle.manifest["metrics"] = mplc::eval_report_to_json(report);
  mplc::write_text_file(outdir + "/manifest.json", bundle.manifest.dump(2) + "\n");

  std::cout << "mean eta " << 1.0 - report.loss << ", loss " << report.loss << ", IL "
            << report.insertion_loss_db << " dB\n"
            << "bundle written to " << outdir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& bundle_dir, const std::optional<std::string>& modeset_cfg,
                 std::optional<double> dphi, std::optional<int> k_instances,
                 std::optional<std::uint64_t> seed, const std::optional<std::string>& out_path) {
  const mplc::Bundle bundle = mplc::load_bundle(bundle_dir);
  mplc::ModeSet modes;
  if (modeset_cfg) {
    modes = mplc::build_modeset(mplc::load_design_config_file(*modeset_cfg));
  } else {
    modes = mplc::modeset_from_manifest(bundle.manifest);
  }
  if (!(modes.grid == bundle.model.grid)) {
    throw mplc::ConfigError("evaluate: modeset grid does not match the bundle grid");
  }
  // unset knobs default to what the design run used, so re-evaluating a
  // fresh bundle reproduces its stored metrics; fallback 0.05 rad / K=10
  double eval_dphi = 0.05;
  int eval_k = 10;
  std::uint64_t eval_seed = 0;
  if (bundle.manifest.contains("config") && bundle.manifest.at("config").contains("evaluation")) {
    const auto& ev = bundle.manifest.at("config").at("evaluation");
    eval_dphi = ev.value("dphi_rad", eval_dphi);
    eval_k = ev.value("K", eval_k);
  }
  if (bundle.manifest.contains("seed")) {
    eval_seed = bundle.manifest.at("seed").get<std::uint64_t>();
  }
  if (dphi) eval_dphi = *dphi;
  if (k_instances) eval_k = *k_instances;
  if (seed) eval_seed = *seed;
  const mplc::SpectralPropagator prop(bundle.model.grid);
  const mplc::EvalReport report =
      mplc::evaluate_model(prop, bundle.model, modes, eval_dphi, eval_k, eval_seed);
  const std::string dump = mplc::eval_report_to_json(report).dump(2) + "\n";
  if (out_path) mplc::write_text_file(*out_path, dump);
  std::cout << dump;
  return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b,
                const std::optional<std::string>& csv_path) {
  const mplc::Bundle a = mplc::load_bundle(dir_a);
  const mplc::Bundle b = mplc::load_bundle(dir_b);
  if (a.model.mask_count() != b.model.mask_count() || !(a.model.grid == b.model.grid)) {
    throw mplc::ConfigError("compare: bundle topologies differ");
  }
  std::vector<double> sims;
  std::cout << "mask,similarity\n";
  for (int i = 0; i < a.model.mask_count(); ++i) {
    const double s = mplc::similarity(a.model.masks[static_cast<std::size_t>(i)],
                                      b.model.masks[static_cast<std::size_t>(i)]);
    sims.push_back(s);
    std::printf("%d,%.6f\n", i + 1, s);
  }
  if (csv_path) mplc::write_similarity_csv(*csv_path, sims);
  return 0;
}

int cmd_export_masks(const std::string& bundle_dir, const std::string& format,
                     const std::string& outdir) {
  const mplc::Bundle bundle = mplc::load_bundle(bundle_dir);
  std::filesystem::create_directories(outdir);
  for (int i = 0; i < bundle.model.mask_count(); ++i) {
    const mplc::PhaseMask wrapped_mask = mplc::wrapped(bundle.model.masks[static_cast<std::size_t>(i)]);
    const std::string stem = outdir + "/mask_" + mask_stem(i);
    if (format == "raw-f32") {
      mplc::write_mask_f32(stem + ".f32", wrapped_mask);
    } else if (format == "png16") {
      std::vector<std::uint16_t> pix(wrapped_mask.phi.size());
      for (std::size_t p = 0; p < pix.size(); ++p) pix[p] = mplc::phase_to_u16(wrapped_mask.phi[p]);
      mplc::write_png_gray16(stem + ".png", wrapped_mask.nx, wrapped_mask.ny, pix);
    } else if (format == "csv") {
      mplc::write_mask_csv(stem + ".csv", wrapped_mask);
    } else {
      throw mplc::ConfigError("export-masks: unknown format '" + format + "'");
    }
  }
  std::cout << "exported " << bundle.model.mask_count() << " masks to " << outdir << "\n";
  return 0;
}

int cmd_report(const std::string& bundle_dir) {
  const mplc::Bundle bundle = mplc::load_bundle(bundle_dir);
  const json& m = bundle.manifest;
  std::cout << "bundle:        " << bundle_dir << "\n"
            << "generator:     " << m.value("generator_version", std::string("?")) << "\n"
            << "created:       " << m.value("created_utc", std::string("?")) << "\n"
            << "grid:          " << bundle.model.grid.nx << "x" << bundle.model.grid.ny << " @ "
            << bundle.model.grid.pitch * 1e6 << " um\n"
            << "wavelength:    " << bundle.model.grid.wavelength * 1e9 << " nm\n"
            << "masks:         " << bundle.model.mask_count() << "\n"
            << "distances_mm: ";
  for (double z : bundle.model.distances) std::cout << " " << z * 1e3;
  std::cout << "\n";
  if (m.contains("macro")) {
    std::cout << "macro:         " << m.at("macro").value("name", std::string("?")) << " ("
              << m.at("macro").at("stages").size() << " stages)\n";
  }
  if (m.contains("seed")) std::cout << "seed:          " << m.at("seed") << "\n";
  if (m.contains("config_hash")) std::cout << "config_hash:   " << m.at("config_hash") << "\n";
  if (m.contains("metrics")) {
    const json& metrics = m.at("metrics");
    std::cout << "mean_eta:      " << metrics.value("mean_eta", 0.0) << "\n"
              << "loss:          " << metrics.value("loss", 0.0) << "\n"
              << "IL_dB:         " << metrics.value("insertion_loss_db", 0.0) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mplc - multi-plane light converter design engine"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker thread count")->envname("MPLC_THREADS");

  auto* design = app.add_subcommand("design", "run a design config end to end");
  std::string config_path, outdir;
  std::uint64_t seed_val = 0;
  design->add_option("config", config_path, "design config (JSON)")->required();
  design->add_option("-o,--output", outdir, "output directory")->required();
  auto* seed_opt = design->add_option("--seed", seed_val, "override the config seed");

  auto* evaluate = app.add_subcommand("evaluate", "re-evaluate a saved bundle");
  std::string eval_bundle, eval_modeset, eval_out;
  double dphi = 0.05;
  int k_instances = 10;
  std::uint64_t eval_seed_val = 0;
  evaluate->add_option("bundle", eval_bundle, "bundle directory")->required();
  auto* ms_opt = evaluate->add_option("--modeset", eval_modeset, "modeset config override");
  auto* dphi_opt = evaluate->add_option("--dphi", dphi, "perturbation level, radians");
  auto* k_opt = evaluate->add_option("-K,--instances", k_instances, "perturbation instances");
  auto* eval_seed_opt = evaluate->add_option("--seed", eval_seed_val, "perturbation seed");
  auto* eval_out_opt = evaluate->add_option("-o,--output", eval_out, "write the report here too");

  auto* compare = app.add_subcommand("compare", "per-mask similarity of two bundles");
  std::string cmp_a, cmp_b, cmp_csv;
  compare->add_option("bundle_a", cmp_a)->required();
  compare->add_option("bundle_b", cmp_b)->required();
  auto* cmp_csv_opt = compare->add_option("-o,--output", cmp_csv, "similarity CSV path");

  auto* exportm = app.add_subcommand("export-masks", "export wrapped masks");
  std::string exp_bundle, exp_format = "raw-f32", exp_out;
  exportm->add_option("bundle", exp_bundle)->required();
  exportm->add_option("--format", exp_format, "raw-f32 | png16 | csv");
  exportm->add_option("-o,--output", exp_out, "output directory")->required();

  auto* report = app.add_subcommand("report", "print a bundle summary");
  std::string rep_bundle;
  report->add_option("bundle", rep_bundle)->required();

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (design->parsed()) {
      return cmd_design(config_path, outdir,
                        *seed_opt ? std::optional<std::uint64_t>(seed_val) : std::nullopt);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(eval_bundle,
                          *ms_opt ? std::optional<std::string>(eval_modeset) : std::nullopt,
                          *dphi_opt ? std::optional<double>(dphi) : std::nullopt,
                          *k_opt ? std::optional<int>(k_instances) : std::nullopt,
                          *eval_seed_opt ? std::optional<std::uint64_t>(eval_seed_val)
                                         : std::nullopt,
                          *eval_out_opt ? std::optional<std::string>(eval_out) : std::nullopt);
    }
    if (compare->parsed()) {
      return cmd_compare(cmp_a, cmp_b,
                         *cmp_csv_opt ? std::optional<std::string>(cmp_csv) : std::nullopt);
    }
    if (exportm->parsed()) return cmd_export_masks(exp_bundle, exp_format, exp_out);
    if (report->parsed()) return cmd_report(rep_bundle);
  } catch (const mplc::ConfigError& e) {
    print_error_record("validation", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error_record("runtime", e.what());
    return 1;
  }
  return 0;
}
