#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mplc/evaluation.hpp"
#include "mplc/macro.hpp"
#include "mplc/model.hpp"
#include "mplc/modeset.hpp"

namespace mplc {

// ---------------------------------------------------------------- config ---

/// A full design-run configuration: grid, modeset, model topology, macro.
/// Distances and waists carry explicit unit suffixes in the file
/// (_um/_mm/_nm); everything is SI meters internally.
struct DesignConfig {
  GridSpec grid;
  LinearArraySpec array;
  int n_masks = 0;
  std::vector<double> distances;  // N+1, meters
  std::string init = "zeros";     // "zeros" | "random"
  double init_range = 3.14159265358979323846;
  nlohmann::json macro_doc;
  std::uint64_t seed = 0;
  double eval_dphi = 0.05;
  int eval_k = 10;
  nlohmann::json normalized;  // canonical echo of the parsed config
};

DesignConfig parse_design_config(const nlohmann::json& doc);
DesignConfig load_design_config_file(const std::string& path);

ModeSet build_modeset(const DesignConfig& cfg);
MPLCModel build_initial_model(const DesignConfig& cfg);
nlohmann::json modeset_spec_json(const DesignConfig& cfg);

/// Rebuilds the modeset recorded in a bundle manifest.
ModeSet modeset_from_manifest(const nlohmann::json& manifest);

// ---------------------------------------------------------------- bundle ---

/// Writes manifest.json plus one raw little-endian float32 file per mask
/// (row-major, radians, unwrapped). `extra` is merged into the manifest.
void save_bundle(const std::string& dir, const MPLCModel& model, const nlohmann::json& extra);

struct Bundle {
  MPLCModel model;
  nlohmann::json manifest;
};

/// Loads and checksums a bundle; IoError on corruption.
Bundle load_bundle(const std::string& dir);

void write_mask_f32(const std::string& path, const PhaseMask& mask);
PhaseMask read_mask_f32(const std::string& path, int nx, int ny);

// ----------------------------------------------------------------- masks ---

/// Linear quantization of wrapped phase over [-pi, pi) to 16 bits; phi = 0
/// maps to 32768. Decode returns bin centers so the round-trip error is
/// bounded by pi/65536.
std::uint16_t phase_to_u16(double phi);
double u16_to_phase(std::uint16_t v);

/// Cyclic 16-bit grayscale for visualization: +pi and -pi render identically.
std::vector<std::uint16_t> phase_to_cyclic_gray(const PhaseMask& mask);

// ------------------------------------------------------------------- png ---

void write_png_gray16(const std::string& path, int nx, int ny,
                      const std::vector<std::uint16_t>& pixels);
void write_png_gray8(const std::string& path, int nx, int ny,
                     const std::vector<std::uint8_t>& pixels);

/// Crosstalk power heat map in dB, floor at -40 dB, `cell` pixels per entry.
void write_crosstalk_heatmap_png(const std::string& path, const CrosstalkMatrix& ct,
                                 int cell = 16);

/// Minimal polyline rendering of a metric history.
void write_line_plot_png(const std::string& path, const std::vector<double>& ys, int width = 640,
                         int height = 360);

// ------------------------------------------------------------------- csv ---

void write_run_log_csv(const std::string& path, const RunLog& log);
void write_crosstalk_csv(const std::string& path, const CrosstalkMatrix& ct);
void write_similarity_csv(const std::string& path, const std::vector<double>& sims);
void write_mask_csv(const std::string& path, const PhaseMask& mask);

nlohmann::json eval_report_to_json(const EvalReport& report);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// ------------------------------------------------------------------ misc ---

std::string fnv1a_hex(const std::string& data);
std::uint32_t crc32_of(const std::string& data);
std::string utc_timestamp();

/// Exclusive output-directory lock (O_EXCL lock file, removed on release).
class DirLock {
 public:
  explicit DirLock(const std::string& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::string path_;
};

}  // namespace mplc
