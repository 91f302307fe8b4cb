#include "mplc/io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "mplc/common.hpp"
#include "mplc/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "mask files are little-endian; big-endian hosts are unsupported");

namespace mplc {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' at " + path);
  }
}

template <typename T>
T require_key(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + key + "' at " + path);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "' at " + path);
  }
}

template <typename T>
T key_or(const json& obj, const std::string& key, T fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "' at " + path);
  }
}

std::string mask_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "mask_%02d.f32", index + 1);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- config ---

DesignConfig parse_design_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(doc, {"grid", "source", "target", "model", "macro", "seed", "evaluation"},
                 "config");

  DesignConfig cfg;

  const json& grid = doc.contains("grid") ? doc.at("grid") : throw ConfigError("missing 'grid'");
  reject_unknown(grid, {"nx", "ny", "pitch_um", "wavelength_nm", "pad_factor"}, "config.grid");
  const int pad = key_or<int>(grid, "pad_factor", 1, "config.grid");
  if (pad < 1) throw ConfigError("config.grid.pad_factor must be >= 1");
  cfg.grid = GridSpec(require_key<int>(grid, "nx", "config.grid") * pad,
                      require_key<int>(grid, "ny", "config.grid") * pad,
                      require_key<double>(grid, "pitch_um", "config.grid") * 1e-6,
                      key_or<double>(grid, "wavelength_nm", 1550.0, "config.grid") * 1e-9);

  const json& source =
      doc.contains("source") ? doc.at("source") : throw ConfigError("missing 'source'");
  reject_unknown(source, {"type", "count", "spacing_um", "waist_um"}, "config.source");
  if (require_key<std::string>(source, "type", "config.source") != "linear_array") {
    throw ConfigError("config.source.type: only 'linear_array' is supported");
  }
  cfg.array.count = require_key<int>(source, "count", "config.source");
  cfg.array.spot_spacing = key_or<double>(source, "spacing_um", 0.0, "config.source") * 1e-6;
  cfg.array.spot_waist = require_key<double>(source, "waist_um", "config.source") * 1e-6;

  const json& target =
      doc.contains("target") ? doc.at("target") : throw ConfigError("missing 'target'");
  reject_unknown(target, {"type", "waist_um", "ordering", "modes", "permutation"},
                 "config.target");
  if (require_key<std::string>(target, "type", "config.target") != "hermite_gaussian") {
    throw ConfigError("config.target.type: only 'hermite_gaussian' is supported");
  }
  cfg.array.target_waist = require_key<double>(target, "waist_um", "config.target") * 1e-6;
  cfg.array.ordering = mode_ordering_from_string(
      key_or<std::string>(target, "ordering", "group_raster", "config.target"));
  if (target.contains("modes")) {
    for (const auto& mn : target.at("modes")) {
      if (!mn.is_array() || mn.size() != 2) {
        throw ConfigError("config.target.modes entries must be [m, n] pairs");
      }
      cfg.array.explicit_modes.push_back({mn.at(0).get<int>(), mn.at(1).get<int>()});
    }
  }
  if (target.contains("permutation")) {
    cfg.array.permutation = target.at("permutation").get<std::vector<int>>();
  }

  const json& model =
      doc.contains("model") ? doc.at("model") : throw ConfigError("missing 'model'");
  reject_unknown(model, {"masks", "distance_mm", "distances_mm", "init", "init_range_rad"},
                 "config.model");
  cfg.n_masks = require_key<int>(model, "masks", "config.model");
  if (cfg.n_masks < 1) throw ConfigError("config.model.masks must be >= 1");
  if (model.contains("distances_mm")) {
    for (double d : model.at("distances_mm").get<std::vector<double>>()) {
      cfg.distances.push_back(d * 1e-3);
    }
    if (static_cast<int>(cfg.distances.size()) != cfg.n_masks + 1) {
      throw ConfigError("config.model.distances_mm must list N+1 values");
    }
  } else {
    const double d = require_key<double>(model, "distance_mm", "config.model") * 1e-3;
    cfg.distances.assign(static_cast<std::size_t>(cfg.n_masks) + 1, d);
  }
  cfg.init = key_or<std::string>(model, "init", "zeros", "config.model");
  if (cfg.init != "zeros" && cfg.init != "random") {
    throw ConfigError("config.model.init must be 'zeros' or 'random'");
  }
  cfg.init_range = key_or<double>(model, "init_range_rad", cfg.init_range, "config.model");

  if (!doc.contains("macro")) throw ConfigError("missing 'macro'");
  cfg.macro_doc = doc.at("macro");
  cfg.seed = key_or<std::uint64_t>(doc, "seed", 0, "config");

  if (doc.contains("evaluation")) {
    const json& ev = doc.at("evaluation");
    reject_unknown(ev, {"dphi_rad", "K"}, "config.evaluation");
    cfg.eval_dphi = key_or<double>(ev, "dphi_rad", 0.05, "config.evaluation");
    cfg.eval_k = key_or<int>(ev, "K", 10, "config.evaluation");
  }

  // canonical echo: defaults filled in as literals so a reparse reproduces
  // the exact same doubles (never re-derived from SI values)
  cfg.normalized = doc;
  cfg.normalized["grid"]["pad_factor"] = pad;
  if (!grid.contains("wavelength_nm")) cfg.normalized["grid"]["wavelength_nm"] = 1550.0;
  if (!source.contains("spacing_um")) cfg.normalized["source"]["spacing_um"] = 0.0;
  cfg.normalized["target"]["ordering"] = to_string(cfg.array.ordering);
  cfg.normalized["model"]["init"] = cfg.init;
  cfg.normalized["seed"] = cfg.seed;
  cfg.normalized["evaluation"] = {{"dphi_rad", cfg.eval_dphi}, {"K", cfg.eval_k}};
  return cfg;
}

DesignConfig load_design_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_design_config(doc);
}

ModeSet build_modeset(const DesignConfig& cfg) { return build_linear_array_modeset(cfg.grid, cfg.array); }

MPLCModel build_initial_model(const DesignConfig& cfg) {
  MPLCModel model = MPLCModel::zeros(cfg.grid, cfg.n_masks, cfg.distances);
  if (cfg.init == "random") {
    Rng rng(cfg.seed ^ 0xA5A5A5A5A5A5A5A5ULL);
    for (auto& mask : model.masks) {
      for (auto& p : mask.phi) p = rng.uniform(-cfg.init_range, cfg.init_range);
    }
  }
  return model;
}

json modeset_spec_json(const DesignConfig& cfg) {
  // verbatim echo of the parsed config sections: reparsing them rebuilds a
  // bit-identical grid and modeset
  return json{{"grid", cfg.normalized.at("grid")},
              {"source", cfg.normalized.at("source")},
              {"target", cfg.normalized.at("target")}};
}

ModeSet modeset_from_manifest(const json& manifest) {
  if (!manifest.contains("modeset")) throw IoError("manifest has no modeset spec");
  const json& ms = manifest.at("modeset");
  json doc = {{"grid", ms.at("grid")},
              {"source", ms.at("source")},
              {"target", ms.at("target")},
              {"model", {{"masks", manifest.at("n_masks")}, {"distance_mm", 1.0}}},
              {"macro", {{"name", "default"}}}};
  DesignConfig cfg = parse_design_config(doc);
  return build_modeset(cfg);
}

// ---------------------------------------------------------------- bundle ---

void write_mask_f32(const std::string& path, const PhaseMask& mask) {
  std::vector<float> buf(mask.phi.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(mask.phi[i]);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw IoError("short write to " + path);
}

PhaseMask read_mask_f32(const std::string& path, int nx, int ny) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  PhaseMask mask(nx, ny);
  std::vector<float> buf(mask.phi.size());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float))) {
    throw IoError("mask file " + path + " truncated");
  }
  for (std::size_t i = 0; i < buf.size(); ++i) mask.phi[i] = static_cast<double>(buf[i]);
  return mask;
}

std::uint32_t crc32_of(const std::string& data) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("short write to " + path);
}

void save_bundle(const std::string& dir, const MPLCModel& model, const json& extra) {
  std::filesystem::create_directories(dir);
  json manifest = extra;
  manifest["format_version"] = 1;
  manifest["generator_version"] = kVersion;
  manifest["created_utc"] = utc_timestamp();
  manifest["grid"] = {{"nx", model.grid.nx},
                      {"ny", model.grid.ny},
                      {"pitch_m", model.grid.pitch},
                      {"wavelength_m", model.grid.wavelength}};
  manifest["n_masks"] = model.mask_count();
  manifest["distances_m"] = model.distances;
  manifest["trainable_masks"] = model.trainable_masks;
  manifest["trainable_distances"] = model.trainable_distances;

  json files = json::array();
  for (int i = 0; i < model.mask_count(); ++i) {
    const std::string name = mask_file_name(i);
    const std::string path = dir + "/" + name;
    write_mask_f32(path, model.masks[static_cast<std::size_t>(i)]);
    char crc[16];
    std::snprintf(crc, sizeof(crc), "%08x", crc32_of(read_text_file(path)));
    files.push_back({{"file", name}, {"crc32", crc}});
  }
  manifest["mask_files"] = files;
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

Bundle load_bundle(const std::string& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir + "/manifest.json"));
  } catch (const json::parse_error& e) {
    throw IoError("bundle manifest unreadable: " + std::string(e.what()));
  }
  Bundle bundle;
  bundle.manifest = manifest;
  try {
    const json& grid = manifest.at("grid");
    bundle.model.grid = GridSpec(grid.at("nx").get<int>(), grid.at("ny").get<int>(),
                                 grid.at("pitch_m").get<double>(),
                                 grid.at("wavelength_m").get<double>());
    bundle.model.distances = manifest.at("distances_m").get<std::vector<double>>();
    bundle.model.trainable_masks = manifest.at("trainable_masks").get<std::vector<bool>>();
    bundle.model.trainable_distances =
        manifest.at("trainable_distances").get<std::vector<bool>>();
    const int n = manifest.at("n_masks").get<int>();
    for (int i = 0; i < n; ++i) {
      const json& entry = manifest.at("mask_files").at(static_cast<std::size_t>(i));
      const std::string path = dir + "/" + entry.at("file").get<std::string>();
      const std::string raw = read_text_file(path);
      char crc[16];
      std::snprintf(crc, sizeof(crc), "%08x", crc32_of(raw));
      if (entry.at("crc32").get<std::string>() != crc) {
        throw IoError("bundle checksum failure for " + path);
      }
      bundle.model.masks.push_back(
          read_mask_f32(path, bundle.model.grid.nx, bundle.model.grid.ny));
    }
  } catch (const json::exception& e) {
    throw IoError("bundle manifest malformed: " + std::string(e.what()));
  }
  bundle.model.validate();
  return bundle;
}

// ----------------------------------------------------------------- masks ---

std::uint16_t phase_to_u16(double phi) {
  const double t = (wrap_phase(phi) + std::numbers::pi) / (2.0 * std::numbers::pi);  // [0,1)
  const double q = std::floor(t * 65536.0);
  return static_cast<std::uint16_t>(std::min(q, 65535.0));
}

double u16_to_phase(std::uint16_t v) {
  return (static_cast<double>(v) + 0.5) / 65536.0 * 2.0 * std::numbers::pi - std::numbers::pi;
}

std::vector<std::uint16_t> phase_to_cyclic_gray(const PhaseMask& mask) {
  std::vector<std::uint16_t> out(mask.phi.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = 0.5 - 0.5 * std::cos(mask.phi[i]);
    out[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  return out;
}

// ------------------------------------------------------------------- png ---

namespace {

void write_png_impl(const std::string& path, int nx, int ny, int bit_depth,
                    const unsigned char* rows_base, std::size_t row_bytes) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + path + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng write failed for " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(nx), static_cast<png_uint_32>(ny), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // in-memory data is little-endian
  std::vector<png_bytep> rows(static_cast<std::size_t>(ny));
  for (int r = 0; r < ny; ++r) {
    rows[static_cast<std::size_t>(r)] =
        const_cast<png_bytep>(rows_base + static_cast<std::size_t>(r) * row_bytes);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

void write_png_gray16(const std::string& path, int nx, int ny,
                      const std::vector<std::uint16_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(nx) * ny) throw IoError("png16: size mismatch");
  write_png_impl(path, nx, ny, 16, reinterpret_cast<const unsigned char*>(pixels.data()),
                 static_cast<std::size_t>(nx) * 2);
}

void write_png_gray8(const std::string& path, int nx, int ny,
                     const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(nx) * ny) throw IoError("png8: size mismatch");
  write_png_impl(path, nx, ny, 8, pixels.data(), static_cast<std::size_t>(nx));
}

void write_crosstalk_heatmap_png(const std::string& path, const CrosstalkMatrix& ct, int cell) {
  const int m = ct.m;
  const int w = m * cell;
  std::vector<std::uint8_t> img(static_cast<std::size_t>(w) * w, 0);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      const double p = ct.power(j, k);
      const double db = p > 0.0 ? 10.0 * std::log10(p) : -40.0;
      const double t = std::clamp((db + 40.0) / 40.0, 0.0, 1.0);  // -40 dB floor
      const auto g = static_cast<std::uint8_t>(std::lround(t * 255.0));
      for (int dy = 0; dy < cell; ++dy) {
        for (int dx = 0; dx < cell; ++dx) {
          img[static_cast<std::size_t>(j * cell + dy) * w + k * cell + dx] = g;
        }
      }
    }
  }
  write_png_gray8(path, w, w, img);
}

void write_line_plot_png(const std::string& path, const std::vector<double>& ys, int width,
                         int height) {
  std::vector<std::uint8_t> img(static_cast<std::size_t>(width) * height, 255);
  if (!ys.empty()) {
    double lo = ys[0], hi = ys[0];
    for (double y : ys) {
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    if (hi - lo < 1e-300) hi = lo + 1.0;
    auto px = [&](std::size_t i) {
      return ys.size() > 1 ? static_cast<int>(i * (width - 1) / (ys.size() - 1)) : 0;
    };
    auto py = [&](double y) {
      return static_cast<int>(std::lround((hi - y) / (hi - lo) * (height - 1)));
    };
    for (std::size_t i = 0; i + 1 < std::max<std::size_t>(ys.size(), 1); ++i) {
      // naive line rasterization between consecutive samples
      const int x0 = px(i), y0 = py(ys[i]), x1 = px(i + 1), y1 = py(ys[i + 1]);
      const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
      for (int s = 0; s <= steps; ++s) {
        const int x = x0 + (x1 - x0) * s / steps;
        const int y = y0 + (y1 - y0) * s / steps;
        img[static_cast<std::size_t>(y) * width + x] = 0;
      }
    }
    if (ys.size() == 1) img[static_cast<std::size_t>(py(ys[0])) * width] = 0;
  }
  write_png_gray8(path, width, height, img);
}

// ------------------------------------------------------------------- csv ---

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_run_log_csv(const std::string& path, const RunLog& log) {
  std::ostringstream out;
  out << "stage,iteration,loss,mean_eta,elapsed_s\n";
  for (std::size_t s = 0; s < log.stage_results.size(); ++s) {
    const StageResult& res = log.stage_results[s];
    for (int it = 0; it < res.iterations; ++it) {
      out << log.stage_labels[s] << ',' << (it + 1) << ','
          << fmt_double(res.loss_history[static_cast<std::size_t>(it)]) << ','
          << fmt_double(res.mean_eta_history[static_cast<std::size_t>(it)]) << ','
          << fmt_double(res.elapsed_history[static_cast<std::size_t>(it)]) << '\n';
    }
  }
  write_text_file(path, out.str());
}

void write_crosstalk_csv(const std::string& path, const CrosstalkMatrix& ct) {
  std::ostringstream out;
  for (int j = 0; j < ct.m; ++j) {
    for (int k = 0; k < ct.m; ++k) {
      if (k) out << ',';
      out << fmt_double(ct.at(j, k).real()) << ',' << fmt_double(ct.at(j, k).imag());
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

void write_similarity_csv(const std::string& path, const std::vector<double>& sims) {
  std::ostringstream out;
  out << "mask,similarity\n";
  for (std::size_t i = 0; i < sims.size(); ++i) {
    out << (i + 1) << ',' << fmt_double(sims[i]) << '\n';
  }
  write_text_file(path, out.str());
}

void write_mask_csv(const std::string& path, const PhaseMask& mask) {
  std::ostringstream out;
  for (int iy = 0; iy < mask.ny; ++iy) {
    for (int ix = 0; ix < mask.nx; ++ix) {
      if (ix) out << ',';
      out << fmt_double(mask.at(ix, iy));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

json eval_report_to_json(const EvalReport& report) {
  return json{{"per_mode_eta", report.eta},
              {"loss", report.loss},
              {"mean_eta", 1.0 - report.loss},
              {"sharpness", {{"mean", report.sharpness.mean}, {"std", report.sharpness.stddev}}},
              {"insertion_loss_db", report.insertion_loss_db},
              {"optical_tolerance_db",
               {{"mean", report.tolerance_db.mean}, {"std", report.tolerance_db.stddev}}},
              {"dphi_rad", report.dphi},
              {"K", report.k_instances},
              {"seed", report.seed}};
}

// ------------------------------------------------------------------ misc ---

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

DirLock::DirLock(const std::string& dir) {
  std::filesystem::create_directories(dir);
  path_ = dir + "/.mplc.lock";
  FILE* fp = std::fopen(path_.c_str(), "wx");
  if (!fp) {
    throw IoError("output directory " + dir + " is locked by another run (" + path_ + " exists)");
  }
  std::fclose(fp);
}

DirLock::~DirLock() { std::remove(path_.c_str()); }

}  // namespace mplc
