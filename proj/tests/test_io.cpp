#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "mplc/common.hpp"
#include "mplc/io.hpp"
#include "test_helpers.hpp"

using namespace mplc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mplc_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

json sample_config_json() {
  return json{
      {"grid", {{"nx", 32}, {"ny", 32}, {"pitch_um", 6.0}, {"wavelength_nm", 1550.0}}},
      {"source", {{"type", "linear_array"}, {"count", 3}, {"spacing_um", 24.0}, {"waist_um", 14.0}}},
      {"target", {{"type", "hermite_gaussian"}, {"waist_um", 40.0}, {"ordering", "group_raster"}}},
      {"model", {{"masks", 2}, {"distance_mm", 2.0}}},
      {"macro", {{"name", "default"}, {"max_iters", 3}}},
      {"seed", 7},
      {"evaluation", {{"dphi_rad", 0.05}, {"K", 3}}}};
}

}  // namespace

TEST_SUITE_BEGIN("cli-io");

TEST_CASE("design config parsing") {
  SUBCASE("units convert to SI") {
    const DesignConfig cfg = parse_design_config(sample_config_json());
    CHECK(cfg.grid.pitch == doctest::Approx(6e-6));
    CHECK(cfg.grid.wavelength == doctest::Approx(1.55e-6));
    CHECK(cfg.array.spot_spacing == doctest::Approx(24e-6));
    CHECK(cfg.distances.size() == 3);
    CHECK(cfg.distances[0] == doctest::Approx(2e-3));
    CHECK(cfg.seed == 7);
    CHECK(cfg.eval_k == 3);
  }

  SUBCASE("unknown keys rejected") {
    json doc = sample_config_json();
    doc["grid"]["pitchh_um"] = 1.0;
    CHECK_THROWS_AS((void)parse_design_config(doc), ConfigError);
  }

  SUBCASE("missing sections rejected") {
    json doc = sample_config_json();
    doc.erase("model");
    CHECK_THROWS_AS((void)parse_design_config(doc), ConfigError);
  }

  SUBCASE("distance list must be N+1") {
    json doc = sample_config_json();
    doc["model"].erase("distance_mm");
    doc["model"]["distances_mm"] = {1.0, 2.0};
    CHECK_THROWS_AS((void)parse_design_config(doc), ConfigError);
  }

  SUBCASE("explicit mode list and custom permutation") {
    json doc = sample_config_json();
    doc["target"]["modes"] = {{0, 0}, {2, 0}, {0, 2}};
    doc["target"]["ordering"] = "custom";
    doc["target"]["permutation"] = {2, 0, 1};
    const DesignConfig cfg = parse_design_config(doc);
    CHECK(cfg.array.explicit_modes.size() == 3);
    const ModeSet set = build_modeset(cfg);
    CHECK(set.size() == 3);
  }

  SUBCASE("pad factor enlarges the grid") {
    json doc = sample_config_json();
    doc["grid"]["pad_factor"] = 2;
    const DesignConfig cfg = parse_design_config(doc);
    CHECK(cfg.grid.nx == 64);
    CHECK(cfg.grid.ny == 64);
  }
}

TEST_CASE("bundle round trip is bit-exact") {
  TempDir tmp;
  Rng rng(81);
  const GridSpec g = mplc_test::small_grid(16);
  MPLCModel model = mplc_test::random_model(g, 2, rng);

  const std::string dir1 = tmp.str() + "/a";
  save_bundle(dir1, model, json{{"seed", 5}});
  const Bundle loaded = load_bundle(dir1);
  CHECK(loaded.model.mask_count() == 2);
  CHECK(loaded.model.distances == model.distances);

  // saving the loaded model again reproduces identical mask bytes
  const std::string dir2 = tmp.str() + "/b";
  save_bundle(dir2, loaded.model, json{{"seed", 5}});
  for (int i = 0; i < 2; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "/mask_%02d.f32", i + 1);
    CHECK(read_text_file(dir1 + name) == read_text_file(dir2 + name));
  }
}

TEST_CASE("bundle corruption is detected") {
  TempDir tmp;
  Rng rng(82);
  const GridSpec g = mplc_test::small_grid(16);
  MPLCModel model = mplc_test::random_model(g, 1, rng);
  const std::string dir = tmp.str() + "/c";
  save_bundle(dir, model, json::object());

  std::string raw = read_text_file(dir + "/mask_01.f32");
  raw[7] = static_cast<char>(raw[7] ^ 0x40);
  write_text_file(dir + "/mask_01.f32", raw);
  CHECK_THROWS_AS((void)load_bundle(dir), IoError);
}

TEST_CASE("phase quantization") {
  CHECK(phase_to_u16(0.0) == 32768);
  CHECK(phase_to_u16(-std::numbers::pi) == 0);
  CHECK(phase_to_u16(std::numbers::pi - 1e-9) == 65535);
  // wrap-aware: +pi aliases to -pi
  CHECK(phase_to_u16(std::numbers::pi) == 0);

  Rng rng(83);
  for (int i = 0; i < 1000; ++i) {
    const double phi = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double back = u16_to_phase(phase_to_u16(phi));
    CHECK(std::abs(back - phi) < 2.0 * std::numbers::pi / 65536.0);
  }
}

TEST_CASE("png files carry the right header") {
  TempDir tmp;
  const std::string path = tmp.str() + "/test.png";
  std::vector<std::uint16_t> pix(32 * 8, 32768);
  write_png_gray16(path, 32, 8, pix);

  const std::string raw = read_text_file(path);
  REQUIRE(raw.size() > 24);
  const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  CHECK(std::memcmp(raw.data(), sig, 8) == 0);
  // IHDR width/height are big-endian at offsets 16 and 20
  auto be32 = [&](std::size_t off) {
    return (static_cast<unsigned>(static_cast<unsigned char>(raw[off])) << 24) |
           (static_cast<unsigned>(static_cast<unsigned char>(raw[off + 1])) << 16) |
           (static_cast<unsigned>(static_cast<unsigned char>(raw[off + 2])) << 8) |
           static_cast<unsigned>(static_cast<unsigned char>(raw[off + 3]));
  };
  CHECK(be32(16) == 32);
  CHECK(be32(20) == 8);
  CHECK(static_cast<unsigned char>(raw[24]) == 16);  // bit depth
}

TEST_CASE("run log csv") {
  TempDir tmp;
  RunLog log;
  log.stage_labels = {"s1"};
  StageResult res;
  res.iterations = 2;
  res.loss_history = {0.5, 0.25};
  res.mean_eta_history = {0.5, 0.75};
  res.elapsed_history = {0.1, 0.2};
  log.stage_results.push_back(res);
  const std::string path = tmp.str() + "/log.csv";
  write_run_log_csv(path, log);
  const std::string body = read_text_file(path);
  CHECK(body.find("stage,iteration,loss,mean_eta,elapsed_s\n") == 0);
  CHECK(body.find("s1,1,0.5,0.5,") != std::string::npos);
  CHECK(body.find("s1,2,0.25,0.75,") != std::string::npos);
}

TEST_CASE("modeset spec round trip through a manifest") {
  TempDir tmp;
  const DesignConfig cfg = parse_design_config(sample_config_json());
  const ModeSet original = build_modeset(cfg);
  MPLCModel model = build_initial_model(cfg);

  const std::string dir = tmp.str() + "/bundle";
  save_bundle(dir, model, json{{"modeset", modeset_spec_json(cfg)}, {"seed", cfg.seed}});
  const Bundle bundle = load_bundle(dir);
  const ModeSet rebuilt = modeset_from_manifest(bundle.manifest);

  REQUIRE(rebuilt.size() == original.size());
  for (int j = 0; j < original.size(); ++j) {
    const auto d_in = inner_product(rebuilt.inputs[static_cast<std::size_t>(j)],
                                    original.inputs[static_cast<std::size_t>(j)]);
    const auto d_tg = inner_product(rebuilt.targets[static_cast<std::size_t>(j)],
                                    original.targets[static_cast<std::size_t>(j)]);
    CHECK(std::abs(d_in - 1.0) < 1e-12);
    CHECK(std::abs(d_tg - 1.0) < 1e-12);
  }
}

TEST_CASE("eval report json fields") {
  EvalReport report;
  report.eta = {0.9, 0.8};
  report.loss = 0.15;
  report.sharpness = {1e-3, 1e-5};
  report.insertion_loss_db = 0.7;
  report.tolerance_db = {2e-2, 1e-4};
  report.dphi = 0.05;
  report.k_instances = 10;
  report.seed = 3;
  const json j = eval_report_to_json(report);
  CHECK(j.at("per_mode_eta").size() == 2);
  CHECK(j.at("mean_eta") == doctest::Approx(0.85));
  CHECK(j.at("sharpness").at("mean") == doctest::Approx(1e-3));
  CHECK(j.at("optical_tolerance_db").at("std") == doctest::Approx(1e-4));
  CHECK(j.at("K") == 10);
}

TEST_CASE("directory lock") {
  TempDir tmp;
  const std::string dir = tmp.str() + "/locked";
  {
    DirLock lock(dir);
    CHECK_THROWS_AS(DirLock{dir}, IoError);
  }
  DirLock relock(dir);  // released by the destructor above
}

TEST_CASE("fnv1a vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_SUITE_END();
