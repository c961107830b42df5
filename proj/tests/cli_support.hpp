#pragma once

// Helpers for driving the cmaff executable from tests: run a command line in a
// working directory, capture stdout, and build fixture directories.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cmaff/augment.hpp"
#include "cmaff/ften.hpp"
#include "cmaff/metrics.hpp"
#include "metrics_oracle.hpp"

#ifndef CMAFF_CLI_PATH
#error "CMAFF_CLI_PATH must name the cmaff executable"
#endif

namespace cmaff::testing {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

// Runs `cmaff <args>` inside `cwd`. stderr goes to <cwd>.stderr so it never
// mixes with the captured stdout or lands among the outputs.
inline RunResult run_cli(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd " + shell_quote(cwd.string()) + " && env -u CMAFF_SEED " +
                          shell_quote(CMAFF_CLI_PATH) + " " + args + " 2>" +
                          shell_quote(cwd.string() + ".stderr");
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string stderr_of(const fs::path& cwd) {
  std::ifstream in(cwd.string() + ".stderr", std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_bytes(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

// Relative path -> contents for every regular file below `root`.
inline std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_bytes(e.path());
  }
  return files;
}

// A fresh, empty scratch directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cmaff_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline void write_feature_map(const fs::path& p, const FeatureMap& m) {
  fs::create_directories(p.parent_path());
  ften::write_file(p, ften::to_raw(m));
}

inline FeatureMap seeded_map(std::uint64_t seed, std::size_t c, std::size_t h, std::size_t w) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(c * h * w);
  for (auto& x : v) x = u(rng);
  return FeatureMap(c, h, w, std::move(v));
}

inline std::string vedai_fixture() {
  return "# x1 y1 x2 y2 x3 y3 x4 y4 class\n"
         "100 100 200 100 200 200 100 200 0\n"
         "500 429.5 570.5 500 500 570.5 429.5 500 3\n"
         "-10 0 50 0 50 40 -10 40 5\n";
}

// Four tile directories t0..t3 with noise planes and one label each. With
// `replicated`, every RGB channel equals the IR plane.
inline void write_tiles(const fs::path& dir, std::uint64_t seed, bool replicated = false) {
  std::mt19937_64 rng(seed);
  const std::size_t sizes[4][2] = {{40, 30}, {50, 50}, {20, 60}, {33, 17}};
  for (int k = 0; k < 4; ++k) {
    const std::size_t w = sizes[k][0], h = sizes[k][1];
    Image ir(w, h, 1), rgb(w, h, 3);
    for (auto& p : ir.pixels()) p = static_cast<std::uint8_t>(rng());
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t c = 0; c < 3; ++c)
          rgb.at(y, x, c) = replicated ? ir.at(y, x) : static_cast<std::uint8_t>(rng());
    augment::ImagePair p{rgb, ir, {{k, metrics::Box{0.5, 0.5, 0.4, 0.3}}}};
    augment::save_pair(dir / ("t" + std::to_string(k)), p);
  }
}

inline std::string format_gt(const std::vector<metrics::GroundTruthBox>& gts) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& g : gts) {
    out << g.image_id << " " << g.class_id << " " << g.box.xc << " " << g.box.yc << " "
        << g.box.w << " " << g.box.h << "\n";
  }
  return out.str();
}

inline std::string format_dets(const std::vector<metrics::DetectionBox>& dets) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& d : dets) {
    out << d.image_id << " " << d.class_id << " " << d.score << " " << d.box.xc << " "
        << d.box.yc << " " << d.box.w << " " << d.box.h << "\n";
  }
  return out.str();
}

// First generated instance with exactly five detections and five ground
// truths whose boxes all lie inside the unit frame.
inline SmallInstance five_by_five_instance() {
  std::mt19937_64 rng(2024);
  for (;;) {
    auto inst = random_small_instance(rng);
    if (inst.dets.size() != 5 || inst.gts.size() != 5) continue;
    bool ok = true;
    for (const auto& d : inst.dets) ok = ok && metrics::is_valid(d.box);
    if (ok) return inst;
  }
}

// Writes every fixture the determinism sweep needs into `dir`.
inline void write_sweep_fixtures(const fs::path& dir) {
  write_feature_map(dir / "rgb.ften", seeded_map(1, 8, 6, 6));
  write_feature_map(dir / "ir.ften", seeded_map(2, 8, 6, 6));
  const auto inst = five_by_five_instance();
  write_bytes(dir / "gt.txt", format_gt(inst.gts));
  write_bytes(dir / "det.txt", format_dets(inst.dets));
  write_bytes(dir / "vedai.txt", vedai_fixture());
  write_tiles(dir, 77);
}

struct SweepCommand {
  const char* name;
  const char* args;
};

// One invocation per subcommand, each writing whatever files it produces.
inline const std::vector<SweepCommand>& sweep_commands() {
  static const std::vector<SweepCommand> cmds = {
      {"fuse", "fuse rgb.ften ir.ften --seed 0 --arrangement parallel -o fused.ften --viz viz"},
      {"gradcheck", "gradcheck --seeds 3 --channels 8 --hw 5"},
      {"eval", "eval gt.txt det.txt --classes 1"},
      {"convert", "convert vedai.txt --image-size 1024 -o labels.txt"},
      {"bench", "bench --channels 128,256,512 --hw 8 --iters 2"},
      {"mosaic", "mosaic t0 t1 t2 t3 --seed 9 --size 96 --count 2 --threads 2 -o mosaic"},
      {"init", "init --channels 16 --reduction 4 --seed 5 --concat -o bundle"},
      {"stats", "stats t0/labels.txt t1/labels.txt t2/labels.txt --grid 4 --heatmap hist"},
  };
  return cmds;
}

}  // namespace cmaff::testing
