// cmaff: command-line front end for the fusion, metrics, annotation and
// mosaic library.
//
// Machine-readable results go to stdout; warnings, progress and timings go to
// stderr. Output files are staged next to their destination and renamed into
// place only after every output of the command has been written.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cmaff/annotations.hpp"
#include "cmaff/augment.hpp"
#include "cmaff/errors.hpp"
#include "cmaff/ften.hpp"
#include "cmaff/fusion.hpp"
#include "cmaff/fusion_check.hpp"
#include "cmaff/image.hpp"
#include "cmaff/metrics.hpp"
#include "cmaff/params.hpp"

namespace fs = std::filesystem;
using namespace cmaff;

namespace {

constexpr double kGradTolerance = 1e-5;
constexpr double kReferenceParamsM = 0.55;

// Collects a command's outputs under temporary names. commit() renames them
// into place; anything still staged when the object dies is deleted.
class StagedOutputs {
 public:
  StagedOutputs() = default;
  StagedOutputs(const StagedOutputs&) = delete;
  StagedOutputs& operator=(const StagedOutputs&) = delete;
  ~StagedOutputs() {
    std::error_code ec;
    for (const auto& [tmp, dst] : files_) fs::remove(tmp, ec);
    for (const auto& d : scratch_dirs_) fs::remove_all(d, ec);
  }

  fs::path stage(const fs::path& dst) {
    if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
    fs::path tmp = dst;
    tmp += ".partial";
    files_.emplace_back(tmp, dst);
    return tmp;
  }

  // A scratch directory whose regular files will be moved into `dst_dir`.
  fs::path stage_dir(const fs::path& dst_dir) {
    fs::path tmp = dst_dir;
    tmp += ".partial";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    scratch_dirs_.push_back(tmp);
    dir_moves_.emplace_back(tmp, dst_dir);
    return tmp;
  }

  void commit() {
    for (const auto& [tmp, dst] : dir_moves_) {
      fs::create_directories(dst);
      for (const auto& e : fs::directory_iterator(tmp)) {
        files_.emplace_back(e.path(), dst / e.path().filename());
      }
    }
    for (const auto& [tmp, dst] : files_) fs::rename(tmp, dst);
    files_.clear();
    std::error_code ec;
    for (const auto& d : scratch_dirs_) fs::remove_all(d, ec);
    scratch_dirs_.clear();
  }

 private:
  std::vector<std::pair<fs::path, fs::path>> files_;
  std::vector<std::pair<fs::path, fs::path>> dir_moves_;
  std::vector<fs::path> scratch_dirs_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("CMAFF_SEED");
  if (!env || !*env) return 0;
  std::uint64_t v = 0;
  const char* end = env + std::char_traits<char>::length(env);
  auto [ptr, ec] = std::from_chars(env, end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(std::string("CMAFF_SEED is not an unsigned integer: '") + env + "'");
  }
  return v;
}

// Renders a per-channel vector as a strip of square cells.
Image render_strip(std::span<const float> values, std::size_t cell = 8) {
  std::vector<float> px;
  px.reserve(values.size() * cell * cell);
  for (std::size_t y = 0; y < cell; ++y)
    for (float v : values)
      for (std::size_t x = 0; x < cell; ++x) px.push_back(v);
  return render_heatmap(px, values.size() * cell, cell);
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// --------------------------------------------------------------------------
// fuse

struct FuseArgs {
  std::string rgb, ir, params, out = "fused.ften", viz, arrangement = "parallel";
  std::optional<std::uint64_t> seed;
  std::size_t reduction = kDefaultDemReduction;
};

int run_fuse(const FuseArgs& a) {
  const auto arrangement = parse_arrangement(a.arrangement);
  const auto fr = ften::to_feature_map(ften::read_file(a.rgb));
  const auto ft = ften::to_feature_map(ften::read_file(a.ir));
  if (!fr.same_shape(ft)) {
    throw ShapeError("rgb and ir tensors differ in shape");
  }
  const bool want_concat = arrangement == Arrangement::ParallelConcat;
  const CmaffParams p =
      a.params.empty()
          ? init_params(fr.channels(), a.reduction, a.seed.value_or(default_seed()), want_concat)
          : read_bundle(a.params);
  if (p.channels() != fr.channels()) {
    throw ShapeError("parameters expect " + std::to_string(p.channels()) +
                     " channels, inputs have " + std::to_string(fr.channels()));
  }
  const auto r = fuse_detailed(fr, ft, p, arrangement);

  StagedOutputs staged;
  ften::write_file(staged.stage(a.out), ften::to_raw(r.output));
  if (!a.viz.empty()) {
    const fs::path dir(a.viz);
    const std::pair<const char*, const ChannelVector*> masks[] = {
        {"m_dm", &r.dem_mask}, {"m_rgb", &r.csm_rgb}, {"m_ir", &r.csm_ir}};
    for (const auto& [name, v] : masks) {
      ften::write_file(staged.stage(dir / (std::string(name) + ".ften")), ften::to_raw(*v));
      write_pnm_file(staged.stage(dir / (std::string(name) + ".pgm")), render_strip(v->data()));
    }
  }
  staged.commit();

  double sum = 0.0, max_abs = 0.0;
  for (float v : r.output.data()) {
    sum += v;
    max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
  }
  std::cout << "arrangement=" << to_string(arrangement) << "\n"
            << "shape=" << fr.channels() << "," << fr.height() << "," << fr.width() << "\n"
            << "params=" << enumerate_param_count(p) << "\n"
            << "seed=" << p.seed() << "\n"
            << "output=" << a.out << "\n"
            << "output.sum=" << fmt("%.9g", sum) << "\n"
            << "output.max_abs=" << fmt("%.9g", max_abs) << "\n";
  if (!a.viz.empty()) std::cout << "viz=" << a.viz << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// gradcheck

struct GradArgs {
  std::size_t channels = 8, hw = 5, seeds = 20, reduction = kDefaultDemReduction;
  std::string arrangement = "all";
  std::optional<std::uint64_t> seed;
  bool corrupt = false;
};

int run_gradcheck(const GradArgs& a) {
  if (a.channels == 0 || a.hw == 0 || a.seeds == 0) {
    throw ConfigError("--channels, --hw and --seeds must be >= 1");
  }
  std::vector<Arrangement> which;
  if (a.arrangement == "all") {
    which.assign(std::begin(kAllArrangements), std::end(kAllArrangements));
  } else {
    which.push_back(parse_arrangement(a.arrangement));
  }
  FuseCheckConfig cfg;
  cfg.channels = a.channels;
  cfg.height = a.hw;
  cfg.width = a.hw;
  cfg.dem_reduction = a.reduction;
  cfg.corrupt_adjoint = a.corrupt;

  const std::uint64_t base = a.seed.value_or(default_seed());
  std::vector<double> worst(which.size(), 0.0);
  for (std::size_t i = 0; i < a.seeds; ++i) {
    const std::uint64_t s = base + i;
    std::cout << "seed=" << s;
    for (std::size_t k = 0; k < which.size(); ++k) {
      const double e = check_fuse_gradients(which[k], s, cfg).max_rel_error;
      worst[k] = std::max(worst[k], e);
      std::cout << " " << to_string(which[k]) << "=" << fmt("%.3e", e);
    }
    std::cout << "\n";
  }
  bool ok = true;
  for (std::size_t k = 0; k < which.size(); ++k) {
    std::cout << "max." << to_string(which[k]) << "=" << fmt("%.3e", worst[k]) << "\n";
    ok = ok && worst[k] <= kGradTolerance;
  }
  std::cout << "tolerance=" << fmt("%.0e", kGradTolerance) << "\n"
            << "status=" << (ok ? "pass" : "fail") << "\n";
  return ok ? 0 : 1;
}

// --------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string gt, det, interp = "all-point";
  int classes = 0;
  unsigned threads = 1;
};

int run_eval(const EvalArgs& a) {
  auto open = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
  };
  std::vector<metrics::GroundTruthBox> gts;
  std::vector<metrics::DetectionBox> dets;
  {
    auto in = open(a.gt);
    try {
      gts = metrics::parse_ground_truth(in);
    } catch (const ParseError& e) {
      throw Error(a.gt + ": " + e.what());
    }
  }
  {
    auto in = open(a.det);
    try {
      dets = metrics::parse_detections(in);
    } catch (const ParseError& e) {
      throw Error(a.det + ": " + e.what());
    }
  }
  metrics::EvalOptions opts;
  opts.num_classes = a.classes;
  opts.threads = a.threads;
  opts.interpolation = a.interp == "11-point" ? metrics::Interpolation::ElevenPoint
                                              : metrics::Interpolation::AllPoint;
  metrics::write_report(std::cout, metrics::evaluate(dets, gts, opts));
  return 0;
}

// --------------------------------------------------------------------------
// convert

struct ConvertArgs {
  std::string input, out;
  int image_size = annotations::kDefaultImageSize;
};

int run_convert(const ConvertArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw IoError("cannot open " + a.input);
  std::ostringstream labels;
  annotations::ConvertSummary s;
  try {
    s = annotations::convert_stream(in, labels, a.image_size, &std::cerr);
  } catch (const ParseError& e) {
    throw Error(a.input + ": " + e.what());
  }
  if (a.out.empty()) {
    std::cout << labels.str();
    return 0;
  }
  StagedOutputs staged;
  write_text_file(staged.stage(a.out), labels.str());
  staged.commit();
  std::cout << "converted=" << s.converted << "\n"
            << "clamped=" << s.clamped << "\n"
            << "output=" << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::vector<std::size_t> channels{128, 256, 512};
  std::size_t hw = 20, iters = 10, reduction = kDefaultDemReduction;
  std::optional<std::uint64_t> seed;
};

int run_bench(const BenchArgs& a) {
  if (a.iters == 0) throw ConfigError("--iters must be >= 1");
  if (a.hw == 0) throw ConfigError("--hw must be >= 1");
  const std::uint64_t seed = a.seed.value_or(default_seed());
  std::size_t total = 0;
  std::cout << "reduction=" << a.reduction << "\n";
  for (std::size_t c : a.channels) {
    const auto p = init_params(c, a.reduction, seed);
    const std::size_t hd = bottleneck_width(c, a.reduction);
    const std::size_t hc = bottleneck_width(c, kCsmReduction);
    const std::size_t dem = (c * hd + hd) + (hd * c + c);
    const std::size_t csm = (c * hc + hc) + 2 * (hc * c + c);
    const std::size_t counted = enumerate_param_count(p);
    if (counted != param_count(c, a.reduction) || counted != dem + csm) {
      throw Error("parameter audit mismatch for C=" + std::to_string(c));
    }
    std::cout << "block." << c << ".dem=" << dem << "\n"
              << "block." << c << ".csm=" << csm << "\n"
              << "block." << c << ".total=" << counted << "\n";
    total += counted;

    // Timing is informational and kept off stdout so reruns diff cleanly.
    std::mt19937_64 rng(seed ^ c);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> buf(c * a.hw * a.hw);
    for (auto& v : buf) v = u(rng);
    const FeatureMap fr(c, a.hw, a.hw, buf);
    for (auto& v : buf) v = u(rng);
    const FeatureMap ft(c, a.hw, a.hw, buf);
    std::vector<double> ms;
    volatile float sink = 0.0f;
    for (std::size_t i = 0; i < a.iters; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto out = fuse(fr, ft, p, Arrangement::Parallel);
      const auto t1 = std::chrono::steady_clock::now();
      sink = out.data()[0];
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    std::cerr << "time." << c << ".hw=" << a.hw << " median_ms=" << fmt("%.4f", ms[ms.size() / 2])
              << " min_ms=" << fmt("%.4f", ms.front()) << " iters=" << a.iters << "\n";
  }
  std::cout << "total=" << total << "\n"
            << "total_m=" << fmt("%.6f", static_cast<double>(total) / 1e6) << "\n"
            << "reference_m=" << fmt("%.2f", kReferenceParamsM) << "\n"
            << "# reference_m is the published fusion-module size for three blocks. The\n"
            << "# bottleneck ratio of the differential branch is not given there, so the\n"
            << "# counts above follow from --reduction and are not expected to match it.\n";
  return 0;
}

// --------------------------------------------------------------------------
// mosaic

struct MosaicArgs {
  std::vector<std::string> tiles;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t size = 640, count = 1;
  double jitter = 0.25;
  unsigned threads = 1;
};

void print_mosaic(const augment::Mosaic& m, const std::string& prefix) {
  std::cout << prefix << "split=" << m.split_x << "," << m.split_y << "\n"
            << prefix << "labels=" << m.pair.labels.size() << "\n";
  for (const auto& [cls, b] : m.pair.labels) {
    std::cout << prefix << "label=" << annotations::write_label(b, cls) << "\n";
  }
}

int run_mosaic(const MosaicArgs& a) {
  if (a.tiles.size() != 4) {
    throw ArityError("mosaic needs exactly 4 tile directories, got " +
                     std::to_string(a.tiles.size()));
  }
  if (a.count == 0) throw ConfigError("--count must be >= 1");
  std::vector<augment::ImagePair> tiles;
  for (const auto& t : a.tiles) tiles.push_back(augment::load_pair(t));
  augment::MosaicConfig cfg;
  cfg.out_size = a.size;
  cfg.center_jitter = a.jitter;
  cfg.seed = a.seed.value_or(default_seed());
  const auto mosaics = augment::mosaic_batch(tiles, cfg, a.count, a.threads);

  StagedOutputs staged;
  const fs::path root(a.out);
  for (std::size_t i = 0; i < mosaics.size(); ++i) {
    char sub[16];
    std::snprintf(sub, sizeof sub, "%03zu", i);
    const fs::path dir = a.count == 1 ? root : root / sub;
    const auto& pair = mosaics[i].pair;
    write_pnm_file(staged.stage(dir / "rgb.ppm"), pair.rgb);
    write_pnm_file(staged.stage(dir / "ir.pgm"), pair.ir);
    std::string labels;
    for (const auto& [cls, b] : pair.labels) labels += annotations::write_label(b, cls) + "\n";
    write_text_file(staged.stage(dir / "labels.txt"), labels);
  }
  staged.commit();

  std::cout << "seed=" << cfg.seed << "\n" << "size=" << cfg.out_size << "\n";
  for (std::size_t i = 0; i < mosaics.size(); ++i) {
    print_mosaic(mosaics[i], a.count == 1 ? "" : "sample." + std::to_string(i) + ".");
  }
  return 0;
}

// --------------------------------------------------------------------------
// init

struct InitArgs {
  std::size_t channels = 0, reduction = kDefaultDemReduction;
  std::optional<std::uint64_t> seed;
  bool concat = false;
  std::string out;
};

int run_init(const InitArgs& a) {
  const auto p = init_params(a.channels, a.reduction, a.seed.value_or(default_seed()), a.concat);
  StagedOutputs staged;
  write_bundle(staged.stage_dir(a.out), p);
  staged.commit();
  std::cout << "manifest=" << (fs::path(a.out) / "manifest.txt").string() << "\n"
            << "channels=" << p.channels() << "\n"
            << "reduction=" << a.reduction << "\n"
            << "seed=" << p.seed() << "\n"
            << "params=" << enumerate_param_count(p) << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// stats

struct StatsArgs {
  std::vector<std::string> files;
  std::size_t grid = 8;
  std::string heatmap;
};

int run_stats(const StatsArgs& a) {
  std::vector<std::pair<int, metrics::Box>> labels;
  for (const auto& f : a.files) {
    std::ifstream in(f);
    if (!in) throw IoError("cannot open " + f);
    try {
      auto l = annotations::read_labels(in);
      labels.insert(labels.end(), l.begin(), l.end());
    } catch (const ParseError& e) {
      throw Error(f + ": " + e.what());
    }
  }
  const auto s = annotations::dataset_stats(labels, a.grid);
  if (!a.heatmap.empty()) {
    StagedOutputs staged;
    auto render = [&](const annotations::Histogram2d& h, const std::string& name) {
      std::vector<float> v(h.counts.begin(), h.counts.end());
      const std::size_t cell = 8;
      std::vector<float> px;
      for (std::size_t y = 0; y < h.bins * cell; ++y)
        for (std::size_t x = 0; x < h.bins * cell; ++x)
          px.push_back(v[(y / cell) * h.bins + x / cell]);
      write_pnm_file(staged.stage(fs::path(a.heatmap) / name),
                     render_heatmap(px, h.bins * cell, h.bins * cell));
    };
    render(s.centers, "centers.pgm");
    render(s.sizes, "sizes.pgm");
    staged.commit();
  }
  annotations::write_stats(std::cout, s);
  return 0;
}

void add_seed_option(CLI::App* cmd, std::optional<std::uint64_t>& seed) {
  cmd->add_option("--seed", seed, "RNG seed (falls back to $CMAFF_SEED, then 0)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cmaff: cross-modality attention fusion toolkit"};
  app.require_subcommand(1);

  FuseArgs fuse_args;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse an RGB/IR feature-map pair");
  fuse_cmd->add_option("rgb", fuse_args.rgb, "RGB feature map (.ften)")->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("ir", fuse_args.ir, "IR feature map (.ften)")->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--params", fuse_args.params, "Parameter manifest")->check(CLI::ExistingFile);
  add_seed_option(fuse_cmd, fuse_args.seed);
  fuse_cmd->add_option("--arrangement", fuse_args.arrangement,
                       "parallel, parallel-concat, csm-dem or dem-csm")
      ->capture_default_str();
  fuse_cmd->add_option("--reduction", fuse_args.reduction, "DEM bottleneck ratio for --seed init")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fuse_cmd->add_option("-o,--out", fuse_args.out, "Fused output (.ften)")->capture_default_str();
  fuse_cmd->add_option("--viz", fuse_args.viz, "Directory for attention vectors and renders");

  GradArgs grad_args;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Check fusion adjoints against finite differences");
  grad_cmd->add_option("--channels", grad_args.channels)->capture_default_str();
  grad_cmd->add_option("--hw", grad_args.hw, "Spatial height and width")->capture_default_str();
  grad_cmd->add_option("--arrangement", grad_args.arrangement, "An arrangement name or 'all'")
      ->capture_default_str();
  grad_cmd->add_option("--seeds", grad_args.seeds, "Number of seeds")->capture_default_str();
  grad_cmd->add_option("--reduction", grad_args.reduction)->capture_default_str()->check(CLI::PositiveNumber);
  add_seed_option(grad_cmd, grad_args.seed);
  grad_cmd->add_flag("--corrupt-adjoint", grad_args.corrupt,
                     "Perturb one analytic gradient entry (negative control)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate detections against ground truth");
  eval_cmd->add_option("gt", eval_args.gt)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("det", eval_args.det)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--classes", eval_args.classes, "Class count (0: infer)")->capture_default_str();
  eval_cmd->add_option("--interp", eval_args.interp)
      ->capture_default_str()
      ->check(CLI::IsMember({"all-point", "11-point"}));
  eval_cmd->add_option("--threads", eval_args.threads)->capture_default_str()->check(CLI::PositiveNumber);

  ConvertArgs conv_args;
  auto* conv_cmd = app.add_subcommand("convert", "Rotated four-corner annotations to label lines");
  conv_cmd->add_option("input", conv_args.input)->required()->check(CLI::ExistingFile);
  conv_cmd->add_option("--image-size", conv_args.image_size)->capture_default_str()->check(CLI::PositiveNumber);
  conv_cmd->add_option("-o,--out", conv_args.out, "Label file (default: stdout)");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Parameter audit and fusion timing");
  bench_cmd->add_option("--channels", bench_args.channels, "Comma-separated channel counts")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--hw", bench_args.hw)->capture_default_str();
  bench_cmd->add_option("--iters", bench_args.iters)->capture_default_str();
  bench_cmd->add_option("--reduction", bench_args.reduction)->capture_default_str()->check(CLI::PositiveNumber);
  add_seed_option(bench_cmd, bench_args.seed);

  MosaicArgs mosaic_args;
  auto* mosaic_cmd = app.add_subcommand("mosaic", "Four-tile mosaic of aligned RGB/IR pairs");
  mosaic_cmd->add_option("tiles", mosaic_args.tiles,
                         "Four directories, each with rgb.ppm, ir.pgm and labels.txt")
      ->required()
      ->check(CLI::ExistingDirectory);
  mosaic_cmd->add_option("-o,--out", mosaic_args.out, "Output directory")->required();
  add_seed_option(mosaic_cmd, mosaic_args.seed);
  mosaic_cmd->add_option("--size", mosaic_args.size, "Canvas side")->capture_default_str();
  mosaic_cmd->add_option("--jitter", mosaic_args.jitter, "Split-point jitter")->capture_default_str();
  mosaic_cmd->add_option("--count", mosaic_args.count, "Number of samples")->capture_default_str();
  mosaic_cmd->add_option("--threads", mosaic_args.threads)->capture_default_str()->check(CLI::PositiveNumber);

  InitArgs init_args;
  auto* init_cmd = app.add_subcommand("init", "Write a seeded parameter bundle");
  init_cmd->add_option("--channels", init_args.channels)->required()->check(CLI::PositiveNumber);
  init_cmd->add_option("--reduction", init_args.reduction)->capture_default_str()->check(CLI::PositiveNumber);
  add_seed_option(init_cmd, init_args.seed);
  init_cmd->add_flag("--concat", init_args.concat, "Include the concat projection");
  init_cmd->add_option("-o,--out", init_args.out, "Bundle directory")->required();

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Class counts and position/size histograms");
  stats_cmd->add_option("labels", stats_args.files, "Label files")->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--grid", stats_args.grid)->capture_default_str()->check(CLI::PositiveNumber);
  stats_cmd->add_option("--heatmap", stats_args.heatmap, "Directory for histogram renders");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fuse_cmd) return run_fuse(fuse_args);
    if (*grad_cmd) return run_gradcheck(grad_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*conv_cmd) return run_convert(conv_args);
    if (*bench_cmd) return run_bench(bench_args);
    if (*mosaic_cmd) return run_mosaic(mosaic_args);
    if (*init_cmd) return run_init(init_args);
    if (*stats_cmd) return run_stats(stats_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
