#include "cmaff/params.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "cmaff/ften.hpp"

namespace cmaff {

namespace {

constexpr const char* kCanonicalNames[] = {
    "dem.reduce.w", "dem.reduce.b", "dem.expand.w", "dem.expand.b", "csm.shared.w",
    "csm.shared.b", "csm.rgb.w",    "csm.rgb.b",    "csm.ir.w",     "csm.ir.b",
    "concat.w",     "concat.b"};
constexpr std::size_t kRequiredBuffers = 10;

// Uniform double in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

AffineLayer glorot_layer(std::mt19937_64& rng, std::size_t in, std::size_t out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<float> w(in * out);
  for (auto& v : w) v = static_cast<float>(bound * (2.0 * unit_uniform(rng) - 1.0));
  return AffineLayer(in, out, std::move(w), std::vector<float>(out, 0.0f));
}

}  // namespace

CmaffParams init_params(std::size_t channels, std::size_t dem_reduction, std::uint64_t seed,
                        bool with_concat) {
  if (channels == 0) throw ConfigError("init_params: channels must be >= 1");
  if (dem_reduction == 0) throw ConfigError("init_params: reduction must be >= 1");
  std::mt19937_64 rng(seed);
  const std::size_t hd = bottleneck_width(channels, dem_reduction);
  const std::size_t hc = bottleneck_width(channels, kCsmReduction);
  auto reduce = glorot_layer(rng, channels, hd);
  auto expand = glorot_layer(rng, hd, channels);
  auto shared = glorot_layer(rng, channels, hc);
  auto rgb = glorot_layer(rng, hc, channels);
  auto ir = glorot_layer(rng, hc, channels);
  std::optional<ConcatReduceParams> concat;
  if (with_concat) concat.emplace(glorot_layer(rng, 2 * channels, channels));
  return CmaffParams(DemParams(std::move(reduce), std::move(expand), dem_reduction),
                     CsmParams(std::move(shared), std::move(rgb), std::move(ir)),
                     std::move(concat), seed);
}

std::filesystem::path write_bundle(const std::filesystem::path& dir, const CmaffParams& p) {
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  manifest << "# reduction " << p.dem().reduction() << "\n";
  manifest << "# seed " << p.seed() << "\n";
  for (const auto& b : parameter_buffers(p)) {
    const std::string file = b.name + ".ften";
    ften::write_file(dir / file,
                     ften::RawTensor{b.dims, std::vector<float>(b.data.begin(), b.data.end())});
    manifest << b.name << ' ' << file << "\n";
  }
  const auto path = dir / "manifest.txt";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << manifest.str();
  if (!out) throw IoError("write failed: " + path.string());
  return path;
}

CmaffParams read_bundle(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  const auto base = manifest.parent_path();

  std::size_t reduction = 0;
  std::uint64_t seed = 0;
  std::vector<ften::RawTensor> tensors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    if (first[0] == '#') {
      std::string key;
      if (first.size() > 1) {
        key = first.substr(1);
      } else {
        ss >> key;
      }
      if (key == "reduction") {
        if (!(ss >> reduction) || reduction == 0) throw ParseError(line_no, "bad reduction");
      } else if (key == "seed") {
        if (!(ss >> seed)) throw ParseError(line_no, "bad seed");
      }
      continue;
    }
    std::string file;
    std::string extra;
    if (!(ss >> file) || (ss >> extra)) {
      throw ParseError(line_no, "expected '<name> <file>'");
    }
    if (tensors.size() >= std::size(kCanonicalNames)) {
      throw ParseError(line_no, "too many manifest entries");
    }
    if (first != kCanonicalNames[tensors.size()]) {
      throw ParseError(line_no, "expected entry '" + std::string(kCanonicalNames[tensors.size()]) +
                                    "', found '" + first + "'");
    }
    tensors.push_back(ften::read_file(base / file));
  }
  if (tensors.size() != kRequiredBuffers && tensors.size() != std::size(kCanonicalNames)) {
    throw ConfigError("manifest " + manifest.string() + " lists " +
                      std::to_string(tensors.size()) + " buffers, expected 10 or 12");
  }

  auto layer = [&](std::size_t idx) {
    const auto& w = tensors[idx];
    const auto& b = tensors[idx + 1];
    if (w.dims.size() != 2 || b.dims.size() != 1) {
      throw ShapeError(std::string("bundle: bad rank for ") + kCanonicalNames[idx]);
    }
    return AffineLayer(w.dims[1], w.dims[0], w.data, b.data);
  };
  auto reduce = layer(0);
  auto expand = layer(2);
  if (reduction == 0) {
    // No header: pick the smallest ratio consistent with the bottleneck width.
    for (std::size_t r = 1; r <= reduce.in_dim(); ++r) {
      if (bottleneck_width(reduce.in_dim(), r) == reduce.out_dim()) {
        reduction = r;
        break;
      }
    }
    if (reduction == 0) throw ShapeError("bundle: DEM bottleneck width matches no ratio");
  }
  std::optional<ConcatReduceParams> concat;
  if (tensors.size() == std::size(kCanonicalNames)) concat.emplace(layer(10));
  return CmaffParams(DemParams(std::move(reduce), std::move(expand), reduction),
                     CsmParams(layer(4), layer(6), layer(8)), std::move(concat), seed);
}

}  // namespace cmaff
