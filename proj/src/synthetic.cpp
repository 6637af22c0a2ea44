#include "dascd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <string>

#include "dascd/params.hpp"

namespace dascd {

void SyntheticConfig::validate() const {
  if (image_size < 16 || image_size > 512) throw ContractError("synthetic: image_size must be in 16..512");
  if (n_shapes > 0 && !rectangles && !discs) throw ContractError("synthetic: no shape kinds enabled");
  if (brightness < 0 || gain < 0 || noise < 0) throw ContractError("synthetic: amplitudes must be >= 0");
  if (!(min_changed >= 0.0) || !(max_changed <= 1.0) || !(min_changed <= max_changed)) {
    throw ContractError("synthetic: bad changed-fraction band");
  }
  if (max_attempts == 0) throw ContractError("synthetic: max_attempts must be positive");
}

namespace {

using Canvas = std::vector<double>;  // H×W×3 in [0, 1] before quantization

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct ShapeSpec {
  bool disc;
  double cy, cx;       // centre
  double ry, rx;       // half extents (rx = ry = radius for discs)
  double color[3];
};

bool covers(const ShapeSpec& s, std::size_t y, std::size_t x) {
  const double py = static_cast<double>(y) + 0.5, px = static_cast<double>(x) + 0.5;
  if (s.disc) {
    const double dy = py - s.cy, dx = px - s.cx;
    return dy * dy + dx * dx <= s.ry * s.ry;
  }
  return std::abs(py - s.cy) <= s.ry && std::abs(px - s.cx) <= s.rx;
}

ShapeSpec random_shape(const SyntheticConfig& cfg, Rng& rng) {
  const double size = static_cast<double>(cfg.image_size);
  ShapeSpec s{};
  s.disc = cfg.rectangles && cfg.discs ? (rng() & 1u) != 0 : cfg.discs;
  if (s.disc) {
    s.ry = s.rx = uniform(rng, size * 0.10, size * 0.17);
  } else {
    s.ry = uniform(rng, size * 0.09, size * 0.16);
    s.rx = uniform(rng, size * 0.09, size * 0.16);
  }
  s.cy = uniform(rng, s.ry, size - s.ry);
  s.cx = uniform(rng, s.rx, size - s.rx);
  // Saturated colours so objects stand out from the mid-tone background.
  for (double& c : s.color) c = (rng() & 1u) ? uniform(rng, 0.8, 1.0) : uniform(rng, 0.0, 0.2);
  return s;
}

void draw(Canvas& canvas, std::size_t size, const ShapeSpec& s) {
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x)
      if (covers(s, y, x))
        for (std::size_t c = 0; c < 3; ++c) canvas[(y * size + x) * 3 + c] = s.color[c];
}

Canvas background(std::size_t size, Rng& rng) {
  const std::size_t cell = std::max<std::size_t>(4, size / 4);
  const std::size_t lattice = size / cell + 2;
  Canvas canvas(size * size * 3);
  for (std::size_t c = 0; c < 3; ++c) {
    const double base = uniform(rng, 0.35, 0.65);
    std::vector<double> knots(lattice * lattice);
    for (double& k : knots) k = uniform(rng, -1.0, 1.0);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double fy = static_cast<double>(y) / static_cast<double>(cell);
        const double fx = static_cast<double>(x) / static_cast<double>(cell);
        const auto iy = static_cast<std::size_t>(fy), ix = static_cast<std::size_t>(fx);
        double ty = fy - static_cast<double>(iy), tx = fx - static_cast<double>(ix);
        ty = ty * ty * (3 - 2 * ty);
        tx = tx * tx * (3 - 2 * tx);
        const double v00 = knots[iy * lattice + ix], v01 = knots[iy * lattice + ix + 1];
        const double v10 = knots[(iy + 1) * lattice + ix], v11 = knots[(iy + 1) * lattice + ix + 1];
        const double v = (v00 * (1 - tx) + v01 * tx) * (1 - ty) + (v10 * (1 - tx) + v11 * tx) * ty;
        canvas[(y * size + x) * 3 + c] = base + 0.15 * v + uniform(rng, -0.03, 0.03);
      }
  }
  return canvas;
}

Image8 quantize(const Canvas& canvas, std::size_t size) {
  Image8 img(size, size, 3);
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(canvas[i], 0.0, 1.0) * 255.0));
  }
  return img;
}

std::optional<SyntheticSample> attempt(const SyntheticConfig& cfg, Rng& rng) {
  const std::size_t size = cfg.image_size;
  Canvas t0 = background(size, rng);
  for (std::size_t k = 0; k < cfg.n_static; ++k) draw(t0, size, random_shape(cfg, rng));
  Canvas t1 = t0;
  LabelMap label(size, size);
  for (std::size_t k = 0; k < cfg.n_shapes; ++k) {
    const ShapeSpec s = random_shape(cfg, rng);
    // Inserted objects appear only at t1, removed ones only at t0.
    draw(uniform(rng, 0.0, 1.0) < 0.6 ? t1 : t0, size, s);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x)
        if (covers(s, y, x)) label(y, x) = 1;
  }
  if (cfg.n_shapes > 0) {
    const double frac = static_cast<double>(label.count_ones()) / static_cast<double>(label.size());
    if (frac < cfg.min_changed || frac > cfg.max_changed) return std::nullopt;
  }
  const double sign = (rng() & 1u) ? 1.0 : -1.0;
  const double offset = sign * uniform(rng, cfg.brightness / 2, cfg.brightness);
  double gains[3];
  for (double& g : gains) g = 1.0 + ((rng() & 1u) ? 1.0 : -1.0) * uniform(rng, 0.0, cfg.gain);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < t1.size(); ++i) {
    const double n = noise(rng);
    t1[i] = gains[i % 3] * t1[i] + offset + cfg.noise * n;
  }
  return SyntheticSample{ImagePair{quantize(t0, size), quantize(t1, size)}, std::move(label)};
}

}  // namespace

SyntheticSample generate_pair(const SyntheticConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  for (std::size_t a = 0; a < cfg.max_attempts; ++a) {
    if (auto s = attempt(cfg, rng)) return std::move(*s);
  }
  throw ContractError("synthetic: no draw in " + std::to_string(cfg.max_attempts) +
                      " attempts produced a changed fraction within [" + std::to_string(cfg.min_changed) + ", " +
                      std::to_string(cfg.max_changed) + "]");
}

std::vector<Sample> generate_samples(const SyntheticConfig& cfg, std::uint64_t seed, std::uint64_t stream,
                                     std::size_t count) {
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto s = generate_pair(cfg, derive_seed(seed, stream, i));
    out.push_back(make_sample(s.pair, s.label));
  }
  return out;
}

std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticConfig& cfg,
                                              std::uint64_t seed, std::size_t n_train, std::size_t n_val,
                                              std::size_t n_test) {
  std::vector<ManifestEntry> entries;
  auto emit = [&](Split split, std::uint64_t stream, std::size_t count) {
    const auto sub = dir / std::string(to_string(split));
    std::filesystem::create_directories(sub);
    for (std::size_t i = 0; i < count; ++i) {
      const auto s = generate_pair(cfg, derive_seed(seed, stream, i));
      char stem[32];
      std::snprintf(stem, sizeof stem, "%05zu", i);
      ManifestEntry e{sub / (std::string(stem) + "_t0.png"), sub / (std::string(stem) + "_t1.png"),
                      sub / (std::string(stem) + "_label.png"), split};
      save_image(e.t0, s.pair.t0);
      save_image(e.t1, s.pair.t1);
      Image8 label(s.label.height, s.label.width, 1);
      for (std::size_t p = 0; p < s.label.size(); ++p) label.pixels[p] = s.label.values[p] ? 255 : 0;
      save_image(e.label, label);
      entries.push_back(std::move(e));
    }
  };
  emit(Split::train, kStreamTrain, n_train);
  emit(Split::val, kStreamVal, n_val);
  emit(Split::test, kStreamTest, n_test);
  const auto manifest = dir / "manifest.tsv";
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace dascd
