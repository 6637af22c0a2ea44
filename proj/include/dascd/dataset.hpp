#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dascd/image_io.hpp"

namespace dascd {

enum class Split { train, val, test };

Split parse_split(std::string_view s);
std::string_view to_string(Split s) noexcept;

struct ManifestEntry {
  std::filesystem::path t0;
  std::filesystem::path t1;
  std::filesystem::path label;
  Split split = Split::train;
};

/// Reads "t0<TAB>t1<TAB>label<TAB>split" lines. Relative paths resolve against
/// the manifest's directory; blank lines and lines starting with '#' are skipped.
/// Throws IngestError on malformed lines or when an image triple appears in
/// more than one split.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

std::vector<ManifestEntry> select(const std::vector<ManifestEntry>& entries, Split split);

/// An image pair as model input, with its full-resolution label.
struct Sample {
  Tensor t0;  // 3×H×W in [0, 1]
  Tensor t1;
  LabelMap label;
};

/// Loads and cross-checks one manifest entry. Dimension disagreement names all three paths.
Sample load_pair(const ManifestEntry& entry);
Sample make_sample(const ImagePair& pair, const LabelMap& label);

struct PixelCounts {
  std::uint64_t changed = 0;
  std::uint64_t unchanged = 0;

  /// changed / unchanged; empty when there are no unchanged pixels.
  std::optional<double> ratio() const noexcept;
  PixelCounts& operator+=(const PixelCounts& o) noexcept {
    changed += o.changed;
    unchanged += o.unchanged;
    return *this;
  }
  friend bool operator==(const PixelCounts&, const PixelCounts&) = default;
};

PixelCounts count_pixels(const LabelMap& label);

struct DatasetStats {
  std::array<PixelCounts, 3> per_split{};  // indexed by Split
  PixelCounts total;

  const PixelCounts& split(Split s) const { return per_split[static_cast<std::size_t>(s)]; }
};

/// Exact changed/unchanged pixel counts per split and overall, read from label files.
DatasetStats dataset_stats(const std::vector<ManifestEntry>& manifest);

/// Pre-tallied counts: one "split<TAB>changed<TAB>unchanged" line per record;
/// records for the same split accumulate. Used when the labels themselves are
/// not available (published dataset summaries).
DatasetStats read_pixel_counts(const std::filesystem::path& path);

/// Table with columns split, changed pixels, unchanged pixels, c/uc (3 decimals).
std::string stats_table(const DatasetStats& stats);

}  // namespace dascd
