#include "dascd/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace dascd {

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw IngestError("unknown split '" + std::string(s) + "' (expected train, val or test)");
}

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::uint64_t parse_count(const std::string& s, const std::string& origin) {
  std::string digits;
  for (char ch : s) {
    if (ch != ',' && ch != '_' && ch != ' ') digits.push_back(ch);
  }
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
    throw IngestError(origin + ": bad pixel count '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  std::vector<ManifestEntry> entries;
  std::map<std::string, Split> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 4) throw IngestError(where + ": expected 4 tab-separated fields, got " + std::to_string(f.size()));
    ManifestEntry e{resolve(f[0]), resolve(f[1]), resolve(f[2]), Split::train};
    try {
      e.split = parse_split(f[3]);
    } catch (const IngestError& err) {
      throw IngestError(where + ": " + err.what());
    }
    const std::string key = f[0] + '\t' + f[1] + '\t' + f[2];
    const auto [it, fresh] = seen.emplace(key, e.split);
    if (!fresh && it->second != e.split) {
      throw IngestError(where + ": entry appears in both " + std::string(to_string(it->second)) + " and " +
                        std::string(to_string(e.split)) + " splits");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write manifest " + path.string());
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    return base.empty() ? p.generic_string() : p.lexically_relative(base).generic_string();
  };
  for (const auto& e : entries) {
    out << rel(e.t0) << '\t' << rel(e.t1) << '\t' << rel(e.label) << '\t' << to_string(e.split) << '\n';
  }
}

std::vector<ManifestEntry> select(const std::vector<ManifestEntry>& entries, Split split) {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(e);
  }
  return out;
}

Sample make_sample(const ImagePair& pair, const LabelMap& label) {
  if (pair.t0.height != pair.t1.height || pair.t0.width != pair.t1.width || pair.t0.height != label.height ||
      pair.t0.width != label.width) {
    throw IngestError("image pair and label dimensions disagree");
  }
  return Sample{to_tensor(pair.t0), to_tensor(pair.t1), label};
}

Sample load_pair(const ManifestEntry& entry) {
  const Image8 t0 = load_image(entry.t0);
  const Image8 t1 = load_image(entry.t1);
  const LabelMap label = load_label(entry.label);
  if (t0.height != t1.height || t0.width != t1.width || t0.height != label.height || t0.width != label.width) {
    throw IngestError("dimension mismatch: " + entry.t0.string() + " is " + std::to_string(t0.height) + "x" +
                      std::to_string(t0.width) + ", " + entry.t1.string() + " is " + std::to_string(t1.height) + "x" +
                      std::to_string(t1.width) + ", " + entry.label.string() + " is " + std::to_string(label.height) +
                      "x" + std::to_string(label.width));
  }
  return Sample{to_tensor(t0), to_tensor(t1), label};
}

std::optional<double> PixelCounts::ratio() const noexcept {
  if (unchanged == 0) return std::nullopt;
  return static_cast<double>(changed) / static_cast<double>(unchanged);
}

PixelCounts count_pixels(const LabelMap& label) {
  const std::uint64_t changed = label.count_ones();
  return {changed, label.size() - changed};
}

DatasetStats dataset_stats(const std::vector<ManifestEntry>& manifest) {
  DatasetStats stats;
  for (const auto& e : manifest) {
    const PixelCounts c = count_pixels(load_label(e.label));
    stats.per_split[static_cast<std::size_t>(e.split)] += c;
    stats.total += c;
  }
  return stats;
}

DatasetStats read_pixel_counts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open pixel-count file " + path.string());
  DatasetStats stats;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 3) throw IngestError(where + ": expected split<TAB>changed<TAB>unchanged");
    Split s;
    try {
      s = parse_split(f[0]);
    } catch (const IngestError& err) {
      throw IngestError(where + ": " + err.what());
    }
    const PixelCounts c{parse_count(f[1], where), parse_count(f[2], where)};
    stats.per_split[static_cast<std::size_t>(s)] += c;
    stats.total += c;
  }
  return stats;
}

std::string stats_table(const DatasetStats& stats) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %16s %16s %8s\n", "split", "changed", "unchanged", "c/uc");
  os << buf;
  auto row = [&](std::string_view name, const PixelCounts& c) {
    const auto r = c.ratio();
    char ratio[32];
    if (r) {
      std::snprintf(ratio, sizeof ratio, "%.3f", *r);
    } else {
      std::snprintf(ratio, sizeof ratio, "%s", "inf!");
    }
    std::snprintf(buf, sizeof buf, "%-8.*s %16llu %16llu %8s\n", static_cast<int>(name.size()), name.data(),
                  static_cast<unsigned long long>(c.changed), static_cast<unsigned long long>(c.unchanged), ratio);
    os << buf;
  };
  for (Split s : {Split::train, Split::val, Split::test}) {
    const auto& c = stats.split(s);
    if (c.changed + c.unchanged > 0) row(to_string(s), c);
  }
  row("total", stats.total);
  return os.str();
}

}  // namespace dascd
