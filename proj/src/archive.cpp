#include "dascd/archive.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace dascd {

namespace {

constexpr std::size_t kMagicLen = sizeof(kArchiveMagic) - 1;
// Guards against reading garbage as an enormous allocation.
constexpr std::uint64_t kMaxRank = 16;
constexpr std::uint64_t kMaxName = 1u << 16;

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> buf{};
  for (std::size_t i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(buf.data(), buf.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) throw ArchiveError("archive truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_archive(std::ostream& out, const TensorMap& tensors) {
  out.write(kArchiveMagic, kMagicLen);
  put_u64(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    put_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(out, t.rank());
    for (auto d : t.shape()) put_u64(out, d);
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw ArchiveError("failed writing archive");
}

TensorMap read_archive(std::istream& in) {
  std::array<char, kMagicLen> magic{};
  if (!in.read(magic.data(), magic.size()) || std::memcmp(magic.data(), kArchiveMagic, kMagicLen) != 0) {
    throw ArchiveError("not a DASCD1 archive (bad magic)");
  }
  TensorMap tensors;
  const std::uint64_t count = get_u64(in);
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::uint64_t name_len = get_u64(in);
    if (name_len > kMaxName) throw ArchiveError("archive record name too long");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name_len))) throw ArchiveError("archive truncated");
    const std::uint64_t rank = get_u64(in);
    if (rank == 0 || rank > kMaxRank) throw ArchiveError("archive record '" + name + "' has invalid rank");
    Shape shape(rank);
    for (auto& d : shape) d = get_u64(in);
    std::vector<double> data(numel(shape));
    for (auto& v : data) v = std::bit_cast<double>(get_u64(in));
    if (!tensors.emplace(name, Tensor(std::move(shape), std::move(data))).second) {
      throw ArchiveError("duplicate archive record '" + name + "'");
    }
  }
  return tensors;
}

void save_archive(const std::filesystem::path& path, const TensorMap& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError("cannot open " + path.string() + " for writing");
  write_archive(out, tensors);
}

TensorMap load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open " + path.string());
  return read_archive(in);
}

}  // namespace dascd
