#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include "dascd/tensor.hpp"

namespace dascd {

/// Named tensors, ordered by name. Parameter sets and checkpoints use this.
using TensorMap = std::map<std::string, Tensor>;

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Portable tensor archive ("DASCD1" format, see docs/checkpoint_format.md):
///
///   "DASCD1\n"
///   u64 count
///   count × { u64 name_len, name bytes (UTF-8), u64 rank, rank × u64 dim, numel × f64 }
///
/// Integers are unsigned 64-bit little-endian; reals are IEEE-754 binary64
/// little-endian. Records are written in name order, so equal maps produce
/// equal bytes.
void write_archive(std::ostream& out, const TensorMap& tensors);
TensorMap read_archive(std::istream& in);

void save_archive(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap load_archive(const std::filesystem::path& path);

inline constexpr char kArchiveMagic[] = "DASCD1\n";

}  // namespace dascd
