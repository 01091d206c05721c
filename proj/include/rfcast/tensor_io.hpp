#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rfcast/grid.hpp"

namespace rfcast {

/// In-memory image of an RFT1 file.
///
/// Layout: "RFT1" | u32 rank | rank x u64 dims | f32 payload, row-major,
/// all integers and floats little-endian.
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<float> values;

  std::uint64_t element_count() const;
};

/// Refuses (ParameterError) non-finite values or values that overflow f32.
void tensor_write(const std::filesystem::path& path, std::span<const std::uint64_t> shape,
                  std::span<const double> values);
void tensor_write(const std::filesystem::path& path, const Tensor& tensor);

/// FormatError on bad magic, truncation or dimension overflow.
Tensor tensor_read(const std::filesystem::path& path);

std::vector<double> to_doubles(const Tensor& t);

/// Grids share one shape; stored as [n, rows, cols].
void write_grid_stack(const std::filesystem::path& path, std::span<const Grid> grids);
std::vector<Grid> read_grid_stack(const std::filesystem::path& path);

/// Named tensor bundle: a directory of RFT1 files plus `manifest.txt` with one
/// "name<TAB>file" line per tensor, names sorted.
using TensorBundle = std::map<std::string, Tensor>;

void write_bundle(const std::filesystem::path& dir, const TensorBundle& bundle);
TensorBundle read_bundle(const std::filesystem::path& dir);

}  // namespace rfcast
