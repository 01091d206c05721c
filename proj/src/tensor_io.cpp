#include "rfcast/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "rfcast/errors.hpp"

namespace rfcast {

namespace {

constexpr char kMagic[4] = {'R', 'F', 'T', '1'};
constexpr std::uint32_t kMaxRank = 16;

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

std::uint64_t checked_count(std::span<const std::uint64_t> shape) {
  std::uint64_t n = 1;
  for (auto d : shape) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
      throw FormatError("tensor dimensions overflow");
    }
    n *= d;
  }
  return n;
}

std::string encode(std::span<const std::uint64_t> shape, std::span<const float> values) {
  std::string out;
  out.reserve(4 + 4 + 8 * shape.size() + 4 * values.size());
  out.append(kMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put_le<std::uint64_t>(out, d);
  for (float f : values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace

std::uint64_t Tensor::element_count() const { return checked_count(shape); }

void tensor_write(const std::filesystem::path& path, std::span<const std::uint64_t> shape,
                  std::span<const double> values) {
  if (shape.size() > kMaxRank) throw ParameterError("tensor rank exceeds 16");
  if (checked_count(shape) != values.size()) {
    throw ShapeError("tensor_write: product(shape) != value count");
  }
  std::vector<float> f(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    f[i] = static_cast<float>(values[i]);
    if (!std::isfinite(values[i]) || !std::isfinite(f[i])) {
      throw ParameterError("tensor_write: non-finite value at index " + std::to_string(i) +
                           " in " + path.string());
    }
  }
  write_bytes(path, encode(shape, f));
}

void tensor_write(const std::filesystem::path& path, const Tensor& tensor) {
  if (tensor.shape.size() > kMaxRank) throw ParameterError("tensor rank exceeds 16");
  if (tensor.element_count() != tensor.values.size()) {
    throw ShapeError("tensor_write: product(shape) != value count");
  }
  for (float v : tensor.values) {
    if (!std::isfinite(v)) throw ParameterError("tensor_write: non-finite value in " + path.string());
  }
  write_bytes(path, encode(tensor.shape, tensor.values));
}

Tensor tensor_read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic in " + path.string());
  }
  const auto rank = get_le<std::uint32_t>(bytes.data() + 4);
  if (rank > kMaxRank) throw FormatError("rank " + std::to_string(rank) + " too large in " + path.string());
  const std::size_t header = 8 + 8 * static_cast<std::size_t>(rank);
  if (bytes.size() < header) throw FormatError("truncated header in " + path.string());

  Tensor t;
  t.shape.resize(rank);
  for (std::uint32_t i = 0; i < rank; ++i) t.shape[i] = get_le<std::uint64_t>(bytes.data() + 8 + 8 * i);
  const std::uint64_t n = checked_count(t.shape);
  if (bytes.size() - header < n * 4) throw FormatError("truncated payload in " + path.string());
  if (bytes.size() - header > n * 4) throw FormatError("trailing bytes in " + path.string());

  t.values.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    t.values[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes.data() + header + 4 * i));
  }
  return t;
}

std::vector<double> to_doubles(const Tensor& t) { return {t.values.begin(), t.values.end()}; }

void write_grid_stack(const std::filesystem::path& path, std::span<const Grid> grids) {
  if (grids.empty()) throw ParameterError("write_grid_stack: no grids");
  const std::uint64_t shape[3] = {grids.size(), grids[0].rows(), grids[0].cols()};
  std::vector<double> flat;
  flat.reserve(grids.size() * grids[0].size());
  for (const auto& g : grids) {
    require_same_shape(g, grids[0], "write_grid_stack");
    flat.insert(flat.end(), g.values().begin(), g.values().end());
  }
  tensor_write(path, shape, flat);
}

std::vector<Grid> read_grid_stack(const std::filesystem::path& path) {
  Tensor t = tensor_read(path);
  if (t.shape.size() == 2) t.shape.insert(t.shape.begin(), 1);
  if (t.shape.size() != 3) throw FormatError("expected a [n, rows, cols] tensor in " + path.string());
  const std::size_t n = t.shape[0], rows = t.shape[1], cols = t.shape[2];
  std::vector<Grid> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> v(t.values.begin() + static_cast<long>(k * rows * cols),
                          t.values.begin() + static_cast<long>((k + 1) * rows * cols));
    out.emplace_back(rows, cols, std::move(v));
  }
  return out;
}

void write_bundle(const std::filesystem::path& dir, const TensorBundle& bundle) {
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  for (const auto& [name, tensor] : bundle) {
    if (name.empty() || name.find_first_of("\t\n/\\") != std::string::npos) {
      throw ParameterError("invalid tensor name '" + name + "'");
    }
    const std::string file = name + ".rft";
    tensor_write(dir / file, tensor);
    manifest << name << '\t' << file << '\n';
  }
  std::ofstream os(dir / "manifest.txt", std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write bundle manifest in " + dir.string());
  os << manifest.str();
}

TensorBundle read_bundle(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.txt");
  if (!is) throw IoError("missing bundle manifest in " + dir.string());
  TensorBundle bundle;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("bad bundle manifest line: " + line);
    bundle[line.substr(0, tab)] = tensor_read(dir / line.substr(tab + 1));
  }
  return bundle;
}

}  // namespace rfcast
