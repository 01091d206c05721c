#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rfcast {

/// Dense row-major 2D grid of doubles. Used for rain-rate fields, latents,
/// flow components and intermediate images alike.
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0);
  Grid(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  /// Periodic access; r and c may be any integers.
  double wrapped(long r, long c) const noexcept;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  bool same_shape(const Grid& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Throws ShapeError naming `what` unless both grids share a shape.
void require_same_shape(const Grid& a, const Grid& b, const char* what);

double dot(const Grid& a, const Grid& b);
double sum(const Grid& g);
double max_value(const Grid& g);
double max_abs_diff(const Grid& a, const Grid& b);

/// Periodic translation: out(r, c) = g(r - dr, c - dc).
Grid shift_periodic(const Grid& g, long dr, long dc);

inline long wrap_index(long i, long n) noexcept {
  long m = i % n;
  return m < 0 ? m + n : m;
}

inline bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace rfcast
