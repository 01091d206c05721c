#include "rfcast/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfcast/errors.hpp"

namespace rfcast {

Grid::Grid(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Grid::Grid(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("grid: " + std::to_string(values_.size()) + " values for shape " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

double Grid::wrapped(long r, long c) const noexcept {
  const auto rr = static_cast<std::size_t>(wrap_index(r, static_cast<long>(rows_)));
  const auto cc = static_cast<std::size_t>(wrap_index(c, static_cast<long>(cols_)));
  return values_[rr * cols_ + cc];
}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

double dot(const Grid& a, const Grid& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.values()[i] * b.values()[i];
  return acc;
}

double sum(const Grid& g) {
  double acc = 0.0;
  for (double v : g.values()) acc += v;
  return acc;
}

double max_value(const Grid& g) {
  if (g.empty()) return 0.0;
  return *std::max_element(g.values().begin(), g.values().end());
}

double max_abs_diff(const Grid& a, const Grid& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

Grid shift_periodic(const Grid& g, long dr, long dc) {
  Grid out(g.rows(), g.cols());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      out(r, c) = g.wrapped(static_cast<long>(r) - dr, static_cast<long>(c) - dc);
    }
  }
  return out;
}

}  // namespace rfcast
