#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mddra {

/// Raised for invalid configuration values (bad keys, infeasible limits, CFL violations).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an argument lies outside the documented domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when two grids or arrays that must agree in shape do not.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a quantity is mathematically undefined (zero denominators) or
/// a numerical procedure diverges.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Uniform cell-centred grid over the rectangle [origin, origin + (nx, ny) * cell_size].
/// Cells are stored row-major: index = row * nx + col, with rows along y.
struct Grid {
  std::size_t nx = 20;
  std::size_t ny = 20;
  double cell_size = 50.0;  // meters
  Vec2 origin{};

  [[nodiscard]] std::size_t size() const { return nx * ny; }
  [[nodiscard]] double cell_area() const { return cell_size * cell_size; }
  [[nodiscard]] std::size_t index(std::size_t row, std::size_t col) const { return row * nx + col; }
  [[nodiscard]] Vec2 center(std::size_t cell) const {
    const std::size_t row = cell / nx;
    const std::size_t col = cell % nx;
    return {origin.x + (static_cast<double>(col) + 0.5) * cell_size,
            origin.y + (static_cast<double>(row) + 0.5) * cell_size};
  }
  [[nodiscard]] double width() const { return static_cast<double>(nx) * cell_size; }
  [[nodiscard]] double height() const { return static_cast<double>(ny) * cell_size; }
  [[nodiscard]] bool contains(Vec2 p) const {
    return p.x >= origin.x && p.y >= origin.y && p.x <= origin.x + width() &&
           p.y <= origin.y + height();
  }
  /// Cell containing p (clamped onto the grid).
  [[nodiscard]] std::size_t locate(Vec2 p) const;

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.nx == b.nx && a.ny == b.ny && a.cell_size == b.cell_size &&
           a.origin.x == b.origin.x && a.origin.y == b.origin.y;
  }
};

/// A scalar value per grid cell.
struct Field {
  Grid grid;
  std::vector<double> values;
  int timestamp = 0;

  Field() = default;
  Field(Grid g, double fill = 0.0, int tau = 0)
      : grid(g), values(g.size(), fill), timestamp(tau) {}

  [[nodiscard]] std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  /// Midpoint-rule integral over the grid.
  [[nodiscard]] double integral() const;
};

void require_same_grid(const Field& a, const Field& b, const char* what);

/// Stream seed derived from a base seed and up to two stream indices (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Uniform draw in [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal draw (Box-Muller, one value per call).
double standard_normal(std::mt19937_64& rng);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

}  // namespace mddra
