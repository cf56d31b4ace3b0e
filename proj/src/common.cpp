#include "mddra/common.hpp"

#include <algorithm>
#include <numeric>

namespace mddra {

std::size_t Grid::locate(Vec2 p) const {
  auto clamp_index = [](double v, std::size_t n) {
    if (v < 0.0) return std::size_t{0};
    const auto i = static_cast<std::size_t>(v);
    return std::min(i, n - 1);
  };
  const std::size_t col = clamp_index((p.x - origin.x) / cell_size, nx);
  const std::size_t row = clamp_index((p.y - origin.y) / cell_size, ny);
  return index(row, col);
}

double Field::integral() const {
  return std::accumulate(values.begin(), values.end(), 0.0) * grid.cell_area();
}

void require_same_grid(const Field& a, const Field& b, const char* what) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size()) {
    throw ShapeError(std::string(what) + ": grid mismatch");
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

double standard_normal(std::mt19937_64& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace mddra
