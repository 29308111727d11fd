#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nordheim/errors.hpp"
#include "nordheim/potentials.hpp"

namespace nordheim {

/// Uniform midpoint grid x_i = (i + 1/2) h on (0, x_max) with weights
/// sqrt(x_i) h for integrals against sqrt(x) dx. Node 0 never touches x = 0,
/// and x_i + x_{j+k-i} = x_j + x_k holds in index arithmetic.
class EnergyGrid {
 public:
  EnergyGrid(std::size_t n, double x_max) : n_(n), x_max_(x_max), h_(x_max / static_cast<double>(n)) {
    if (n < 4) throw DomainError("EnergyGrid: n must be >= 4");
    if (!(x_max > 0.0) || !std::isfinite(x_max)) throw DomainError("EnergyGrid: x_max must be positive");
    x_.resize(n);
    sqrt_x_.resize(n);
    weight_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      x_[i] = (static_cast<double>(i) + 0.5) * h_;
      sqrt_x_[i] = std::sqrt(x_[i]);
      weight_[i] = sqrt_x_[i] * h_;
    }
  }

  std::size_t size() const { return n_; }
  double x_max() const { return x_max_; }
  double h() const { return h_; }
  double x(std::size_t i) const { return x_[i]; }
  double sqrt_x(std::size_t i) const { return sqrt_x_[i]; }
  double weight(std::size_t i) const { return weight_[i]; }
  std::span<const double> nodes() const { return x_; }
  std::span<const double> weights() const { return weight_; }

  /// Index of the cell [i h, (i+1) h) containing x, clamped to the grid.
  std::size_t cell_of(double x) const {
    if (x <= 0.0) return 0;
    auto i = static_cast<std::size_t>(std::floor(x / h_));
    return i >= n_ ? n_ - 1 : i;
  }

  std::string descriptor() const { return "n=" + std::to_string(n_) + " x_max=" + format_double(x_max_); }
  std::uint64_t hash() const { return fnv1a64(descriptor()); }

  bool operator==(const EnergyGrid& o) const { return n_ == o.n_ && x_max_ == o.x_max_; }

 private:
  std::size_t n_;
  double x_max_;
  double h_;
  std::vector<double> x_, sqrt_x_, weight_;
};

/// Nonnegative nodal density f_i of dF(x) = f(x) sqrt(x) dx.
struct DistributionState {
  EnergyGrid grid;
  std::vector<double> f;
  double t = 0.0;

  DistributionState(EnergyGrid g, std::vector<double> values, double time = 0.0)
      : grid(std::move(g)), f(std::move(values)), t(time) {
    if (f.size() != grid.size()) throw DomainError("DistributionState: value count does not match grid");
    for (double v : f)
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("DistributionState: values must be finite and >= 0");
  }

  static DistributionState zeros(const EnergyGrid& g) { return {g, std::vector<double>(g.size(), 0.0)}; }

  template <class Fn>
  static DistributionState sample(const EnergyGrid& g, Fn&& fn) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = fn(g.x(i));
    return {g, std::move(v)};
  }

  std::size_t size() const { return f.size(); }
};

}  // namespace nordheim
