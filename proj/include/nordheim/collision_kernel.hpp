#pragma once

// The energy-exchange rate W(x, y, z) of the isotropic collision operator:
// quadrature of the (s, theta) double integral, the closed forms on the
// boundary and for hard spheres, the symmetrized grid tensor with its binary
// cache, and numeric sweeps of the kernel upper bounds.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "nordheim/errors.hpp"
#include "nordheim/grid.hpp"
#include "nordheim/parallel.hpp"
#include "nordheim/potentials.hpp"
#include "nordheim/quadrature.hpp"

namespace nordheim {

struct QuadratureSpec {
  int s_order = 32;
  int theta_order = 32;

  void validate() const {
    if (s_order < 2 || theta_order < 2) throw DomainError("QuadratureSpec: orders must be >= 2");
  }
  bool operator==(const QuadratureSpec&) const = default;
};

/// Ranges shorter than this are treated as empty (min of the four roots ~ 0).
inline constexpr double kDegenerateRange = 1e-12;

/// Order of the sigmoidal grading of the theta nodes toward theta = pi.
inline constexpr double kThetaGrading = 3.0;

/// Y_* = |sqrt((z-u)+) + e^{i theta} sqrt((x-u)+)|, u = (x-y+s^2)^2 / (4 s^2); 0 at s = 0.
inline double y_star(double x, double y, double z, double s, double theta) {
  if (s == 0.0) return 0.0;
  const double q = x - y + s * s;
  const double u = q * q / (4.0 * s * s);
  const double U = std::max(z - u, 0.0);
  const double O = std::max(x - u, 0.0);
  const double re = std::sqrt(U) + std::cos(theta) * std::sqrt(O);
  const double im = std::sin(theta) * std::sqrt(O);
  return std::hypot(re, im);
}

/// Integration bounds in s for W(x, y, z) given the conjugate energy xs.
inline std::pair<double, double> s_range(double x, double y, double z, double xs) {
  const double sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z), sxs = std::sqrt(xs);
  return {std::max(std::abs(sx - sy), std::abs(sxs - sz)), std::min(sx + sy, sxs + sz)};
}

/// Precomputed nodes for the (s, theta) tensor quadrature.
class KernelRule {
 public:
  explicit KernelRule(QuadratureSpec q) : spec_(q) {
    q.validate();
    // s = mid - half cos(phi) on [0, pi]: the radicands of Y_* vanish like
    // square roots at the ends of the s range, and this map makes them smooth.
    GaussLegendre gs(q.s_order);
    for (std::size_t a = 0; a < gs.size(); ++a) {
      const double phi = 0.5 * std::numbers::pi * (1.0 + gs.nodes[a]);
      s_nodes_.push_back(-std::cos(phi));
      s_weights_.push_back(0.5 * std::numbers::pi * gs.weights[a] * std::sin(phi));
    }
    // The theta integrand depends on theta only through cos(theta), so
    // mirrored nodes are merged. Where x* ~ z, Y_* vanishes at theta = pi and
    // phi_hat(sqrt 2 Y_*) has a kink there (or a narrow peak at large energy).
    // A periodic sigmoidal change of variable of order kThetaGrading, graded
    // at theta = pi, restores fast convergence of the midpoint rule.
    const auto m = static_cast<std::size_t>(q.theta_order);
    const double pi = std::numbers::pi, dpsi = 2.0 * pi / static_cast<double>(m);
    const double p = kThetaGrading;
    double total = 0.0;
    for (std::size_t b = 0; b < (m + 1) / 2; ++b) {
      const double r = (static_cast<double>(b) + 0.5) * dpsi / pi;  // psi / pi in (0, 1]
      const double v = (1.0 / p - 0.5) * std::pow(1.0 - r, 3) + (r - 1.0) / p + 0.5;
      const double dv = (1.0 / p - 3.0 * (1.0 / p - 0.5) * (1.0 - r) * (1.0 - r)) / pi;
      const double A = std::pow(v, p), B = std::pow(1.0 - v, p);
      const double dA = p * std::pow(v, p - 1.0) * dv, dB = -p * std::pow(1.0 - v, p - 1.0) * dv;
      const double w = 2.0 * pi * A / (A + B);  // theta - pi
      const double jac = 2.0 * pi * (dA * B - A * dB) / ((A + B) * (A + B));
      const bool self_mirrored = m % 2 == 1 && b == m / 2;
      cos_theta_.push_back(-std::cos(w));
      theta_weights_.push_back((self_mirrored ? 1.0 : 2.0) * dpsi * jac);
      total += theta_weights_.back();
    }
    for (double& w : theta_weights_) w *= 2.0 * pi / total;
  }

  const QuadratureSpec& spec() const { return spec_; }

  /// sqrt(x y z) W(x, y, z) for explicit conjugate xs = y + z - x > 0.
  double scaled_w(const PotentialModel& model, double x, double y, double z, double xs) const {
    const auto [lo, hi] = s_range(x, y, z, xs);
    if (!(hi - lo >= kDegenerateRange)) return 0.0;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    double total = 0.0;
    for (std::size_t a = 0; a < s_nodes_.size(); ++a) {
      const double s = mid + half * s_nodes_[a];
      const double s2 = s * s;
      const double q = x - y + s2;
      const double u = q * q / (4.0 * s2);
      const double U = std::max(z - u, 0.0);
      const double O = std::max(x - u, 0.0);
#ifndef NDEBUG
      // both radicands are nonnegative inside the s range
      const double scale = std::max({x, y, z, xs});
      if (z - u < -1e-9 * scale || x - u < -1e-9 * scale) throw NumericError("negative radicand at node");
#endif
      const double sum = U + O, cross = 2.0 * std::sqrt(U * O);
      const double ps = model.phi_hat_sq(2.0 * s2);
      double inner = 0.0;
      for (std::size_t b = 0; b < cos_theta_.size(); ++b) {
        const double y2 = std::max(sum + cross * cos_theta_[b], 0.0);
        const double p = ps + model.phi_hat_sq(2.0 * y2);
        double phi = p * p;
        if (model.cap()) phi = std::min(phi, *model.cap());
        inner += theta_weights_[b] * phi;
      }
      total += s_weights_[a] * inner;
    }
    return half * total / (4.0 * std::numbers::pi);
  }

  /// Smallest radicand of Y_* over the s nodes (tests the nonnegativity claim).
  double min_radicand(double x, double y, double z, double xs) const {
    const auto [lo, hi] = s_range(x, y, z, xs);
    double best = std::numeric_limits<double>::infinity();
    if (!(hi - lo >= kDegenerateRange)) return best;
    for (double t : s_nodes_) {
      const double s = 0.5 * (hi + lo) + 0.5 * (hi - lo) * t;
      const double q = x - y + s * s;
      const double u = q * q / (4.0 * s * s);
      best = std::min({best, z - u, x - u});
    }
    return best;
  }

 private:
  QuadratureSpec spec_;
  std::vector<double> s_nodes_, s_weights_, cos_theta_, theta_weights_;
};

/// W(x, y, z) for positive arguments by Gauss-Legendre quadrature; 0 when x >= y + z.
inline double w_point(const PotentialModel& model, double x, double y, double z, const QuadratureSpec& quad = {}) {
  if (!(x > 0.0 && y > 0.0 && z > 0.0)) throw DomainError("w_point: arguments must be positive (see w_boundary)");
  const double xs = y + z - x;
  if (!(xs > 0.0)) return 0.0;
  KernelRule rule(quad);
  return rule.scaled_w(model, x, y, z, xs) / std::sqrt(x * y * z);
}

/// Closed forms of W when one argument vanishes; 0 for every other pattern.
inline double w_boundary(const PotentialModel& model, double x, double y, double z) {
  if (x == 0.0 && y > 0.0 && z > 0.0) return big_phi(model, std::sqrt(2.0 * y), std::sqrt(2.0 * z)) / std::sqrt(y * z);
  if (y == 0.0 && z > x && x > 0.0)
    return big_phi(model, std::sqrt(2.0 * x), std::sqrt(2.0 * (z - x))) / std::sqrt(x * z);
  if (z == 0.0 && y > x && x > 0.0)
    return big_phi(model, std::sqrt(2.0 * (y - x)), std::sqrt(2.0 * x)) / std::sqrt(x * y);
  return 0.0;
}

/// Hard-sphere kernel min{sqrt x, sqrt y, sqrt z, sqrt x*} / sqrt(x y z).
inline double w_hard_sphere(double x, double y, double z) {
  if (!(x > 0.0 && y > 0.0 && z > 0.0)) throw DomainError("w_hard_sphere: arguments must be positive");
  const double xs = std::max(y + z - x, 0.0);
  return std::min({std::sqrt(x), std::sqrt(y), std::sqrt(z), std::sqrt(xs)}) / std::sqrt(x * y * z);
}

/// W at any nonnegative arguments: quadrature inside, closed forms on the boundary.
inline double w_any(const PotentialModel& model, double x, double y, double z, const QuadratureSpec& quad = {}) {
  if (x > 0.0 && y > 0.0 && z > 0.0) return w_point(model, x, y, z, quad);
  return w_boundary(model, x, y, z);
}

// ---------------------------------------------------------------------------

/// Identity of a cached tensor.
struct TensorKey {
  std::uint32_t n = 0;
  double x_max = 0.0;
  QuadratureSpec quad;
  std::uint64_t potential_hash = 0;
  bool operator==(const TensorKey&) const = default;
};

/// Lambda(i, j, k) = symmetrized sqrt(x y z) W(x_i, y_j, z_k) on the grid,
/// zero where the conjugate index j + k - i leaves [0, n).
struct KernelTensor {
  std::size_t n = 0;
  double x_max = 0.0;
  std::uint64_t potential_hash = 0;
  QuadratureSpec quad;
  std::vector<double> lambda;

  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return lambda[(i * n + j) * n + k]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return lambda[(i * n + j) * n + k]; }
  const double* row(std::size_t i, std::size_t j) const { return lambda.data() + (i * n + j) * n; }

  TensorKey key() const { return {static_cast<std::uint32_t>(n), x_max, quad, potential_hash}; }
  std::uint64_t hash() const {
    return fnv1a64("tensor " + std::to_string(n) + " " + format_double(x_max) + " " + std::to_string(quad.s_order) +
                   " " + std::to_string(quad.theta_order) + " " + std::to_string(potential_hash));
  }
  bool matches(const EnergyGrid& g) const { return g.size() == n && g.x_max() == x_max; }
};

inline TensorKey tensor_key(const PotentialModel& model, const EnergyGrid& grid, const QuadratureSpec& quad) {
  return {static_cast<std::uint32_t>(grid.size()), grid.x_max(), quad, model.hash()};
}

namespace detail {

using Triple = std::array<std::size_t, 3>;

/// The eight relabelings of the quadruple {(i, i*), (j, k)}: swap within the
/// outgoing pair, within the incoming pair, and exchange the pairs.
inline std::array<Triple, 8> orbit(std::size_t i, std::size_t j, std::size_t k) {
  const std::size_t c = j + k - i;
  return {{{i, j, k}, {i, k, j}, {c, j, k}, {c, k, j}, {j, i, c}, {j, c, i}, {k, i, c}, {k, c, i}}};
}

}  // namespace detail

/// Tabulates Lambda on the grid. Every entry is the mean of sqrt(a b c) W(a, b, c)
/// over the eight role assignments of its collision quadruple, computed once per
/// orbit in a fixed order, so the stored tensor has the relabeling symmetries
/// exactly and the result does not depend on the thread schedule.
inline KernelTensor build_tensor(const PotentialModel& model, const EnergyGrid& grid, const QuadratureSpec& quad = {}) {
  quad.validate();
  const std::size_t n = grid.size();
  KernelTensor t;
  t.n = n;
  t.x_max = grid.x_max();
  t.potential_hash = model.hash();
  t.quad = quad;
  const std::size_t entries = n * n * n;
  try {
    if (n > 4096) throw std::bad_alloc();
    t.lambda.assign(entries, 0.0);
  } catch (const std::bad_alloc&) {
    throw SizingError("build_tensor: cannot allocate dense tensor", entries * sizeof(double));
  }
  const KernelRule rule(quad);
  auto T = [&](std::size_t a, std::size_t b, std::size_t c) {
    return rule.scaled_w(model, grid.x(a), grid.x(b), grid.x(c), grid.x(b + c - a));
  };
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (j + k < i || j + k - i >= n) continue;
        const auto orb = detail::orbit(i, j, k);
        const auto canon = *std::min_element(orb.begin(), orb.end());
        if (canon != detail::Triple{i, j, k}) continue;
        double sum = 0.0;
        for (const auto& [a, b, c] : orb) sum += T(a, b, c);
        const double value = sum / 8.0;
        for (const auto& [a, b, c] : orb) t.at(a, b, c) = value;
      }
    }
  });
  return t;
}

// ---------------------------------------------------------------------------
// binary cache: "BKW1", u32 n, f64 x_max, u32 s_order, u32 theta_order,
// u64 potential_hash, n^3 f64 (row-major i, j, k), all little-endian

namespace detail {

template <class T>
void put_le(std::string& out, T value) {
  std::array<unsigned char, sizeof(T)> b{};
  std::memcpy(b.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  out.append(reinterpret_cast<const char*>(b.data()), b.size());
}

template <class T>
T get_le(const char* p) {
  std::array<unsigned char, sizeof(T)> b{};
  std::memcpy(b.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

inline constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 4 + 4 + 8;

}  // namespace detail

inline void save_tensor(const KernelTensor& t, const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(detail::kHeaderBytes + t.lambda.size() * 8);
  buf.append("BKW1");
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(t.n));
  detail::put_le<double>(buf, t.x_max);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(t.quad.s_order));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(t.quad.theta_order));
  detail::put_le<std::uint64_t>(buf, t.potential_hash);
  for (double v : t.lambda) detail::put_le<double>(buf, v);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("save_tensor: cannot write " + tmp);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw FormatError("save_tensor: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

/// Reads a cache file; throws FormatError on bad magic or length.
inline KernelTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("load_tensor: cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < detail::kHeaderBytes || buf.compare(0, 4, "BKW1") != 0)
    throw FormatError("load_tensor: bad magic in " + path.string());
  const char* p = buf.data() + 4;
  KernelTensor t;
  t.n = detail::get_le<std::uint32_t>(p);
  t.x_max = detail::get_le<double>(p + 4);
  t.quad.s_order = static_cast<int>(detail::get_le<std::uint32_t>(p + 12));
  t.quad.theta_order = static_cast<int>(detail::get_le<std::uint32_t>(p + 16));
  t.potential_hash = detail::get_le<std::uint64_t>(p + 20);
  const std::size_t count = t.n * t.n * t.n;
  if (t.n == 0 || t.n > 4096 || buf.size() != detail::kHeaderBytes + count * 8)
    throw FormatError("load_tensor: length mismatch in " + path.string());
  t.lambda.resize(count);
  const char* d = buf.data() + detail::kHeaderBytes;
  for (std::size_t i = 0; i < count; ++i) t.lambda[i] = detail::get_le<double>(d + 8 * i);
  return t;
}

/// Loads the tensor when its header matches `key`; nullopt signals a cache
/// miss (missing file or different configuration) and the caller rebuilds.
inline std::optional<KernelTensor> load_tensor_if_matching(const std::filesystem::path& path, const TensorKey& key) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  KernelTensor t = load_tensor(path);
  if (!(t.key() == key)) return std::nullopt;
  return t;
}

inline std::filesystem::path cache_file_name(const TensorKey& key) {
  char name[160];
  std::snprintf(name, sizeof name, "kernel_%016llx_n%u_x%s_s%d_t%d.bkw", static_cast<unsigned long long>(key.potential_hash),
                key.n, format_double(key.x_max).c_str(), key.quad.s_order, key.quad.theta_order);
  return name;
}

/// Cached build: loads from cache_dir when possible, otherwise builds and saves.
inline KernelTensor ensure_tensor(const PotentialModel& model, const EnergyGrid& grid, const QuadratureSpec& quad,
                                  const std::filesystem::path& cache_dir, bool* rebuilt = nullptr) {
  const TensorKey key = tensor_key(model, grid, quad);
  const auto path = cache_dir / cache_file_name(key);
  std::optional<KernelTensor> cached;
  try {
    cached = load_tensor_if_matching(path, key);
  } catch (const FormatError&) {
    cached.reset();
  }
  if (rebuilt) *rebuilt = !cached.has_value();
  if (cached) return std::move(*cached);
  KernelTensor t = build_tensor(model, grid, quad);
  std::filesystem::create_directories(cache_dir);
  save_tensor(t, path);
  return t;
}

// ---------------------------------------------------------------------------

/// Samples for the kernel inequality sweep; each generic triple is mapped
/// into the domain of every inequality.
struct KernelSample {
  double x, y, z;
};

inline constexpr double kQuadratureSlack = 1e-6;

/// Sweeps the upper bounds (W01)..(W05) and the Y_* ratio bounds.
/// Inequality names: "W01", "W02", "W03", "W04", "W05", "Ystar".
inline ValidationReport verify_kernel_inequalities(const PotentialModel& model, const std::vector<KernelSample>& samples,
                                                   const QuadratureSpec& quad = {}, std::uint64_t seed = 12345) {
  ValidationReport rep;
  if (!model.claims_balanced()) {
    rep.precondition_failed = true;
    rep.notes.push_back("model is not a balanced potential; kernel bounds do not apply");
    return rep;
  }
  {
    std::vector<double> rs, as;
    for (int i = 0; i <= 400; ++i) rs.push_back(i == 0 ? 0.0 : std::pow(10.0, -4.0 + 8.0 * i / 400.0));
    for (int i = 1; i <= 32; ++i) as.push_back(1.0 + (std::sqrt(2.0) - 1.0) * i / 32.0);
    const auto pre = check_assumption(model, rs, as);
    if (!pre.ok()) {
      rep.precondition_failed = true;
      rep.notes.push_back("potential violates the balanced-class assumption on samples");
      return rep;
    }
  }
  const double b0 = model.b0(), eta = model.eta(), q1 = model.q1();
  const double tau = kQuadratureSlack;
  const KernelRule rule(quad);
  auto W = [&](double x, double y, double z) -> double {
    if (x > 0.0 && y > 0.0 && z > 0.0) {
      const double xs = y + z - x;
      return xs > 0.0 ? rule.scaled_w(model, x, y, z, xs) / std::sqrt(x * y * z) : 0.0;
    }
    return w_boundary(model, x, y, z);
  };
  auto env = [&](double m) { return std::min(1.0, std::pow(8.0 * m, eta)); };
  auto check = [&](const char* name, std::vector<double> wit, double lhs, double rhs) {
    ++rep.checks;
    if (!(lhs <= rhs * (1.0 + tau) + 1e-300)) rep.violations.push_back({name, std::move(wit), lhs, rhs});
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (const auto& smp : samples) {
    const double x = smp.x, y = smp.y, z = smp.z;
    // (W01)
    {
      const double xs = std::max(y + z - x, 0.0);
      const double m4 = std::min({std::sqrt(x), std::sqrt(y), std::sqrt(z), std::sqrt(xs)});
      check("W01", {x, y, z}, W(x, y, z), 4.0 * b0 * b0 * env(std::max({x, y, z})) * m4 / std::sqrt(x * y * z));
    }
    // (W02)
    check("W02", {0.0, y, z}, W(0.0, y, z), 4.0 * b0 * b0 * env(std::max(y, z)) / std::sqrt(y * z));
    const double lo = std::min(x, z), hi = std::max(x, z);
    // (W03): z > x > 0
    if (hi > lo) check("W03", {lo, 0.0, hi}, W(lo, 0.0, hi), 4.0 * b0 * b0 / std::sqrt(lo * hi) * env(hi));
    const double lo2 = std::min(x, y), hi2 = std::max(x, y);
    // (W04): y > x > 0
    if (hi2 > lo2) check("W04", {lo2, hi2, 0.0}, W(lo2, hi2, 0.0), 4.0 * b0 * b0 / std::sqrt(lo2 * hi2) * env(hi2));
    std::array<double, 3> s{x, y, z};
    std::sort(s.begin(), s.end());
    // (W05): 0 <= x <= y <= z/2
    {
      const double zz = s[2], yy = 0.5 * s[1], xx = 0.5 * s[0];
      check("W05", {xx, yy, zz}, W(xx, yy, zz), (1.0 + q1 * yy / zz) * W(yy, xx, zz));
    }
    // (Ystar): 0 <= x <= y < z, s in the range of W(x, y, z)
    if (s[1] < s[2]) {
      const double xx = s[0], yy = s[1], zz = s[2];
      const auto [a, b] = s_range(xx, yy, zz, yy + zz - xx);
      const double sv = a + (b - a) * unit(rng);
      const double th = 2.0 * std::numbers::pi * unit(rng);
      const double num = y_star(xx, yy, zz, sv, th), den = y_star(yy, xx, zz, sv, th);
      if (den > 0.0 && b > a) {
        const double ratio = num / den;
        ++rep.checks;
        if (ratio < 1.0 - tau) rep.violations.push_back({"Ystar", {xx, yy, zz, sv, th}, 1.0, ratio});
        check("Ystar", {xx, yy, zz, sv, th}, ratio, std::sqrt(zz) / std::sqrt(zz - yy));
      }
    }
  }
  return rep;
}

}  // namespace nordheim
