#pragma once

// Interaction potentials described through the Fourier transform phi_hat of
// the potential, the collision weight Phi(r, rho) = (phi_hat(r) + phi_hat(rho))^2,
// and falsification checks for the balanced-potential class.

#include <algorithm>
#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nordheim/errors.hpp"

namespace nordheim {

// ---------------------------------------------------------------------------
// small helpers shared across the library

/// Shortest round-trip decimal representation of a double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// scaling function k(a) on [1, sqrt 2]

namespace detail {

/// Value together with its derivative in a.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual pow(Dual a, Dual b) {
  const double v = std::pow(a.v, b.v);
  double d = 0.0;
  if (a.d != 0.0) d += b.v * std::pow(a.v, b.v - 1.0) * a.d;
  if (b.d != 0.0) d += v * std::log(a.v) * b.d;
  return {v, d};
}

/// Expression tree for the k grammar:
///   expr   := term (('+'|'-') term)*
///   term   := unary (('*'|'/') unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' unary)?
///   atom   := number | 'a' | '(' expr ')'
class KExpr {
 public:
  enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow };

  static std::shared_ptr<const KExpr> parse(std::string_view text) {
    Parser p{text, 0};
    auto e = p.expr();
    p.skip();
    if (p.pos != text.size())
      throw ModelError("k expression: unexpected '" + std::string(text.substr(p.pos)) + "'");
    return e;
  }

  Dual eval(Dual a) const {
    switch (op_) {
      case Op::Num: return {num_, 0.0};
      case Op::Var: return a;
      case Op::Neg: { Dual x = lhs_->eval(a); return {-x.v, -x.d}; }
      case Op::Add: return lhs_->eval(a) + rhs_->eval(a);
      case Op::Sub: return lhs_->eval(a) - rhs_->eval(a);
      case Op::Mul: return lhs_->eval(a) * rhs_->eval(a);
      case Op::Div: return lhs_->eval(a) / rhs_->eval(a);
      case Op::Pow: return pow(lhs_->eval(a), rhs_->eval(a));
    }
    return {};
  }

  KExpr(Op op, double num, std::shared_ptr<const KExpr> l, std::shared_ptr<const KExpr> r)
      : op_(op), num_(num), lhs_(std::move(l)), rhs_(std::move(r)) {}

 private:
  struct Parser {
    std::string_view s;
    std::size_t pos;

    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) { ++pos; return true; }
      return false;
    }
    static std::shared_ptr<const KExpr> make(Op op, std::shared_ptr<const KExpr> l,
                                             std::shared_ptr<const KExpr> r = nullptr) {
      return std::make_shared<const KExpr>(op, 0.0, std::move(l), std::move(r));
    }
    std::shared_ptr<const KExpr> expr() {
      auto e = term();
      for (;;) {
        if (eat('+')) e = make(Op::Add, e, term());
        else if (eat('-')) e = make(Op::Sub, e, term());
        else return e;
      }
    }
    std::shared_ptr<const KExpr> term() {
      auto e = unary();
      for (;;) {
        if (eat('*')) e = make(Op::Mul, e, unary());
        else if (eat('/')) e = make(Op::Div, e, unary());
        else return e;
      }
    }
    std::shared_ptr<const KExpr> unary() {
      if (eat('-')) return make(Op::Neg, unary());
      return power();
    }
    std::shared_ptr<const KExpr> power() {
      auto base = atom();
      if (eat('^')) return make(Op::Pow, base, unary());
      return base;
    }
    std::shared_ptr<const KExpr> atom() {
      skip();
      if (pos >= s.size()) throw ModelError("k expression: unexpected end");
      if (eat('(')) {
        auto e = expr();
        if (!eat(')')) throw ModelError("k expression: missing ')'");
        return e;
      }
      if (s[pos] == 'a') {
        ++pos;
        return std::make_shared<const KExpr>(Op::Var, 0.0, nullptr, nullptr);
      }
      double v = 0.0;
      auto res = std::from_chars(s.data() + pos, s.data() + s.size(), v);
      if (res.ec != std::errc{}) throw ModelError("k expression: bad token at " + std::to_string(pos));
      pos = static_cast<std::size_t>(res.ptr - s.data());
      return std::make_shared<const KExpr>(Op::Num, v, nullptr, nullptr);
    }
  };

  Op op_;
  double num_;
  std::shared_ptr<const KExpr> lhs_, rhs_;
};

}  // namespace detail

/// Scaling envelope with phi_hat(a r) <= k(a) phi_hat(r) for 1 < a <= sqrt 2.
class KScaling {
 public:
  enum class Kind { One, Power, Expression };

  static KScaling one() { return KScaling(Kind::One, 0.0, "1", nullptr); }
  static KScaling power(double eta) {
    return KScaling(Kind::Power, eta, "a^" + format_double(eta), nullptr);
  }
  static KScaling expression(std::string text) {
    auto tree = detail::KExpr::parse(text);
    return KScaling(Kind::Expression, 0.0, std::move(text), std::move(tree));
  }

  Kind kind() const { return kind_; }
  const std::string& text() const { return text_; }

  double operator()(double a) const { return eval(a).v; }
  double derivative(double a) const { return eval(a).d; }

  /// k and k' at a; k' is exact (closed form or forward-mode differentiation).
  detail::Dual eval(double a) const {
    switch (kind_) {
      case Kind::One: return {1.0, 0.0};
      case Kind::Power: return {std::pow(a, exponent_), exponent_ * std::pow(a, exponent_ - 1.0)};
      case Kind::Expression: return tree_->eval({a, 1.0});
    }
    return {};
  }

 private:
  KScaling(Kind kind, double exponent, std::string text, std::shared_ptr<const detail::KExpr> tree)
      : kind_(kind), exponent_(exponent), text_(std::move(text)), tree_(std::move(tree)) {}

  Kind kind_;
  double exponent_;
  std::string text_;
  std::shared_ptr<const detail::KExpr> tree_;
};

// ---------------------------------------------------------------------------

enum class PotentialKind { HardSphere, EtaRational, Tabulated };

/// Parameters of a lower bound a0 r^{-beta} 1_{[R, inf)}(r) <= phi_hat(r).
struct LowerBound {
  double a0 = 0.0;
  double beta = 0.0;
  double R = 0.0;
};

inline constexpr int kDefaultQ1Samples = 4097;

class PotentialModel;
inline double compute_q1(const PotentialModel& model, int samples = kDefaultQ1Samples);

/// A potential through its Fourier transform. Immutable after construction.
class PotentialModel {
 public:
  /// phi_hat = 1/2, Phi = 1.
  static PotentialModel hard_sphere() {
    PotentialModel m(PotentialKind::HardSphere, 0.5, 1.0, KScaling::one());
    m.finish();
    return m;
  }

  /// phi_hat(r) = b0 r^eta / (1 + r^eta), k(a) = a^eta.
  static PotentialModel eta_rational(double b0, double eta) {
    if (!(b0 > 0.0) || !std::isfinite(b0)) throw ModelError("eta_rational: b0 must be positive");
    if (!(eta >= 1.0) || !std::isfinite(eta)) throw ModelError("eta_rational: eta must be >= 1");
    PotentialModel m(PotentialKind::EtaRational, b0, eta, KScaling::power(eta));
    m.finish();
    return m;
  }

  /// Piecewise-linear phi_hat through (r_i, phi_i); constant beyond the ends.
  /// b0 and eta are the claimed class parameters, k the user envelope.
  static PotentialModel tabulated(std::vector<double> r, std::vector<double> phi, KScaling k,
                                  double b0, double eta, std::string path = {}) {
    if (r.size() != phi.size() || r.size() < 2) throw ModelError("table: need >= 2 (r, phi) pairs");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!std::isfinite(r[i]) || !std::isfinite(phi[i]) || r[i] < 0.0)
        throw ModelError("table: non-finite or negative entry");
      if (i > 0 && !(r[i] > r[i - 1])) throw ModelError("table: r must be strictly increasing");
    }
    PotentialModel m(PotentialKind::Tabulated, b0, eta, std::move(k));
    m.table_r_ = std::move(r);
    m.table_phi_ = std::move(phi);
    m.table_path_ = std::move(path);
    m.finish();
    return m;
  }

  /// Reads whitespace/comma separated "r phi" rows; '#' starts a comment.
  static PotentialModel from_table_file(const std::string& path, KScaling k, double b0, double eta) {
    std::ifstream in(path);
    if (!in) throw ModelError("table: cannot open " + path);
    std::vector<double> r, phi;
    std::string line;
    while (std::getline(in, line)) {
      if (auto p = line.find('#'); p != std::string::npos) line.resize(p);
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      double a, b;
      if (ls >> a >> b) {
        r.push_back(a);
        phi.push_back(b);
      }
    }
    return tabulated(std::move(r), std::move(phi), std::move(k), b0, eta, path);
  }

  /// Same model with Phi replaced by min(Phi, cap).
  PotentialModel with_cap(double cap) const {
    if (!(cap > 0.0)) throw ModelError("Phi cap must be positive");
    PotentialModel m = *this;
    m.cap_ = cap;
    return m;
  }

  PotentialModel with_lower_bound(LowerBound lb) const {
    if (!(lb.a0 > 0.0) || lb.beta < 0.0 || lb.beta >= 0.5 || lb.R < 0.0)
      throw ModelError("lower bound: need a0 > 0, 0 <= beta < 1/2, R >= 0");
    PotentialModel m = *this;
    m.lower_bound_ = lb;
    return m;
  }

  PotentialKind kind() const { return kind_; }
  double b0() const { return b0_; }
  double eta() const { return eta_; }
  double q1() const { return q1_; }
  const KScaling& k_scaling() const { return k_; }
  std::optional<double> cap() const { return cap_; }
  const std::optional<LowerBound>& lower_bound() const { return lower_bound_; }
  const std::vector<double>& table_r() const { return table_r_; }
  const std::vector<double>& table_phi() const { return table_phi_; }

  /// phi_hat evaluated at r^2 (avoids a sqrt in the kernel inner loop).
  double phi_hat_sq(double r2) const {
    switch (kind_) {
      case PotentialKind::HardSphere: return 0.5;
      case PotentialKind::EtaRational: {
        const double rp = eta_ == 2.0 ? r2 : (eta_ == 1.0 ? std::sqrt(r2) : std::pow(r2, 0.5 * eta_));
        return b0_ * rp / (1.0 + rp);
      }
      case PotentialKind::Tabulated: return interpolate(std::sqrt(r2));
    }
    return 0.0;
  }

  /// Phi given the squared arguments, including the optional cap.
  double big_phi_sq(double r2, double rho2) const {
    const double s = phi_hat_sq(r2) + phi_hat_sq(rho2);
    const double v = s * s;
    return cap_ ? std::min(v, *cap_) : v;
  }

  /// Canonical one-line descriptor; hashed for kernel-cache identity.
  std::string descriptor() const {
    std::string d;
    switch (kind_) {
      case PotentialKind::HardSphere: d = "hard_sphere"; break;
      case PotentialKind::EtaRational:
        d = "eta_rational b0=" + format_double(b0_) + " eta=" + format_double(eta_);
        break;
      case PotentialKind::Tabulated: d = "table " + table_path_; break;
    }
    if (cap_) d += " cap=" + format_double(*cap_);
    return d;
  }
  std::uint64_t hash() const { return fnv1a64(descriptor()); }

  /// Claims membership of the balanced class (HardSphere does not).
  bool claims_balanced() const { return kind_ != PotentialKind::HardSphere; }

  /// Table lookup (Tabulated only).
  double interpolate(double r) const {
    if (r <= table_r_.front()) return table_phi_.front();
    if (r >= table_r_.back()) return table_phi_.back();
    auto it = std::upper_bound(table_r_.begin(), table_r_.end(), r);
    const std::size_t i = static_cast<std::size_t>(it - table_r_.begin());
    const double t = (r - table_r_[i - 1]) / (table_r_[i] - table_r_[i - 1]);
    return table_phi_[i - 1] + t * (table_phi_[i] - table_phi_[i - 1]);
  }

 private:
  PotentialModel(PotentialKind kind, double b0, double eta, KScaling k)
      : kind_(kind), b0_(b0), eta_(eta), k_(std::move(k)) {}

  void finish() {
    const double k1 = k_(1.0);
    if (!std::isfinite(k1) || std::abs(k1 - 1.0) > 1e-12) throw ModelError("k(1) must equal 1");
    q1_ = compute_q1(*this);
  }

  PotentialKind kind_;
  double b0_;
  double eta_;
  KScaling k_;
  double q1_ = 0.0;
  std::optional<double> cap_;
  std::optional<LowerBound> lower_bound_;
  std::vector<double> table_r_, table_phi_;
  std::string table_path_;
};

/// phi_hat(r).
inline double phi_hat(const PotentialModel& model, double r) {
  if (!(r >= 0.0)) throw DomainError("phi_hat: r must be nonnegative");
  if (model.kind() == PotentialKind::Tabulated) return model.interpolate(r);
  if (model.kind() == PotentialKind::EtaRational) {
    const double rp = std::pow(r, model.eta());
    return model.b0() * rp / (1.0 + rp);
  }
  return 0.5;
}

/// Phi(r, rho) = (phi_hat(r) + phi_hat(rho))^2, capped when the model has a cap.
inline double big_phi(const PotentialModel& model, double r, double rho) {
  const double s = phi_hat(model, r) + phi_hat(model, rho);
  const double v = s * s;
  return model.cap() ? std::min(v, *model.cap()) : v;
}

/// q1 = max over [1, sqrt 2] of max{2 k(a) k'(a), 0}, on `samples` equispaced
/// points including both endpoints.
inline double compute_q1(const PotentialModel& model, int samples) {
  if (samples < 2) throw DomainError("compute_q1: need at least 2 samples");
  const double lo = 1.0, hi = std::sqrt(2.0);
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double a = i == samples - 1 ? hi : lo + (hi - lo) * i / (samples - 1);
    const auto kd = model.k_scaling().eval(a);
    if (!std::isfinite(kd.v) || !std::isfinite(kd.d)) throw ModelError("k is not finite on [1, sqrt 2]");
    best = std::max(best, 2.0 * kd.v * kd.d);
  }
  return best;
}

// ---------------------------------------------------------------------------

/// One failed inequality with its witness.
struct Violation {
  std::string inequality;
  std::vector<double> witness;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Result of a falsification sweep. An empty violation list means the
/// samples are consistent with the checked inequalities, nothing more.
struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> notes;
  bool precondition_failed = false;
  std::size_t checks = 0;

  bool ok() const { return violations.empty() && !precondition_failed; }
  std::size_t count(std::string_view name) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [&](const Violation& v) { return v.inequality == name; }));
  }
};

/// Sweeps 0 <= phi_hat(r), phi_hat(r) <= b0 r^eta/(1+r^eta) and
/// phi_hat(a r) <= k(a) phi_hat(r) over the given samples.
inline ValidationReport check_assumption(const PotentialModel& model, const std::vector<double>& r_samples,
                                         const std::vector<double>& a_samples) {
  constexpr double kRel = 1e-12;
  ValidationReport rep;
  const double b0 = model.b0(), eta = model.eta();
  for (double r : r_samples) {
    const double p = phi_hat(model, r);
    ++rep.checks;
    if (p < 0.0) rep.violations.push_back({"nonnegative", {r}, p, 0.0});
    const double rp = std::pow(r, eta);
    const double env = b0 * rp / (1.0 + rp);
    ++rep.checks;
    if (p > env * (1.0 + kRel) + 1e-300) rep.violations.push_back({"upper_envelope", {r}, p, env});
    if (r <= 0.0) continue;
    for (double a : a_samples) {
      if (!(a > 1.0) || a > std::sqrt(2.0) * (1.0 + 1e-15)) continue;
      const double lhs = phi_hat(model, a * r);
      const double rhs = model.k_scaling()(a) * p;
      ++rep.checks;
      if (lhs > rhs * (1.0 + kRel) + 1e-300) rep.violations.push_back({"scaling", {r, a}, lhs, rhs});
    }
  }
  return rep;
}

/// phi_hat is nondecreasing and positive on (0, inf) (checked on samples).
/// This is the lower-bound hypothesis used for weak convergence to equilibrium.
inline bool has_positive_monotone_lower_bound(const PotentialModel& model) {
  double prev = 0.0;
  for (int i = 1; i <= 2000; ++i) {
    const double r = std::pow(10.0, -6.0 + 9.0 * i / 2000.0);
    const double p = phi_hat(model, r);
    if (!(p > 0.0) || p < prev * (1.0 - 1e-12)) return false;
    prev = p;
  }
  return true;
}

}  // namespace nordheim
