#include "henonlab/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include <boost/multiprecision/cpp_int.hpp>

#include "henonlab/errors.hpp"

namespace henonlab {
namespace {

using BigInt = boost::multiprecision::cpp_int;

// Dense bivariate polynomial: coefficient of x^i y^j at index i * (deg + 1) + j.
// In floating mode each coefficient also carries the sum of the magnitudes of
// the terms that produced it, so a coefficient is zero when it is small
// against its own rounding bound rather than against the whole polynomial.
template <typename C>
class Poly2 {
  static constexpr bool kFloating = std::is_same_v<C, Complex>;

 public:
  Poly2() : deg_(0), c_(1, C(0)), m_(1, 0.0) {}

  static Poly2 constant(const C& value) {
    Poly2 p;
    p.c_[0] = value;
    p.m_[0] = magnitude(value);
    return p;
  }
  static Poly2 variable(bool is_x) {
    Poly2 p(1);
    p.set(is_x ? 1 : 0, is_x ? 0 : 1, C(1), 1.0);
    return p;
  }

  int bound() const { return deg_; }

  Poly2 operator+(const Poly2& o) const { return combine(o, C(1)); }
  Poly2 operator-(const Poly2& o) const { return combine(o, C(-1)); }

  Poly2 operator*(const Poly2& o) const {
    Poly2 r(deg_ + o.deg_);
    for (int i = 0; i <= deg_; ++i) {
      for (int j = 0; i + j <= deg_; ++j) {
        const std::size_t s = index(i, j);
        if (c_[s] == C(0)) continue;
        for (int k = 0; k <= o.deg_; ++k) {
          for (int l = 0; k + l <= o.deg_; ++l) {
            const std::size_t t = o.index(k, l);
            if (o.c_[t] == C(0)) continue;
            const std::size_t u = r.index(i + k, j + l);
            r.c_[u] += c_[s] * o.c_[t];
            if constexpr (kFloating) r.m_[u] += m_[s] * o.m_[t];
          }
        }
      }
    }
    return r;
  }

  /// Total degree, ignoring coefficients lost in cancellation.
  int degree() const {
    int best = -1;
    for (int i = 0; i <= deg_; ++i) {
      for (int j = 0; i + j <= deg_; ++j) {
        if (!negligible(index(i, j))) best = std::max(best, i + j);
      }
    }
    return best;
  }

  /// Drops negligible coefficients and shrinks the table to the true degree.
  void normalize() {
    for (std::size_t s = 0; s < c_.size(); ++s) {
      if (negligible(s)) {
        c_[s] = C(0);
        m_[s] = 0.0;
      }
    }
    const int d = std::max(degree(), 0);
    if (d == deg_) return;
    Poly2 r(d);
    for (int i = 0; i <= d; ++i) {
      for (int j = 0; i + j <= d; ++j) r.set(i, j, c_[index(i, j)], m_[index(i, j)]);
    }
    *this = std::move(r);
  }

 private:
  explicit Poly2(int deg)
      : deg_(deg),
        c_(static_cast<std::size_t>(deg + 1) * (deg + 1), C(0)),
        m_(static_cast<std::size_t>(deg + 1) * (deg + 1), 0.0) {}

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * (deg_ + 1) + j; }
  void set(int i, int j, const C& v, double m) {
    c_[index(i, j)] = v;
    m_[index(i, j)] = m;
  }

  Poly2 combine(const Poly2& o, const C& sign) const {
    Poly2 r(std::max(deg_, o.deg_));
    for (int i = 0; i <= deg_; ++i) {
      for (int j = 0; i + j <= deg_; ++j) {
        r.c_[r.index(i, j)] += c_[index(i, j)];
        r.m_[r.index(i, j)] += m_[index(i, j)];
      }
    }
    for (int i = 0; i <= o.deg_; ++i) {
      for (int j = 0; i + j <= o.deg_; ++j) {
        r.c_[r.index(i, j)] += sign * o.c_[o.index(i, j)];
        r.m_[r.index(i, j)] += o.m_[o.index(i, j)];
      }
    }
    return r;
  }

  static double magnitude(const C& v) {
    if constexpr (kFloating) {
      return std::abs(v);
    } else {
      (void)v;
      return 0.0;
    }
  }

  bool negligible(std::size_t s) const {
    if constexpr (kFloating) {
      return std::abs(c_[s]) <= 1e-10 * m_[s];
    } else {
      return c_[s] == 0;
    }
  }

  int deg_;
  std::vector<C> c_;
  std::vector<double> m_;  // floating mode only
};

template <typename C>
struct PolyPair {
  Poly2<C> first;
  Poly2<C> second;
};

BigInt to_integer(Complex value, const char* field) {
  if (value.imag() != 0.0 || std::floor(value.real()) != value.real() ||
      std::abs(value.real()) > 9007199254740992.0) {
    throw ValidationError(field, "exact mode requires integral real coefficients");
  }
  return BigInt(static_cast<long long>(value.real()));
}

template <typename C>
C coefficient(Complex value, const char* field) {
  if constexpr (std::is_same_v<C, Complex>) {
    (void)field;
    return value;
  } else {
    return to_integer(value, field);
  }
}

template <typename C>
PolyPair<C> apply_factor(const MapFactor& factor, const PolyPair<C>& in) {
  const auto k = [](Complex v, const char* field) { return Poly2<C>::constant(coefficient<C>(v, field)); };
  return std::visit(
      [&](const auto& f) -> PolyPair<C> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, AffineFactor>) {
          const Mat2& m = f.matrix;
          return {in.first * k(m.m00, "matrix") + in.second * k(m.m01, "matrix") + k(f.translation.x, "translation"),
                  in.first * k(m.m10, "matrix") + in.second * k(m.m11, "matrix") + k(f.translation.y, "translation")};
        } else if constexpr (std::is_same_v<T, ElementaryFactor>) {
          Poly2<C> horner;
          for (auto it = f.p.rbegin(); it != f.p.rend(); ++it) horner = horner * in.second + k(*it, "p");
          return {in.first * k(f.alpha, "alpha") + horner, in.second * k(f.beta, "beta") + k(f.gamma, "gamma")};
        } else {
          const Complex a = f.params.a();
          const Complex b = f.params.b();
          return {k(a, "a") - in.second * k(b, "b") - in.first * in.first, in.first};
        }
      },
      factor);
}

template <typename C>
std::vector<int> degree_sequence(const MapWord& word, int n_max) {
  PolyPair<C> current{Poly2<C>::variable(true), Poly2<C>::variable(false)};
  std::vector<int> degrees;
  degrees.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    for (const auto& factor : word.factors()) {
      current = apply_factor<C>(factor, current);
      current.first.normalize();
      current.second.normalize();
    }
    degrees.push_back(std::max(current.first.degree(), current.second.degree()));
  }
  return degrees;
}

}  // namespace

int factor_degree(const MapFactor& factor) {
  return std::visit(
      [](const auto& f) -> int {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, AffineFactor>) {
          return 1;
        } else if constexpr (std::is_same_v<T, ElementaryFactor>) {
          int d = 0;
          for (std::size_t i = 0; i < f.p.size(); ++i) {
            if (f.p[i] != Complex{}) d = static_cast<int>(i);
          }
          return std::max(1, d);
        } else {
          return f.params.degree();
        }
      },
      factor);
}

MapWord::MapWord(std::vector<MapFactor> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw ValidationError("word", "map word must contain at least one factor");
  for (const auto& factor : factors_) {
    if (const auto* affine = std::get_if<AffineFactor>(&factor)) {
      if (affine->matrix.det() == Complex{}) throw ValidationError("word", "affine factor is not invertible");
    } else if (const auto* elem = std::get_if<ElementaryFactor>(&factor)) {
      if (elem->alpha == Complex{} || elem->beta == Complex{}) {
        throw ValidationError("word", "elementary factor needs nonzero alpha and beta");
      }
    }
  }
}

bool MapWord::pure_henon() const {
  return std::all_of(factors_.begin(), factors_.end(),
                     [](const MapFactor& f) { return std::holds_alternative<HenonFactor>(f); });
}

bool MapWord::degree_one() const {
  const auto all_of_kind = [this](auto tag) {
    using T = decltype(tag);
    return std::all_of(factors_.begin(), factors_.end(),
                       [](const MapFactor& f) { return std::holds_alternative<T>(f); });
  };
  return all_of_kind(AffineFactor{}) || all_of_kind(ElementaryFactor{});
}

std::size_t MapWord::degree_bound() const {
  std::size_t d = 1;
  for (const auto& f : factors_) d *= static_cast<std::size_t>(factor_degree(f));
  return d;
}

DegreeReport dynamical_degree(const MapWord& word, int n_max, CoefficientMode mode) {
  if (n_max < 1) throw ValidationError("n_max", "must be at least 1");

  // Affine maps and elementary maps each form a group, so words made of only
  // one kind never exceed the largest factor degree. Mixed words can compound.
  int peak = 1;
  for (const auto& f : word.factors()) peak = std::max(peak, factor_degree(f));
  const double predicted_degree =
      word.degree_one() ? peak : std::pow(static_cast<double>(word.degree_bound()), n_max);
  const double predicted_terms = (predicted_degree + 1.0) * (predicted_degree + 2.0) / 2.0;
  if (predicted_terms > 1e6) {
    throw ResourceError("dynamical_degree: predicted term count exceeds 1e6");
  }

  DegreeReport report;
  report.mode = mode;
  report.degrees = mode == CoefficientMode::exact ? degree_sequence<BigInt>(word, n_max)
                                                  : degree_sequence<Complex>(word, n_max);
  report.estimate = std::pow(static_cast<double>(report.degrees.back()), 1.0 / n_max);
  if (word.pure_henon()) {
    report.exact = static_cast<long long>(word.degree_bound());
  } else if (word.degree_one()) {
    report.exact = 1;
  }
  return report;
}

}  // namespace henonlab
