#include "henonlab/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "henonlab/errors.hpp"

namespace henonlab {

double sup_norm(const Point2& p) { return std::max(std::abs(p.x), std::abs(p.y)); }

bool is_finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

bool is_finite(const Point2& p) { return is_finite(p.x) && is_finite(p.y); }

std::array<Complex, 2> eigenvalues(const Mat2& m, std::optional<Complex> det_hint) {
  const Complex tr = m.trace();
  const Complex det = det_hint.value_or(m.det());
  Complex s = std::sqrt(tr * tr - 4.0 * det);
  if ((std::conj(tr) * s).real() < 0.0) s = -s;
  const Complex big = 0.5 * (tr + s);
  const Complex small = big == Complex{} ? Complex{} : det / big;
  return {big, small};
}

Point2 eigenvector(const Mat2& m, Complex lambda) {
  Point2 v1{m.m01, lambda - m.m00};
  Point2 v2{lambda - m.m11, m.m10};
  auto norm2 = [](const Point2& v) { return std::norm(v.x) + std::norm(v.y); };
  Point2 v = norm2(v1) >= norm2(v2) ? v1 : v2;
  double n = std::sqrt(norm2(v));
  if (n == 0.0) return {1.0, 0.0};
  v = Complex(1.0 / n) * v;
  const bool x_leads = std::abs(v.x) > 1e-300;
  const Complex lead = x_leads ? v.x : v.y;
  v = Complex(std::conj(lead) / std::abs(lead)) * v;
  (x_leads ? v.x : v.y) = std::abs(lead);
  return v;
}

QuadParam QuadParam::make(Complex a) {
  if (!is_finite(a)) throw ValidationError("a", "parameter must be finite");
  return QuadParam(a);
}

double filtration_radius(Complex a, Complex b) {
  const double s = 1.0 + std::abs(b);
  return std::max(2.0, 0.5 * (s + std::sqrt(s * s + 4.0 * std::abs(a))));
}

HenonParams HenonParams::make(Complex a, Complex b) {
  if (!is_finite(a)) throw ValidationError("a", "parameter must be finite");
  if (!is_finite(b)) throw ValidationError("b", "parameter must be finite");
  if (b == Complex{}) throw ValidationError("b", "Jacobian b must be nonzero");
  return HenonParams(a, b, henonlab::filtration_radius(a, b));
}

Point2 henon(const HenonParams& params, const Point2& p) {
  return {params.a() - params.b() * p.y - p.x * p.x, p.x};
}

Point2 henon_inverse(const HenonParams& params, const Point2& p) {
  return {p.y, (params.a() - p.x - p.y * p.y) / params.b()};
}

Mat2 henon_jacobian(const HenonParams& params, const Point2& p) {
  return {-2.0 * p.x, -params.b(), 1.0, 0.0};
}

Mat2 henon_inverse_jacobian(const HenonParams& params, const Point2& p) {
  const Complex b = params.b();
  return {0.0, 1.0, -1.0 / b, -2.0 * p.y / b};
}

IterateResult iterate(const HenonParams& params, const Point2& p, int n) {
  IterateResult out{p, std::nullopt};
  const int steps = n < 0 ? -n : n;
  for (int k = 1; k <= steps; ++k) {
    const Point2 next = n < 0 ? henon_inverse(params, out.point) : henon(params, out.point);
    if (!is_finite(next)) {
      out.escaped_at = k;
      return out;
    }
    out.point = next;
  }
  return out;
}

bool escape_certified(const HenonParams& params, const Point2& p, Direction direction) {
  const double r = params.filtration_radius();
  const double ax = std::abs(p.x);
  const double ay = std::abs(p.y);
  if (direction == Direction::forward) return ax > r && ax >= ay;
  return ay > r && ay >= ax;
}

EscapeTime escape_time(const HenonParams& params, const Point2& p, Direction direction, int max_iter) {
  if (max_iter < 1) throw ValidationError("max_iter", "must be at least 1");
  Point2 q = p;
  for (int k = 0;; ++k) {
    if (escape_certified(params, q, direction)) return {true, k, sup_norm(q)};
    if (k == max_iter) break;
    q = direction == Direction::forward ? henon(params, q) : henon_inverse(params, q);
    if (!is_finite(q)) return {true, k + 1, HUGE_VAL};
  }
  return {};
}

std::array<Point2, 2> fixed_points(const HenonParams& params) {
  const Complex c = 1.0 + params.b();
  Complex s = std::sqrt(c * c + 4.0 * params.a());
  if ((std::conj(c) * s).real() < 0.0) s = -s;
  const Complex q = -0.5 * (c + s);
  const Complex x1 = q;
  const Complex x2 = q == Complex{} ? Complex{} : -params.a() / q;
  auto before = [](Complex u, Complex v) {
    return u.real() != v.real() ? u.real() < v.real() : u.imag() < v.imag();
  };
  const Complex lo = before(x1, x2) ? x1 : x2;
  const Complex hi = before(x1, x2) ? x2 : x1;
  return {Point2{lo, lo}, Point2{hi, hi}};
}

HenonParams inverse_conjugate(const HenonParams& params) {
  const Complex b = params.b();
  return HenonParams::make(params.a() / (b * b), 1.0 / b);
}

Point2 to_inverse_chart(const HenonParams& params, const Point2& p) {
  return {p.y / params.b(), p.x / params.b()};
}

Point2 from_inverse_chart(const HenonParams& params, const Point2& q) {
  return {params.b() * q.y, params.b() * q.x};
}

}  // namespace henonlab
