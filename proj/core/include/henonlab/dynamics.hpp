#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

namespace henonlab {

using Complex = std::complex<double>;

/// A point of C^2.
struct Point2 {
  Complex x;
  Complex y;

  friend Point2 operator+(Point2 p, Point2 q) { return {p.x + q.x, p.y + q.y}; }
  friend Point2 operator-(Point2 p, Point2 q) { return {p.x - q.x, p.y - q.y}; }
  friend Point2 operator*(Complex s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

double sup_norm(const Point2& p);
bool is_finite(const Point2& p);
bool is_finite(Complex z);

/// 2x2 complex matrix, row-major.
struct Mat2 {
  Complex m00, m01, m10, m11;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  Complex det() const { return m00 * m11 - m01 * m10; }
  Complex trace() const { return m00 + m11; }
  Point2 operator*(const Point2& v) const { return {m00 * v.x + m01 * v.y, m10 * v.x + m11 * v.y}; }
  friend Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
  }
};

/// Eigenvalues ordered by decreasing modulus. `det_hint` replaces the
/// computed determinant when the caller knows it exactly.
std::array<Complex, 2> eigenvalues(const Mat2& m, std::optional<Complex> det_hint = std::nullopt);

/// Unit eigenvector (Euclidean norm on C^2) with its first nonzero component
/// rotated to the positive real axis.
Point2 eigenvector(const Mat2& m, Complex lambda);

/// Parameter of the quadratic family x -> a - x^2.
class QuadParam {
 public:
  static QuadParam make(Complex a);
  Complex a() const { return a_; }

 private:
  explicit QuadParam(Complex a) : a_(a) {}
  Complex a_;
};

/// Parameters of the Henon map f(x, y) = (a - b*y - x^2, x).
///
/// The filtration radius R = max(2, (1 + |b| + sqrt((1 + |b|)^2 + 4|a|)) / 2)
/// has the property that |x| > R and |x| >= |y| forces |x'| > |x| = |y'|, so
/// that region is forward invariant and every orbit entering it escapes. The
/// mirror statement (|y| > R and |y| >= |x|) holds for the inverse map with
/// the same R.
class HenonParams {
 public:
  /// Throws ValidationError when b == 0 or a parameter is not finite.
  static HenonParams make(Complex a, Complex b);

  Complex a() const { return a_; }
  Complex b() const { return b_; }
  Complex jacobian() const { return b_; }
  int degree() const { return 2; }
  double filtration_radius() const { return radius_; }
  bool is_real() const { return a_.imag() == 0.0 && b_.imag() == 0.0; }

 private:
  HenonParams(Complex a, Complex b, double radius) : a_(a), b_(b), radius_(radius) {}
  Complex a_;
  Complex b_;
  double radius_;
};

double filtration_radius(Complex a, Complex b);

Point2 henon(const HenonParams& params, const Point2& p);
Point2 henon_inverse(const HenonParams& params, const Point2& p);
Mat2 henon_jacobian(const HenonParams& params, const Point2& p);
Mat2 henon_inverse_jacobian(const HenonParams& params, const Point2& p);

/// Result of iterate(): `escaped_at` is set when the orbit overflowed to a
/// non-finite value; `point` is then the last finite iterate.
struct IterateResult {
  Point2 point;
  std::optional<int> escaped_at;

  bool finite() const { return !escaped_at.has_value(); }
};

/// f^n(p); negative n applies the inverse map.
IterateResult iterate(const HenonParams& params, const Point2& p, int n);

enum class Direction { forward, backward };

/// Whether p lies in the escape region of the filtration for `direction`.
bool escape_certified(const HenonParams& params, const Point2& p, Direction direction);

struct EscapeTime {
  bool escaped = false;
  int step = 0;            // first step with an escape certificate
  double magnitude = 0.0;  // sup norm of the orbit point at that step
};

/// Escape certificate search over steps 0..max_iter. A bounded result only
/// means no certificate was found within the budget.
EscapeTime escape_time(const HenonParams& params, const Point2& p, Direction direction, int max_iter);

/// The two fixed points, roots of x^2 + (1 + b)x - a = 0 with y = x, ordered
/// by increasing real part of x (ties by imaginary part).
std::array<Point2, 2> fixed_points(const HenonParams& params);

/// The inverse map is conjugate to a Henon map: with chart(u, v) = (b v, b u)
/// we have f^{-1} o chart = chart o g where g = f_{a/b^2, 1/b}.
HenonParams inverse_conjugate(const HenonParams& params);
Point2 to_inverse_chart(const HenonParams& params, const Point2& p);
Point2 from_inverse_chart(const HenonParams& params, const Point2& q);

}  // namespace henonlab
