#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "henonlab/dynamics.hpp"
#include "henonlab/parallel.hpp"

namespace henonlab {

/// Green function evaluation with a certified truncation bound.
///
/// `value` is zero exactly when no escape was certified within the depth
/// budget; such points are reported as assumed to lie in K.
struct GreenValue {
  double value = 0.0;
  double error_bound = 0.0;
  std::optional<int> escaped_at;
  int iterations_used = 0;

  bool assumed_in_k() const { return !escaped_at.has_value(); }
};

/// Escape radius for x -> a - x^2: beyond it |f(x)| > |x| and orbits diverge.
double escape_radius_1d(const QuadParam& param);

inline Complex quad_map(const QuadParam& param, Complex z) { return param.a() - z * z; }

/// G(z) = lim 2^-n log+|f^n(z)| for f(z) = a - z^2.
///
/// Once |f^N(z)| = M exceeds the escape radius the remaining terms of the
/// telescoping series are bounded by 2^-N log(1 + |a| / (M^2 - |a|)); N is
/// advanced until that bound is at most `tol`.
GreenValue green_1d(const QuadParam& param, Complex z, double tol, int max_iter = 100000);

struct Connectivity1D {
  enum class Kind { connected, disconnected, undecided };
  Kind kind = Kind::undecided;
  int depth = 0;  // escape step when disconnected, iterations checked otherwise
};

/// Follows the critical point 0. Escape proves J disconnected; otherwise the
/// verdict is "connected at depth max_iter". Undecided only when the deadline
/// interrupts the scan.
Connectivity1D connectivity_1d(const QuadParam& param, int max_iter, const Deadline& deadline = {});

/// Empirical sample of the harmonic measure of K.
struct MeasureSample1D {
  std::vector<Complex> points;
  std::uint64_t seed = 0;
  int depth = 0;
};

/// Random backward orbits: every point starts at R1 + 1 and takes `depth`
/// inverse-branch steps x -> +/- sqrt(a - x) with independent fair signs.
/// Point i draws its signs from a generator seeded with mix_seed(seed, i).
MeasureSample1D brolin_sample(const QuadParam& param, int n_points, int depth, std::uint64_t seed);

enum class ExponentMethod { critical_formula, ergodic_average, periodic_average };

struct ExponentEstimate {
  double value = 0.0;
  ExponentMethod method = ExponentMethod::critical_formula;
  double std_error = 0.0;
  int rejected = 0;  // ergodic samples dropped near the critical point

  double entropy() const;    // log d
  double dimension() const;  // entropy / value
};

struct ErgodicBudget {
  int n_points = 100000;
  int depth = 40;
  std::uint64_t seed = 0;
};

/// log 2 + G(0); std_error is the Green function's truncation bound.
ExponentEstimate lyapunov_1d_formula(const QuadParam& param, double tol);

/// Mean of log|2x| over a Brolin sample, with the standard error of the mean.
ExponentEstimate lyapunov_1d_ergodic(const QuadParam& param, const ErgodicBudget& budget);

}  // namespace henonlab
