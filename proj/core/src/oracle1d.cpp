#include "henonlab/oracle1d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "henonlab/errors.hpp"

namespace henonlab {

double escape_radius_1d(const QuadParam& param) {
  const double m = std::abs(param.a());
  return std::max({2.0, 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * m)), m});
}

GreenValue green_1d(const QuadParam& param, Complex z, double tol, int max_iter) {
  if (!(tol >= 1e-14)) throw ValidationError("tol", "must be at least 1e-14");
  if (max_iter < 1) throw ValidationError("max_iter", "must be at least 1");
  const double radius = escape_radius_1d(param);
  const double am = std::abs(param.a());

  GreenValue out;
  int n = 0;
  while (std::abs(z) <= radius) {
    if (n == max_iter) {
      out.iterations_used = n;
      return out;
    }
    z = quad_map(param, z);
    ++n;
  }
  out.escaped_at = n;

  for (;;) {
    const double m = std::abs(z);
    const double bound = std::ldexp(std::log1p(am / (m * m - am)), -n);
    // Past 1e150 the next square would overflow; the bound is already below
    // any admissible tolerance there.
    if (bound <= tol || m > 1e150) {
      out.value = std::ldexp(std::log(m), -n);
      out.error_bound = bound;
      out.iterations_used = n;
      return out;
    }
    z = quad_map(param, z);
    ++n;
  }
}

Connectivity1D connectivity_1d(const QuadParam& param, int max_iter, const Deadline& deadline) {
  if (max_iter < 1) throw ValidationError("max_iter", "must be at least 1");
  const double radius = escape_radius_1d(param);
  Complex z = 0.0;
  for (int k = 0; k <= max_iter; ++k) {
    if (std::abs(z) > radius) return {Connectivity1D::Kind::disconnected, k};
    if ((k & 0xffff) == 0 && deadline.expired()) return {Connectivity1D::Kind::undecided, k};
    z = quad_map(param, z);
  }
  return {Connectivity1D::Kind::connected, max_iter};
}

MeasureSample1D brolin_sample(const QuadParam& param, int n_points, int depth, std::uint64_t seed) {
  if (depth < 20) throw ValidationError("depth", "must be at least 20");
  if (n_points < 1) throw ValidationError("n_points", "must be at least 1");
  MeasureSample1D sample;
  sample.seed = seed;
  sample.depth = depth;
  sample.points.resize(static_cast<std::size_t>(n_points));
  const Complex base = escape_radius_1d(param) + 1.0;
  const Complex a = param.a();

  parallel_for(sample.points.size(), [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    std::uint64_t bits = 0;
    int remaining = 0;
    Complex z = base;
    for (int step = 0; step < depth; ++step) {
      if (remaining == 0) {
        bits = rng();
        remaining = 64;
      }
      const bool flip = (bits & 1u) != 0;
      bits >>= 1;
      --remaining;
      // sqrt(0) has a single root; the sign is then irrelevant.
      const Complex root = std::sqrt(a - z);
      z = flip ? -root : root;
    }
    sample.points[i] = z;
  });
  return sample;
}

double ExponentEstimate::entropy() const { return std::numbers::ln2; }

double ExponentEstimate::dimension() const { return entropy() / value; }

ExponentEstimate lyapunov_1d_formula(const QuadParam& param, double tol) {
  const GreenValue g = green_1d(param, 0.0, tol);
  ExponentEstimate e;
  e.method = ExponentMethod::critical_formula;
  e.value = std::numbers::ln2 + g.value;
  e.std_error = g.error_bound;
  return e;
}

ExponentEstimate lyapunov_1d_ergodic(const QuadParam& param, const ErgodicBudget& budget) {
  const MeasureSample1D sample = brolin_sample(param, budget.n_points, budget.depth, budget.seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  int used = 0;
  int rejected = 0;
  for (const Complex& x : sample.points) {
    if (std::abs(x) < 1e-12) {
      ++rejected;
      continue;
    }
    const double v = std::log(2.0 * std::abs(x));
    sum += v;
    sum_sq += v * v;
    ++used;
  }
  ExponentEstimate e;
  e.method = ExponentMethod::ergodic_average;
  e.rejected = rejected;
  if (used == 0) return e;
  const double mean = sum / used;
  const double var = used > 1 ? std::max(0.0, (sum_sq - used * mean * mean) / (used - 1)) : 0.0;
  e.value = mean;
  e.std_error = std::sqrt(var / used);
  return e;
}

}  // namespace henonlab
