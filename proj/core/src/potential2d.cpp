#include "henonlab/potential2d.hpp"

#include <algorithm>
#include <cmath>

#include "henonlab/errors.hpp"

namespace henonlab {

GreenValue green_2d(const HenonParams& params, const Point2& p, GreenSign sign, double tol, int max_iter) {
  if (!(tol >= 1e-12)) throw ValidationError("tol", "must be at least 1e-12");
  if (max_iter < 1) throw ValidationError("max_iter", "must be at least 1");
  const bool forward = sign == GreenSign::plus;
  const Direction dir = forward ? Direction::forward : Direction::backward;
  const auto step = [&](const Point2& q) { return forward ? henon(params, q) : henon_inverse(params, q); };

  GreenValue out;
  Point2 q = p;
  int n = 0;
  while (!escape_certified(params, q, dir)) {
    if (n == max_iter) {
      out.iterations_used = n;
      return out;
    }
    q = step(q);
    ++n;
  }
  out.escaped_at = n;

  const double am = std::abs(params.a());
  const double bm = std::abs(params.b());
  const double log_b = std::log(bm);
  for (;;) {
    const double m = sup_norm(q);
    // Relative size of the lower-order terms next to the square.
    const double delta = forward ? (am + bm * m) / (m * m) : (am + m) / (m * m);
    const double bound = std::ldexp(-std::log1p(-delta), -n);
    if (bound <= tol || m > 1e150) {
      out.value = std::ldexp(forward ? std::log(m) : std::log(m) - log_b, -n);
      out.error_bound = bound;
      out.iterations_used = n;
      return out;
    }
    q = step(q);
    ++n;
  }
}

GreenPairValue green_pair(const HenonParams& params, const Point2& p, double tol, int max_iter) {
  return {green_2d(params, p, GreenSign::plus, tol, max_iter), green_2d(params, p, GreenSign::minus, tol, max_iter)};
}

MeasureSample2D sample_mu(const HenonParams& params, int period_lo, int period_hi, const SearchBudget& budget,
                          std::uint64_t seed) {
  if (period_lo < 1 || period_lo > 12) throw ValidationError("period_lo", "must be in [1, 12]");
  if (period_hi < period_lo || period_hi > 12) throw ValidationError("period_hi", "must be in [period_lo, 12]");
  MeasureSample2D sample;
  int id_base = 0;  // orbit ids are made unique across periods
  for (int n = period_lo; n <= period_hi; ++n) {
    const PeriodicSearch search = find_periodic(params, n, SearchMode::complex_grid, budget, seed);
    sample.periods.push_back(n);
    sample.fixed_counts.push_back(static_cast<int>(search.points.size()));
    sample.under_resolved = sample.under_resolved || search.under_resolved;
    int exact = 0;
    int top = -1;
    for (SaddleRecord r : search.points) {
      if (r.period != n) continue;
      ++exact;
      if (r.kind != PointKind::saddle) continue;
      top = std::max(top, r.orbit_id);
      r.orbit_id += id_base;
      sample.records.push_back(r);
      sample.points.push_back(r.location);
      sample.source_periods.push_back(r.period);
    }
    sample.exact_counts.push_back(exact);
    id_base += top + 1;
  }
  return sample;
}

}  // namespace henonlab
