#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "henonlab/dynamics.hpp"

namespace henonlab {

enum class PointKind { saddle, attracting, repelling, non_hyperbolic };

const char* to_string(PointKind kind);

/// A periodic point with the eigendata of its return map Df^period.
///
/// lambda_u is the eigenvalue of larger modulus, lambda_s the other one; for
/// saddles |lambda_u| > 1 > |lambda_s|. unstable_vector is the unit
/// eigenvector for lambda_u with its first nonzero component positive real.
struct SaddleRecord {
  Point2 location;
  int period = 1;  // minimal period
  Complex lambda_u;
  Complex lambda_s;
  Point2 unstable_vector;
  double residual = 0.0;  // ||f^period(location) - location||_inf
  PointKind kind = PointKind::saddle;
  int orbit_id = 0;  // points of one orbit share an id within a search result
};

/// Eigendata of the periodic point `location` of minimal period `period`.
SaddleRecord analyze_periodic_point(const HenonParams& params, const Point2& location, int period);

/// JSON-compatible text record; complex numbers as [re, im] pairs.
std::string to_json(const SaddleRecord& record);

enum class SearchMode { complex_grid, real_grid };

struct SearchBudget {
  int starts = 0;           // seeded Newton starts; 0 means 20 * 2^n
  int newton_iterations = 60;
};

struct PeriodicSearch {
  std::vector<SaddleRecord> points;  // every point of Fix(f^n), canonically sorted
  int expected = 0;                  // 2^n, the count with multiplicity
  bool under_resolved = false;       // fewer than `expected` distinct points found
};

/// Finds the solutions of f^n(p) = p.
///
/// complex_grid: every point is obtained by continuation in the parameter a
/// from the anti-integrable regime (|a| large, orbits x_i ~ +/- sqrt(a)) along a
/// seeded complex path, then topped up by Newton from seeded Chebyshev-like
/// starts in the radius-R polydisk if some paths merged. real_grid: Newton in
/// real arithmetic from real starts only (requires real parameters).
///
/// The orbit system is solved in all n orbit points at once, which keeps the
/// Jacobian well conditioned; the y coordinates are eliminated via y_i = x_{i-1}.
PeriodicSearch find_periodic(const HenonParams& params, int n, SearchMode mode, const SearchBudget& budget = {},
                             std::uint64_t seed = 0);

/// The fixed point with the largest |lambda_u| among the saddle fixed points.
/// Throws ValidationError when neither fixed point is a saddle.
SaddleRecord default_saddle(const HenonParams& params);

/// Both fixed points, ordered as fixed_points().
std::vector<SaddleRecord> fixed_point_records(const HenonParams& params);

struct Jet {
  Point2 value;
  Point2 derivative;  // d/dz
};

/// Parameterization phi of the unstable manifold of a saddle orbit, solving
/// f^n(phi(z)) = phi(lambda_u z) with phi(0) = location and phi'(0) = v.
///
/// phi(z) = lim_k f^{nk}(p + v lambda_u^-k z). Iterates are carried as
/// displacements from the periodic orbit, so nothing cancels against the
/// orbit coordinates. For |z| > 1 the depth is raised by m steps, which is
/// the same as phi(z) = f^{nm}(phi(z / lambda_u^m)).
///
/// A stable-manifold parameterization is obtained by building this on the
/// inverse-conjugate map and mapping the result back through the chart.
class Linearization {
 public:
  const SaddleRecord& saddle() const { return saddle_; }
  const HenonParams& params() const { return params_; }
  int depth() const { return depth_; }
  double defect() const { return defect_; }
  bool stable() const { return stable_; }
  /// Orbit of the saddle under params(), starting at the saddle itself.
  const std::vector<Point2>& orbit() const { return orbit_; }
  /// Truncation depth used for z: depth() plus the extension steps for |z| > 1.
  int depth_for(Complex z) const;

  Point2 evaluate(Complex z) const;
  Jet evaluate_jet(Complex z) const;

  /// Evaluation at a fixed truncation depth, without radius extension.
  Point2 evaluate_at_depth(Complex z, int k) const;

  /// Like evaluate(), but stops as soon as an intermediate point carries a
  /// forward escape certificate for params(). Then phi(z) is the image of
  /// `point` under `remaining` further steps and escapes with it. Coordinates
  /// are those of params() (the inverse chart for stable parameterizations).
  struct Trace {
    Point2 point;
    int remaining = 0;
    bool escaped = false;
  };
  Trace trace(Complex z) const;

 private:
  friend Linearization linearize(const HenonParams&, const SaddleRecord&, int);
  friend Linearization stable_linearization(const HenonParams&, const SaddleRecord&, int);

  Linearization(HenonParams params, SaddleRecord saddle) : params_(params), saddle_(std::move(saddle)) {}
  Jet run(Complex z, int k, bool with_derivative) const;
  Point2 chart(const Point2& p) const;

  HenonParams params_;  // map whose unstable manifold is parameterized
  SaddleRecord saddle_;
  std::vector<Point2> orbit_;
  int depth_ = 0;
  double defect_ = 0.0;
  bool stable_ = false;
  Complex chart_b_ = 1.0;  // when stable_, outputs go through from_inverse_chart
};

/// Throws LinearizationError (carrying the best defect) when successive
/// approximants do not agree to 1e-10 on |z| = 1 within k_max steps.
/// k_max = 0 picks max(60, 2 log(1e10) / log|lambda_u|), capped at 2000, so
/// weakly expanding saddles get the depth they need.
Linearization linearize(const HenonParams& params, const SaddleRecord& saddle, int k_max = 0);

/// Stable manifold of `saddle` (a periodic point of f) as the unstable
/// manifold of the inverse-conjugate map, expressed in original coordinates.
Linearization stable_linearization(const HenonParams& params, const SaddleRecord& saddle, int k_max = 0);

}  // namespace henonlab
