#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "henonlab/dynamics.hpp"
#include "henonlab/parallel.hpp"
#include "henonlab/saddles.hpp"

namespace henonlab {

/// Closed interval with outward rounding: every operation widens its
/// floating-point result by one ulp on each side, which encloses the exact
/// result under round-to-nearest.
class Interval {
 public:
  Interval() = default;
  /// Throws ValidationError when lo > hi or an endpoint is NaN.
  Interval(double lo, double hi);
  static Interval point(double v) { return Interval(v, v); }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double width() const { return hi_ - lo_; }
  double mig() const;  // min |x|
  double mag() const;  // max |x|
  bool contains(double v) const { return lo_ <= v && v <= hi_; }
  bool intersects(const Interval& o) const { return lo_ <= o.hi_ && o.lo_ <= hi_; }
  std::optional<Interval> intersect(const Interval& o) const;

  friend Interval operator+(const Interval& p, const Interval& q);
  friend Interval operator-(const Interval& p, const Interval& q);
  friend Interval operator*(const Interval& p, const Interval& q);
  friend Interval operator-(const Interval& p);
  Interval sqr() const;  // tighter than p * p when 0 is inside

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

double round_down(double v);
double round_up(double v);

struct Box2 {
  Interval x;
  Interval y;
};

/// Interval image of a box under the real Henon map.
Box2 henon_image(double a, double b, const Box2& box);

struct HorseshoeConfig {
  double margin = 1e-3;  // required expansion factor is 1 + margin
  int min_boxes = 8;     // boxes per strip on the first level
  int max_boxes = 256;   // finest level, per strip and axis (two-dimensional)
  int max_boxes_1d = 1 << 15;
  bool one_dimensional = false;  // x -> a - x^2, y suppressed (b ignored)
};

/// Result of the crossing and cone checks.
///
/// The box B = [-R, R]^2 contains every bounded orbit. Its points with
/// |x| < x_inner leave B, so the invariant set lies over the two strips
/// x_inner <= |x| <= R. The crossing inequalities say each strip's image runs
/// across B from x > R to x < -R. The strips are covered by a grid of boxes;
/// the transition graph of interval images, restricted to boxes on paths
/// between cycles, carries unstable cones |dy| <= kappa_u |dx| and stable cones
/// |dx| <= kappa_s |dy|, checked box by box. Expansion is established in an
/// adapted norm: a potential V on boxes with V_i <= V_j + log(growth_ij) - theta
/// on every edge, theta = log(1 + margin).
struct HorseshoeCertificate {
  double a = 0.0;
  double b = 0.0;
  bool one_dimensional = false;
  double box_radius = 0.0;
  double x_inner = 0.0;
  double inner_crossing = 0.0;  // lower bound of a - bY - x_inner^2 - R (must be > 0)
  double outer_crossing = 0.0;  // upper bound of a - bY - R^2 + R (must be < 0)
  double kappa_u = 0.0;         // largest unstable cone slope
  double kappa_s = 0.0;         // largest stable cone slope (0 in one dimension)
  double theta = 0.0;
  int boxes_per_strip = 0;
  std::size_t boxes = 0;  // boxes kept after pruning
  std::size_t edges = 0;
  bool verified = false;
  std::string failure;  // first failed condition when not verified
};

/// Throws ValidationError for non-finite input or b == 0 in two dimensions.
HorseshoeCertificate certify_horseshoe(double a, double b, const HorseshoeConfig& config = {});

/// Human-readable record; floating values in exact hexadecimal form.
std::string to_text(const HorseshoeCertificate& cert);

struct CensusRow {
  int n = 0;
  int real = 0;
  int complex = 0;
  int expected = 0;  // 2^n
  bool under_resolved = false;
};

/// Real and complex counts of solutions of f^n = id. `consistent` holds when
/// real = complex = 2^n for every n: an empirical proxy for J in R^2.
struct CensusReport {
  double a = 0.0;
  double b = 0.0;
  std::vector<CensusRow> rows;
  bool consistent = false;
  bool falsified = false;  // some real count below 2^n: not a full 2-shift
  bool partial = false;    // the deadline stopped the census; rows are the periods reached
};

/// A partial census is never consistent.
CensusReport entropy_census(double a, double b, int n_max, std::uint64_t seed = 0, const Deadline& deadline = {});

std::string to_text(const CensusReport& report);

struct TangencyConfig {
  double sample_spacing = 0.02;  // polyline refinement target
  double rate_step = 0.0;        // parameter step for the gap rate; 0 picks one
  double unstable_span = 5.0;    // fundamental domains of W^u sampled on each side
  double linear_threshold = 1e-3;
  double quadratic_threshold = 1e-2;
};

/// Near-tangency between W^s_p and W^u_q for fixed points p, q (index 0 is
/// the left fixed point, 1 the right one).
///
/// Each fold of a sampled W^u_q without crossing a sampled W^s_p is a
/// candidate; its gap and the rate at which the gap closes as a decreases give
/// the parameter where it would become a tangency. The reported fold is the
/// one whose tangency comes first. Near it, W^u_q is written over W^s_p as
/// eta(xi) = c0 + c1 xi + c2 xi^2 (xi along W^s_p, eta the signed distance).
struct TangencyReport {
  double a = 0.0;
  double b = 0.0;
  int p = 0;
  int q = 0;
  Point2 location;  // the fold point on W^u_q
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double residual = 0.0;  // rms of the fit on the window
  double window = 0.0;    // half-width in xi
  double estimated_tangency = 0.0;
  std::vector<std::pair<double, double>> samples;  // (xi, eta) used in the fit

  bool quadratic_dominant(const TangencyConfig& config = {}) const;
};

/// Throws ValidationError when a fixed point is not a real saddle and
/// std::runtime_error when no fold is found.
TangencyReport find_tangency(double a, double b, const TangencyConfig& config = {});

std::string to_text(const TangencyReport& report);

struct BoundaryScanConfig {
  int census_n = 6;
  double width = 1e-3;  // stop once the bracket is this narrow
  int max_steps = 40;
  bool tangency = true;
  HorseshoeConfig certificate;
  TangencyConfig tangency_config;
  std::uint64_t seed = 0;
};

struct BisectionStep {
  double a = 0.0;
  bool verified = false;
  bool falsified = false;
};

struct BoundaryScan {
  double b = 0.0;
  double a_lo = 0.0;  // census falsified
  double a_hi = 0.0;  // certificate verified
  std::vector<BisectionStep> steps;
  bool stalled = false;  // some probed parameter fired neither predicate
  std::optional<std::pair<double, double>> undecided;  // span of those parameters
  bool partial = false;  // the deadline stopped bisection; the bracket is still valid
  std::optional<TangencyReport> tangency;
};

/// Bisection on a between a census-falsified lower end and a certified upper
/// end. A probe where neither predicate fires splits the search: each end is
/// then bisected toward the span of undecided probes, and always the wider of
/// the two remaining gaps is halved. Throws ValidationError when the ends do not carry their predicates and
/// std::runtime_error when both predicates fire at one parameter.
/// The deadline is checked between steps.
BoundaryScan boundary_scan(double b, double a_lo, double a_hi, const BoundaryScanConfig& config = {},
                           const Deadline& deadline = {});

std::string to_text(const BoundaryScan& scan);

}  // namespace henonlab
