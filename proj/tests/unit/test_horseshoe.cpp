#include <doctest.h>

#include <cmath>
#include <string>

#include "generators.hpp"
#include "henonlab/errors.hpp"
#include "henonlab/horseshoe.hpp"

using namespace henonlab;

namespace {

// Error-free transforms: the exact sum or product is s + e.
std::pair<double, double> two_sum(double x, double y) {
  const double s = x + y;
  const double z = s - x;
  return {s, (x - (s - z)) + (y - z)};
}

std::pair<double, double> two_prod(double x, double y) {
  const double p = x * y;
  return {p, std::fma(x, y, -p)};
}

bool encloses(const Interval& r, std::pair<double, double> exact) {
  const auto [s, e] = exact;
  const bool lo_ok = r.lo() < s || (r.lo() == s && e >= 0.0);
  const bool hi_ok = r.hi() > s || (r.hi() == s && e <= 0.0);
  return lo_ok && hi_ok;
}

Interval random_interval(testgen::Gen& g) {
  const double c = g.uniform(-10.0, 10.0);
  const double w = g.coin() ? 0.0 : g.uniform(0.0, 3.0);
  return {c - w, c + w};
}

double sample(testgen::Gen& g, const Interval& i) { return i.width() == 0.0 ? i.lo() : g.uniform(i.lo(), i.hi()); }

bool verified_1d(double a) {
  HorseshoeConfig c;
  c.one_dimensional = true;
  return certify_horseshoe(a, 0.0, c).verified;
}

}  // namespace

TEST_CASE("interval operations enclose the exact result") {
  const std::string failure = testgen::for_all(2000, 41, [](testgen::Gen& g, int) -> std::string {
    const Interval p = random_interval(g), q = random_interval(g);
    const double x = sample(g, p), y = sample(g, q);
    if (!encloses(p + q, two_sum(x, y))) return "sum";
    if (!encloses(p - q, two_sum(x, -y))) return "difference";
    if (!encloses(p * q, two_prod(x, y))) return "product";
    if (!encloses(p.sqr(), two_prod(x, x))) return "square";
    if (!(-p).contains(-x)) return "negation";
    return {};
  });
  CHECK_MESSAGE(failure.empty(), failure);
}

TEST_CASE("interval rounding widens by one ulp and squares stay nonnegative") {
  const Interval third = Interval::point(1.0) * Interval::point(1.0 / 3.0);
  CHECK(third.lo() < 1.0 / 3.0);
  CHECK(third.hi() > 1.0 / 3.0);
  CHECK(round_down(1.0) == std::nextafter(1.0, 0.0));
  CHECK(round_up(1.0) == std::nextafter(1.0, 2.0));

  const Interval s = Interval(-1.0, 2.0).sqr();
  CHECK(s.lo() <= 0.0);
  CHECK(s.lo() >= round_down(0.0));
  CHECK(s.hi() >= 4.0);
  CHECK(Interval(-3.0, 2.0).mig() == 0.0);
  CHECK(Interval(-3.0, 2.0).mag() == 3.0);
  CHECK(Interval(1.0, 2.0).mig() == 1.0);
  CHECK_FALSE(Interval(0.0, 1.0).intersect(Interval(2.0, 3.0)).has_value());
  CHECK(Interval(0.0, 2.0).intersect(Interval(1.0, 3.0))->lo() == 1.0);
  CHECK_THROWS_AS(Interval(1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(Interval(std::nan(""), 0.0), ValidationError);
}

TEST_CASE("interval Henon image contains the images of sampled points") {
  const std::string failure = testgen::for_all(300, 42, [](testgen::Gen& g, int) -> std::string {
    const double a = g.uniform(-2.0, 12.0), b = g.uniform(-1.0, 1.0);
    const Box2 box{random_interval(g), random_interval(g)};
    const Box2 img = henon_image(a, b, box);
    for (int k = 0; k < 20; ++k) {
      const double x = sample(g, box.x), y = sample(g, box.y);
      if (!img.x.contains(a - b * y - x * x) || !img.y.contains(x)) return "a point escaped the image box";
    }
    return {};
  });
  CHECK_MESSAGE(failure.empty(), failure);
}

TEST_CASE("certificate verifies deep in the horseshoe region and not in the attracting region") {
  const HorseshoeCertificate good = certify_horseshoe(10.0, 0.3);
  CHECK(good.verified);
  CHECK(good.failure.empty());
  CHECK(good.inner_crossing > 0.0);
  CHECK(good.outer_crossing < 0.0);
  CHECK(good.kappa_u > 0.0);
  CHECK(good.boxes > 0);

  const HorseshoeCertificate bad = certify_horseshoe(1.0, 0.3);
  CHECK_FALSE(bad.verified);
  CHECK_FALSE(bad.failure.empty());
}

TEST_CASE("one-dimensional certificate reproduces the a > 2 boundary") {
  CHECK(verified_1d(2.5));
  CHECK_FALSE(verified_1d(1.9));
  double lo = 1.9, hi = 2.5;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (verified_1d(mid) ? hi : lo) = mid;
  }
  CHECK(std::abs(hi - 2.0) < 0.05);
  CHECK(hi > 2.0);
}

TEST_CASE("certificate guards and text form") {
  CHECK_THROWS_AS(certify_horseshoe(10.0, 0.0), ValidationError);
  CHECK_THROWS_AS(certify_horseshoe(std::nan(""), 0.3), ValidationError);
  CHECK_THROWS_AS(certify_horseshoe(10.0, INFINITY), ValidationError);

  const std::string text = to_text(certify_horseshoe(10.0, 0.3));
  CHECK(text == to_text(certify_horseshoe(10.0, 0.3)));
  CHECK(text.find("0x") != std::string::npos);
  CHECK(text.find("verified true") != std::string::npos);
}

TEST_CASE("census at certified parameters counts 2^n real points") {
  const CensusReport r = entropy_census(10.0, 0.3, 6);
  CHECK(r.consistent);
  CHECK_FALSE(r.falsified);
  CHECK_FALSE(r.partial);
  REQUIRE(r.rows.size() == 6);
  for (const CensusRow& row : r.rows) {
    CHECK(row.expected == (1 << row.n));
    CHECK(row.real == row.expected);
    CHECK(row.complex == row.expected);
  }
  const double rate = std::log(static_cast<double>(r.rows.back().real)) / 6.0;
  CHECK(rate >= 0.6);
  CHECK(rate <= std::log(2.0) + 1e-12);
}

TEST_CASE("census in the attracting region falsifies the full shift") {
  const CensusReport r = entropy_census(1.0, 0.3, 6);
  CHECK(r.falsified);
  CHECK_FALSE(r.consistent);
  bool complex_exceeds_real = false;
  for (const CensusRow& row : r.rows) complex_exceeds_real = complex_exceeds_real || row.complex > row.real;
  CHECK(complex_exceeds_real);
  CHECK(to_text(r) == to_text(entropy_census(1.0, 0.3, 6)));
}

TEST_CASE("census guards and deadline") {
  CHECK_THROWS_AS(entropy_census(10.0, 0.3, 0), ValidationError);
  CHECK_THROWS_AS(entropy_census(10.0, 0.3, 11), ValidationError);
  const CensusReport r = entropy_census(10.0, 0.3, 6, 0, Deadline::after(std::chrono::milliseconds(0)));
  CHECK(r.partial);
  CHECK_FALSE(r.consistent);
  CHECK(r.rows.size() < 6);
}

TEST_CASE("property: census counts are ordered and bounded by the entropy of the complex map") {
  const std::string failure = testgen::for_all(12, 43, [](testgen::Gen& g, int) -> std::string {
    const double a = g.uniform(-1.0, 12.0);
    const double b = (g.coin() ? 1.0 : -1.0) * g.uniform(0.05, 0.6);
    const CensusReport r = entropy_census(a, b, 5);
    for (const CensusRow& row : r.rows) {
      const std::string at = "a=" + std::to_string(a) + " b=" + std::to_string(b) + " n=" + std::to_string(row.n);
      if (row.real > row.complex) return "real count above complex count at " + at;
      if (row.complex > row.expected) return "complex count above 2^n at " + at;
      if (row.real > 0 && std::log(static_cast<double>(row.real)) / row.n > std::log(2.0) + 1e-12) {
        return "entropy bound violated at " + at;
      }
    }
    return {};
  });
  CHECK_MESSAGE(failure.empty(), failure);
}

TEST_CASE("property: a verified certificate implies a consistent census") {
  int verified = 0;
  const std::string failure = testgen::for_all(12, 44, [&](testgen::Gen& g, int) -> std::string {
    const double a = g.uniform(4.0, 14.0);
    const double b = (g.coin() ? 1.0 : -1.0) * g.uniform(0.05, 0.6);
    if (!certify_horseshoe(a, b).verified) return {};
    ++verified;
    if (!entropy_census(a, b, 6).consistent) return "a=" + std::to_string(a) + " b=" + std::to_string(b);
    return {};
  });
  CHECK_MESSAGE(failure.empty(), failure);
  CHECK(verified >= 6);
}

namespace {

// Checks that hold for every scan: the ends keep their predicates, no probe
// contradicts the bracket, and undecided probes stay inside it.
std::string scan_invariants(const BoundaryScan& s, const BoundaryScanConfig& config) {
  if (!(s.a_lo < s.a_hi)) return "empty bracket";
  if (!certify_horseshoe(s.a_hi, s.b, config.certificate).verified) return "upper end lost its certificate";
  if (!entropy_census(s.a_lo, s.b, config.census_n, config.seed).falsified) return "lower end lost its census";
  bool undecided_seen = false;
  for (const BisectionStep& st : s.steps) {
    if (st.verified && st.a < s.a_hi) return "verified probe below the upper end";
    if (st.falsified && st.a > s.a_lo) return "falsified probe above the lower end";
    undecided_seen = undecided_seen || (!st.verified && !st.falsified);
  }
  if (s.stalled != undecided_seen) return "stalled flag disagrees with the probes";
  if (s.undecided && (s.undecided->first < s.a_lo || s.undecided->second > s.a_hi)) {
    return "undecided span outside the bracket";
  }
  return {};
}

// Replays the plain bisection prefix from the starting bracket.
std::string halving(const BoundaryScan& s, double a_lo, double a_hi) {
  for (const BisectionStep& st : s.steps) {
    if (st.a != 0.5 * (a_lo + a_hi)) return "probe is not the bracket midpoint";
    if (st.verified) {
      a_hi = st.a;
    } else if (st.falsified) {
      a_lo = st.a;
    } else {
      break;
    }
  }
  return {};
}

}  // namespace

TEST_CASE("boundary scan near b = 0 brackets a = 2") {
  for (double b : {0.01, -0.01}) {
    CAPTURE(b);
    BoundaryScanConfig config;
    const BoundaryScan s = boundary_scan(b, 1.0, 3.5, config);
    const std::string bad = scan_invariants(s, config);
    CHECK_MESSAGE(bad.empty(), bad);
    const std::string split = halving(s, 1.0, 3.5);
    CHECK_MESSAGE(split.empty(), split);
    CHECK(std::abs(0.5 * (s.a_lo + s.a_hi) - 2.0) < 0.2);
    REQUIRE(s.tangency.has_value());
    CHECK(s.tangency->quadratic_dominant());
    CHECK((s.tangency->p == s.tangency->q) == (b > 0.0));
  }
}

TEST_CASE("boundary scan tangency structure at b = +0.1 and b = -0.1") {
  for (double b : {0.1, -0.1}) {
    CAPTURE(b);
    BoundaryScanConfig config;
    const BoundaryScan s = boundary_scan(b, 1.0, 3.5, config);
    const std::string bad = scan_invariants(s, config);
    CHECK_MESSAGE(bad.empty(), bad);
    REQUIRE(s.tangency.has_value());
    const TangencyReport& t = *s.tangency;
    CHECK(t.a == s.a_hi);
    CHECK((t.p == t.q) == (b > 0.0));
    CHECK(std::abs(t.c1) < 1e-3);
    CHECK(std::abs(t.c2) > config.tangency_config.quadratic_threshold);
    CHECK(t.residual < 0.1 * std::abs(t.c2) * t.window * t.window);
    CHECK(t.estimated_tangency < s.a_hi);
    CHECK(t.estimated_tangency > s.a_lo - 0.05);
    const std::string text = to_text(t);
    CHECK(text.find(b > 0.0 ? "same_point true" : "same_point false") != std::string::npos);
  }
}

TEST_CASE("property: bisection keeps its predicates for random small b") {
  const std::string failure = testgen::for_all(4, 45, [](testgen::Gen& g, int) -> std::string {
    const double b = (g.coin() ? 1.0 : -1.0) * g.uniform(0.005, 0.15);
    BoundaryScanConfig config;
    config.tangency = false;
    config.width = 1e-2;
    const BoundaryScan s = boundary_scan(b, 1.0, 3.5, config);
    std::string bad = scan_invariants(s, config);
    if (bad.empty()) bad = halving(s, 1.0, 3.5);
    return bad.empty() ? bad : "b=" + std::to_string(b) + ": " + bad;
  });
  CHECK_MESSAGE(failure.empty(), failure);
}

TEST_CASE("boundary scan guards and deadline") {
  CHECK_THROWS_AS(boundary_scan(0.0, 1.0, 3.5), ValidationError);
  CHECK_THROWS_AS(boundary_scan(0.1, 3.5, 1.0), ValidationError);
  CHECK_THROWS_AS(boundary_scan(0.1, 1.0, 2.2), ValidationError);  // no certificate at the upper end
  CHECK_THROWS_AS(boundary_scan(0.1, 3.0, 3.5), ValidationError);  // no census failure at the lower end
  BoundaryScanConfig bad;
  bad.census_n = 11;
  CHECK_THROWS_AS(boundary_scan(0.1, 1.0, 3.5, bad), ValidationError);

  const BoundaryScan s = boundary_scan(0.01, 1.0, 3.5, {}, Deadline::after(std::chrono::milliseconds(0)));
  CHECK(s.partial);
  CHECK(s.steps.empty());
  CHECK_FALSE(s.tangency.has_value());
  CHECK(s.a_lo == 1.0);
  CHECK(s.a_hi == 3.5);
}

TEST_CASE("tangency guards") {
  CHECK_THROWS_AS(find_tangency(-1.0, 0.3), ValidationError);  // no real fixed points
  TangencyConfig c;
  c.sample_spacing = 0.0;
  CHECK_THROWS_AS(find_tangency(2.5, 0.1, c), ValidationError);
}
