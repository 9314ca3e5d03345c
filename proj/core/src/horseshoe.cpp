#include "henonlab/horseshoe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "henonlab/errors.hpp"
#include "henonlab/parallel.hpp"



namespace henonlab {

// ---------------------------------------------------------------------------
// Interval arithmetic

double round_down(double v) { return std::nextafter(v, -std::numeric_limits<double>::infinity()); }
double round_up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) throw ValidationError("interval", "requires lo <= hi");
}

double Interval::mig() const {
  if (lo_ <= 0.0 && hi_ >= 0.0) return 0.0;
  return std::min(std::abs(lo_), std::abs(hi_));
}

double Interval::mag() const { return std::max(std::abs(lo_), std::abs(hi_)); }

std::optional<Interval> Interval::intersect(const Interval& o) const {
  if (!intersects(o)) return std::nullopt;
  return Interval(std::max(lo_, o.lo_), std::min(hi_, o.hi_));
}

Interval operator+(const Interval& p, const Interval& q) { return {round_down(p.lo_ + q.lo_), round_up(p.hi_ + q.hi_)}; }

Interval operator-(const Interval& p, const Interval& q) { return {round_down(p.lo_ - q.hi_), round_up(p.hi_ - q.lo_)}; }

Interval operator-(const Interval& p) { return {-p.hi_, -p.lo_}; }

Interval operator*(const Interval& p, const Interval& q) {
  const double c[4] = {p.lo_ * q.lo_, p.lo_ * q.hi_, p.hi_ * q.lo_, p.hi_ * q.hi_};
  return {round_down(*std::min_element(c, c + 4)), round_up(*std::max_element(c, c + 4))};
}

Interval Interval::sqr() const {
  if (lo_ >= 0.0) return {std::max(0.0, round_down(lo_ * lo_)), round_up(hi_ * hi_)};
  if (hi_ <= 0.0) return {std::max(0.0, round_down(hi_ * hi_)), round_up(lo_ * lo_)};
  const double m = std::max(-lo_, hi_);
  return {0.0, round_up(m * m)};
}

Box2 henon_image(double a, double b, const Box2& box) {
  return {Interval::point(a) - Interval::point(b) * box.y - box.x.sqr(), box.x};
}

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Box graph

// The two strips [-R, -x_in] and [x_in, R], each cut into n equal parts.
struct Partition {
  std::vector<Interval> parts;

  Partition(double radius, double inner, int n) {
    std::vector<double> e(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) e[k] = inner + (radius - inner) * k / n;
    e[0] = inner;
    e[n] = radius;
    for (int k = n; k > 0; --k) parts.emplace_back(-e[k], -e[k - 1]);
    for (int k = 0; k < n; ++k) parts.emplace_back(e[k], e[k + 1]);
  }

  // Indices of parts overlapping j in more than a point. Touching at an
  // endpoint is covered by the neighbouring part, which then overlaps.
  std::pair<int, int> range(const Interval& j) const {
    const auto first = std::partition_point(parts.begin(), parts.end(),
                                            [&](const Interval& p) { return p.hi() <= j.lo(); });
    const auto last = std::partition_point(parts.begin(), parts.end(),
                                           [&](const Interval& p) { return p.lo() < j.hi(); });
    return {static_cast<int>(first - parts.begin()), static_cast<int>(last - parts.begin())};
  }
};

struct Graph {
  std::vector<std::uint32_t> offset;  // CSR, size nodes + 1
  std::vector<std::uint32_t> target;
  std::vector<char> alive;

  std::size_t nodes() const { return offset.size() - 1; }
};

// Removes nodes without alive successors or predecessors until none remain.
void prune(Graph& g) {
  const std::size_t n = g.nodes();
  std::vector<std::uint32_t> indeg(n, 0), outdeg(n, 0);
  std::vector<std::uint32_t> roff(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    outdeg[i] = g.offset[i + 1] - g.offset[i];
    for (std::uint32_t e = g.offset[i]; e < g.offset[i + 1]; ++e) ++roff[g.target[e] + 1];
  }
  for (std::size_t i = 0; i < n; ++i) roff[i + 1] += roff[i];
  std::vector<std::uint32_t> source(g.target.size());
  std::vector<std::uint32_t> fill(roff.begin(), roff.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t e = g.offset[i]; e < g.offset[i + 1]; ++e) source[fill[g.target[e]]++] = static_cast<std::uint32_t>(i);
  }
  for (std::size_t i = 0; i < n; ++i) indeg[i] = roff[i + 1] - roff[i];

  g.alive.assign(n, 1);
  std::vector<std::uint32_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (indeg[i] == 0 || outdeg[i] == 0) {
      g.alive[i] = 0;
      queue.push_back(static_cast<std::uint32_t>(i));
    }
  }
  while (!queue.empty()) {
    const std::uint32_t v = queue.back();
    queue.pop_back();
    for (std::uint32_t e = g.offset[v]; e < g.offset[v + 1]; ++e) {
      const std::uint32_t w = g.target[e];
      if (g.alive[w] && --indeg[w] == 0) {
        g.alive[w] = 0;
        queue.push_back(w);
      }
    }
    for (std::uint32_t e = roff[v]; e < roff[v + 1]; ++e) {
      const std::uint32_t w = source[e];
      if (g.alive[w] && --outdeg[w] == 0) {
        g.alive[w] = 0;
        queue.push_back(w);
      }
    }
  }
}

// Finds V with V[from] <= V[to] + cost for every constraint (from, to, cost),
// by label correcting from V = 0. Fails (a cycle of negative total cost) when
// the relaxation budget runs out. The returned potentials are re-checked with
// directed rounding by the caller.
struct Constraint {
  std::uint32_t from;
  std::uint32_t to;
  double cost;
};

std::optional<std::vector<double>> solve_potentials(std::size_t nodes, const std::vector<Constraint>& cons) {
  std::vector<std::uint32_t> off(nodes + 1, 0);
  for (const auto& c : cons) ++off[c.to + 1];
  for (std::size_t i = 0; i < nodes; ++i) off[i + 1] += off[i];
  std::vector<std::uint32_t> by_to(cons.size());
  std::vector<std::uint32_t> fill(off.begin(), off.end() - 1);
  for (std::size_t e = 0; e < cons.size(); ++e) by_to[fill[cons[e].to]++] = static_cast<std::uint32_t>(e);

  std::vector<double> v(nodes, 0.0);
  std::vector<char> queued(nodes, 1);
  std::deque<std::uint32_t> queue;
  for (std::size_t i = 0; i < nodes; ++i) queue.push_back(static_cast<std::uint32_t>(i));
  const std::size_t budget = 64 * (cons.size() + nodes);
  std::size_t work = 0;
  while (!queue.empty()) {
    const std::uint32_t t = queue.front();
    queue.pop_front();
    queued[t] = 0;
    for (std::uint32_t k = off[t]; k < off[t + 1]; ++k) {
      const Constraint& c = cons[by_to[k]];
      // Tightened slightly so the rounded re-check passes.
      const double bound = v[c.to] + c.cost - 1e-12 * (1.0 + std::abs(v[c.to]));
      if (bound < v[c.from]) {
        v[c.from] = bound;
        if (!queued[c.from]) {
          queued[c.from] = 1;
          queue.push_back(c.from);
        }
      }
      if (++work > budget) return std::nullopt;
    }
  }
  return v;
}

bool check_potentials(const std::vector<double>& v, const std::vector<Constraint>& cons) {
  return std::all_of(cons.begin(), cons.end(),
                     [&](const Constraint& c) { return v[c.from] <= round_down(v[c.to] + c.cost); });
}

// Lower bound for log(x), x > 0.
double log_down(double x) { return round_down(round_down(std::log(x))); }

struct Level {
  bool verified = false;
  std::string failure;
  std::size_t boxes = 0;
  std::size_t edges = 0;
  double kappa_u = 0.0;
  double kappa_s = 0.0;
};

Level check_level_1d(double a, double radius, double inner, int n, double theta) {
  Level out;
  const Partition part(radius, inner, n);
  Graph g;
  g.offset.push_back(0);
  for (const Interval& x : part.parts) {
    const auto [lo, hi] = part.range(Interval::point(a) - x.sqr());
    for (int k = lo; k < hi; ++k) g.target.push_back(static_cast<std::uint32_t>(k));
    g.offset.push_back(static_cast<std::uint32_t>(g.target.size()));
  }
  prune(g);
  std::vector<Constraint> cons;
  for (std::size_t i = 0; i < g.nodes(); ++i) {
    if (!g.alive[i]) continue;
    ++out.boxes;
    const double m = part.parts[i].mig();
    if (m <= 0.0) {
      out.failure = "expansion: box touching x = 0 is recurrent";
      return out;
    }
    const double cost = round_down(log_down(2.0 * m) - theta);
    for (std::uint32_t e = g.offset[i]; e < g.offset[i + 1]; ++e) {
      if (g.alive[g.target[e]]) cons.push_back({static_cast<std::uint32_t>(i), g.target[e], cost});
    }
  }
  out.edges = cons.size();
  if (out.boxes == 0) {
    out.failure = "graph: no recurrent boxes";
    return out;
  }
  const auto v = solve_potentials(g.nodes(), cons);
  if (!v || !check_potentials(*v, cons)) {
    out.failure = "expansion: no adapted metric with growth 1 + margin at " + std::to_string(n) + " boxes per strip";
    return out;
  }
  out.verified = true;
  return out;
}

Level check_level_2d(double a, double b, double radius, double inner, int n, double theta) {
  Level out;
  const Partition part(radius, inner, n);
  const std::size_t m = part.parts.size();
  const std::size_t nodes = m * m;  // node = ix * m + iy
  const double bm = std::abs(b);

  Graph g;
  g.offset.assign(nodes + 1, 0);
  {
    std::vector<std::vector<std::uint32_t>> rows(m);
    parallel_for(m, [&](std::size_t ix) {
      const auto [ylo, yhi] = part.range(part.parts[ix]);
      for (std::size_t iy = 0; iy < m; ++iy) {
        const Box2 img = henon_image(a, b, {part.parts[ix], part.parts[iy]});
        const auto [xlo, xhi] = part.range(img.x);
        rows[ix].push_back(static_cast<std::uint32_t>(std::max(0, xhi - xlo) * std::max(0, yhi - ylo)));
        for (int kx = xlo; kx < xhi; ++kx) {
          for (int ky = ylo; ky < yhi; ++ky) rows[ix].push_back(static_cast<std::uint32_t>(kx * m + ky));
        }
      }
    });
    for (std::size_t ix = 0; ix < m; ++ix) {
      std::size_t pos = 0;
      for (std::size_t iy = 0; iy < m; ++iy) {
        const std::uint32_t count = rows[ix][pos++];
        g.target.insert(g.target.end(), rows[ix].begin() + static_cast<long>(pos),
                        rows[ix].begin() + static_cast<long>(pos + count));
        pos += count;
        g.offset[ix * m + iy + 1] = static_cast<std::uint32_t>(g.target.size());
      }
      std::vector<std::uint32_t>().swap(rows[ix]);
    }
  }
  prune(g);
  const auto xs = [&](std::size_t node) -> const Interval& { return part.parts[node / m]; };
  const auto ys = [&](std::size_t node) -> const Interval& { return part.parts[node % m]; };

  std::size_t edges = 0;
  for (std::size_t i = 0; i < nodes; ++i) {
    if (!g.alive[i]) continue;
    ++out.boxes;
    for (std::uint32_t e = g.offset[i]; e < g.offset[i + 1]; ++e) edges += g.alive[g.target[e]] ? 1 : 0;
  }
  out.edges = edges;
  if (out.boxes == 0) {
    out.failure = "graph: no recurrent boxes";
    return out;
  }

  // Unstable cones: kappa_j >= 1 / (2 mig X_i - |b| kappa_i) along i -> j.
  std::vector<double> ku(nodes, 0.0);
  bool changed = true;
  for (int sweep = 0; sweep < 400 && changed; ++sweep) {
    changed = false;
    for (std::size_t i = 0; i < nodes; ++i) {
      if (!g.alive[i]) continue;
      const double den = 2.0 * xs(i).mig() - bm * ku[i];
      if (!(den > 0.0)) {
        out.failure = "unstable cone: slope unbounded near x = " + hex(xs(i).lo());
        return out;
      }
      const double cand = 1.0 / den;
      for (std::uint32_t e = g.offset[i]; e < g.offset[i + 1]; ++e) {
        const std::uint32_t j = g.target[e];
        if (g.alive[j] && cand > ku[j] * (1.0 + 1e-13)) {
          ku[j] = cand;
          changed = true;
        }
      }
    }
  }
  if (changed) {
    out.failure = "unstable cone: slopes did not settle";
    return out;
  }
  for (double& k : ku) k = round_up(k * (1.0 + 1e-9));

  // Stable cones on the reversed graph: kappa_i >= |b| / (2 mig(X_i cap Y_j) - kappa_j).
  std::vector<double> ks(nodes, 0.0);
  changed = true;
  for (int sweep = 0; sweep < 400 && changed; ++sweep) {
    changed = false;
    for (std::size_t i = 0; i < nodes; ++i) {
      if (!g.alive[i]) continue;
      for (std::uint32_t e = g.offset[i]; e < g.offset[i + 1]; ++e) {
        const std::uint32_t j = g.target[e];
        if (!g.alive[j]) continue;
        const auto cap = xs(i).intersect(ys(j));
        if (!cap) continue;
        const double den = 2.0 * cap->mig() - ks[j];
        if (!(den > 0.0)) {
          out.failure = "stable cone: slope unbounded near y = " + hex(ys(j).lo());
          return out;
        }
        const double cand = bm / den;
        if (cand > ks[i] * (1.0 + 1e-13)) {
          ks[i] = cand;
          changed = true;
        }
      }
    }
  }
  if (changed) {
    out.failure = "stable cone: slopes did not settle";
    return out;
  }
  for (double& k : ks) k = round_up(k * (1.0 + 1e-9));

  // Rounded re-check of both cone families, transversality, and the growth
  // constraints for the adapted metrics.
  std::vector<Constraint> cu, cs;
  for (std::size_t i = 0; i < nodes; ++i) {
    if (!g.alive[i]) continue;
    if (!(round_up(ku[i] * ks[i]) < 1.0)) {
      out.failure = "cones: unstable and stable cones overlap near x = " + hex(xs(i).lo());
      return out;
    }
    out.kappa_u = std::max(out.kappa_u, ku[i]);
    out.kappa_s = std::max(out.kappa_s, ks[i]);
    const double den_u = round_down(2.0 * xs(i).mig() - round_up(bm * ku[i]));
    if (!(den_u > 0.0)) {
      out.failure = "unstable cone: rounded check failed";
      return out;
    }
    const double grow_u = log_down(den_u);
    for (std::uint32_t e = g.offset[i]; e < g.offset[i + 1]; ++e) {
      const std::uint32_t j = g.target[e];
      if (!g.alive[j]) continue;
      if (!(round_up(1.0 / den_u) <= ku[j])) {
        out.failure = "unstable cone: rounded check failed";
        return out;
      }
      cu.push_back({static_cast<std::uint32_t>(i), j, round_down(grow_u - theta)});
      const auto cap = xs(i).intersect(ys(j));
      if (!cap) continue;
      const double den_s = round_down(2.0 * cap->mig() - ks[j]);
      if (!(den_s > 0.0) || !(round_up(bm / den_s) <= ks[i])) {
        out.failure = "stable cone: rounded check failed";
        return out;
      }
      const double grow_s = round_down(log_down(den_s) - round_up(std::log(bm)) - 4e-16 * std::abs(std::log(bm)));
      cs.push_back({j, static_cast<std::uint32_t>(i), round_down(grow_s - theta)});
    }
  }
  const auto vu = solve_potentials(nodes, cu);
  if (!vu || !check_potentials(*vu, cu)) {
    out.failure = "unstable expansion: no adapted metric with growth 1 + margin at " + std::to_string(n) +
                  " boxes per strip";
    return out;
  }
  const auto vs = solve_potentials(nodes, cs);
  if (!vs || !check_potentials(*vs, cs)) {
    out.failure = "stable expansion: no adapted metric with growth 1 + margin at " + std::to_string(n) +
                  " boxes per strip";
    return out;
  }
  out.verified = true;
  return out;
}

}  // namespace

HorseshoeCertificate certify_horseshoe(double a, double b, const HorseshoeConfig& config) {
  if (!std::isfinite(a)) throw ValidationError("a", "must be finite");
  if (!std::isfinite(b)) throw ValidationError("b", "must be finite");
  if (!config.one_dimensional && b == 0.0) throw ValidationError("b", "Jacobian b must be nonzero");
  if (!(config.margin > 0.0)) throw ValidationError("margin", "must be positive");
  if (config.min_boxes < 1) throw ValidationError("min_boxes", "must be positive");

  HorseshoeCertificate cert;
  cert.a = a;
  cert.b = config.one_dimensional ? 0.0 : b;
  cert.one_dimensional = config.one_dimensional;
  const double bm = std::abs(cert.b);
  const double radius = round_up(filtration_radius(a, cert.b) * (1.0 + 1e-6) + 1e-12);
  cert.box_radius = radius;
  cert.theta = round_up(round_up(std::log1p(config.margin)));

  const double slack = a - bm * radius - radius;
  if (!(slack > 0.0)) {
    cert.failure = "crossing: a - |b| R - R <= 0, no strip maps across the box";
    return cert;
  }
  cert.x_inner = std::sqrt(slack) * (1.0 - 1e-6);
  const Interval ys = cert.one_dimensional ? Interval::point(0.0) : Interval(-radius, radius);
  const Interval rb = Interval::point(radius);
  const Interval inner = Interval::point(a) - Interval::point(cert.b) * ys - Interval::point(cert.x_inner).sqr() - rb;
  const Interval outer = Interval::point(a) - Interval::point(cert.b) * ys - rb.sqr() + rb;
  cert.inner_crossing = inner.lo();
  cert.outer_crossing = outer.hi();
  if (!(inner.lo() > 0.0)) {
    cert.failure = "crossing: inner strip edge does not map beyond x = R";
    return cert;
  }
  if (!(outer.hi() < 0.0)) {
    cert.failure = "crossing: outer strip edge does not map beyond x = -R";
    return cert;
  }

  const int max_boxes = config.one_dimensional ? config.max_boxes_1d : config.max_boxes;
  Level level;
  for (int n = config.min_boxes; n <= std::max(max_boxes, config.min_boxes); n *= 2) {
    level = config.one_dimensional ? check_level_1d(a, radius, cert.x_inner, n, cert.theta)
                                   : check_level_2d(a, cert.b, radius, cert.x_inner, n, cert.theta);
    cert.boxes_per_strip = n;
    if (level.verified) break;
  }
  cert.boxes = level.boxes;
  cert.edges = level.edges;
  cert.kappa_u = level.kappa_u;
  cert.kappa_s = level.kappa_s;
  cert.verified = level.verified;
  cert.failure = level.failure;
  return cert;
}

std::string to_text(const HorseshoeCertificate& c) {
  std::ostringstream out;
  out << "horseshoe_certificate\n"
      << "a " << hex(c.a) << "\n"
      << "b " << hex(c.b) << "\n"
      << "one_dimensional " << (c.one_dimensional ? "true" : "false") << "\n"
      << "box [" << hex(-c.box_radius) << ", " << hex(c.box_radius) << "]^" << (c.one_dimensional ? 1 : 2) << "\n"
      << "strips |x| in [" << hex(c.x_inner) << ", " << hex(c.box_radius) << "]\n"
      << "inner_crossing_lower " << hex(c.inner_crossing) << "\n"
      << "outer_crossing_upper " << hex(c.outer_crossing) << "\n"
      << "kappa_u " << hex(c.kappa_u) << "\n"
      << "kappa_s " << hex(c.kappa_s) << "\n"
      << "theta " << hex(c.theta) << "\n"
      << "boxes_per_strip " << c.boxes_per_strip << "\n"
      << "recurrent_boxes " << c.boxes << "\n"
      << "edges " << c.edges << "\n"
      << "verified " << (c.verified ? "true" : "false") << "\n";
  if (!c.failure.empty()) out << "failure " << c.failure << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Census

CensusReport entropy_census(double a, double b, int n_max, std::uint64_t seed, const Deadline& deadline) {
  if (n_max < 1 || n_max > 10) throw ValidationError("n_max", "must be in [1, 10]");
  const HenonParams params = HenonParams::make(a, b);
  CensusReport report;
  report.a = a;
  report.b = b;
  report.consistent = true;
  for (int n = 1; n <= n_max; ++n) {
    if (deadline.expired()) {
      report.partial = true;
      report.consistent = false;
      break;
    }
    const PeriodicSearch s = find_periodic(params, n, SearchMode::complex_grid, {}, seed);
    CensusRow row;
    row.n = n;
    row.expected = s.expected;
    row.complex = static_cast<int>(s.points.size());
    row.under_resolved = s.under_resolved;
    for (const SaddleRecord& r : s.points) {
      const double tol = 1e-8 * (1.0 + sup_norm(r.location));
      if (std::abs(r.location.x.imag()) <= tol && std::abs(r.location.y.imag()) <= tol) ++row.real;
    }
    report.consistent = report.consistent && row.real == row.expected && row.complex == row.expected;
    report.falsified = report.falsified || (!row.under_resolved && row.real < row.expected);
    report.rows.push_back(row);
  }
  return report;
}

std::string to_text(const CensusReport& r) {
  std::ostringstream out;
  out << "entropy_census\n"
      << "a " << hex(r.a) << "\n"
      << "b " << hex(r.b) << "\n"
      << "n real complex expected under_resolved\n";
  for (const auto& row : r.rows) {
    out << row.n << " " << row.real << " " << row.complex << " " << row.expected << " "
        << (row.under_resolved ? "true" : "false") << "\n";
  }
  out << "maximal_entropy " << (r.consistent ? "consistent" : "inconsistent") << "\n"
      << "full_shift_falsified " << (r.falsified ? "true" : "false") << "\n"
      << "partial " << (r.partial ? "true" : "false") << "\n"
      << "note counts of periodic points stand in for J in R^2; computed periods only\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Tangency

namespace {

struct V2 {
  double x, y;
  V2 operator-(const V2& o) const { return {x - o.x, y - o.y}; }
  V2 operator+(const V2& o) const { return {x + o.x, y + o.y}; }
  V2 operator*(double s) const { return {x * s, y * s}; }
};
double dot(V2 p, V2 q) { return p.x * q.x + p.y * q.y; }
double cross(V2 p, V2 q) { return p.x * q.y - p.y * q.x; }
double norm(V2 p) { return std::hypot(p.x, p.y); }

struct Piece {
  std::vector<double> tau;
  std::vector<V2> p;
};

// Real curve t -> F(t) sampled on tau in [-span, span] with
// t = sign(tau)(|lambda|^|tau| - 1): each unit of tau is one fundamental
// domain. Intervals are halved until consecutive points inside the region are
// at most `h` apart; points outside the region split the curve into pieces.
class CurveSampler {
 public:
  CurveSampler(std::function<std::optional<V2>(double)> f, double lambda, double region, double h)
      : f_(std::move(f)), log_lambda_(std::log(std::abs(lambda))), region_(region), h_(h) {}

  double t_of(double tau) const {
    return (tau < 0 ? -1.0 : 1.0) * std::expm1(std::abs(tau) * log_lambda_);
  }

  std::optional<V2> at(double tau) const {
    const auto p = f_(t_of(tau));
    if (!p || !std::isfinite(p->x) || !std::isfinite(p->y)) return std::nullopt;
    if (std::max(std::abs(p->x), std::abs(p->y)) > region_) return std::nullopt;
    return p;
  }

  std::vector<Piece> sample(double lo, double hi, int initial) const {
    std::vector<double> taus;
    std::vector<std::optional<V2>> pts;
    for (int i = 0; i <= initial; ++i) {
      const double tau = lo + (hi - lo) * i / initial;
      const auto p = at(tau);
      if (!taus.empty()) refine(taus.back(), pts.back(), tau, p, 0, taus, pts);
      taus.push_back(tau);
      pts.push_back(p);
    }
    std::vector<Piece> pieces;
    Piece cur;
    const auto flush = [&] {
      if (cur.p.size() >= 8) pieces.push_back(std::move(cur));
      cur = Piece{};
    };
    for (std::size_t i = 0; i < taus.size(); ++i) {
      if (!pts[i] || (!cur.p.empty() && norm(*pts[i] - cur.p.back()) > 4.0 * h_)) flush();
      if (pts[i]) {
        cur.tau.push_back(taus[i]);
        cur.p.push_back(*pts[i]);
      }
    }
    flush();
    return pieces;
  }

 private:
  void refine(double ta, const std::optional<V2>& pa, double tb, const std::optional<V2>& pb, int depth,
              std::vector<double>& taus, std::vector<std::optional<V2>>& pts) const {
    if (depth >= 24) return;
    if (!pa && !pb) return;
    if (pa && pb && norm(*pa - *pb) <= h_) return;
    const double tm = 0.5 * (ta + tb);
    const auto pm = at(tm);
    // One side outside: only chase the region boundary a few levels.
    if ((!pa || !pb) && depth >= 6) return;
    refine(ta, pa, tm, pm, depth + 1, taus, pts);
    taus.push_back(tm);
    pts.push_back(pm);
    refine(tm, pm, tb, pb, depth + 1, taus, pts);
  }

  std::function<std::optional<V2>(double)> f_;
  double log_lambda_;
  double region_;
  double h_;
};

struct Foot {
  double distance = std::numeric_limits<double>::infinity();  // signed
  std::size_t piece = 0;
  std::size_t segment = 0;
  double along = 0.0;  // position within the segment, [0, 1]
};

// Nearest point of a set of polylines, via a uniform bucket grid.
class NearestSegment {
 public:
  NearestSegment(const std::vector<Piece>& pieces, double cell) : pieces_(pieces), cell_(cell) {
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      for (std::size_t s = 0; s + 1 < pieces[k].p.size(); ++s) {
        const V2 a = pieces[k].p[s], b = pieces[k].p[s + 1];
        const long x0 = key(std::min(a.x, b.x)), x1 = key(std::max(a.x, b.x));
        const long y0 = key(std::min(a.y, b.y)), y1 = key(std::max(a.y, b.y));
        for (long x = x0; x <= x1; ++x) {
          for (long y = y0; y <= y1; ++y) buckets_[{x, y}].push_back({k, s});
        }
      }
    }
  }

  std::optional<Foot> query(V2 q, double cap) const {
    Foot best;
    const long r = static_cast<long>(std::ceil(cap / cell_));
    const long cx = key(q.x), cy = key(q.y);
    bool found = false;
    for (long x = cx - r; x <= cx + r; ++x) {
      for (long y = cy - r; y <= cy + r; ++y) {
        const auto it = buckets_.find({x, y});
        if (it == buckets_.end()) continue;
        for (const auto& [k, s] : it->second) {
          const V2 a = pieces_[k].p[s], b = pieces_[k].p[s + 1];
          const V2 d = b - a;
          const double len2 = dot(d, d);
          const double u = len2 > 0 ? std::clamp(dot(q - a, d) / len2, 0.0, 1.0) : 0.0;
          const V2 foot = a + d * u;
          const double dist = norm(q - foot);
          if (dist < std::abs(best.distance)) {
            best.distance = cross(d, q - a) >= 0 ? dist : -dist;
            best.piece = k;
            best.segment = s;
            best.along = u;
            found = true;
          }
        }
      }
    }
    if (!found || std::abs(best.distance) > cap) return std::nullopt;
    return best;
  }

 private:
  long key(double v) const { return static_cast<long>(std::floor(v / cell_)); }

  const std::vector<Piece>& pieces_;
  double cell_;
  std::map<std::pair<long, long>, std::vector<std::pair<std::size_t, std::size_t>>> buckets_;
};

struct Manifolds {
  std::vector<Linearization> unstable;  // per fixed point
  std::vector<Linearization> stable;
  std::vector<std::vector<Piece>> u_pieces;
  std::vector<std::vector<Piece>> s_pieces;
  std::vector<CurveSampler> u_samplers;
  std::vector<CurveSampler> s_samplers;
};

std::function<std::optional<V2>(double)> real_curve(const Linearization& lin) {
  return [&lin](double t) -> std::optional<V2> {
    const Point2 p = lin.evaluate(Complex(t));
    if (!is_finite(p)) return std::nullopt;
    return V2{p.x.real(), p.y.real()};
  };
}

Manifolds build_manifolds(const HenonParams& params, const TangencyConfig& config) {
  Manifolds m;
  const double region = 1.25 * params.filtration_radius();
  for (const SaddleRecord& r : fixed_point_records(params)) {
    if (r.kind != PointKind::saddle || r.location.x.imag() != 0.0 || r.lambda_u.imag() != 0.0) {
      throw ValidationError("a", "tangency search needs two real saddle fixed points");
    }
    m.unstable.push_back(linearize(params, r));
    m.stable.push_back(stable_linearization(params, r));
  }
  for (std::size_t i = 0; i < m.unstable.size(); ++i) {
    m.u_samplers.emplace_back(real_curve(m.unstable[i]), m.unstable[i].saddle().lambda_u.real(), region,
                              config.sample_spacing);
    m.s_samplers.emplace_back(real_curve(m.stable[i]), m.stable[i].saddle().lambda_u.real(), region,
                              config.sample_spacing);
  }
  for (std::size_t i = 0; i < m.unstable.size(); ++i) {
    m.u_pieces.push_back(m.u_samplers[i].sample(-config.unstable_span, config.unstable_span, 1200));
    m.s_pieces.push_back(m.s_samplers[i].sample(-3.0, 3.0, 1200));
  }
  return m;
}

struct Fold {
  int p = 0;  // stable side
  int q = 0;  // unstable side
  V2 location{};
  double tau_lo = 0.0, tau_hi = 0.0;  // unstable parameter bracket
  double s_lo = 0.0, s_hi = 0.0;      // stable parameter bracket
};

// Local extrema of the signed distance from W^u_q to W^s_p, each with
// parameter brackets covering the nearby stretch of both curves.
std::vector<Fold> find_folds(const Manifolds& m, double spacing) {
  std::vector<Fold> folds;
  const double cap = 0.5;
  const double reach = 0.3;
  for (int p = 0; p < 2; ++p) {
    const NearestSegment nearest(m.s_pieces[p], 4.0 * spacing);
    for (int q = 0; q < 2; ++q) {
      for (const Piece& piece : m.u_pieces[q]) {
        const std::size_t n = piece.p.size();
        std::vector<std::optional<Foot>> feet(n);
        for (std::size_t k = 0; k < n; ++k) feet[k] = nearest.query(piece.p[k], cap);
        constexpr std::size_t M = 4;
        for (std::size_t k = M; k + M < n; ++k) {
          if (!feet[k]) continue;
          const double dk = feet[k]->distance;
          bool is_max = true, is_min = true;
          for (std::size_t j = k - M; j <= k + M; ++j) {
            if (!feet[j] || feet[j]->piece != feet[k]->piece) {
              is_max = is_min = false;
              break;
            }
            if (j == k) continue;
            is_max = is_max && feet[j]->distance < dk;
            is_min = is_min && feet[j]->distance > dk;
          }
          if (!is_max && !is_min) continue;
          std::size_t lo = k, hi = k;
          while (lo > 0 && feet[lo - 1] && feet[lo - 1]->piece == feet[k]->piece &&
                 norm(piece.p[lo - 1] - piece.p[k]) <= reach) {
            --lo;
          }
          while (hi + 1 < n && feet[hi + 1] && feet[hi + 1]->piece == feet[k]->piece &&
                 norm(piece.p[hi + 1] - piece.p[k]) <= reach) {
            ++hi;
          }
          std::size_t seg_lo = feet[k]->segment, seg_hi = feet[k]->segment;
          for (std::size_t j = lo; j <= hi; ++j) {
            seg_lo = std::min(seg_lo, feet[j]->segment);
            seg_hi = std::max(seg_hi, feet[j]->segment);
          }
          const Piece& sp = m.s_pieces[p][feet[k]->piece];
          Fold f;
          f.p = p;
          f.q = q;
          f.location = piece.p[k];
          f.tau_lo = piece.tau[lo];
          f.tau_hi = piece.tau[hi];
          f.s_lo = sp.tau[seg_lo >= 3 ? seg_lo - 3 : 0];
          f.s_hi = sp.tau[std::min(seg_hi + 4, sp.p.size() - 1)];
          folds.push_back(f);
        }
      }
    }
  }
  return folds;
}

struct LocalGeometry {
  std::vector<double> xi;
  std::vector<double> eta;  // signed
  std::vector<V2> points;   // the W^u_q samples
  std::vector<double> u_tau;
  std::vector<std::size_t> foot;  // index into s_tau of the nearest W^s_p segment
  std::vector<double> s_tau;
};

// Resamples both manifolds around a fold and expresses W^u_q in coordinates
// (arclength along W^s_p, signed distance to it).
LocalGeometry local_geometry(const Manifolds& m, const Fold& f) {
  LocalGeometry g;
  constexpr int kSamples = 800;
  std::vector<V2> s;
  for (int i = 0; i <= kSamples; ++i) {
    const double tau = f.s_lo + (f.s_hi - f.s_lo) * i / kSamples;
    const auto p = m.s_samplers[f.p].at(tau);
    if (!p) continue;
    s.push_back(*p);
    g.s_tau.push_back(tau);
  }
  if (s.size() < 10) return g;
  std::vector<double> arc(s.size(), 0.0);
  for (std::size_t i = 1; i < s.size(); ++i) arc[i] = arc[i - 1] + norm(s[i] - s[i - 1]);

  for (int i = 0; i <= kSamples; ++i) {
    const double tau = f.tau_lo + (f.tau_hi - f.tau_lo) * i / kSamples;
    const auto u = m.u_samplers[f.q].at(tau);
    if (!u) continue;
    double dist = std::numeric_limits<double>::infinity();
    double xi = 0.0;
    std::size_t foot = 0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      const V2 d = s[k + 1] - s[k];
      const double len2 = dot(d, d);
      if (len2 == 0.0) continue;
      const double t = dot(*u - s[k], d) / len2;
      // Feet beyond the ends of the local piece are not projections.
      if ((k == 0 && t < 0.0) || (k + 2 == s.size() && t > 1.0)) continue;
      const double tc = std::clamp(t, 0.0, 1.0);
      const double dd = norm(*u - (s[k] + d * tc));
      if (dd < std::abs(dist)) {
        dist = cross(d, *u - s[k]) >= 0 ? dd : -dd;
        xi = arc[k] + tc * std::sqrt(len2);
        foot = k;
      }
    }
    if (!std::isfinite(dist)) continue;
    g.xi.push_back(xi);
    g.eta.push_back(dist);
    g.points.push_back(*u);
    g.u_tau.push_back(tau);
    g.foot.push_back(foot);
  }
  return g;
}

// eta = c0 + c1 (xi - center) + c2 (xi - center)^2, oriented so c2 >= 0: c0 > 0
// is a gap, c0 < 0 a fold crossing W^s_p twice.
struct Fit {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, residual = 0.0, window = 0.0, center = 0.0;
  std::vector<std::pair<double, double>> samples;
  V2 vertex{};
  double orient = 1.0;  // sign applied to the raw signed distance
  double gap = 0.0;     // oriented distance at the vertex, by direct minimization
  bool ok = false;
};

bool fit_window(const std::vector<double>& xi, const std::vector<double>& eta, double c, double w, Fit& out) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (std::abs(xi[i] - c) <= w) pts.push_back({xi[i] - c, eta[i]});
  }
  if (pts.size() < 12) return false;
  Eigen::MatrixXd A(pts.size(), 3);
  Eigen::VectorXd y(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double s = pts[i].first / w;  // scaled for conditioning
    A(i, 0) = 1.0;
    A(i, 1) = s;
    A(i, 2) = s * s;
    y[i] = pts[i].second;
  }
  const Eigen::Vector3d c3 = A.colPivHouseholderQr().solve(y);
  out.c0 = c3[0];
  out.c1 = c3[1] / w;
  out.c2 = c3[2] / (w * w);
  out.residual = std::sqrt((A * c3 - y).squaredNorm() / static_cast<double>(pts.size()));
  out.window = w;
  out.center = c;
  out.samples = std::move(pts);
  return true;
}

Fit quadratic_fit(const LocalGeometry& g) {
  Fit fit;
  if (g.xi.size() < 12) return fit;
  const auto [lo, hi] = std::minmax_element(g.xi.begin(), g.xi.end());
  Fit whole;
  if (!fit_window(g.xi, g.eta, 0.5 * (*lo + *hi), 0.5 * (*hi - *lo), whole)) return fit;
  const double orient = whole.c2 < 0.0 ? -1.0 : 1.0;
  std::vector<double> eta(g.eta);
  for (double& e : eta) e *= orient;

  const std::size_t imin = static_cast<std::size_t>(std::min_element(eta.begin(), eta.end()) - eta.begin());
  const double center = g.xi[imin];
  double window = std::min(center - *lo, *hi - center);
  if (!(window > 0.0)) return fit;

  Fit cur;
  bool have = false;
  for (int shrink = 0; shrink < 30; ++shrink) {
    Fit next;
    if (!fit_window(g.xi, eta, center, window, next)) break;
    cur = std::move(next);
    have = true;
    if (cur.residual <= 0.1 * std::abs(cur.c2) * window * window) break;
    window *= 0.5;
  }
  if (!have) return fit;
  // Re-center on the vertex of the parabola.
  for (int it = 0; it < 3 && cur.c2 > 0.0; ++it) {
    const double shift = -cur.c1 / (2.0 * cur.c2);
    if (std::abs(shift) > 0.5 * cur.window) break;
    Fit next;
    if (!fit_window(g.xi, eta, cur.center + shift, cur.window, next)) break;
    cur = std::move(next);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.xi.size(); ++i) {
    if (std::abs(g.xi[i] - cur.center) < best) {
      best = std::abs(g.xi[i] - cur.center);
      cur.vertex = g.points[i];
    }
  }
  cur.orient = orient;
  cur.ok = cur.c2 > 0.0;
  return cur;
}

// Signed distance from u to W^s_p. A bracketed search finds the foot roughly;
// Gauss-Newton on the linearizing coordinate then pins it down, since the
// parameter-space tolerance of the search is too coarse where W^s_p is long.
std::optional<double> distance_to_stable(const CurveSampler& sampler, const Linearization& stable, V2 u, double s_lo,
                                         double s_hi) {
  const auto sq = [&](double tau) {
    const auto p = sampler.at(tau);
    if (!p) return std::numeric_limits<double>::max();
    const V2 d = u - *p;
    return dot(d, d);
  };
  const auto [tau, d2] = boost::math::tools::brent_find_minima(sq, s_lo, s_hi, 52);
  if (!(d2 < std::numeric_limits<double>::max())) return std::nullopt;
  double t = sampler.t_of(tau);
  V2 foot{}, tangent{};
  for (int it = 0; it < 8; ++it) {
    const Jet j = stable.evaluate_jet(Complex(t));
    if (!is_finite(j.value) || !is_finite(j.derivative)) return std::nullopt;
    foot = {j.value.x.real(), j.value.y.real()};
    tangent = {j.derivative.x.real(), j.derivative.y.real()};
    const double len2 = dot(tangent, tangent);
    if (!(len2 > 0.0)) return std::nullopt;
    const double dt = dot(u - foot, tangent) / len2;
    t += dt;
    if (std::abs(dt) <= 1e-15 * (1.0 + std::abs(t))) break;
  }
  const Jet j = stable.evaluate_jet(Complex(t));
  foot = {j.value.x.real(), j.value.y.real()};
  tangent = {j.derivative.x.real(), j.derivative.y.real()};
  const double dist = norm(u - foot);
  if (dist * dist > 4.0 * d2 + 1e-12) return std::nullopt;  // Newton left the local branch
  return cross(tangent, u - foot) >= 0 ? dist : -dist;
}

// Oriented gap at the fold vertex: the extremum of the signed distance along
// W^u_q near the sampled vertex, each distance minimized along W^s_p. The
// sampled polyline resolves the gap only to the square of its spacing.
std::optional<std::pair<double, double>> vertex_gap(const Manifolds& m, const Fold& f, const LocalGeometry& g, const Fit& fit) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.eta.size(); ++i) {
    if (fit.orient * g.eta[i] < fit.orient * g.eta[best]) best = i;
  }
  if (best == 0 || best + 1 >= g.eta.size()) return std::nullopt;
  const std::size_t k = g.foot[best];
  const double s_lo = g.s_tau[k >= 3 ? k - 3 : 0];
  const double s_hi = g.s_tau[std::min(k + 4, g.s_tau.size() - 1)];
  bool failed = false;
  const auto objective = [&](double tau) {
    const auto u = m.u_samplers[f.q].at(tau);
    const auto d = u ? distance_to_stable(m.s_samplers[f.p], m.stable[f.p], *u, s_lo, s_hi) : std::nullopt;
    if (!d) {
      failed = true;
      return std::numeric_limits<double>::max();
    }
    return fit.orient * *d;
  };
  const auto [tau, gap] = boost::math::tools::brent_find_minima(objective, g.u_tau[best - 1], g.u_tau[best + 1], 52);
  if (failed) return std::nullopt;
  return std::pair{tau, gap};
}

}  // namespace

bool TangencyReport::quadratic_dominant(const TangencyConfig& config) const {
  return std::abs(c1) < config.linear_threshold && std::abs(c2) > config.quadratic_threshold &&
         residual <= 0.1 * std::abs(c2) * window * window;
}

TangencyReport find_tangency(double a, double b, const TangencyConfig& config) {
  if (!(config.sample_spacing > 0.0)) throw ValidationError("sample_spacing", "must be positive");
  const HenonParams params = HenonParams::make(a, b);
  if (!params.is_real()) throw ValidationError("a", "tangency search needs real parameters");
  const double step = config.rate_step > 0.0 ? config.rate_step : 1e-3 * std::max(1.0, std::abs(a));
  const HenonParams shifted = HenonParams::make(a + step, b);

  const Manifolds m0 = build_manifolds(params, config);
  const Manifolds m1 = build_manifolds(shifted, config);
  const std::vector<Fold> f0 = find_folds(m0, config.sample_spacing);
  const std::vector<Fold> f1 = find_folds(m1, config.sample_spacing);

  // Folds of different curves pile up at one place (each unstable manifold
  // accumulates on the other's folds). Their gaps close at a common rate, so
  // the rate is pooled per place and the folds ranked by gap alone.
  struct Candidate {
    Fold fold;
    Fit fit;
    double rate;
    int cluster = -1;
  };
  std::vector<Candidate> cands;
  const double match = 0.05 * params.filtration_radius();
  for (const Fold& f : f0) {
    const LocalGeometry g0 = local_geometry(m0, f);
    Fit fit = quadratic_fit(g0);
    if (!fit.ok || fit.residual > 0.1 * fit.c2 * fit.window * fit.window) continue;
    const auto gap0 = vertex_gap(m0, f, g0, fit);
    if (!gap0) continue;
    fit.gap = gap0->second;
    fit.center = gap0->first;
    const Fold* twin = nullptr;
    for (const Fold& o : f1) {
      if (o.p != f.p || o.q != f.q || norm(o.location - f.location) > match) continue;
      if (!twin || norm(o.location - f.location) < norm(twin->location - f.location)) twin = &o;
    }
    if (!twin) continue;
    const LocalGeometry g1 = local_geometry(m1, *twin);
    const Fit fit1 = quadratic_fit(g1);
    if (!fit1.ok) continue;
    const auto gap1 = vertex_gap(m1, *twin, g1, fit1);
    if (!gap1) continue;
    const double rate = (gap1->second - fit.gap) / step;
    if (rate == 0.0 || !std::isfinite(rate)) continue;
    cands.push_back({f, std::move(fit), rate});
  }
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (std::size_t c = 0; c < clusters.size() && cands[i].cluster < 0; ++c) {
      const Candidate& head = cands[clusters[c].front()];
      if (head.fold.p == cands[i].fold.p && norm(head.fit.vertex - cands[i].fit.vertex) <= match) {
        cands[i].cluster = static_cast<int>(c);
        clusters[c].push_back(i);
      }
    }
    if (cands[i].cluster < 0) {
      cands[i].cluster = static_cast<int>(clusters.size());
      clusters.push_back({i});
    }
  }
  std::vector<double> pooled(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    std::vector<double> rates;
    for (std::size_t i : clusters[c]) rates.push_back(cands[i].rate);
    std::nth_element(rates.begin(), rates.begin() + static_cast<long>(rates.size() / 2), rates.end());
    pooled[c] = rates[rates.size() / 2];
  }
  const Candidate* best = nullptr;
  double best_tangency = -std::numeric_limits<double>::infinity();
  for (const Candidate& c : cands) {
    const double tangency = a - c.fit.gap / pooled[static_cast<std::size_t>(c.cluster)];
    if (!(tangency < a)) continue;
    if (!best || tangency > best_tangency) {
      best = &c;
      best_tangency = tangency;
    }
  }
  if (!best) throw std::runtime_error("find_tangency: no fold approaching a tangency as a decreases");

  TangencyReport r;
  r.a = a;
  r.b = b;
  r.p = best->fold.p;
  r.q = best->fold.q;
  r.location = {best->fit.vertex.x, best->fit.vertex.y};
  r.c0 = best->fit.c0;
  r.c1 = best->fit.c1;
  r.c2 = best->fit.c2;
  r.residual = best->fit.residual;
  r.window = best->fit.window;
  r.estimated_tangency = best_tangency;
  r.samples = best->fit.samples;
  return r;
}

std::string to_text(const TangencyReport& r) {
  std::ostringstream out;
  out << "tangency_report\n"
      << "a " << hex(r.a) << "\n"
      << "b " << hex(r.b) << "\n"
      << "stable_fixed_point " << r.p << "\n"
      << "unstable_fixed_point " << r.q << "\n"
      << "same_point " << (r.p == r.q ? "true" : "false") << "\n"
      << "location " << hex(r.location.x.real()) << " " << hex(r.location.y.real()) << "\n"
      << "fit c0 " << hex(r.c0) << " c1 " << hex(r.c1) << " c2 " << hex(r.c2) << "\n"
      << "residual " << hex(r.residual) << "\n"
      << "window " << hex(r.window) << "\n"
      << "estimated_tangency_a " << hex(r.estimated_tangency) << "\n"
      << "quadratic_dominant " << (r.quadratic_dominant() ? "true" : "false") << "\n"
      << "samples " << r.samples.size() << "\n";
  for (const auto& [xi, eta] : r.samples) out << hex(xi) << " " << hex(eta) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Boundary scan

BoundaryScan boundary_scan(double b, double a_lo, double a_hi, const BoundaryScanConfig& config,
                           const Deadline& deadline) {
  if (!std::isfinite(b) || b == 0.0) throw ValidationError("b", "must be finite and nonzero");
  if (!(a_lo < a_hi)) throw ValidationError("a_bracket", "requires a_lo < a_hi");
  if (config.census_n < 1 || config.census_n > 10) throw ValidationError("census_n", "must be in [1, 10]");
  if (!(config.width > 0.0)) throw ValidationError("width", "must be positive");

  const auto verified = [&](double a) { return certify_horseshoe(a, b, config.certificate).verified; };
  const auto falsified = [&](double a) { return entropy_census(a, b, config.census_n, config.seed).falsified; };

  if (!verified(a_hi)) throw ValidationError("a_bracket", "certificate does not verify at the upper end");
  if (!falsified(a_lo)) throw ValidationError("a_bracket", "census does not falsify the full shift at the lower end");

  BoundaryScan scan;
  scan.b = b;
  scan.a_lo = a_lo;
  scan.a_hi = a_hi;
  // Parameters where neither predicate fires form a band inside the bracket.
  // Once one is met, each end is refined toward the band separately.
  std::optional<std::pair<double, double>> band;
  for (int step = 0; step < config.max_steps; ++step) {
    const double below = band ? band->first - scan.a_lo : scan.a_hi - scan.a_lo;
    const double above = band ? scan.a_hi - band->second : 0.0;
    if (std::max(below, above) <= config.width) break;
    if (deadline.expired()) {
      scan.partial = true;
      break;
    }
    const double mid = below >= above ? scan.a_lo + 0.5 * below : scan.a_hi - 0.5 * above;
    BisectionStep s{mid, verified(mid), falsified(mid)};
    scan.steps.push_back(s);
    if (s.verified && s.falsified) {
      throw std::runtime_error("boundary_scan: certificate and census disagree at a = " + hex(mid) +
                               "; refine the census or the box grid");
    }
    if (s.verified) {
      scan.a_hi = mid;
    } else if (s.falsified) {
      scan.a_lo = mid;
    } else {
      scan.stalled = true;
      band = band ? std::pair{std::min(band->first, mid), std::max(band->second, mid)} : std::pair{mid, mid};
    }
    if (band) {
      band->first = std::max(band->first, scan.a_lo);
      band->second = std::min(band->second, scan.a_hi);
      if (band->first > band->second) band.reset();
    }
  }
  if (band) scan.undecided = band;
  if (config.tangency) {
    if (deadline.expired()) {
      scan.partial = true;
    } else {
      scan.tangency = find_tangency(scan.a_hi, b, config.tangency_config);
    }
  }
  return scan;
}

std::string to_text(const BoundaryScan& s) {
  std::ostringstream out;
  out << "boundary_scan\n"
      << "b " << hex(s.b) << "\n"
      << "bracket " << hex(s.a_lo) << " " << hex(s.a_hi) << "\n"
      << "midpoint " << hex(0.5 * (s.a_lo + s.a_hi)) << "\n"
      << "stalled " << (s.stalled ? "true" : "false") << "\n";
  if (s.undecided) out << "undecided " << hex(s.undecided->first) << " " << hex(s.undecided->second) << "\n";
  out
      << "partial " << (s.partial ? "true" : "false") << "\n"
      << "steps " << s.steps.size() << "\n";
  for (const auto& st : s.steps) {
    out << hex(st.a) << " verified " << (st.verified ? "true" : "false") << " falsified "
        << (st.falsified ? "true" : "false") << "\n";
  }
  if (s.tangency) out << to_text(*s.tangency);
  return out.str();
}

}  // namespace henonlab
