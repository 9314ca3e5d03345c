#include "henonlab/saddles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include <Eigen/Dense>
#include <json.hpp>

#include "henonlab/errors.hpp"
#include "henonlab/parallel.hpp"

namespace henonlab {
namespace {

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

constexpr double kDedupTol = 1e-6;
constexpr double kHyperbolicMargin = 1e-6;

// Cyclic orbit system F_i = x_{i+1} + x_i^2 + b x_{i-1} - a, the x-recurrence
// of the Henon map with y_i = x_{i-1}. Entries are accumulated so n = 1, 2 work.
template <typename T>
void orbit_system(const Vec<T>& x, T a, T b, Vec<T>& F, Mat<T>* J) {
  const Eigen::Index n = x.size();
  F.resize(n);
  if (J) J->setZero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index ip = (i + 1) % n;
    const Eigen::Index im = (i + n - 1) % n;
    F[i] = x[ip] + x[i] * x[i] + b * x[im] - a;
    if (J) {
      (*J)(i, ip) += T(1);
      (*J)(i, i) += T(2) * x[i];
      (*J)(i, im) += b;
    }
  }
}

template <typename T>
double sup(const Vec<T>& v) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) m = std::max(m, static_cast<double>(std::abs(v[i])));
  return m;
}

template <typename T>
bool all_finite(const Vec<T>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(std::abs(v[i]))) return false;
  }
  return true;
}

// Damped Newton; steps longer than `max_step` are scaled down.
template <typename T>
bool newton(Vec<T>& x, T a, T b, int max_iter, double max_step) {
  Vec<T> F;
  Mat<T> J;
  for (int it = 0; it < max_iter; ++it) {
    orbit_system<T>(x, a, b, F, &J);
    Eigen::PartialPivLU<Mat<T>> lu(J);
    Vec<T> dx = lu.solve(F);
    if (!all_finite(dx)) return false;
    const double step = sup(dx);
    if (step > max_step) dx *= max_step / step;
    x -= dx;
    if (!all_finite(x)) return false;
    if (step <= 1e-14 * (1.0 + sup(x))) return true;
  }
  orbit_system<T>(x, a, b, F, nullptr);
  return sup(F) <= 1e-11 * (1.0 + sup(x) * sup(x));
}

struct Tracker {
  Complex a_start;
  Complex a_end;
  Complex b;
  double max_step;
};

// Follows one root of the orbit system as a moves on the segment
// a_start -> a_end. Euler predictor along the tangent, Newton corrector that
// must contract quickly, step size halved on rejection.
std::optional<Vec<Complex>> track(const Tracker& tr, Vec<Complex> x) {
  const Eigen::Index n = x.size();
  const Complex da = tr.a_end - tr.a_start;
  Vec<Complex> F;
  Mat<Complex> J;
  const Vec<Complex> ones = Vec<Complex>::Ones(n);
  double t = 0.0;
  double h = std::min(0.02, tr.max_step);
  int streak = 0;
  for (int steps = 0; steps < 200000 && t < 1.0; ++steps) {
    if (h < 1e-12) return std::nullopt;
    const double hs = std::min(h, 1.0 - t);
    orbit_system<Complex>(x, tr.a_start + t * da, tr.b, F, &J);
    Eigen::PartialPivLU<Mat<Complex>> lu(J);
    const Vec<Complex> tangent = lu.solve(ones * da);
    Vec<Complex> y = x + hs * tangent;
    const Complex a_next = tr.a_start + (t + hs) * da;
    const double scale = 1.0 + sup(x);

    bool ok = all_finite(y);
    double prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int it = 0; ok && it < 5; ++it) {
      orbit_system<Complex>(y, a_next, tr.b, F, &J);
      Eigen::PartialPivLU<Mat<Complex>> lu2(J);
      const Vec<Complex> dy = lu2.solve(F);
      const double s = sup(dy);
      if (!std::isfinite(s) || (it == 0 && s > 0.02 * scale) || (it > 0 && s > 0.3 * prev)) {
        ok = false;
        break;
      }
      y -= dy;
      prev = s;
      if (s <= 1e-11 * scale) {
        converged = true;
        break;
      }
    }
    if (!ok || !converged) {
      h *= 0.5;
      streak = 0;
      continue;
    }
    x = y;
    t += hs;
    if (++streak >= 3) {
      h = std::min(h * 2.0, tr.max_step);
      streak = 0;
    }
  }
  if (t < 1.0) return std::nullopt;
  if (!newton<Complex>(x, tr.a_end, tr.b, 30, 1e-3 * (1.0 + sup(x)))) return std::nullopt;
  return x;
}

// Smallest divisor d of n with x shifted by d equal to x.
int minimal_period(const Vec<Complex>& x) {
  const int n = static_cast<int>(x.size());
  for (int d = 1; d < n; ++d) {
    if (n % d != 0) continue;
    bool same = true;
    for (int i = 0; i < n && same; ++i) same = std::abs(x[(i + d) % n] - x[i]) <= kDedupTol;
    if (same) return d;
  }
  return n;
}

void add_unique(std::vector<Vec<Complex>>& roots, const Vec<Complex>& x) {
  for (const auto& r : roots) {
    if (sup(Vec<Complex>(r - x)) <= kDedupTol) return;
  }
  roots.push_back(x);
}

// Real parameters: roots whose imaginary parts are round-off are polished in
// real arithmetic so real points carry exactly real coordinates.
Vec<Complex> snap_real(const HenonParams& params, const Vec<Complex>& x) {
  if (!params.is_real()) return x;
  const double tol = 1e-8 * (1.0 + sup(x));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x[i].imag()) > tol) return x;
  }
  Vec<double> r = x.real();
  if (!newton<double>(r, params.a().real(), params.b().real(), 8, 1e-6)) return x;
  return r.cast<Complex>();
}

bool point_less(const SaddleRecord& p, const SaddleRecord& q) {
  const auto key = [](const SaddleRecord& r) {
    return std::array<double, 5>{static_cast<double>(r.period), r.location.x.real(), r.location.x.imag(),
                                 r.location.y.real(), r.location.y.imag()};
  };
  return key(p) < key(q);
}

PeriodicSearch assemble(const HenonParams& params, int n, const std::vector<Vec<Complex>>& roots) {
  PeriodicSearch out;
  out.expected = 1 << n;
  for (const auto& root : roots) {
    const Vec<Complex> x = snap_real(params, root);
    const Point2 location{x[0], x[n - 1]};
    out.points.push_back(analyze_periodic_point(params, location, minimal_period(x)));
  }
  std::sort(out.points.begin(), out.points.end(), point_less);

  std::vector<bool> assigned(out.points.size(), false);
  int next_id = 0;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (assigned[i]) continue;
    const int id = next_id++;
    Point2 p = out.points[i].location;
    for (int step = 0; step < out.points[i].period; ++step) {
      for (std::size_t j = i; j < out.points.size(); ++j) {
        if (!assigned[j] && sup_norm(out.points[j].location - p) <= kDedupTol * (1.0 + sup_norm(p))) {
          assigned[j] = true;
          out.points[j].orbit_id = id;
          break;
        }
      }
      p = henon(params, p);
    }
  }
  out.under_resolved = static_cast<int>(out.points.size()) < out.expected;
  return out;
}

PeriodicSearch search_complex(const HenonParams& params, int n, const SearchBudget& budget, std::uint64_t seed) {
  const Complex a = params.a();
  const Complex b = params.b();
  const std::size_t paths = std::size_t{1} << n;

  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(n)));
  std::uniform_real_distribution<double> angle(0.15 * std::numbers::pi, 0.85 * std::numbers::pi);
  const double rho = 16.0 * (1.0 + std::abs(b)) * (1.0 + std::abs(b)) + 4.0 * std::abs(a) + 100.0;
  const Complex a_start = std::polar(rho, angle(rng));
  const Complex root = std::sqrt(a_start);

  const auto run_paths = [&](const std::vector<std::size_t>& which, double max_step) {
    std::vector<std::optional<Vec<Complex>>> found(which.size());
    parallel_for(which.size(), [&](std::size_t k) {
      const std::size_t pattern = which[k];
      Vec<Complex> x(n);
      for (int i = 0; i < n; ++i) x[i] = ((pattern >> i) & 1u) ? -root : root;
      if (!newton<Complex>(x, a_start, b, 40, std::abs(root))) return;
      found[k] = track({a_start, a, b, max_step}, x);
    });
    return found;
  };

  std::vector<std::size_t> all(paths);
  for (std::size_t i = 0; i < paths; ++i) all[i] = i;
  std::vector<std::optional<Vec<Complex>>> ends = run_paths(all, 0.05);

  // Paths that failed or landed on an already-claimed root are re-run with a
  // shorter maximal step before falling back to Newton starts.
  std::vector<Vec<Complex>> roots;
  std::vector<std::size_t> retry;
  for (std::size_t i = 0; i < paths; ++i) {
    const std::size_t before = roots.size();
    if (ends[i]) add_unique(roots, *ends[i]);
    if (roots.size() == before) retry.push_back(i);
  }
  if (!retry.empty() && roots.size() < paths) {
    const auto again = run_paths(retry, 0.005);
    for (const auto& e : again) {
      if (e) add_unique(roots, *e);
    }
  }

  if (roots.size() < paths) {
    const double radius = params.filtration_radius();
    const int starts = budget.starts > 0 ? budget.starts : 20 * static_cast<int>(paths);
    std::vector<std::optional<Vec<Complex>>> extra(static_cast<std::size_t>(starts));
    parallel_for(extra.size(), [&](std::size_t k) {
      std::mt19937_64 local(mix_seed(seed ^ 0x5deece66dULL, k));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Vec<Complex> x(n);
      for (int i = 0; i < n; ++i) {
        // Chebyshev-like radial law, denser towards the rim of the disk.
        const double r = radius * std::sin(0.5 * std::numbers::pi * u(local));
        x[i] = std::polar(r, 2.0 * std::numbers::pi * u(local));
      }
      if (newton<Complex>(x, a, b, budget.newton_iterations, 0.5 * radius)) extra[k] = x;
    });
    for (const auto& e : extra) {
      if (e && roots.size() < paths) add_unique(roots, *e);
    }
  }
  return assemble(params, n, roots);
}

PeriodicSearch search_real(const HenonParams& params, int n, const SearchBudget& budget, std::uint64_t seed) {
  if (!params.is_real()) throw ValidationError("mode", "real_grid search requires real parameters");
  const double a = params.a().real();
  const double b = params.b().real();
  const double radius = params.filtration_radius();
  const std::size_t paths = std::size_t{1} << n;
  const int starts = budget.starts > 0 ? budget.starts : 20 * static_cast<int>(paths);
  const double root = std::sqrt(std::max(a, 0.0));

  std::vector<std::optional<Vec<double>>> found(static_cast<std::size_t>(starts));
  parallel_for(found.size(), [&](std::size_t k) {
    Vec<double> x(n);
    if (k < paths) {
      for (int i = 0; i < n; ++i) x[i] = ((k >> i) & 1u) ? -root : root;
    } else {
      std::mt19937_64 local(mix_seed(seed, k));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int i = 0; i < n; ++i) x[i] = -radius * std::cos(std::numbers::pi * u(local));
    }
    if (newton<double>(x, a, b, budget.newton_iterations, 0.5 * radius)) found[k] = x;
  });
  std::vector<Vec<Complex>> roots;
  for (const auto& f : found) {
    if (f && sup(*f) <= 2.0 * radius) add_unique(roots, f->cast<Complex>());
  }
  return assemble(params, n, roots);
}

}  // namespace

const char* to_string(PointKind kind) {
  switch (kind) {
    case PointKind::saddle:
      return "saddle";
    case PointKind::attracting:
      return "attracting";
    case PointKind::repelling:
      return "repelling";
    case PointKind::non_hyperbolic:
      return "non_hyperbolic";
  }
  return "unknown";
}

SaddleRecord analyze_periodic_point(const HenonParams& params, const Point2& location, int period) {
  if (period < 1) throw ValidationError("period", "must be at least 1");
  Mat2 d = Mat2::identity();
  Point2 p = location;
  for (int i = 0; i < period; ++i) {
    d = henon_jacobian(params, p) * d;
    p = henon(params, p);
  }
  SaddleRecord r;
  r.location = location;
  r.period = period;
  r.residual = sup_norm(p - location);
  const auto ev = eigenvalues(d, std::pow(params.b(), period));
  r.lambda_u = ev[0];
  r.lambda_s = ev[1];
  r.unstable_vector = eigenvector(d, ev[0]);
  const double mu = std::abs(ev[0]);
  const double ms = std::abs(ev[1]);
  if (mu > 1.0 + kHyperbolicMargin && ms < 1.0 - kHyperbolicMargin) {
    r.kind = PointKind::saddle;
  } else if (mu < 1.0 - kHyperbolicMargin) {
    r.kind = PointKind::attracting;
  } else if (ms > 1.0 + kHyperbolicMargin) {
    r.kind = PointKind::repelling;
  } else {
    r.kind = PointKind::non_hyperbolic;
  }
  return r;
}

std::string to_json(const SaddleRecord& r) {
  const auto c = [](Complex z) { return nlohmann::json::array({z.real(), z.imag()}); };
  nlohmann::json j;
  j["period"] = r.period;
  j["orbit_id"] = r.orbit_id;
  j["kind"] = to_string(r.kind);
  j["location"] = {{"x", c(r.location.x)}, {"y", c(r.location.y)}};
  j["lambda_u"] = c(r.lambda_u);
  j["lambda_s"] = c(r.lambda_s);
  j["unstable_vector"] = {c(r.unstable_vector.x), c(r.unstable_vector.y)};
  j["residual"] = r.residual;
  return j.dump();
}

PeriodicSearch find_periodic(const HenonParams& params, int n, SearchMode mode, const SearchBudget& budget,
                             std::uint64_t seed) {
  if (n < 1 || n > 12) throw ValidationError("n", "period must be in [1, 12]");
  if (budget.newton_iterations < 1) throw ValidationError("newton_iterations", "must be at least 1");
  return mode == SearchMode::complex_grid ? search_complex(params, n, budget, seed)
                                          : search_real(params, n, budget, seed);
}

std::vector<SaddleRecord> fixed_point_records(const HenonParams& params) {
  std::vector<SaddleRecord> out;
  for (const Point2& p : fixed_points(params)) out.push_back(analyze_periodic_point(params, p, 1));
  out[1].orbit_id = 1;
  return out;
}

SaddleRecord default_saddle(const HenonParams& params) {
  std::optional<SaddleRecord> best;
  for (const auto& r : fixed_point_records(params)) {
    if (r.kind != PointKind::saddle) continue;
    if (!best || std::abs(r.lambda_u) > std::abs(best->lambda_u)) best = r;
  }
  if (!best) throw ValidationError("saddle", "no fixed point of this map is a saddle");
  return *best;
}

// ---------------------------------------------------------------------------
// Linearization

Point2 Linearization::chart(const Point2& p) const {
  return stable_ ? Point2{chart_b_ * p.y, chart_b_ * p.x} : p;
}

int Linearization::depth_for(Complex z) const {
  const double m = std::abs(z);
  if (m <= 1.0) return depth_;
  return depth_ + static_cast<int>(std::ceil(std::log(m) / std::log(std::abs(saddle_.lambda_u))));
}

Jet Linearization::run(Complex z, int k, bool with_derivative) const {
  const int n = saddle_.period;
  const Complex lambda = saddle_.lambda_u;
  const Complex b = params_.b();
  // lambda^-k z, formed as (z lambda^-(k - depth)) lambda^-depth so that
  // neither factor under- or overflows for large z.
  const int extra = std::max(0, k - depth_);
  const Complex inner = z * std::pow(lambda, -extra);
  const Complex scale = std::pow(lambda, -(k - extra));
  Point2 w = Complex(inner * scale) * saddle_.unstable_vector;
  Point2 dw = Complex(std::pow(lambda, -k)) * saddle_.unstable_vector;
  const long total = static_cast<long>(n) * k;
  for (long step = 0; step < total; ++step) {
    const Complex qx = orbit_[static_cast<std::size_t>(step % n)].x;
    const Complex wx = w.x;
    if (with_derivative) dw = {-2.0 * (qx + wx) * dw.x - b * dw.y, dw.x};
    w = {-2.0 * qx * wx - wx * wx - b * w.y, wx};
  }
  return {orbit_[0] + w, dw};
}

Point2 Linearization::evaluate_at_depth(Complex z, int k) const {
  if (k < 0) throw ValidationError("k", "depth must be nonnegative");
  return chart(run(z, k, false).value);
}

Point2 Linearization::evaluate(Complex z) const { return chart(run(z, depth_for(z), false).value); }

Jet Linearization::evaluate_jet(Complex z) const {
  const Jet j = run(z, depth_for(z), true);
  return {chart(j.value), chart(j.derivative)};
}

Linearization::Trace Linearization::trace(Complex z) const {
  const int n = saddle_.period;
  const int k = depth_for(z);
  const Complex lambda = saddle_.lambda_u;
  const Complex b = params_.b();
  const int extra = std::max(0, k - depth_);
  Point2 w = Complex(z * std::pow(lambda, -extra) * std::pow(lambda, -(k - extra))) * saddle_.unstable_vector;
  const long total = static_cast<long>(n) * k;
  for (long step = 0; step < total; ++step) {
    const Point2& q = orbit_[static_cast<std::size_t>(step % n)];
    const Point2 abs_point = q + w;
    if (escape_certified(params_, abs_point, Direction::forward)) {
      return {abs_point, static_cast<int>(total - step), true};
    }
    const Complex wx = w.x;
    w = {-2.0 * q.x * wx - wx * wx - b * w.y, wx};
  }
  const Point2 end = orbit_[0] + w;
  return {end, 0, escape_certified(params_, end, Direction::forward)};
}

Linearization linearize(const HenonParams& params, const SaddleRecord& saddle, int k_max) {
  if (k_max < 0) throw ValidationError("k_max", "must be nonnegative");
  if (saddle.kind != PointKind::saddle) throw ValidationError("saddle", "periodic point is not a saddle");
  if (!(saddle.residual <= 1e-9)) throw ValidationError("saddle", "residual exceeds 1e-9");

  if (k_max == 0) {
    // Successive approximants differ by about |lambda_u|^-k; allow twice the
    // steps that takes to fall below 1e-10.
    const double rate = std::log(std::abs(saddle.lambda_u));
    k_max = static_cast<int>(std::clamp(std::ceil(2.0 * std::log(1e10) / rate), 60.0, 2000.0));
  }

  Linearization lin(params, saddle);
  Point2 p = saddle.location;
  for (int i = 0; i < saddle.period; ++i) {
    lin.orbit_.push_back(p);
    p = henon(params, p);
  }

  constexpr int kSamples = 64;
  std::vector<Complex> circle(kSamples);
  for (int j = 0; j < kSamples; ++j) circle[j] = std::polar(1.0, 2.0 * std::numbers::pi * (j + 0.5) / kSamples);

  std::vector<Point2> prev(kSamples);
  for (int j = 0; j < kSamples; ++j) prev[j] = saddle.location + circle[j] * saddle.unstable_vector;
  double best = std::numeric_limits<double>::infinity();
  int depth = 0;
  for (int k = 1; k <= k_max; ++k) {
    double diff = 0.0;
    for (int j = 0; j < kSamples; ++j) {
      const Point2 cur = lin.run(circle[j], k, false).value;
      const double d = is_finite(cur) ? sup_norm(cur - prev[j]) : std::numeric_limits<double>::infinity();
      diff = std::max(diff, d);
      prev[j] = cur;
    }
    best = std::min(best, diff);
    if (diff < 1e-10) {
      depth = k;
      break;
    }
  }
  if (depth == 0) throw LinearizationError("linearization did not converge within k_max", best);
  lin.depth_ = depth;

  // Defect of the functional equation: f^n applied directly to phi(z) against
  // phi(lambda z) at the same truncation depth.
  double defect = 0.0;
  for (const Complex z : circle) {
    Point2 lhs = lin.run(z, depth, false).value;
    for (int i = 0; i < saddle.period; ++i) lhs = henon(params, lhs);
    const Point2 rhs = lin.run(saddle.lambda_u * z, depth, false).value;
    defect = std::max(defect, sup_norm(lhs - rhs));
  }
  lin.defect_ = defect;
  return lin;
}

Linearization stable_linearization(const HenonParams& params, const SaddleRecord& saddle, int k_max) {
  const HenonParams g = inverse_conjugate(params);
  const SaddleRecord mirrored = analyze_periodic_point(g, to_inverse_chart(params, saddle.location), saddle.period);
  Linearization lin = linearize(g, mirrored, k_max);
  lin.stable_ = true;
  lin.chart_b_ = params.b();
  return lin;
}

}  // namespace henonlab
