#include "henonlab/slices.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "henonlab/errors.hpp"

namespace henonlab {
namespace {

using nlohmann::json;

// Beyond this modulus the Green tail bound is below 1e-30.
constexpr double kFarRadius = 1e20;

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

// Forward orbit of phi(z) with its z-derivative. The first n * k steps run in
// displacement form around the saddle orbit (as in Linearization), later
// steps in absolute coordinates.
struct Walk {
  bool escaped = false;
  bool finite = true;
  int phi_steps = 0;  // position of phi(z) along the walk
  int steps = 0;      // steps taken to `point`
  Point2 point;
  Point2 derivative;
};

class Walker {
 public:
  Walker(const HenonParams& params, const Linearization& lin) : params_(params), lin_(lin) {}

  // Walks until escape is certified and |x| > kFarRadius, or until `depth`
  // steps past phi(z) without certificate. With `fixed_steps` >= 0 the walk
  // instead stops after exactly that many steps (for derivatives at fixed depth).
  Walk run(Complex z, int k, int depth, int fixed_steps = -1) const {
    const auto& orbit = lin_.orbit();
    const SaddleRecord& s = lin_.saddle();
    const int n = static_cast<int>(orbit.size());
    const Complex b = params_.b();
    const int extra = std::max(0, k - lin_.depth());
    Walk out;
    out.phi_steps = n * k;
    if (z == Complex{}) {
      // phi(0) is the saddle itself, a periodic point; iterating it in floating
      // point would only measure round-off.
      out.point = orbit.front();
      out.derivative = std::pow(s.lambda_u, -k) * s.unstable_vector;
      out.steps = fixed_steps >= 0 ? fixed_steps : out.phi_steps + depth;
      return out;
    }
    Point2 w = Complex(z * std::pow(s.lambda_u, -extra) * std::pow(s.lambda_u, -(k - extra))) * s.unstable_vector;
    Point2 dw = std::pow(s.lambda_u, -k) * s.unstable_vector;
    const bool fixed = fixed_steps >= 0;
    const int limit = fixed ? fixed_steps : out.phi_steps + depth;

    int step = 0;
    Point2 p;
    for (; step < std::min(limit, out.phi_steps); ++step) {
      const Point2& q = orbit[static_cast<std::size_t>(step % n)];
      if (!fixed && !out.escaped && escape_certified(params_, q + w, Direction::forward)) {
        out.escaped = true;
        break;
      }
      const Complex wx = w.x;
      dw = {-2.0 * (q.x + wx) * dw.x - b * dw.y, dw.x};
      w = {-2.0 * q.x * wx - wx * wx - b * w.y, wx};
    }
    p = orbit[static_cast<std::size_t>(step % n)] + w;
    Point2 dp = dw;
    for (;;) {
      if (!fixed && !out.escaped && escape_certified(params_, p, Direction::forward)) out.escaped = true;
      if (!fixed && out.escaped && std::abs(p.x) > kFarRadius) break;
      if (step >= limit && !(out.escaped && !fixed)) break;
      if (!is_finite(p) || !is_finite(dp)) {
        out.finite = false;
        break;
      }
      dp = {-2.0 * p.x * dp.x - b * dp.y, dp.x};
      p = henon(params_, p);
      ++step;
    }
    out.steps = step;
    out.point = p;
    out.derivative = dp;
    out.finite = out.finite && is_finite(p) && is_finite(dp);
    return out;
  }

 private:
  const HenonParams& params_;
  const Linearization& lin_;
};

// g = G+(phi(z)) = 2^(phi_steps - steps) G+(point), with G+(point) = log|x|
// up to a negligible tail since |x| > kFarRadius.
GreenJet green_from_walk(const Walk& w) {
  GreenJet out;
  if (!w.escaped || !w.finite) return out;
  const double mx = std::abs(w.point.x);
  const int shift = w.phi_steps - w.steps;
  out.escaped = true;
  out.g = std::ldexp(std::log(mx), shift);
  out.gradient_norm = std::ldexp(std::abs(w.derivative.x) / mx, shift);
  return out;
}

json provenance_base(const HenonParams& params, const Linearization& lin) {
  const SaddleRecord& s = lin.saddle();
  json j;
  j["a"] = complex_json(params.a());
  j["b"] = complex_json(params.b());
  j["saddle"] = {{"x", complex_json(s.location.x)},
                 {"y", complex_json(s.location.y)},
                 {"period", s.period},
                 {"lambda_u", complex_json(s.lambda_u)}};
  j["linearization_depth"] = lin.depth();
  j["stable_chart"] = lin.stable();
  return j;
}

}  // namespace

void Window::validate() const {
  if (!(std::isfinite(x0) && std::isfinite(x1) && std::isfinite(y0) && std::isfinite(y1))) {
    throw ValidationError("window", "bounds must be finite");
  }
  if (!(x1 > x0) || !(y1 > y0)) throw ValidationError("window", "window must be nonempty");
}

Complex SliceImage::center(int col, int row) const {
  const double hx = window.width() / width;
  const double hy = window.height() / height;
  return {window.x0 + (col + 0.5) * hx, window.y1 - (row + 0.5) * hy};
}

double SliceImage::cell_size() const { return std::max(window.width() / width, window.height() / height); }

bool SliceImage::bounded_like(int col, int row) const {
  const CellStatus s = status[index(col, row)];
  return s == CellStatus::bounded || s == CellStatus::boundary;
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::unstably_connected_at_resolution:
      return "unstably_connected_at_resolution";
    case Verdict::unstably_disconnected:
      return "unstably_disconnected";
    case Verdict::undecided:
      return "undecided";
  }
  return "undecided";
}

Window default_window(const Linearization& lin) {
  const double half = std::clamp(2.0 * std::abs(lin.saddle().lambda_u), 4.0, 32.0);
  return {-half, -half, half, half};
}

GreenJet slice_green(const HenonParams& params, const Linearization& lin, Complex z, int depth) {
  const Walker walker(params, lin);
  return green_from_walk(walker.run(z, lin.depth_for(z), depth));
}

SliceImage render_slice(const HenonParams& params, const Linearization& lin, const Window& window,
                        const RenderConfig& config, const Deadline& deadline) {
  window.validate();
  if (config.width < 1 || config.width > 16384) throw ValidationError("width", "must be in [1, 16384]");
  if (config.height < 1 || config.height > 16384) throw ValidationError("height", "must be in [1, 16384]");
  if (config.depth < 1 || config.depth > 100000) throw ValidationError("depth", "must be in [1, 100000]");
  if (!(config.boundary_factor >= 0.0)) throw ValidationError("boundary_factor", "must be nonnegative");
  if (!(lin.defect() <= config.max_defect)) {
    throw ValidationError("linearization", "functional-equation defect " + std::to_string(lin.defect()) +
                                               " exceeds the rendering threshold");
  }

  SliceImage img;
  img.width = config.width;
  img.height = config.height;
  img.window = window;
  const std::size_t cells = static_cast<std::size_t>(img.width) * img.height;
  img.rate.assign(cells, 0.0f);
  img.status.assign(cells, CellStatus::undecided);
  const double threshold = config.boundary_factor * img.cell_size();
  // g o phi is homogeneous of degree alpha under z -> lambda_u z, since
  // g(lambda_u z) = 2^n g(z). Near K+ then g ~ d^alpha and g / |grad g| ~ d / alpha.
  const double alpha = std::min(1.0, lin.saddle().period * std::log(2.0) / std::log(std::abs(lin.saddle().lambda_u)));
  const Walker walker(params, lin);

  std::vector<char> done(static_cast<std::size_t>(img.height), 0);
  parallel_for(static_cast<std::size_t>(img.height), [&](std::size_t r) {
    if (deadline.expired()) return;
    const int row = static_cast<int>(r);
    for (int col = 0; col < img.width; ++col) {
      const Complex z = img.center(col, row);
      const Walk w = walker.run(z, lin.depth_for(z), config.depth);
      const std::size_t i = img.index(col, row);
      if (!w.finite) continue;
      if (!w.escaped) {
        img.status[i] = CellStatus::bounded;
        continue;
      }
      const GreenJet gj = green_from_walk(w);
      const float rate = static_cast<float>(std::min(gj.g, static_cast<double>(std::numeric_limits<float>::max())));
      img.rate[i] = std::max(rate, std::numeric_limits<float>::denorm_min());
      const double distance = alpha * gj.g / gj.gradient_norm;
      img.status[i] = distance < threshold ? CellStatus::boundary : CellStatus::escaped;
    }
    done[r] = 1;
  });
  img.partial = std::count(done.begin(), done.end(), 0) > 0;

  json prov = provenance_base(params, lin);
  prov["kind"] = "slice";
  prov["window"] = {window.x0, window.y0, window.x1, window.y1};
  prov["width"] = img.width;
  prov["height"] = img.height;
  prov["depth"] = config.depth;
  prov["boundary_factor"] = config.boundary_factor;
  prov["partial"] = img.partial;
  img.provenance = prov.dump();
  return img;
}

ConnectivityVerdict detect_compact_components(const SliceImage& img) {
  ConnectivityVerdict v;
  v.method = "compact_components";
  v.window = img.window;
  v.width = img.width;
  v.height = img.height;
  const json prov = json::parse(img.provenance, nullptr, false);
  if (prov.is_object() && prov.contains("depth")) v.depth = prov["depth"].get<int>();

  const std::size_t cells = static_cast<std::size_t>(img.width) * img.height;
  std::size_t bounded = 0;
  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) bounded += img.bounded_like(col, row) ? 1 : 0;
  }
  // The saddle at z = 0 lies in K+, so an image without bounded cells has not
  // resolved the slice at all.
  if (img.partial || bounded == cells || bounded == 0) {
    v.verdict = Verdict::undecided;
    return v;
  }

  std::vector<int> label(cells, -1);
  std::vector<std::pair<int, int>> stack;
  std::optional<ComponentBox> best;
  int next = 0;
  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) {
      if (!img.bounded_like(col, row) || label[img.index(col, row)] >= 0) continue;
      ComponentBox box{col, row, col, row, {}, 0};
      bool touches = false;
      label[img.index(col, row)] = next;
      stack.assign(1, {col, row});
      while (!stack.empty()) {
        const auto [c, r] = stack.back();
        stack.pop_back();
        ++box.cells;
        box.col0 = std::min(box.col0, c);
        box.col1 = std::max(box.col1, c);
        box.row0 = std::min(box.row0, r);
        box.row1 = std::max(box.row1, r);
        touches = touches || c == 0 || r == 0 || c == img.width - 1 || r == img.height - 1;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int cc = c + dc;
            const int rr = r + dr;
            if (cc < 0 || rr < 0 || cc >= img.width || rr >= img.height) continue;
            if (!img.bounded_like(cc, rr) || label[img.index(cc, rr)] >= 0) continue;
            label[img.index(cc, rr)] = next;
            stack.push_back({cc, rr});
          }
        }
      }
      ++next;
      if (!touches && (!best || box.cells > best->cells)) best = box;
    }
  }
  if (!best) {
    v.verdict = Verdict::unstably_connected_at_resolution;
    return v;
  }
  const double hx = img.window.width() / img.width;
  const double hy = img.window.height() / img.height;
  best->window = {img.window.x0 + best->col0 * hx, img.window.y1 - (best->row1 + 1) * hy,
                  img.window.x0 + (best->col1 + 1) * hx, img.window.y1 - best->row0 * hy};
  v.verdict = Verdict::unstably_disconnected;
  v.component = best;
  return v;
}

std::vector<CriticalPointRecord> find_unstable_critical_points(const HenonParams& params, const Linearization& lin,
                                                               const Window& window,
                                                               const CriticalSearchConfig& config) {
  window.validate();
  if (config.width < 3 || config.width > 16384) throw ValidationError("width", "must be in [3, 16384]");
  if (config.height < 3 || config.height > 16384) throw ValidationError("height", "must be in [3, 16384]");
  if (config.depth < 1 || config.depth > 100000) throw ValidationError("depth", "must be in [1, 100000]");

  const int W = config.width;
  const int H = config.height;
  const double hx = window.width() / W;
  const double hy = window.height() / H;
  const auto center = [&](int col, int row) { return Complex(window.x0 + (col + 0.5) * hx, window.y1 - (row + 0.5) * hy); };
  const auto idx = [&](int col, int row) { return static_cast<std::size_t>(row) * W + col; };
  const Walker walker(params, lin);

  std::vector<double> g(static_cast<std::size_t>(W) * H, 0.0);
  parallel_for(static_cast<std::size_t>(H), [&](std::size_t r) {
    const int row = static_cast<int>(r);
    for (int col = 0; col < W; ++col) {
      const Complex z = center(col, row);
      g[idx(col, row)] = green_from_walk(walker.run(z, lin.depth_for(z), config.depth)).g;
    }
  });

  // Central-difference gradient where g and its four neighbours are positive.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> grad(g.size(), nan);
  for (int row = 1; row + 1 < H; ++row) {
    for (int col = 1; col + 1 < W; ++col) {
      const double c = g[idx(col, row)];
      const double l = g[idx(col - 1, row)], rt = g[idx(col + 1, row)];
      const double up = g[idx(col, row - 1)], dn = g[idx(col, row + 1)];
      if (c <= config.green_threshold || l <= 0 || rt <= 0 || up <= 0 || dn <= 0) continue;
      grad[idx(col, row)] = std::hypot((rt - l) / (2 * hx), (up - dn) / (2 * hy));
    }
  }

  std::vector<std::pair<int, int>> candidates;
  for (int row = 1; row + 1 < H; ++row) {
    for (int col = 1; col + 1 < W; ++col) {
      const double c = grad[idx(col, row)];
      if (std::isnan(c)) continue;
      bool minimum = true;
      for (int dr = -1; dr <= 1 && minimum; ++dr) {
        for (int dc = -1; dc <= 1 && minimum; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const double o = grad[idx(col + dc, row + dr)];
          minimum = !std::isnan(o) && c <= o;
        }
      }
      if (minimum) candidates.push_back({col, row});
    }
  }

  const double cell = std::max(hx, hy);
  std::vector<std::optional<CriticalPointRecord>> refined(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t ci) {
    const Complex z0 = center(candidates[ci].first, candidates[ci].second);
    const int k = lin.depth_for(z0);
    const Walk w0 = walker.run(z0, k, config.depth);
    if (!w0.escaped || !w0.finite) return;
    const int steps = w0.steps;
    // h'(z) at frozen truncation: holomorphic in z, |h'| = |grad g|.
    const auto hprime = [&](Complex z, bool& ok) {
      const Walk w = walker.run(z, k, 0, steps);
      ok = w.finite && w.point.x != Complex{};
      return ok ? Complex(std::ldexp(1.0, w.phi_steps - w.steps)) * w.derivative.x / w.point.x : Complex{};
    };
    Complex z = z0;
    bool ok = true;
    bool converged = false;
    for (int it = 0; it < 40; ++it) {
      const Complex d1 = hprime(z, ok);
      if (!ok) return;
      const double eps = 1e-6 * cell;
      bool ok1 = true, ok2 = true;
      const Complex d2 = (hprime(z + eps, ok1) - hprime(z - eps, ok2)) / (2.0 * eps);
      if (!ok1 || !ok2 || d2 == Complex{}) return;
      Complex dz = -d1 / d2;
      if (std::abs(dz) > cell) dz *= cell / std::abs(dz);
      z += dz;
      if (std::abs(z - z0) > 3.0 * cell) return;
      if (std::abs(dz) <= 1e-13 * (1.0 + std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) return;
    const GreenJet gj = green_from_walk(walker.run(z, lin.depth_for(z), config.depth));
    // Newton can slide into K+, where the truncated h' also vanishes; such
    // points are not critical points of g.
    if (!gj.escaped || !(gj.gradient_norm < config.gradient_threshold) || !(gj.g > config.green_threshold)) return;
    CriticalPointRecord rec;
    rec.z = z;
    rec.green_value = gj.g;
    rec.gradient_norm = gj.gradient_norm;
    const bool interior = z.real() > window.x0 + cell && z.real() < window.x1 - cell && z.imag() > window.y0 + cell &&
                          z.imag() < window.y1 - cell;
    rec.certified = interior;
    refined[ci] = rec;
  });

  std::vector<CriticalPointRecord> out;
  for (const auto& r : refined) {
    if (!r) continue;
    const bool dup = std::any_of(out.begin(), out.end(),
                                 [&](const CriticalPointRecord& o) { return std::abs(o.z - r->z) < 1e-3 * cell; });
    if (!dup) out.push_back(*r);
  }
  std::sort(out.begin(), out.end(), [](const CriticalPointRecord& p, const CriticalPointRecord& q) {
    return std::pair(p.z.real(), p.z.imag()) < std::pair(q.z.real(), q.z.imag());
  });
  return out;
}

ConnectivityVerdict critical_point_verdict(const std::vector<CriticalPointRecord>& points, const Window& window,
                                           const CriticalSearchConfig& config) {
  ConnectivityVerdict v;
  v.method = "critical_points";
  v.window = window;
  v.width = config.width;
  v.height = config.height;
  v.depth = config.depth;
  const CriticalPointRecord* best = nullptr;
  for (const auto& p : points) {
    if (p.certified && (!best || p.green_value > best->green_value)) best = &p;
  }
  if (best) {
    v.verdict = Verdict::unstably_disconnected;
    v.critical_point = *best;
  } else {
    v.verdict = points.empty() ? Verdict::unstably_connected_at_resolution : Verdict::undecided;
  }
  return v;
}

LyapunovPair estimate_lambda(const HenonParams& params, const MeasureSample2D& sample) {
  (void)params;
  if (sample.records.empty()) throw ValidationError("sample", "sample must be nonempty");
  struct Orbit {
    double weight = 0.0;
    double plus = 0.0;
    double minus = 0.0;
  };
  std::map<int, Orbit> orbits;
  for (const SaddleRecord& r : sample.records) {
    Orbit& o = orbits[r.orbit_id];
    o.weight += 1.0;
    o.plus = std::log(std::abs(r.lambda_u)) / r.period;
    o.minus = std::log(std::abs(r.lambda_s)) / r.period;
  }
  const auto estimate = [&](double Orbit::*field) {
    double total = 0.0, sum = 0.0;
    for (const auto& [id, o] : orbits) {
      total += o.weight;
      sum += o.weight * (o.*field);
    }
    ExponentEstimate e;
    e.method = ExponentMethod::periodic_average;
    e.value = sum / total;
    const double count = static_cast<double>(orbits.size());
    if (count > 1) {
      double var = 0.0;
      for (const auto& [id, o] : orbits) var += o.weight * o.weight * (o.*field - e.value) * (o.*field - e.value);
      e.std_error = std::sqrt(var * count / (count - 1.0)) / total;
    }
    return e;
  };
  LyapunovPair out;
  out.plus = estimate(&Orbit::plus);
  out.minus = estimate(&Orbit::minus);
  out.orbits = static_cast<int>(orbits.size());
  return out;
}

ConnectivityReport unstable_connectivity(const HenonParams& params, const ConnectivityConfig& config,
                                         const Deadline& deadline) {
  ConnectivityReport report;
  report.saddle = default_saddle(params);
  const Linearization lin = linearize(params, report.saddle);
  const Window window = config.window.value_or(default_window(lin));
  const SliceImage img = render_slice(params, lin, window, config.render, deadline);
  if (img.partial || deadline.expired()) {
    report.partial = true;
    report.components.window = report.critical.window = window;
    return report;
  }
  report.components = detect_compact_components(img);
  report.critical_points = find_unstable_critical_points(params, lin, window, config.critical);
  report.critical = critical_point_verdict(report.critical_points, window, config.critical);
  report.combined =
      report.components.verdict == report.critical.verdict ? report.components.verdict : Verdict::undecided;
  return report;
}

ConnectivityReport stable_connectivity(const HenonParams& params, const ConnectivityConfig& config,
                                       const Deadline& deadline) {
  return unstable_connectivity(inverse_conjugate(params), config, deadline);
}

std::string to_json(const CriticalPointRecord& r) {
  json j;
  j["z"] = complex_json(r.z);
  j["green_value"] = r.green_value;
  j["gradient_norm"] = r.gradient_norm;
  j["certified"] = r.certified;
  return j.dump();
}

std::string to_json(const ConnectivityVerdict& v) {
  json j;
  j["verdict"] = to_string(v.verdict);
  j["method"] = v.method;
  j["window"] = {v.window.x0, v.window.y0, v.window.x1, v.window.y1};
  j["resolution"] = {v.width, v.height};
  j["depth"] = v.depth;
  if (v.component) {
    const ComponentBox& c = *v.component;
    j["component"] = {{"pixels", {c.col0, c.row0, c.col1, c.row1}},
                      {"window", {c.window.x0, c.window.y0, c.window.x1, c.window.y1}},
                      {"cells", c.cells}};
  }
  if (v.critical_point) j["critical_point"] = json::parse(to_json(*v.critical_point));
  return j.dump();
}

}  // namespace henonlab
