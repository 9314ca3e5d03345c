#include "henonlab_app/jobs.hpp"

#include <png.h>

#include <charconv>
#include <cmath>
#include <ctime>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "henonlab/errors.hpp"
#include "henonlab/horseshoe.hpp"
#include "henonlab/oracle1d.hpp"
#include "henonlab/parallel.hpp"
#include "henonlab/potential2d.hpp"
#include "henonlab/saddles.hpp"
#include "henonlab/slices.hpp"
#include "henonlab/version.hpp"
#include "henonlab_app/png.hpp"

namespace henonlab::app {

namespace {

Field real(std::string name, json fallback, std::string help) {
  return {std::move(name), FieldKind::real, std::move(fallback), std::move(help), {}, false};
}
Field integer(std::string name, json fallback, std::string help) {
  return {std::move(name), FieldKind::integer, std::move(fallback), std::move(help), {}, false};
}
Field cplx(std::string name, json fallback, std::string help) {
  return {std::move(name), FieldKind::complex, std::move(fallback), std::move(help), {}, false};
}
Field text(std::string name, std::string fallback, std::vector<std::string> choices, std::string help) {
  return {std::move(name), FieldKind::text, fallback, std::move(help), std::move(choices), false};
}
Field flag(std::string name, bool fallback, std::string help) {
  return {std::move(name), FieldKind::flag, fallback, std::move(help), {}, false};
}
Field window(json fallback, std::string help) {
  return {"window", FieldKind::window, std::move(fallback), std::move(help), {}, false};
}
Field pair(std::string name, json fallback, std::string help) {
  return {std::move(name), FieldKind::pair, std::move(fallback), std::move(help), {}, false};
}
Field required(Field f) {
  f.required = true;
  f.fallback = nullptr;
  return f;
}

Field seed_field() { return integer("seed", 0, "random seed"); }
Field budget_field() { return integer("budget_ms", 0, "wall-clock budget in milliseconds, 0 for none"); }
Field format_field() { return text("format", "hslc", {"hslc", "png", "ppm"}, "artifact format"); }

std::vector<JobSpec> build_specs() {
  const json origin = json::array({0.0, 0.0});
  std::vector<JobSpec> specs;
  specs.push_back({"green",
                   "Green function: G at z for a - z^2, or G+ and G- at (x, y) when b is given",
                   {required(cplx("a", nullptr, "parameter a")), cplx("b", nullptr, "Jacobian b; omit for one variable"),
                    cplx("z", origin, "point (one variable)"), cplx("x", origin, "point x (two variables)"),
                    cplx("y", origin, "point y (two variables)"), real("tol", 1e-9, "truncation bound"),
                    integer("max_iter", 100000, "iteration cap"), seed_field()}});
  specs.push_back({"connectivity-1d",
                   "Connectivity of the Julia set of a - z^2 from the critical orbit",
                   {required(cplx("a", nullptr, "parameter a")), integer("max_iter", 100000, "iteration cap"),
                    budget_field(), seed_field()}});
  specs.push_back({"lyapunov-1d",
                   "Lyapunov exponent of the equilibrium measure of a - z^2",
                   {required(cplx("a", nullptr, "parameter a")),
                    text("method", "critical-formula", {"critical-formula", "ergodic"}, "estimator"),
                    real("tol", 1e-9, "tolerance of the critical formula"),
                    integer("points", 100000, "sample points (ergodic)"),
                    integer("depth", 40, "backward depth of each sample (ergodic)"), seed_field()}});
  specs.push_back({"saddles",
                   "Periodic points of a given period with multipliers",
                   {required(cplx("a", nullptr, "parameter a")), required(cplx("b", nullptr, "Jacobian b")),
                    integer("period", 1, "period n (solutions of f^n = id)"),
                    text("mode", "complex", {"complex", "real"}, "search grid"),
                    integer("starts", 0, "Newton starts, 0 for the default"),
                    integer("newton_iterations", 60, "Newton iterations per start"), seed_field()}});
  specs.push_back({"render-slice",
                   "Escape-rate image of an unstable (or stable) slice in its linearizing coordinate",
                   {required(cplx("a", nullptr, "parameter a")), required(cplx("b", nullptr, "Jacobian b")),
                    text("saddle", "default", {"default", "0", "1"}, "fixed saddle point"),
                    text("side", "unstable", {"unstable", "stable"}, "manifold"),
                    integer("width", 256, "columns"), integer("height", 256, "rows"),
                    window(nullptr, "z-plane window x0 y0 x1 y1; default from the multiplier"),
                    integer("depth", 200, "forward steps"), real("boundary_factor", 1.0, "boundary threshold in cells"),
                    real("max_defect", 1e-6, "largest accepted linearization defect"), format_field(), budget_field(),
                    seed_field()}});
  specs.push_back({"connectivity-2d",
                   "Unstable (or stable) connectivity verdicts from components and critical points",
                   {required(cplx("a", nullptr, "parameter a")), required(cplx("b", nullptr, "Jacobian b")),
                    text("side", "unstable", {"unstable", "stable"}, "manifold"),
                    integer("width", 256, "render columns"), integer("height", 256, "render rows"),
                    integer("grid", 128, "critical-point search grid"), integer("depth", 200, "forward steps"),
                    window(nullptr, "z-plane window; default from the multiplier"), budget_field(), seed_field()}});
  specs.push_back({"render-param",
                   "Parameter-plane image under a probe",
                   {text("probe", "connectivity", {"connectivity", "horseshoe", "measure"}, "cell probe"),
                    text("region", "complex-a", {"complex-a", "real-ab"}, "plane: complex a at fixed b, or real (a, b)"),
                    window(nullptr, "parameter window; default depends on the region"),
                    cplx("b", json::array({0.01, 0.0}), "Jacobian b (complex-a)"), integer("width", 64, "columns"),
                    integer("height", 64, "rows"), integer("grid", 64, "z-grid per cell (connectivity)"),
                    integer("depth", 200, "forward steps"), integer("census_n", 6, "census periods (horseshoe)"),
                    integer("measure_period", 6, "sample period (measure)"),
                    real("max_cost", 2e11, "refuse requests above this many map evaluations"), format_field(),
                    budget_field(), seed_field()}});
  specs.push_back({"lambda",
                   "Lyapunov exponents of the periodic-point measure",
                   {required(cplx("a", nullptr, "parameter a")), required(cplx("b", nullptr, "Jacobian b")),
                    integer("period_lo", 1, "shortest period"), integer("period_hi", 6, "longest period"),
                    integer("starts", 0, "Newton starts per period, 0 for the default"), seed_field()}});
  specs.push_back({"horseshoe-certify",
                   "Crossing and cone certificate for a real horseshoe",
                   {required(real("a", nullptr, "parameter a")), real("b", nullptr, "Jacobian b"),
                    flag("one_dimensional", false, "certify x -> a - x^2 instead (b ignored)"),
                    real("margin", 1e-3, "required expansion margin"), integer("min_boxes", 8, "boxes per strip, first level"),
                    integer("max_boxes", 256, "boxes per strip, finest level"),
                    integer("max_boxes_1d", 1 << 15, "finest level in one variable"), seed_field()}});
  specs.push_back({"census",
                   "Real and complex periodic-point counts against 2^n",
                   {required(real("a", nullptr, "parameter a")), required(real("b", nullptr, "Jacobian b")),
                    integer("n", 6, "largest period"), budget_field(), seed_field()}});
  specs.push_back({"boundary-scan",
                   "Bisection of the horseshoe boundary in a at fixed b, with a tangency report",
                   {required(real("b", nullptr, "Jacobian b")),
                    pair("bracket", json::array({1.5, 4.0}), "a_lo a_hi"), integer("census_n", 6, "census periods"),
                    real("width", 1e-3, "stop at this bracket width"), integer("max_steps", 40, "bisection steps"),
                    flag("tangency", true, "fit the tangency at the upper end"),
                    real("sample_spacing", 0.02, "manifold polyline spacing"),
                    real("unstable_span", 5.0, "fundamental domains of W^u on each side"),
                    real("margin", 1e-3, "certificate expansion margin"), budget_field(), seed_field()}});
  return specs;
}

// ---------------------------------------------------------------------------
// Coercion

bool finite_number(const json& v) { return v.is_number() && std::isfinite(v.get<double>()); }

json coerce(const Field& f, const json& v) {
  switch (f.kind) {
    case FieldKind::real:
      if (!finite_number(v)) throw ValidationError(f.name, "expected a finite number");
      return v.get<double>();
    case FieldKind::integer: {
      if (v.is_number_integer()) return v.get<long long>();
      if (finite_number(v) && std::floor(v.get<double>()) == v.get<double>() && std::abs(v.get<double>()) < 9e15) {
        return static_cast<long long>(v.get<double>());
      }
      throw ValidationError(f.name, "expected an integer");
    }
    case FieldKind::complex:
      if (finite_number(v)) return json::array({v.get<double>(), 0.0});
      if (v.is_array() && v.size() == 2 && finite_number(v[0]) && finite_number(v[1])) {
        return json::array({v[0].get<double>(), v[1].get<double>()});
      }
      throw ValidationError(f.name, "expected a number or [re, im]");
    case FieldKind::text: {
      if (!v.is_string()) throw ValidationError(f.name, "expected a string");
      const auto s = v.get<std::string>();
      if (!f.choices.empty() && std::find(f.choices.begin(), f.choices.end(), s) == f.choices.end()) {
        std::string all;
        for (const auto& c : f.choices) all += (all.empty() ? "" : ", ") + c;
        throw ValidationError(f.name, "must be one of " + all);
      }
      return s;
    }
    case FieldKind::flag:
      if (!v.is_boolean()) throw ValidationError(f.name, "expected true or false");
      return v;
    case FieldKind::window: {
      if (!v.is_array() || v.size() != 4 || !std::all_of(v.begin(), v.end(), finite_number)) {
        throw ValidationError(f.name, "expected [x0, y0, x1, y1]");
      }
      const Window w{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
      w.validate();
      return json::array({w.x0, w.y0, w.x1, w.y1});
    }
    case FieldKind::pair:
      if (!v.is_array() || v.size() != 2 || !finite_number(v[0]) || !finite_number(v[1])) {
        throw ValidationError(f.name, "expected [lo, hi]");
      }
      return json::array({v[0].get<double>(), v[1].get<double>()});
  }
  return v;
}

double parse_double(const std::string& s, const std::string& field) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw ValidationError(field, "expected a number, got '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s, std::size_t count, const std::string& field) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    out.push_back(parse_double(s.substr(start, comma - start), field));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.size() != count) {
    throw ValidationError(field, "expected " + std::to_string(count) + " comma-separated numbers");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Accessors on resolved configurations

double num(const json& c, const char* key) { return c.at(key).get<double>(); }

int count(const json& c, const char* key, long long lo, long long hi) {
  const long long v = c.at(key).get<long long>();
  if (v < lo || v > hi) {
    throw ValidationError(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(v);
}

Complex cx(const json& c, const char* key) {
  const json& v = c.at(key);
  return {v[0].get<double>(), v[1].get<double>()};
}

std::uint64_t seed_of(const json& c) {
  const long long s = c.at("seed").get<long long>();
  if (s < 0) throw ValidationError("seed", "must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

Deadline deadline_of(const json& c) {
  const long long ms = c.at("budget_ms").get<long long>();
  if (ms < 0) throw ValidationError("budget_ms", "must be nonnegative");
  return ms == 0 ? Deadline{} : Deadline::after(std::chrono::milliseconds(ms));
}

Window window_of(const json& v) { return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()}; }

HenonParams params_of(const json& c) { return HenonParams::make(cx(c, "a"), cx(c, "b")); }

Artifact json_artifact(const json& j, bool partial = false) { return {j.dump(2) + "\n", "application/json", partial}; }

Artifact text_artifact(std::string s, bool partial = false) { return {std::move(s), "text/plain", partial}; }

Artifact image_artifact(const SliceImage& img, const std::string& format) {
  Artifact a;
  a.partial = img.partial;
  if (format == "png") {
    a.bytes = encode_png(img);
    a.media_type = "image/png";
    return a;
  }
  std::ostringstream out;
  if (format == "ppm") {
    write_ppm(img, out);
    a.media_type = "image/x-portable-pixmap";
  } else {
    write_hslc(img, out);
    a.media_type = "application/x-hslc";
  }
  a.bytes = std::move(out).str();
  return a;
}

json green_json(const GreenValue& g) {
  json j;
  j["value"] = g.value;
  j["error_bound"] = g.error_bound;
  j["escaped_at"] = g.escaped_at ? json(*g.escaped_at) : json(nullptr);
  j["iterations_used"] = g.iterations_used;
  j["assumed_in_k"] = g.assumed_in_k();
  return j;
}

json estimate_json(const ExponentEstimate& e) { return {{"value", e.value}, {"std_error", e.std_error}}; }

SaddleRecord select_saddle(const HenonParams& params, const std::string& which) {
  if (which == "default") return default_saddle(params);
  const SaddleRecord r = fixed_point_records(params).at(which == "1" ? 1 : 0);
  if (r.kind != PointKind::saddle) throw ValidationError("saddle", "fixed point " + which + " is not a saddle");
  return r;
}

// ---------------------------------------------------------------------------
// Jobs

Artifact run_green(const json& c) {
  const double tol = num(c, "tol");
  const int max_iter = count(c, "max_iter", 1, 100000000);
  json j;
  j["a"] = c["a"];
  if (c["b"].is_null()) {
    const GreenValue g = green_1d(QuadParam::make(cx(c, "a")), cx(c, "z"), tol, max_iter);
    j["dimension"] = 1;
    j["z"] = c["z"];
    j["green"] = green_json(g);
  } else {
    const HenonParams p = params_of(c);
    const GreenPairValue g = green_pair(p, {cx(c, "x"), cx(c, "y")}, tol, max_iter);
    j["dimension"] = 2;
    j["b"] = c["b"];
    j["point"] = {c["x"], c["y"]};
    j["plus"] = green_json(g.plus);
    j["minus"] = green_json(g.minus);
    j["in_k"] = g.in_k();
  }
  return json_artifact(j);
}

Artifact run_connectivity_1d(const json& c) {
  const Deadline deadline = deadline_of(c);
  const Connectivity1D r =
      connectivity_1d(QuadParam::make(cx(c, "a")), count(c, "max_iter", 1, 2000000000), deadline);
  static const char* const names[] = {"connected", "disconnected", "undecided"};
  json j;
  j["a"] = c["a"];
  j["kind"] = names[static_cast<int>(r.kind)];
  j["depth"] = r.depth;
  const bool partial = r.kind == Connectivity1D::Kind::undecided && deadline.expired();
  j["partial"] = partial;
  return json_artifact(j, partial);
}

Artifact run_lyapunov_1d(const json& c) {
  const QuadParam q = QuadParam::make(cx(c, "a"));
  ExponentEstimate e;
  if (c["method"] == "critical-formula") {
    e = lyapunov_1d_formula(q, num(c, "tol"));
  } else {
    ErgodicBudget budget;
    budget.n_points = count(c, "points", 1, 100000000);
    budget.depth = count(c, "depth", 20, 100000);
    budget.seed = seed_of(c);
    e = lyapunov_1d_ergodic(q, budget);
  }
  json j;
  j["a"] = c["a"];
  j["method"] = c["method"];
  j["value"] = e.value;
  j["std_error"] = e.std_error;
  j["rejected"] = e.rejected;
  j["entropy"] = e.entropy();
  j["dimension"] = e.dimension();
  return json_artifact(j);
}

Artifact run_saddles(const json& c) {
  const HenonParams p = params_of(c);
  SearchBudget budget;
  budget.starts = count(c, "starts", 0, 100000000);
  budget.newton_iterations = count(c, "newton_iterations", 1, 10000);
  const SearchMode mode = c["mode"] == "real" ? SearchMode::real_grid : SearchMode::complex_grid;
  const PeriodicSearch s = find_periodic(p, count(c, "period", 1, 12), mode, budget, seed_of(c));
  json j;
  j["a"] = c["a"];
  j["b"] = c["b"];
  j["period"] = c["period"];
  j["mode"] = c["mode"];
  j["expected"] = s.expected;
  j["count"] = s.points.size();
  j["under_resolved"] = s.under_resolved;
  j["points"] = json::array();
  for (const auto& r : s.points) j["points"].push_back(json::parse(to_json(r)));
  return json_artifact(j);
}

Artifact run_render_slice(const json& c) {
  const Deadline deadline = deadline_of(c);
  // The stable side is the unstable side of the inverse conjugate, as in stable_connectivity.
  const HenonParams f = params_of(c);
  const HenonParams p = c["side"] == "stable" ? inverse_conjugate(f) : f;
  const Linearization lin = linearize(p, select_saddle(p, c["saddle"]));
  const Window w = c["window"].is_null() ? default_window(lin) : window_of(c["window"]);
  RenderConfig rc;
  rc.width = count(c, "width", 1, 16384);
  rc.height = count(c, "height", 1, 16384);
  rc.depth = count(c, "depth", 1, 100000);
  rc.boundary_factor = num(c, "boundary_factor");
  rc.max_defect = num(c, "max_defect");
  return image_artifact(render_slice(p, lin, w, rc, deadline), c["format"]);
}

Artifact run_connectivity_2d(const json& c) {
  const Deadline deadline = deadline_of(c);
  const HenonParams p = params_of(c);
  ConnectivityConfig cc;
  cc.render.width = count(c, "width", 1, 16384);
  cc.render.height = count(c, "height", 1, 16384);
  cc.render.depth = count(c, "depth", 1, 100000);
  cc.critical.width = cc.critical.height = count(c, "grid", 8, 4096);
  cc.critical.depth = cc.render.depth;
  if (!c["window"].is_null()) cc.window = window_of(c["window"]);
  const ConnectivityReport r =
      c["side"] == "stable" ? stable_connectivity(p, cc, deadline) : unstable_connectivity(p, cc, deadline);
  json j;
  j["a"] = c["a"];
  j["b"] = c["b"];
  j["side"] = c["side"];
  j["verdict"] = to_string(r.combined);
  j["partial"] = r.partial;
  j["saddle"] = json::parse(to_json(r.saddle));
  j["components"] = json::parse(to_json(r.components));
  j["critical"] = json::parse(to_json(r.critical));
  j["critical_points"] = json::array();
  for (const auto& cp : r.critical_points) j["critical_points"].push_back(json::parse(to_json(cp)));
  return json_artifact(j, r.partial);
}

Artifact run_render_param(const json& c) {
  const Deadline deadline = deadline_of(c);
  ParameterRegion region;
  const bool real_ab = c["region"] == "real-ab";
  region.kind = real_ab ? ParameterRegion::Kind::real_ab : ParameterRegion::Kind::complex_a;
  if (c["window"].is_null()) {
    region.window = real_ab ? Window{-1.0, -1.0, 7.0, 1.0} : Window{-1.5, -2.5, 3.5, 2.5};
  } else {
    region.window = window_of(c["window"]);
  }
  region.b = cx(c, "b");
  ProbeConfig pc;
  pc.width = count(c, "width", 1, 4096);
  pc.height = count(c, "height", 1, 4096);
  pc.grid = count(c, "grid", 8, 1024);
  pc.depth = count(c, "depth", 1, 100000);
  pc.census_n = count(c, "census_n", 1, 10);
  pc.measure_period = count(c, "measure_period", 1, 10);
  pc.max_cost = num(c, "max_cost");
  pc.seed = seed_of(c);
  static const std::map<std::string, Probe> probes = {
      {"connectivity", Probe::connectivity}, {"horseshoe", Probe::horseshoe}, {"measure", Probe::measure}};
  return image_artifact(render_parameter_plane(region, probes.at(c["probe"]), pc, deadline), c["format"]);
}

Artifact run_lambda(const json& c) {
  const HenonParams p = params_of(c);
  const int lo = count(c, "period_lo", 1, 12);
  const int hi = count(c, "period_hi", 1, 12);
  if (lo > hi) throw ValidationError("period_lo", "must not exceed period_hi");
  SearchBudget budget;
  budget.starts = count(c, "starts", 0, 100000000);
  const MeasureSample2D s = sample_mu(p, lo, hi, budget, seed_of(c));
  const LyapunovPair l = estimate_lambda(p, s);
  json j;
  j["a"] = c["a"];
  j["b"] = c["b"];
  j["periods"] = {lo, hi};
  j["plus"] = estimate_json(l.plus);
  j["minus"] = estimate_json(l.minus);
  j["sum"] = l.plus.value + l.minus.value;
  j["log_abs_b"] = std::log(std::abs(p.b()));
  j["orbits"] = l.orbits;
  j["points"] = s.points.size();
  j["exact_counts"] = s.exact_counts;
  j["under_resolved"] = s.under_resolved;
  return json_artifact(j);
}

Artifact run_horseshoe_certify(const json& c) {
  HorseshoeConfig hc;
  hc.one_dimensional = c["one_dimensional"].get<bool>();
  hc.margin = num(c, "margin");
  hc.min_boxes = count(c, "min_boxes", 1, 1 << 20);
  hc.max_boxes = count(c, "max_boxes", 1, 1 << 20);
  hc.max_boxes_1d = count(c, "max_boxes_1d", 1, 1 << 26);
  if (!hc.one_dimensional && c["b"].is_null()) throw ValidationError("b", "required unless one_dimensional is set");
  const double b = c["b"].is_null() ? 0.0 : num(c, "b");
  return text_artifact(to_text(certify_horseshoe(num(c, "a"), b, hc)));
}

Artifact run_census(const json& c) {
  const CensusReport r = entropy_census(num(c, "a"), num(c, "b"), count(c, "n", 1, 10), seed_of(c), deadline_of(c));
  return text_artifact(to_text(r), r.partial);
}

Artifact run_boundary_scan(const json& c) {
  BoundaryScanConfig sc;
  sc.census_n = count(c, "census_n", 1, 10);
  sc.width = num(c, "width");
  sc.max_steps = count(c, "max_steps", 0, 1000);
  sc.tangency = c["tangency"].get<bool>();
  sc.tangency_config.sample_spacing = num(c, "sample_spacing");
  sc.tangency_config.unstable_span = num(c, "unstable_span");
  sc.certificate.margin = num(c, "margin");
  sc.seed = seed_of(c);
  const BoundaryScan s = boundary_scan(num(c, "b"), c["bracket"][0], c["bracket"][1], sc, deadline_of(c));
  return text_artifact(to_text(s), s.partial);
}

const std::map<std::string, std::function<Artifact(const json&)>>& runners() {
  static const std::map<std::string, std::function<Artifact(const json&)>> table = {
      {"green", run_green},
      {"connectivity-1d", run_connectivity_1d},
      {"lyapunov-1d", run_lyapunov_1d},
      {"saddles", run_saddles},
      {"render-slice", run_render_slice},
      {"connectivity-2d", run_connectivity_2d},
      {"render-param", run_render_param},
      {"lambda", run_lambda},
      {"horseshoe-certify", run_horseshoe_certify},
      {"census", run_census},
      {"boundary-scan", run_boundary_scan},
  };
  return table;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const std::vector<JobSpec>& job_specs() {
  static const std::vector<JobSpec> specs = build_specs();
  return specs;
}

const JobSpec& job_spec(const std::string& name) {
  for (const auto& s : job_specs()) {
    if (s.name == name) return s;
  }
  throw ValidationError("command", "unknown command '" + name + "'");
}

json job_defaults(const std::string& name) {
  json out = json::object();
  for (const auto& f : job_spec(name).fields) out[f.name] = f.fallback;
  return out;
}

json resolve_config(const std::string& name, const json& overrides) {
  const JobSpec& spec = job_spec(name);
  if (!overrides.is_object()) throw ValidationError("config", "must be a JSON object");
  for (const auto& [key, value] : overrides.items()) {
    const bool known = std::any_of(spec.fields.begin(), spec.fields.end(), [&](const Field& f) { return f.name == key; });
    if (!known) throw ValidationError(key, "unknown option for " + name);
  }
  json out = json::object();
  for (const auto& f : spec.fields) {
    const auto it = overrides.find(f.name);
    if (it != overrides.end() && !it->is_null()) {
      out[f.name] = coerce(f, *it);
    } else if (f.required) {
      throw ValidationError(f.name, "required");
    } else {
      out[f.name] = f.fallback;
    }
  }
  return out;
}

json parse_complex(const std::string& text, const std::string& field) {
  const std::size_t comma = text.find(',');
  if (comma == std::string::npos) return json::array({parse_double(text, field), 0.0});
  const auto parts = parse_list(text, 2, field);
  return json::array({parts[0], parts[1]});
}

json parse_field(const Field& f, const std::string& s) {
  switch (f.kind) {
    case FieldKind::real:
      return parse_double(s, f.name);
    case FieldKind::integer: {
      long long v = 0;
      const char* end = s.data() + s.size();
      const auto [ptr, ec] = std::from_chars(s.data(), end, v);
      if (ec != std::errc() || ptr != end) throw ValidationError(f.name, "expected an integer, got '" + s + "'");
      return v;
    }
    case FieldKind::complex:
      return parse_complex(s, f.name);
    case FieldKind::text:
      return s;
    case FieldKind::flag:
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
      throw ValidationError(f.name, "expected true or false");
    case FieldKind::window: {
      const auto v = parse_list(s, 4, f.name);
      return json(v);
    }
    case FieldKind::pair: {
      const auto v = parse_list(s, 2, f.name);
      return json(v);
    }
  }
  return s;
}

Artifact run_job(const std::string& name, const json& resolved) {
  const auto it = runners().find(name);
  if (it == runners().end()) throw ValidationError("command", "unknown command '" + name + "'");
  return it->second(resolve_config(name, resolved));
}

json version_info() {
  json j;
  j["henonlab"] = HENONLAB_VERSION;
  j["compiler"] = __VERSION__;
  j["cxx"] = __cplusplus;
  j["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  j["libpng"] = PNG_LIBPNG_VER_STRING;
  return j;
}

json make_manifest(const std::string& name, const json& resolved, const Artifact& artifact,
                   const std::string& artifact_path, double wall_ms) {
  json j;
  j["tool"] = "henonlab";
  j["command"] = name;
  j["config"] = resolved;
  j["artifact"] = {{"path", artifact_path}, {"media_type", artifact.media_type}, {"bytes", artifact.bytes.size()}};
  j["partial"] = artifact.partial;
  j["versions"] = version_info();
  j["threads"] = worker_count();
  j["timings"] = {{"finished_utc", utc_now()}, {"wall_ms", wall_ms}};
  return j;
}

std::string extension_for(const std::string& media_type) {
  if (media_type == "application/x-hslc") return "hslc";
  if (media_type == "image/png") return "png";
  if (media_type == "image/x-portable-pixmap") return "ppm";
  if (media_type == "application/json") return "json";
  return "txt";
}

}  // namespace henonlab::app
