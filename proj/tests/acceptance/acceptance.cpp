// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "henonlab/horseshoe.hpp"
#include "henonlab/oracle1d.hpp"
#include "henonlab/polynomial.hpp"
#include "henonlab/potential2d.hpp"
#include "henonlab/saddles.hpp"
#include "henonlab/slices.hpp"
#include "oracles.hpp"

using namespace henonlab;
namespace fs = std::filesystem;

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Collects the failed conditions of one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  bool ok() const { return failures_.empty(); }
  std::string summary() const {
    std::string s;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
    return s;
  }

 private:
  std::vector<std::string> failures_;
};

struct Criterion {
  std::string name;
  double limit_s;
  std::function<void(Checks&, std::ostringstream&)> body;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

QuadParam quad(double a) { return QuadParam::make(a); }

// ---------------------------------------------------------------------------

void one_dimensional_anchors(Checks& c, std::ostringstream& note) {
  const GreenValue g = green_1d(quad(2.0), 0.0, 1e-12);
  c.expect(std::abs(g.value) <= 1e-9, "G(2, 0) = " + num(g.value));

  const ExponentEstimate l = lyapunov_1d_formula(quad(2.0), 1e-12);
  c.expect(std::abs(l.value - kLn2) <= 1e-6, "lambda(2) = " + num(l.value));

  const MeasureSample1D s = brolin_sample(quad(2.0), 10000, 40, 0);
  std::vector<double> xs;
  for (const Complex& z : s.points) xs.push_back(z.real());
  const double ks = oracle::arcsine_ks(xs);
  c.expect(s.points.size() == 10000, "sample size " + std::to_string(s.points.size()));
  c.expect(ks < 0.02, "KS = " + num(ks));
  note << "G=" << num(g.value) << " lambda-ln2=" << num(l.value - kLn2) << " KS=" << num(ks);
}

void one_dimensional_cross_method(Checks& c, std::ostringstream& note) {
  double worst = 0.0;
  int mismatches = 0;
  for (int k = 0; k < 20; ++k) {
    const double a = -2.0 + 6.0 * (k + 0.5) / 20.0;
    const ExponentEstimate f = lyapunov_1d_formula(quad(a), 1e-12);
    const ExponentEstimate e = lyapunov_1d_ergodic(quad(a), {100000, 40, static_cast<std::uint64_t>(k)});
    const double se = f.std_error + e.std_error;
    const double z = std::abs(f.value - e.value) / se;
    worst = std::max(worst, z);
    c.expect(std::abs(f.value - e.value) <= 3.0 * se, "a=" + num(a) + " formula " + num(f.value) + " ergodic " +
                                                          num(e.value) + " stderr " + num(se));
    const bool connected = connectivity_1d(quad(a), 1000000).kind == Connectivity1D::Kind::connected;
    const bool brute = oracle::critical_orbit_bounded(a, 1000000);
    if (connected != brute) {
      ++mismatches;
      c.expect(false, "connectivity at a=" + num(a));
    }
  }
  note << "max |formula-ergodic|/stderr=" << num(worst) << " connectivity mismatches=" << mismatches;
}

void degree_growth(Checks& c, std::ostringstream& note) {
  const DegreeReport r = dynamical_degree(MapWord({HenonFactor{HenonParams::make(6.0, 0.3)}}), 5);
  c.expect(r.degrees == std::vector<int>{2, 4, 8, 16, 32}, "degree sequence");
  c.expect(r.exact.has_value() && *r.exact == 2, "exact dynamical degree");
  c.expect(std::abs(r.estimate - 2.0) < 1e-12, "estimate " + num(r.estimate));
  note << "degrees";
  for (int d : r.degrees) note << " " << d;
}

void saddle_census(Checks& c, std::ostringstream& note) {
  const HenonParams params = HenonParams::make(6.0, 0.3);
  for (int n = 1; n <= 6; ++n) {
    const PeriodicSearch s = find_periodic(params, n, SearchMode::complex_grid);
    c.expect(s.points.size() == (std::size_t{1} << n), "n=" + std::to_string(n) + " count " +
                                                           std::to_string(s.points.size()));
    for (const SaddleRecord& r : s.points) {
      const double tol = 1e-9;
      const bool real = std::abs(r.location.x.imag()) < tol && std::abs(r.location.y.imag()) < tol;
      c.expect(real, "n=" + std::to_string(n) + " non-real point");
      c.expect(r.kind == PointKind::saddle, "n=" + std::to_string(n) + " non-saddle point");
    }
    note << (n > 1 ? "," : "counts ") << s.points.size();
  }
  const auto xs = oracle::fixed_point_x(6.0, 0.3);
  const PeriodicSearch fixed = find_periodic(params, 1, SearchMode::complex_grid);
  double worst = 0.0;
  for (const auto& x : xs) {
    double best = INFINITY;
    for (const SaddleRecord& r : fixed.points) best = std::min(best, std::abs(r.location.x - x) + std::abs(r.location.y - x));
    worst = std::max(worst, best);
  }
  c.expect(worst < 1e-10, "fixed points off the quadratic by " + num(worst));
  note << " fixed-point error " << num(worst);
}

void linearization_defect(Checks& c, std::ostringstream& note) {
  const HenonParams params = HenonParams::make(6.0, 0.3);
  const SaddleRecord p = default_saddle(params);
  const Linearization lin = linearize(params, p);
  double worst = 0.0;
  constexpr int kSamples = 1024;
  for (int k = 0; k < kSamples; ++k) {
    const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * k / kSamples);
    worst = std::max(worst, sup_norm(henon(params, lin.evaluate(z)) - lin.evaluate(p.lambda_u * z)));
  }
  c.expect(worst < 1e-8, "defect " + num(worst));
  note << "sup defect on |z|=1 (" << kSamples << " points) " << num(worst);
}

void exponent_identities(Checks& c, std::ostringstream& note) {
  const HenonParams params = HenonParams::make(6.0, 0.3);
  const LyapunovPair l = estimate_lambda(params, sample_mu(params, 1, 8));
  const double sum = l.plus.value + l.minus.value;
  c.expect(std::abs(sum - std::log(0.3)) <= 0.02, "lambda+ + lambda- = " + num(sum));
  c.expect(l.plus.value > kLn2 + 0.1, "lambda+ = " + num(l.plus.value));
  const Linearization lin = linearize(params, default_saddle(params));
  const auto points = find_unstable_critical_points(params, lin, default_window(lin), {});
  bool certified = false;
  for (const auto& p : points) certified = certified || p.certified;
  c.expect(certified, "no certified critical point");
  note << "lambda+=" << num(l.plus.value) << " lambda-=" << num(l.minus.value) << " sum-log0.3="
       << num(sum - std::log(0.3)) << " critical points=" << points.size();
}

void connectivity_agreement(Checks& c, std::ostringstream& note) {
  struct Case {
    Complex a, b;
  };
  const std::vector<Case> battery = {
      {6.0, 0.3},  {10.0, 0.3},  {0.1, 0.1},  {0.5, 0.05}, {-0.1, 0.2},
      {4.0, -0.2}, {Complex(0.3, 0.3), 0.1}, {8.0, 0.5}, {1.0, 0.01}, {Complex(-0.2, 0.5), Complex(0.1, 0.05)},
  };
  int decided = 0;
  for (const Case& k : battery) {
    const ConnectivityReport r = unstable_connectivity(HenonParams::make(k.a, k.b));
    const Verdict x = r.components.verdict, y = r.critical.verdict;
    const bool opposite = (x == Verdict::unstably_disconnected && y == Verdict::unstably_connected_at_resolution) ||
                          (y == Verdict::unstably_disconnected && x == Verdict::unstably_connected_at_resolution);
    c.expect(!opposite, "opposite verdicts at a=" + num(k.a.real()) + " b=" + num(k.b.real()));
    if (r.combined != Verdict::undecided) ++decided;
    if (k.a == Complex(6.0) && k.b == Complex(0.3)) {
      c.expect(r.combined == Verdict::unstably_disconnected, "a=6 b=0.3 is " + std::string(to_string(r.combined)));
    }
    if (k.a == Complex(0.1) && k.b == Complex(0.1)) {
      c.expect(r.combined == Verdict::unstably_connected_at_resolution,
               "a=0.1 b=0.1 is " + std::string(to_string(r.combined)));
    }
  }
  note << "battery " << battery.size() << " parameters, " << decided << " with agreeing decided verdicts";
}

bool verified_1d(double a) {
  HorseshoeConfig config;
  config.one_dimensional = true;
  return certify_horseshoe(a, 0.0, config).verified;
}

void horseshoe_machinery(Checks& c, std::ostringstream& note) {
  c.expect(certify_horseshoe(10.0, 0.3).verified, "certificate at a=10 b=0.3");
  c.expect(entropy_census(1.0, 0.3, 6).falsified, "census at a=1 b=0.3 not falsified");
  double lo = 1.5, hi = 2.5;
  c.expect(!verified_1d(lo) && verified_1d(hi), "1D bracket ends");
  while (hi - lo > 1e-4) {
    const double mid = 0.5 * (lo + hi);
    (verified_1d(mid) ? hi : lo) = mid;
  }
  c.expect(std::abs(hi - 2.0) <= 0.05, "1D boundary at " + num(hi));
  note << "1D certificate boundary " << num(hi);
}

void boundary_scan_criterion(Checks& c, std::ostringstream& note) {
  for (double b : {0.01, -0.01}) {
    const BoundaryScan s = boundary_scan(b, 1.5, 4.0);
    const double mid = 0.5 * (s.a_lo + s.a_hi);
    c.expect(std::abs(mid - 2.0) < 0.2, "b=" + num(b) + " midpoint " + num(mid));
    if (!s.tangency) {
      c.expect(false, "b=" + num(b) + " no tangency report");
      continue;
    }
    const TangencyReport& t = *s.tangency;
    c.expect(t.quadratic_dominant(), "b=" + num(b) + " fit not quadratic dominant");
    c.expect((t.p == t.q) == (b > 0.0), "b=" + num(b) + " p=" + std::to_string(t.p) + " q=" + std::to_string(t.q));
    note << "b=" << num(b) << " bracket [" << num(s.a_lo) << ", " << num(s.a_hi) << "] p=" << t.p << " q=" << t.q
         << " c1=" << num(t.c1) << " c2=" << num(t.c2) << "; ";
  }
}

// ---------------------------------------------------------------------------
// CLI determinism

int run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + HENONLAB_CLI + "' " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void cli_determinism(Checks& c, std::ostringstream& note) {
  const fs::path dir = fs::temp_directory_path() / ("henonlab-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::vector<std::string> jobs = {
      "green --a 2 --b 0.3 --x 1 --y 0.5",
      "connectivity-1d --a 0.3,0.4",
      "lyapunov-1d --a 3 --method ergodic --points 20000",
      "saddles --a 6 --b 0.3 --period 5",
      "render-slice --a 6 --b 0.3 --res 512 --depth 200",
      "render-slice --a 6 --b 0.3 --res 128 --side stable --format png",
      "connectivity-2d --a 6 --b 0.3",
      "render-param --res 16 --grid 24 --depth 80",
      "render-param --probe horseshoe --region real-ab --res 6 --census-n 4",
      "lambda --a 6 --b 0.3",
      "horseshoe-certify --a 10 --b 0.3",
      "census --a 10 --b 0.3",
      "boundary-scan --b 0.01 --bracket 1.5 4.0",
  };
  int k = 0;
  for (const std::string& job : jobs) {
    const std::string first = (dir / ("job" + std::to_string(k) + ".out")).string();
    const std::string second = (dir / ("job" + std::to_string(k) + ".replay")).string();
    ++k;
    if (run_cli(job + " --out " + first) != 0 || run_cli("replay " + first + ".manifest.json --out " + second) != 0) {
      c.expect(false, job + ": command failed");
      continue;
    }
    const std::string bytes = slurp(first);
    c.expect(!bytes.empty() && bytes == slurp(second), job + ": replay differs");
  }
  fs::remove_all(dir);
  note << jobs.size() << " artifacts compared against their manifest replays";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"1D exact anchors", 10.0, one_dimensional_anchors},
      {"1D cross-method", 120.0, one_dimensional_cross_method},
      {"Degree growth", 5.0, degree_growth},
      {"Saddle census at a=6 b=0.3", 120.0, saddle_census},
      {"Linearization defect", 5.0, linearization_defect},
      {"Exponent identities", 120.0, exponent_identities},
      {"Connectivity method agreement", 300.0, connectivity_agreement},
      {"Horseshoe machinery", 120.0, horseshoe_machinery},
      {"Boundary scan", 600.0, boundary_scan_criterion},
      {"Determinism", 600.0, cli_determinism},
  };
  int failed = 0;
  for (const Criterion& cr : criteria) {
    Checks checks;
    std::ostringstream note;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(checks, note);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    checks.expect(secs < cr.limit_s, "runtime " + num(secs) + " s over " + num(cr.limit_s) + " s");
    std::cout << (checks.ok() ? "PASS " : "FAIL ") << cr.name << " [" << num(secs) << " s] " << note.str();
    if (!checks.ok()) std::cout << " :: " << checks.summary();
    std::cout << "\n" << std::flush;
    failed += checks.ok() ? 0 : 1;
  }
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << "\n";
  return failed == 0 ? 0 : 1;
}
