#include <atomic>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "henonlab/errors.hpp"
#include "henonlab/horseshoe.hpp"
#include "henonlab/slices.hpp"

namespace henonlab {

using nlohmann::json;

const char* to_string(Probe probe) {
  switch (probe) {
    case Probe::connectivity:
      return "connectivity";
    case Probe::horseshoe:
      return "horseshoe";
    case Probe::measure:
      return "measure";
  }
  return "unknown";
}

namespace {

struct CellResult {
  CellStatus status = CellStatus::undecided;
  float rate = 0.0f;
};

float clamp_rate(double v) {
  if (!std::isfinite(v)) return 0.0f;
  return static_cast<float>(std::clamp(v, 0.0, static_cast<double>(std::numeric_limits<float>::max())));
}

CellResult connectivity_cell(const HenonParams& params, const ProbeConfig& config) {
  const Linearization lin = linearize(params, default_saddle(params));
  CriticalSearchConfig search;
  search.width = config.grid;
  search.height = config.grid;
  search.depth = config.depth;
  const Window window = default_window(lin);
  const auto points = find_unstable_critical_points(params, lin, window, search);
  const ConnectivityVerdict v = critical_point_verdict(points, window, search);
  switch (v.verdict) {
    case Verdict::unstably_disconnected:
      return {CellStatus::escaped, clamp_rate(v.critical_point ? v.critical_point->green_value : 0.0)};
    case Verdict::unstably_connected_at_resolution:
      return {CellStatus::bounded, 0.0f};
    case Verdict::undecided:
      break;
  }
  return {};
}

CellResult horseshoe_cell(double a, double b, const ProbeConfig& config, std::uint64_t seed) {
  if (certify_horseshoe(a, b).verified) return {CellStatus::escaped, 1.0f};
  if (entropy_census(a, b, config.census_n, seed).falsified) return {CellStatus::bounded, 0.0f};
  return {};
}

CellResult measure_cell(const HenonParams& params, const ProbeConfig& config, std::uint64_t seed) {
  const MeasureSample2D sample = sample_mu(params, config.measure_period, config.measure_period, {}, seed);
  const LyapunovPair lp = estimate_lambda(params, sample);
  const double excess = lp.plus.value - std::numbers::ln2;
  const double se = lp.plus.std_error;
  if (!std::isfinite(lp.plus.value) || !std::isfinite(se)) return {};
  if (excess > 3.0 * se && excess > 1e-9) return {CellStatus::escaped, clamp_rate(lp.plus.value)};
  if (std::abs(excess) <= 3.0 * se + 1e-9) return {CellStatus::bounded, clamp_rate(lp.plus.value)};
  return {CellStatus::undecided, clamp_rate(lp.plus.value)};
}

// Rough count of map evaluations, used only to refuse oversized requests.
double estimated_cost(Probe probe, const ProbeConfig& c) {
  const double cells = static_cast<double>(c.width) * c.height;
  switch (probe) {
    case Probe::connectivity:
      return cells * (4.0 * c.grid * c.grid * c.depth + 1e5);
    case Probe::horseshoe:
      return cells * (std::ldexp(2000.0 * c.census_n, c.census_n + 1) + 1e6);
    case Probe::measure:
      return cells * std::ldexp(2000.0 * c.measure_period, c.measure_period + 1);
  }
  return 0.0;
}

}  // namespace

SliceImage render_parameter_plane(const ParameterRegion& region, Probe probe, const ProbeConfig& config,
                                  const Deadline& deadline) {
  region.window.validate();
  if (config.width < 1 || config.width > 4096) throw ValidationError("width", "must be in [1, 4096]");
  if (config.height < 1 || config.height > 4096) throw ValidationError("height", "must be in [1, 4096]");
  if (config.grid < 8 || config.grid > 1024) throw ValidationError("grid", "must be in [8, 1024]");
  if (config.depth < 1) throw ValidationError("depth", "must be positive");
  if (config.census_n < 1 || config.census_n > 10) throw ValidationError("census_n", "must be in [1, 10]");
  if (config.measure_period < 1 || config.measure_period > 10) {
    throw ValidationError("measure_period", "must be in [1, 10]");
  }
  if (!std::isfinite(region.b.real()) || !std::isfinite(region.b.imag())) throw ValidationError("b", "must be finite");
  if (region.kind == ParameterRegion::Kind::complex_a && region.b == Complex{}) {
    throw ValidationError("b", "Jacobian b must be nonzero");
  }
  const double cost = estimated_cost(probe, config);
  if (cost > config.max_cost) {
    throw ResourceError("parameter plane: estimated cost " + std::to_string(cost) + " exceeds max_cost " +
                        std::to_string(config.max_cost));
  }

  SliceImage img;
  img.width = config.width;
  img.height = config.height;
  img.window = region.window;
  const std::size_t cells = static_cast<std::size_t>(img.width) * img.height;
  img.rate.assign(cells, 0.0f);
  img.status.assign(cells, CellStatus::undecided);
  std::atomic<bool> cut{false};

  parallel_for(cells, [&](std::size_t i) {
    if (deadline.expired()) {
      cut = true;
      return;
    }
    const int col = static_cast<int>(i % static_cast<std::size_t>(img.width));
    const int row = static_cast<int>(i / static_cast<std::size_t>(img.width));
    const Complex c = img.center(col, row);
    const bool real_ab = region.kind == ParameterRegion::Kind::real_ab;
    const Complex a = real_ab ? Complex(c.real()) : c;
    const Complex b = real_ab ? Complex(c.imag()) : region.b;
    const std::uint64_t seed = mix_seed(config.seed, i);
    CellResult r;
    try {
      const HenonParams params = HenonParams::make(a, b);
      switch (probe) {
        case Probe::connectivity:
          r = connectivity_cell(params, config);
          break;
        case Probe::horseshoe:
          if (params.is_real()) r = horseshoe_cell(a.real(), b.real(), config, seed);
          break;
        case Probe::measure:
          r = measure_cell(params, config, seed);
          break;
      }
    } catch (const std::exception&) {
      // No saddle, no linearization or degenerate parameters: the cell stays undecided.
      r = {};
    }
    img.status[i] = r.status;
    img.rate[i] = r.rate;
  });
  img.partial = cut.load();

  json prov;
  prov["kind"] = "parameter_plane";
  prov["probe"] = to_string(probe);
  prov["region"] = region.kind == ParameterRegion::Kind::real_ab ? "real_ab" : "complex_a";
  prov["b"] = json::array({region.b.real(), region.b.imag()});
  prov["window"] = {region.window.x0, region.window.y0, region.window.x1, region.window.y1};
  prov["width"] = config.width;
  prov["height"] = config.height;
  prov["grid"] = config.grid;
  prov["depth"] = config.depth;
  prov["census_n"] = config.census_n;
  prov["measure_period"] = config.measure_period;
  prov["seed"] = config.seed;
  prov["partial"] = img.partial;
  img.provenance = prov.dump();
  return img;
}

}  // namespace henonlab
