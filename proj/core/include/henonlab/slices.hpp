#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "henonlab/dynamics.hpp"
#include "henonlab/oracle1d.hpp"
#include "henonlab/parallel.hpp"
#include "henonlab/potential2d.hpp"
#include "henonlab/saddles.hpp"

namespace henonlab {

/// Axis-aligned rectangle [x0, x1] x [y0, y1]. For slices x and y are the real
/// and imaginary parts of the linearizing coordinate z.
struct Window {
  double x0 = -1.0;
  double y0 = -1.0;
  double x1 = 1.0;
  double y1 = 1.0;

  /// Throws ValidationError (field "window") when empty or not finite.
  void validate() const;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

enum class CellStatus : std::uint8_t {
  escaped = 0,
  bounded = 1,   // no escape certificate within the depth budget
  boundary = 2,  // escaped, but within the distance estimate of K+ at this resolution
  undecided = 3,
};

/// Grid of cells over a window; row 0 is the top row (largest y).
///
/// `rate` holds G+ at the cell's image (0 for bounded and undecided cells,
/// positive for escaped and boundary cells). Parameter-plane images reuse the
/// layout with probe-specific rates; `provenance` is canonical JSON and
/// together with the binary determines the image.
struct SliceImage {
  int width = 0;
  int height = 0;
  Window window;
  std::vector<float> rate;
  std::vector<CellStatus> status;
  std::string provenance;
  bool partial = false;  // a deadline stopped rendering; missing cells are undecided

  std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * width + col; }
  Complex center(int col, int row) const;
  double cell_size() const;
  bool bounded_like(int col, int row) const;  // bounded or boundary
};

struct RenderConfig {
  int width = 256;
  int height = 256;
  int depth = 200;                 // forward steps after phi(z)
  double boundary_factor = 1.0;    // distance-estimate threshold, in cells
                                   // (estimate scaled by the Holder exponent n log 2 / log|lambda_u|)
  double max_defect = 1e-6;        // refuse linearizations worse than this
};

/// Half-width 2 |lambda_u| clamped to [4, 32], centered on 0.
Window default_window(const Linearization& lin);

/// Escape-rate picture of W^u_p cap K+ in the linearizing plane of `lin`.
/// Rows are computed in parallel; the output depends only on the inputs.
SliceImage render_slice(const HenonParams& params, const Linearization& lin, const Window& window,
                        const RenderConfig& config, const Deadline& deadline = {});

/// Pixel box and z-plane box of a connected set of cells.
struct ComponentBox {
  int col0 = 0, row0 = 0, col1 = 0, row1 = 0;
  Window window;
  int cells = 0;
};

struct CriticalPointRecord {
  Complex z;
  double green_value = 0.0;
  double gradient_norm = 0.0;
  bool certified = false;
};

enum class Verdict { unstably_connected_at_resolution, unstably_disconnected, undecided };

const char* to_string(Verdict verdict);

struct ConnectivityVerdict {
  Verdict verdict = Verdict::undecided;
  std::string method;  // "compact_components" or "critical_points"
  std::optional<ComponentBox> component;
  std::optional<CriticalPointRecord> critical_point;
  Window window;
  int width = 0;
  int height = 0;
  int depth = 0;
};

/// 8-connected components of bounded and boundary cells. A component clear of
/// the window edge is a compact piece of the slice at this resolution.
/// Undecided when every cell, or no cell, is bounded.
ConnectivityVerdict detect_compact_components(const SliceImage& img);

struct CriticalSearchConfig {
  int width = 128;
  int height = 128;
  int depth = 200;
  double green_threshold = 1e-4;
  double gradient_threshold = 1e-6;
};

/// Critical points of g = G+ o phi on the window: local minima of the
/// finite-difference |grad g| on the grid, refined by Newton's method on the
/// holomorphic derivative h' with g = Re h. Only converged points with
/// g > green_threshold are returned; certified means at least one cell clear of
/// the window edge.
std::vector<CriticalPointRecord> find_unstable_critical_points(const HenonParams& params, const Linearization& lin,
                                                               const Window& window,
                                                               const CriticalSearchConfig& config);

/// Disconnected when some record is certified, undecided when only
/// uncertified records exist, connected at resolution otherwise.
ConnectivityVerdict critical_point_verdict(const std::vector<CriticalPointRecord>& points, const Window& window,
                                           const CriticalSearchConfig& config);

/// g = G+(phi(z)) and |grad g| at one point; g = 0 when no escape is certified.
struct GreenJet {
  double g = 0.0;
  double gradient_norm = 0.0;
  bool escaped = false;
};
GreenJet slice_green(const HenonParams& params, const Linearization& lin, Complex z, int depth);

struct LyapunovPair {
  ExponentEstimate plus;
  ExponentEstimate minus;
  int orbits = 0;
};

/// lambda+- as the average of log|lambda_{u,s}| / n over the sample points,
/// each point weighted equally. std_error from the spread between orbits.
LyapunovPair estimate_lambda(const HenonParams& params, const MeasureSample2D& sample);

/// Both connectivity methods on the default saddle of `params`.
struct ConnectivityReport {
  ConnectivityVerdict components;
  ConnectivityVerdict critical;
  Verdict combined = Verdict::undecided;  // agreement, else undecided
  SaddleRecord saddle;
  std::vector<CriticalPointRecord> critical_points;
  bool partial = false;  // the deadline cut the render; verdicts are undecided
};

struct ConnectivityConfig {
  RenderConfig render;
  CriticalSearchConfig critical;
  std::optional<Window> window;  // default_window() when absent
};

ConnectivityReport unstable_connectivity(const HenonParams& params, const ConnectivityConfig& config = {},
                                         const Deadline& deadline = {});

/// Stable side: unstable connectivity of the inverse-conjugate map, whose
/// unstable slices are the stable slices of f in the swapped chart.
ConnectivityReport stable_connectivity(const HenonParams& params, const ConnectivityConfig& config = {},
                                       const Deadline& deadline = {});

// ---------------------------------------------------------------------------
// Parameter plane

enum class Probe { connectivity, horseshoe, measure };

const char* to_string(Probe probe);

/// real_ab: x = a, y = b, both real. complex_a: x + iy = a with b fixed.
struct ParameterRegion {
  enum class Kind { real_ab, complex_a };
  Kind kind = Kind::complex_a;
  Window window;
  Complex b = 0.01;
};

struct ProbeConfig {
  int width = 64;
  int height = 64;
  int grid = 64;         // z-grid per cell (connectivity probe)
  int depth = 200;
  int census_n = 6;      // horseshoe probe fallback census
  int measure_period = 6;
  double max_cost = 2e11;  // estimated map evaluations
  std::uint64_t seed = 0;  // cell i searches with mix_seed(seed, i)
};

/// Cell statuses: escaped = disconnected / horseshoe verified / lambda+ above
/// log 2 by more than 3 standard errors; bounded = connected at resolution /
/// census falsified / lambda+ at log 2; undecided otherwise. Cells whose
/// saddle or linearization fails are undecided.
SliceImage render_parameter_plane(const ParameterRegion& region, Probe probe, const ProbeConfig& config,
                                  const Deadline& deadline = {});

// ---------------------------------------------------------------------------
// Files

/// Little-endian HSLC: "HSLC", u32 version, u32 W, u32 H, 4 x f64 window,
/// u32 length + provenance JSON, then W*H records (f32 rate, u8 status).
void write_hslc(const SliceImage& img, std::ostream& out);
SliceImage read_hslc(std::istream& in);

struct Rgb {
  std::uint8_t r, g, b;
};

/// Default palette: bounded and boundary cells black, undecided gray, escaped
/// cells shaded by log(1 + rate) on a repeating blue-orange ramp.
Rgb palette_color(CellStatus status, float rate);

void write_ppm(const SliceImage& img, std::ostream& out);

std::string to_json(const ConnectivityVerdict& verdict);
std::string to_json(const CriticalPointRecord& record);

}  // namespace henonlab
