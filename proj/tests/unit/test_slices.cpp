#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "henonlab/errors.hpp"
#include "henonlab/slices.hpp"

using namespace henonlab;

namespace {

const HenonParams kHorseshoe = HenonParams::make(6.0, 0.3);

SliceImage synthetic(int w, int h, const std::vector<std::string>& rows) {
  SliceImage img;
  img.width = w;
  img.height = h;
  img.window = {0.0, 0.0, static_cast<double>(w), static_cast<double>(h)};
  img.rate.assign(static_cast<std::size_t>(w) * h, 1.0f);
  img.status.assign(static_cast<std::size_t>(w) * h, CellStatus::escaped);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == '#') {
        img.status[img.index(c, r)] = CellStatus::bounded;
        img.rate[img.index(c, r)] = 0.0f;
      }
    }
  }
  img.provenance = "{\"depth\":7}";
  return img;
}

double bounded_fraction(const SliceImage& img) {
  std::size_t n = 0;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) n += img.bounded_like(c, r) ? 1 : 0;
  }
  return static_cast<double>(n) / (static_cast<double>(img.width) * img.height);
}

RenderConfig render_config(int side, int depth) {
  RenderConfig c;
  c.width = side;
  c.height = side;
  c.depth = depth;
  return c;
}

struct BatteryCase {
  Complex a;
  Complex b;
};

// Parameters spanning disconnected horseshoes, attracting regimes and complex values.
const std::vector<BatteryCase> kBattery = {
    {6.0, 0.3},  {10.0, 0.3},  {0.1, 0.1},  {0.5, 0.05}, {-0.1, 0.2},
    {4.0, -0.2}, {Complex(0.3, 0.3), 0.1}, {8.0, 0.5}, {1.0, 0.01}, {Complex(-0.2, 0.5), Complex(0.1, 0.05)},
};

}  // namespace

TEST_CASE("synthetic images: interior blob and crossing band") {
  const SliceImage blob = synthetic(8, 6,
                                    {"........",
                                     "........",
                                     "...##...",
                                     "...###..",
                                     "........",
                                     "........"});
  const ConnectivityVerdict v = detect_compact_components(blob);
  CHECK(v.verdict == Verdict::unstably_disconnected);
  REQUIRE(v.component.has_value());
  CHECK(v.component->col0 == 3);
  CHECK(v.component->col1 == 5);
  CHECK(v.component->row0 == 2);
  CHECK(v.component->row1 == 3);
  CHECK(v.component->cells == 5);
  CHECK(v.depth == 7);

  const SliceImage band = synthetic(8, 6,
                                    {"...#....",
                                     "...#....",
                                     "....#...",
                                     "....#...",
                                     "...#....",
                                     "...#...."});
  CHECK(detect_compact_components(band).verdict == Verdict::unstably_connected_at_resolution);

  const SliceImage full = synthetic(3, 2, {"###", "###"});
  CHECK(detect_compact_components(full).verdict == Verdict::undecided);
  const SliceImage empty = synthetic(3, 2, {"...", "..."});
  CHECK(detect_compact_components(empty).verdict == Verdict::undecided);
}

TEST_CASE("the saddle itself renders bounded") {
  const Linearization lin = linearize(kHorseshoe, default_saddle(kHorseshoe));
  // An odd grid centered on 0 puts a cell center exactly at z = 0.
  const SliceImage img = render_slice(kHorseshoe, lin, {-1.0, -1.0, 1.0, 1.0}, render_config(5, 200));
  CHECK(img.status[img.index(2, 2)] == CellStatus::bounded);
  CHECK(img.rate[img.index(2, 2)] == 0.0f);
}

TEST_CASE("horseshoe slice: thin bounded bands, stable in resolution") {
  const Linearization lin = linearize(kHorseshoe, default_saddle(kHorseshoe));
  const Window w{-10.0, -10.0, 10.0, 10.0};
  const SliceImage fine = render_slice(kHorseshoe, lin, w, render_config(1024, 100));
  const SliceImage coarse = render_slice(kHorseshoe, lin, w, render_config(512, 100));
  const double f_fine = bounded_fraction(fine);
  const double f_coarse = bounded_fraction(coarse);
  MESSAGE("bounded fraction 1024: " << f_fine << ", 512: " << f_coarse);
  CHECK(f_fine < 0.2);
  CHECK(std::abs(f_fine - f_coarse) < 0.02);
  for (std::size_t i = 0; i < fine.status.size(); ++i) {
    if (fine.status[i] == CellStatus::escaped || fine.status[i] == CellStatus::boundary) {
      REQUIRE(fine.rate[i] > 0.0f);
    }
  }
}

TEST_CASE("doubling depth never turns an escaped cell bounded") {
  const Linearization lin = linearize(kHorseshoe, default_saddle(kHorseshoe));
  const Window w = default_window(lin);
  const SliceImage d1 = render_slice(kHorseshoe, lin, w, render_config(96, 50));
  const SliceImage d2 = render_slice(kHorseshoe, lin, w, render_config(96, 100));
  for (std::size_t i = 0; i < d1.status.size(); ++i) {
    if (d1.status[i] == CellStatus::escaped || d1.status[i] == CellStatus::boundary) {
      CHECK(d2.status[i] != CellStatus::bounded);
    }
  }
}

TEST_CASE("resolution monotonicity: coarse bounded cells contain fine bounded cells") {
  for (const BatteryCase& c : {BatteryCase{6.0, 0.3}, BatteryCase{0.1, 0.1}}) {
    const HenonParams params = HenonParams::make(c.a, c.b);
    const Linearization lin = linearize(params, default_saddle(params));
    const Window w = default_window(lin);
    const SliceImage coarse = render_slice(params, lin, w, render_config(64, 200));
    const SliceImage fine = render_slice(params, lin, w, render_config(128, 200));
    int violations = 0;
    for (int r = 0; r < 64; ++r) {
      for (int col = 0; col < 64; ++col) {
        // Boundary cells are a band one cell wide and shrink with the cell;
        // only cells without an escape certificate must persist.
        if (coarse.status[coarse.index(col, r)] != CellStatus::bounded) continue;
        bool any = false;
        for (int dr = 0; dr < 2; ++dr) {
          for (int dc = 0; dc < 2; ++dc) any = any || fine.bounded_like(2 * col + dc, 2 * r + dr);
        }
        violations += any ? 0 : 1;
      }
    }
    CHECK_MESSAGE(violations == 0, "a=" << c.a << " violations " << violations);
  }
}

TEST_CASE("render is deterministic and validates its inputs") {
  const Linearization lin = linearize(kHorseshoe, default_saddle(kHorseshoe));
  const Window w = default_window(lin);
  const SliceImage i1 = render_slice(kHorseshoe, lin, w, render_config(48, 100));
  const SliceImage i2 = render_slice(kHorseshoe, lin, w, render_config(48, 100));
  CHECK(i1.status == i2.status);
  CHECK(i1.rate == i2.rate);
  CHECK(i1.provenance == i2.provenance);
  CHECK_THROWS_AS(render_slice(kHorseshoe, lin, {1.0, 0.0, 0.0, 1.0}, render_config(8, 10)), ValidationError);
  CHECK_THROWS_AS(render_slice(kHorseshoe, lin, w, render_config(0, 10)), ValidationError);
  CHECK_THROWS_AS(render_slice(kHorseshoe, lin, w, render_config(8, 100001)), ValidationError);
  RenderConfig strict = render_config(8, 10);
  strict.max_defect = -1.0;
  CHECK_THROWS_AS(render_slice(kHorseshoe, lin, w, strict), ValidationError);
}

TEST_CASE("horseshoe is unstably disconnected by both methods") {
  const ConnectivityReport r = unstable_connectivity(kHorseshoe);
  CHECK(r.components.verdict == Verdict::unstably_disconnected);
  CHECK(r.critical.verdict == Verdict::unstably_disconnected);
  CHECK(r.combined == Verdict::unstably_disconnected);
  CHECK_FALSE(r.critical_points.empty());
  CHECK(r.components.component.has_value());
}

TEST_CASE("a = 0.1, b = 0.1 has no unstable critical points") {
  const HenonParams params = HenonParams::make(0.1, 0.1);
  const Linearization lin = linearize(params, default_saddle(params));
  const auto points = find_unstable_critical_points(params, lin, default_window(lin), {});
  CHECK(points.empty());
  CHECK(unstable_connectivity(params).combined == Verdict::unstably_connected_at_resolution);
}

TEST_CASE("critical points: small gradient, positive g, harmonic neighbourhood") {
  const Linearization lin = linearize(kHorseshoe, default_saddle(kHorseshoe));
  const CriticalSearchConfig config;
  const auto points = find_unstable_critical_points(kHorseshoe, lin, default_window(lin), config);
  REQUIRE_FALSE(points.empty());
  for (const auto& p : points) {
    CHECK(p.green_value > 0.0);
    CHECK(p.gradient_norm < config.gradient_threshold);
    // g is harmonic off K+: the two second differences cancel in the Laplacian.
    const auto g = [&](Complex z) { return slice_green(kHorseshoe, lin, z, 200).g; };
    const double h = 1e-2;
    const double gxx = g(p.z + h) + g(p.z - h) - 2.0 * g(p.z);
    const double gyy = g(p.z + Complex(0, h)) + g(p.z - Complex(0, h)) - 2.0 * g(p.z);
    CHECK_MESSAGE(std::abs(gxx + gyy) < 1e-2 * (std::abs(gxx) + std::abs(gyy)), "gxx " << gxx << " gyy " << gyy);
  }
}

TEST_CASE("method agreement on the battery, stable side disconnected, exponent link") {
  for (const BatteryCase& c : kBattery) {
    const HenonParams params = HenonParams::make(c.a, c.b);
    const ConnectivityReport u = unstable_connectivity(params);
    const Verdict x = u.components.verdict;
    const Verdict y = u.critical.verdict;
    const bool opposite = (x == Verdict::unstably_disconnected && y == Verdict::unstably_connected_at_resolution) ||
                          (y == Verdict::unstably_disconnected && x == Verdict::unstably_connected_at_resolution);
    CHECK_MESSAGE(!opposite, "a=" << c.a << " b=" << c.b << " " << std::string(to_string(x)) << " / "
                                  << std::string(to_string(y)));
    const bool listed = !u.critical_points.empty();
    if (y != Verdict::undecided) CHECK((y == Verdict::unstably_disconnected) == listed);

    // The stable-side probe is the critical-point search on the inverse map.
    const ConnectivityReport s = stable_connectivity(params);
    CHECK_MESSAGE(s.critical.verdict == Verdict::unstably_disconnected, "stable a=" << c.a << " b=" << c.b);
    CHECK(s.combined != Verdict::unstably_connected_at_resolution);

    if (y == Verdict::unstably_disconnected) {
      const MeasureSample2D sample = sample_mu(params, 1, 7);
      const LyapunovPair l = estimate_lambda(params, sample);
      CHECK_MESSAGE(l.plus.value > std::numbers::ln2 + l.plus.std_error, "a=" << c.a << " lambda " << l.plus.value);
    }
  }
}

TEST_CASE("lambda estimates") {
  const MeasureSample2D s57 = sample_mu(kHorseshoe, 5, 7);
  const MeasureSample2D s68 = sample_mu(kHorseshoe, 6, 8);
  const LyapunovPair a = estimate_lambda(kHorseshoe, s57);
  const LyapunovPair b = estimate_lambda(kHorseshoe, s68);
  CHECK(a.plus.value > std::numbers::ln2 + 0.1);
  CHECK(b.plus.value > std::numbers::ln2 + 0.1);
  CHECK(std::abs(a.plus.value + a.minus.value - std::log(0.3)) < 0.02);

  MeasureSample2D single;
  const SaddleRecord d = default_saddle(kHorseshoe);
  single.records = {d};
  single.points = {d.location};
  single.source_periods = {1};
  const LyapunovPair one = estimate_lambda(kHorseshoe, single);
  CHECK(one.plus.value == std::log(std::abs(d.lambda_u)));
  CHECK(one.minus.value == std::log(std::abs(d.lambda_s)));
  CHECK_THROWS_AS(estimate_lambda(kHorseshoe, MeasureSample2D{}), ValidationError);
}

TEST_CASE("HSLC round trip") {
  const Linearization lin = linearize(kHorseshoe, default_saddle(kHorseshoe));
  const SliceImage img = render_slice(kHorseshoe, lin, default_window(lin), render_config(40, 60));
  std::stringstream buf;
  write_hslc(img, buf);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "HSLC");
  std::istringstream in(bytes);
  const SliceImage back = read_hslc(in);
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.window.x0 == img.window.x0);
  CHECK(back.window.y1 == img.window.y1);
  CHECK(back.rate == img.rate);
  CHECK(back.status == img.status);
  CHECK(back.provenance == img.provenance);
  CHECK(bytes.size() == 4 + 4 + 4 + 4 + 32 + 4 + img.provenance.size() + 5 * 40 * 40);

  std::istringstream bad("HSLX0000");
  CHECK_THROWS(read_hslc(bad));
  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS(read_hslc(truncated));
}

TEST_CASE("palette and PPM") {
  const Rgb black = palette_color(CellStatus::bounded, 0.0f);
  CHECK((black.r == 0 && black.g == 0 && black.b == 0));
  const Rgb edge = palette_color(CellStatus::boundary, 0.5f);
  CHECK((edge.r == 0 && edge.g == 0 && edge.b == 0));
  const Rgb gray = palette_color(CellStatus::undecided, 0.0f);
  CHECK((gray.r == gray.g && gray.g == gray.b && gray.r > 0));
  const Rgb lit = palette_color(CellStatus::escaped, 0.7f);
  CHECK(lit.r + lit.g + lit.b > 0);

  const SliceImage img = synthetic(4, 3, {"#...", "....", "...."});
  std::stringstream out;
  write_ppm(img, out);
  const std::string ppm = out.str();
  const std::string header = "P6\n4 3\n255\n";
  CHECK(ppm.substr(0, header.size()) == header);
  CHECK(ppm.size() == header.size() + 4 * 3 * 3);
  CHECK(ppm[header.size()] == 0);
}

TEST_CASE("verdict JSON names the method and the evidence") {
  const SliceImage blob = synthetic(5, 5, {".....", ".#...", ".....", ".....", "....."});
  const std::string j = to_json(detect_compact_components(blob));
  CHECK(j.find("\"unstably_disconnected\"") != std::string::npos);
  CHECK(j.find("compact_components") != std::string::npos);
}
