#include <doctest.h>

#include <cmath>
#include <set>

#include "henonlab/errors.hpp"
#include "henonlab_app/jobs.hpp"

using namespace henonlab;
using namespace henonlab::app;

namespace {

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "<no error>";
}

// Small configurations, one per job, that finish in well under a second.
json quick_config(const std::string& job) {
  if (job == "green") return {{"a", 2.0}, {"b", 0.3}, {"x", 1.0}};
  if (job == "connectivity-1d") return {{"a", 1.0}};
  if (job == "lyapunov-1d") return {{"a", 3.0}, {"method", "ergodic"}, {"points", 2000}};
  if (job == "saddles") return {{"a", 6.0}, {"b", 0.3}, {"period", 3}};
  if (job == "render-slice") return {{"a", 6.0}, {"b", 0.3}, {"width", 48}, {"height", 32}, {"depth", 60}};
  if (job == "connectivity-2d") return {{"a", 6.0}, {"b", 0.3}, {"width", 64}, {"height", 64}, {"grid", 32}};
  if (job == "render-param") return {{"width", 6}, {"height", 4}, {"grid", 12}, {"depth", 60}};
  if (job == "lambda") return {{"a", 6.0}, {"b", 0.3}, {"period_hi", 4}};
  if (job == "horseshoe-certify") return {{"a", 10.0}, {"b", 0.3}};
  if (job == "census") return {{"a", 10.0}, {"b", 0.3}, {"n", 4}};
  if (job == "boundary-scan") return {{"b", 0.01}, {"tangency", false}, {"width", 0.05}};
  return json::object();
}

}  // namespace

TEST_CASE("job list covers every subcommand except serve") {
  std::set<std::string> names;
  for (const JobSpec& s : job_specs()) names.insert(s.name);
  const std::set<std::string> expected = {"green",  "connectivity-1d", "lyapunov-1d",       "saddles",
                                          "render-slice", "connectivity-2d", "render-param", "lambda",
                                          "horseshoe-certify", "census",      "boundary-scan"};
  CHECK(names == expected);
  CHECK(field_of([] { job_spec("nope"); }) == "command");
}

TEST_CASE("resolved configurations carry every field and an explicit seed") {
  for (const JobSpec& s : job_specs()) {
    CAPTURE(s.name);
    const json r = resolve_config(s.name, quick_config(s.name));
    for (const Field& f : s.fields) CHECK(r.contains(f.name));
    REQUIRE(r.contains("seed"));
    CHECK(r["seed"].is_number_integer());
    if (!quick_config(s.name).contains("seed")) CHECK(r["seed"] == 0);
    CHECK(resolve_config(s.name, r) == r);
  }
}

TEST_CASE("schema validation names the offending field") {
  CHECK(field_of([] { resolve_config("render-slice", {{"b", 0.3}}); }) == "a");
  CHECK(field_of([] { resolve_config("render-slice", {{"a", 6.0}, {"b", 0.3}, {"colour", 1}}); }) == "colour");
  CHECK(field_of([] { resolve_config("render-slice", {{"a", 6.0}, {"b", 0.3}, {"width", "wide"}}); }) == "width");
  CHECK(field_of([] { resolve_config("render-slice", {{"a", 6.0}, {"b", 0.3}, {"side", "left"}}); }) == "side");
  CHECK(field_of([] { resolve_config("render-slice", {{"a", 6.0}, {"b", 0.3}, {"window", {1, 2}}}); }) == "window");
  CHECK(field_of([] { run_job("render-slice", {{"a", 6.0}, {"b", 0.0}}); }) == "b");
  CHECK(field_of([] { run_job("census", {{"a", 10.0}, {"b", 0.3}, {"n", 11}}); }) != "<no error>");
}

TEST_CASE("field parsing") {
  const Field c{"a", FieldKind::complex, nullptr, "", {}, false};
  CHECK(parse_field(c, "1.5") == json::array({1.5, 0.0}));
  CHECK(parse_field(c, "1.5,-2") == json::array({1.5, -2.0}));
  CHECK(field_of([&] { parse_field(c, "1.5,x"); }) == "a");
  const Field n{"depth", FieldKind::integer, nullptr, "", {}, false};
  CHECK(parse_field(n, "12") == 12);
  CHECK(field_of([&] { parse_field(n, "12.5"); }) == "depth");
  const Field w{"window", FieldKind::window, nullptr, "", {}, false};
  CHECK(parse_field(w, "-1,-1,1,1") == json::array({-1.0, -1.0, 1.0, 1.0}));
  CHECK(field_of([&] { parse_field(w, "-1,-1,1"); }) == "window");
  const Field f{"tangency", FieldKind::flag, true, "", {}, false};
  CHECK(parse_field(f, "false") == false);
  CHECK(field_of([&] { parse_field(f, "maybe"); }) == "tangency");
}

TEST_CASE("every job is deterministic") {
  for (const JobSpec& s : job_specs()) {
    CAPTURE(s.name);
    const json cfg = resolve_config(s.name, quick_config(s.name));
    const Artifact first = run_job(s.name, cfg);
    const Artifact second = run_job(s.name, cfg);
    CHECK_FALSE(first.partial);
    CHECK(!first.bytes.empty());
    CHECK(first.media_type == second.media_type);
    CHECK(first.bytes == second.bytes);
  }
}

TEST_CASE("lyapunov-1d critical formula at a = 2 is ln 2") {
  const json out = json::parse(run_job("lyapunov-1d", {{"a", 2.0}, {"method", "critical-formula"}, {"tol", 1e-9}}).bytes);
  CHECK(std::abs(out["value"].get<double>() - std::log(2.0)) < 1e-9);
}

TEST_CASE("artifact formats") {
  const json base = {{"a", 6.0}, {"b", 0.3}, {"width", 16}, {"height", 8}, {"depth", 40}};
  json png = base;
  png["format"] = "png";
  const Artifact p = run_job("render-slice", png);
  CHECK(p.media_type == "image/png");
  CHECK(p.bytes.substr(0, 8) == std::string("\x89PNG\r\n\x1a\n", 8));
  const Artifact h = run_job("render-slice", base);
  CHECK(h.media_type == "application/x-hslc");
  CHECK(h.bytes.substr(0, 4) == "HSLC");
  CHECK(extension_for(h.media_type) == "hslc");
  CHECK(extension_for(p.media_type) == "png");
}

TEST_CASE("budget exhaustion gives a partial artifact") {
  const Artifact a = run_job("census", {{"a", 10.0}, {"b", 0.3}, {"n", 8}, {"budget_ms", 1}});
  CHECK(a.partial);
  CHECK(a.bytes.find("partial true") != std::string::npos);
}

TEST_CASE("parameter-plane cost cap") {
  CHECK_THROWS_AS(run_job("render-param", {{"width", 512}, {"height", 512}, {"grid", 512}, {"max_cost", 1e6}}),
                  ResourceError);
}

TEST_CASE("manifest records what a replay needs") {
  const json cfg = resolve_config("saddles", quick_config("saddles"));
  const Artifact a = run_job("saddles", cfg);
  const json m = make_manifest("saddles", cfg, a, "out.json", 12.5);
  CHECK(m["command"] == "saddles");
  CHECK(m["config"] == cfg);
  CHECK(m["config"]["seed"] == 0);
  CHECK(m["artifact"]["bytes"] == a.bytes.size());
  CHECK(m["artifact"]["media_type"] == a.media_type);
  CHECK(m["versions"].contains("henonlab"));
  CHECK(m["timings"]["wall_ms"] == 12.5);
  CHECK(run_job(m["command"].get<std::string>(), m["config"]).bytes == a.bytes);
}
