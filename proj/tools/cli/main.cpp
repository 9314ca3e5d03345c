#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>

#include "henonlab/errors.hpp"
#include "henonlab_app/jobs.hpp"
#include "henonlab_app/service.hpp"

using henonlab::ResourceError;
using henonlab::ValidationError;
using namespace henonlab::app;

namespace {

constexpr int kValidationExit = 2;
constexpr int kBudgetExit = 3;

struct JobCommand {
  std::string name;
  CLI::App* app = nullptr;
  json overrides = json::object();
  std::string out = "-";
  std::string manifest;
};

std::string dashed(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

std::string joined(const std::vector<std::string>& parts) {
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : ",") + p;
  return s;
}

void add_field(JobCommand& cmd, const Field& f) {
  json& ov = cmd.overrides;
  CLI::Option* opt = nullptr;
  switch (f.kind) {
    case FieldKind::flag:
      if (f.fallback.get<bool>()) {
        cmd.app->add_flag_callback("--no-" + dashed(f.name).substr(2), [&ov, f] { ov[f.name] = false; }, "do not " + f.help);
      } else {
        cmd.app->add_flag_callback(dashed(f.name), [&ov, f] { ov[f.name] = true; }, f.help);
      }
      return;
    case FieldKind::window:
    case FieldKind::pair:
      opt = cmd.app->add_option_function<std::vector<std::string>>(
          dashed(f.name), [&ov, f](const std::vector<std::string>& v) { ov[f.name] = parse_field(f, joined(v)); },
          f.help);
      opt->expected(f.kind == FieldKind::window ? 4 : 2)->type_name("FLOAT");
      break;
    default:
      opt = cmd.app->add_option_function<std::string>(
          dashed(f.name), [&ov, f](const std::string& v) { ov[f.name] = parse_field(f, v); }, f.help);
      if (f.kind == FieldKind::complex) opt->type_name("RE[,IM]");
      if (f.kind == FieldKind::real) opt->type_name("FLOAT");
      if (f.kind == FieldKind::integer) opt->type_name("INT");
      if (!f.choices.empty()) opt->check(CLI::IsMember(f.choices));
      break;
  }
  if (f.required) opt->required();
  if (!f.fallback.is_null()) opt->default_str(f.fallback.dump());
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ValidationError("out", "cannot open " + path);
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw std::runtime_error("write failed: " + path);
}

int run_and_write(const std::string& name, const json& overrides, const std::string& out, std::string manifest) {
  const auto t0 = std::chrono::steady_clock::now();
  const json resolved = resolve_config(name, overrides);
  const Artifact artifact = run_job(name, resolved);
  const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  if (out == "-") {
    std::cout.write(artifact.bytes.data(), static_cast<std::streamsize>(artifact.bytes.size()));
    std::cout.flush();
  } else {
    write_file(out, artifact.bytes);
  }
  if (manifest.empty() && out != "-") manifest = out + ".manifest.json";
  if (!manifest.empty()) {
    json m = make_manifest(name, resolved, artifact, out, wall_ms);
    m["versions"]["cli11"] = CLI11_VERSION;
    write_file(manifest, m.dump(2) + "\n");
  }
  if (artifact.partial) {
    std::cerr << "henonlab " << name << ": wall-clock budget exhausted; the artifact is partial\n";
    return kBudgetExit;
  }
  return 0;
}

json read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("manifest", "cannot open " + path);
  json m = json::parse(in, nullptr, false);
  if (m.is_discarded() || !m.is_object() || !m.contains("command") || !m.contains("config")) {
    throw ValidationError("manifest", path + " is not a run manifest");
  }
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"henonlab: complex Henon map dynamics, slices, horseshoes and a tile service"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_info()["henonlab"].get<std::string>());

  std::vector<std::unique_ptr<JobCommand>> jobs;
  for (const JobSpec& spec : job_specs()) {
    auto cmd = std::make_unique<JobCommand>();
    cmd->name = spec.name;
    cmd->app = app.add_subcommand(spec.name, spec.help);
    for (const Field& f : spec.fields) add_field(*cmd, f);
    const bool sized = std::any_of(spec.fields.begin(), spec.fields.end(), [](const Field& f) { return f.name == "width"; }) &&
                       spec.name != "boundary-scan";
    if (sized) {
      json& ov = cmd->overrides;
      cmd->app->add_option_function<std::string>(
          "--res",
          [&ov](const std::string& v) {
            const json n = parse_field(Field{"res", FieldKind::integer, nullptr, "", {}, false}, v);
            ov["width"] = n;
            ov["height"] = n;
          },
          "set width and height together")
          ->type_name("INT");
    }
    cmd->app->add_option("--out,-o", cmd->out, "artifact path; - writes to standard output")->default_str("-");
    cmd->app->add_option("--manifest", cmd->manifest, "run manifest path; default <out>.manifest.json");
    jobs.push_back(std::move(cmd));
  }

  std::string replay_path;
  std::string replay_out = "-";
  std::string replay_manifest;
  CLI::App* replay = app.add_subcommand("replay", "Rerun the job recorded in a run manifest");
  replay->add_option("path", replay_path, "run manifest")->required();
  replay->add_option("--out,-o", replay_out, "artifact path; - writes to standard output");
  replay->add_option("--manifest", replay_manifest, "manifest path for the rerun");

  std::string host = "127.0.0.1";
  int port = 8080;
  ServiceOptions service;
  CLI::App* serve_cmd = app.add_subcommand("serve", "HTTP tile service: /meta, /tile/dyn, /tile/param, /verdict");
  serve_cmd->add_option("--host", host, "bind address")->capture_default_str();
  serve_cmd->add_option("--port", port, "port")->capture_default_str()->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--workers", service.workers, "concurrent computations; 0 uses HENONLAB_THREADS or the core count")
      ->capture_default_str();
  serve_cmd->add_option("--budget-ms", service.budget_ms, "per-request wall-clock budget")->capture_default_str();
  serve_cmd->add_option("--max-side", service.max_side, "largest tile side")->capture_default_str();
  serve_cmd->add_option("--max-cost", service.max_cost, "parameter-plane cost cap")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationExit;
  } catch (const ValidationError& e) {
    std::cerr << "henonlab: invalid " << e.what() << "\n";
    return kValidationExit;
  }

  try {
    if (serve_cmd->parsed()) return serve(host, port, service);
    if (replay->parsed()) {
      const json m = read_manifest(replay_path);
      return run_and_write(m["command"].get<std::string>(), m["config"], replay_out, replay_manifest);
    }
    for (const auto& cmd : jobs) {
      if (cmd->app->parsed()) return run_and_write(cmd->name, cmd->overrides, cmd->out, cmd->manifest);
    }
  } catch (const ValidationError& e) {
    std::cerr << "henonlab: invalid " << e.what() << "\n";
    return kValidationExit;
  } catch (const ResourceError& e) {
    std::cerr << "henonlab: " << e.what() << "\n";
    return kBudgetExit;
  } catch (const std::exception& e) {
    std::cerr << "henonlab: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
