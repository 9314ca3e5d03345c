#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace henonlab::app {

using nlohmann::json;

enum class FieldKind { real, integer, complex, text, flag, window, pair };

/// One configuration field of a job. Complex values are stored as [re, im],
/// windows as [x0, y0, x1, y1], pairs as [lo, hi]. A null default marks the
/// field optional unless `required` is set.
struct Field {
  std::string name;
  FieldKind kind;
  json fallback;
  std::string help;
  std::vector<std::string> choices;  // text fields only
  bool required = false;
};

struct JobSpec {
  std::string name;
  std::string help;
  std::vector<Field> fields;
};

/// Every job the CLI can run, in a fixed order.
const std::vector<JobSpec>& job_specs();
/// Throws ValidationError (field "command") for unknown names.
const JobSpec& job_spec(const std::string& name);

/// Defaults of every field; required fields are null.
json job_defaults(const std::string& name);

/// Checks `overrides` against the schema and fills in defaults. Unknown keys,
/// type mismatches, bad choices and missing required fields raise
/// ValidationError naming the field.
json resolve_config(const std::string& name, const json& overrides);

/// Parses "re" or "re,im" into [re, im].
json parse_complex(const std::string& text, const std::string& field);

/// Converts a command-line or query string to a value of the field's kind.
json parse_field(const Field& field, const std::string& text);

struct Artifact {
  std::string bytes;
  std::string media_type;
  bool partial = false;  // a wall-clock budget cut the computation
};

/// Runs a job on a resolved configuration. The bytes depend only on the
/// configuration, except for partial results.
Artifact run_job(const std::string& name, const json& resolved);

/// Run manifest: resolved configuration, versions, timings and the artifact.
json make_manifest(const std::string& name, const json& resolved, const Artifact& artifact,
                   const std::string& artifact_path, double wall_ms);

/// Library and build versions recorded in manifests and /meta.
json version_info();

/// File name extension for a media type ("hslc", "png", ...).
std::string extension_for(const std::string& media_type);

}  // namespace henonlab::app
