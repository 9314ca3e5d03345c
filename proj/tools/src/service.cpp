#include "henonlab_app/service.hpp"

#include <httplib.h>

#include <iostream>
#include <set>

#include "henonlab/errors.hpp"
#include "henonlab/parallel.hpp"
#include "henonlab_app/jobs.hpp"

namespace henonlab::app {

namespace {

constexpr const char* kHslc = "application/x-hslc";

// Query keys that differ from job field names.
struct Route {
  std::string job;
  std::map<std::string, std::string> rename;  // query key -> field
  std::set<std::string> keys;                 // accepted query keys
  bool window = false;                        // x0 y0 x1 y1 form the window field
};

const Route& dyn_route() {
  static const Route r{"render-slice",
                       {{"w", "width"}, {"h", "height"}},
                       {"a", "b", "saddle", "side", "w", "h", "depth", "boundary_factor"},
                       true};
  return r;
}

const Route& param_route() {
  static const Route r{"render-param",
                       {{"w", "width"}, {"h", "height"}},
                       {"probe", "region", "b", "w", "h", "grid", "depth", "census_n", "measure_period", "seed"},
                       true};
  return r;
}

const Route& verdict_route() {
  static const Route r{"connectivity-2d",
                       {{"w", "width"}, {"h", "height"}},
                       {"a", "b", "side", "w", "h", "grid", "depth", "period"},
                       false};
  return r;
}

std::string query_name(const Route& route, const std::string& field) {
  for (const auto& [key, name] : route.rename) {
    if (name == field) return key;
  }
  if (route.window && field == "window") return "x0";
  if (field == "period_hi") return "period";
  return field;
}

const Field* find_field(const std::string& job, const std::string& name) {
  for (const auto& f : job_spec(job).fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

json overrides_from(const Route& route, const Query& query, std::set<std::string> extra = {}) {
  json out = json::object();
  static const std::array<std::string, 4> corners = {"x0", "y0", "x1", "y1"};
  int corners_seen = 0;
  for (const auto& [key, value] : query) {
    if (query.count(key) > 1) throw ValidationError(key, "given more than once");
    if (route.window && std::find(corners.begin(), corners.end(), key) != corners.end()) {
      ++corners_seen;
      continue;
    }
    if (extra.count(key)) continue;
    if (!route.keys.count(key)) throw ValidationError(key, "unknown query parameter");
    const auto it = route.rename.find(key);
    const std::string name = it == route.rename.end() ? key : it->second;
    const Field* f = find_field(route.job, name);
    if (!f) throw ValidationError(key, "unknown query parameter");
    out[name] = parse_field(*f, value);
  }
  if (corners_seen != 0) {
    if (corners_seen != 4) throw ValidationError("window", "x0, y0, x1 and y1 must be given together");
    json w = json::array();
    for (const auto& k : corners) {
      Field f{k, FieldKind::real, nullptr, "", {}, false};
      w.push_back(parse_field(f, query.find(k)->second));
    }
    out["window"] = w;
  }
  return out;
}

Response json_response(int status, const json& body) {
  Response r;
  r.status = status;
  r.content_type = "application/json";
  r.body = body.dump();
  return r;
}

Response field_error(const std::string& field, const std::string& message) {
  return json_response(400, {{"errors", json::array({{{"field", field}, {"message", message}}})}});
}

void mark_cacheable(Response& r, bool partial) {
  if (partial) {
    r.headers.emplace_back("Cache-Control", "no-store");
    r.headers.emplace_back("X-Henonlab-Partial", "true");
  } else {
    r.headers.emplace_back("Cache-Control", "public, max-age=86400");
  }
}

bool wants_hslc(const std::string& accept) {
  return accept.find(kHslc) != std::string::npos || accept.find("application/octet-stream") != std::string::npos;
}

}  // namespace

WorkGate::WorkGate(unsigned limit) : limit_(limit == 0 ? 1 : limit) {}

WorkGate::Ticket::~Ticket() {
  if (gate_) gate_->active_.fetch_sub(1);
}

std::unique_ptr<WorkGate::Ticket> WorkGate::try_enter() {
  unsigned n = active_.load();
  while (n < limit_) {
    if (active_.compare_exchange_weak(n, n + 1)) return std::make_unique<Ticket>(this);
  }
  return nullptr;
}

Service::Service(ServiceOptions options, std::shared_ptr<WorkGate> gate)
    : options_(options), gate_(std::move(gate)) {
  if (options_.workers == 0) options_.workers = worker_count();
  if (!gate_) gate_ = std::make_shared<WorkGate>(options_.workers);
}

Response Service::handle(const std::string& path, const Query& query, const std::string& accept) const {
  const Route* route = nullptr;
  if (path == "/tile/dyn") route = &dyn_route();
  if (path == "/tile/param") route = &param_route();
  if (path == "/verdict") route = &verdict_route();
  try {
    if (path == "/meta") return meta();
    if (!route) return json_response(404, {{"error", "no such endpoint"}});
    const auto ticket = gate_->try_enter();
    if (!ticket) {
      Response r = json_response(503, {{"error", "all workers busy"}});
      r.headers.emplace_back("Retry-After", std::to_string(options_.retry_after_s));
      return r;
    }
    if (path == "/tile/dyn") return tile_dyn(query, accept);
    if (path == "/tile/param") return tile_param(query, accept);
    return verdict(query);
  } catch (const ValidationError& e) {
    const std::string field = route ? query_name(*route, e.field()) : e.field();
    const std::string what = e.what();
    return field_error(field, what.substr(std::min(what.size(), e.field().size() + 2)));
  } catch (const ResourceError& e) {
    return field_error("request", e.what());
  } catch (const std::runtime_error& e) {
    return json_response(422, {{"error", e.what()}});
  } catch (const std::exception& e) {
    return json_response(500, {{"error", e.what()}});
  }
}

Response Service::meta() const {
  json j;
  j["name"] = "henonlab";
  j["versions"] = version_info();
  j["workers"] = gate_->limit();
  j["budget_ms"] = options_.budget_ms;
  j["max_side"] = options_.max_side;
  j["max_cost"] = options_.max_cost;
  j["formats"] = {"image/png", kHslc};
  const auto describe = [](const Route& r) {
    json params = json::array();
    for (const auto& k : r.keys) params.push_back(k);
    if (r.window) {
      for (const char* k : {"x0", "y0", "x1", "y1"}) params.push_back(k);
    }
    return json{{"job", r.job}, {"params", params}, {"defaults", job_defaults(r.job)}};
  };
  j["endpoints"] = {{"/tile/dyn", describe(dyn_route())},
                    {"/tile/param", describe(param_route())},
                    {"/verdict", describe(verdict_route())},
                    {"/meta", json::object()}};
  j["endpoints"]["/verdict"]["defaults"]["period"] = job_defaults("lambda")["period_hi"];
  Response r = json_response(200, j);
  mark_cacheable(r, false);
  return r;
}

Response Service::tile_dyn(const Query& query, const std::string& accept) const {
  json o = overrides_from(dyn_route(), query);
  for (const char* side : {"width", "height"}) {
    if (o.contains(side) && o[side].get<long long>() > options_.max_side) {
      throw ValidationError(side, "must be at most " + std::to_string(options_.max_side));
    }
  }
  o["format"] = wants_hslc(accept) ? "hslc" : "png";
  o["budget_ms"] = options_.budget_ms;
  const Artifact a = run_job("render-slice", o);
  Response r{200, a.media_type, a.bytes, {{"Vary", "Accept"}}};
  mark_cacheable(r, a.partial);
  return r;
}

Response Service::tile_param(const Query& query, const std::string& accept) const {
  json o = overrides_from(param_route(), query);
  for (const char* side : {"width", "height"}) {
    if (o.contains(side) && o[side].get<long long>() > options_.max_side) {
      throw ValidationError(side, "must be at most " + std::to_string(options_.max_side));
    }
  }
  o["format"] = wants_hslc(accept) ? "hslc" : "png";
  o["budget_ms"] = options_.budget_ms;
  o["max_cost"] = options_.max_cost;
  const Artifact a = run_job("render-param", o);
  Response r{200, a.media_type, a.bytes, {{"Vary", "Accept"}}};
  mark_cacheable(r, a.partial);
  return r;
}

Response Service::verdict(const Query& query) const {
  json o = overrides_from(verdict_route(), query, {"period"});
  o["budget_ms"] = options_.budget_ms;
  json lo = {{"a", o.value("a", json())}, {"b", o.value("b", json())}};
  if (const auto it = query.find("period"); it != query.end()) {
    lo["period_hi"] = parse_field(Field{"period", FieldKind::integer, nullptr, "", {}, false}, it->second);
  }
  const json conn = json::parse(run_job("connectivity-2d", o).bytes);
  const json lam = json::parse(run_job("lambda", lo).bytes);
  json j;
  j["a"] = conn["a"];
  j["b"] = conn["b"];
  j["side"] = conn["side"];
  j["verdict"] = conn["verdict"];
  j["partial"] = conn["partial"];
  j["components"] = conn["components"];
  j["critical"] = conn["critical"];
  j["saddle"] = conn["saddle"];
  j["critical_points"] = conn["critical_points"];
  j["lambda"] = lam;
  Response r = json_response(200, j);
  mark_cacheable(r, conn["partial"].get<bool>());
  return r;
}

void Service::mount(httplib::Server& server) const {
  const auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = handle(req.path, req.params, req.get_header_value("Accept"));
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body, r.content_type);
  };
  for (const char* path : {"/meta", "/tile/dyn", "/tile/param", "/verdict"}) server.Get(path, handler);
}

int serve(const std::string& host, int port, const ServiceOptions& options) {
  const Service service(options, nullptr);
  httplib::Server server;
  const unsigned threads = service.options().workers + 4;
  server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  service.mount(server);
  if (!server.bind_to_port(host, port)) throw ValidationError("port", "cannot bind " + host + ":" + std::to_string(port));
  std::cerr << "henonlab serve: listening on " << host << ":" << port << " with " << service.options().workers
            << " workers\n";
  return server.listen_after_bind() ? 0 : 1;
}

}  // namespace henonlab::app
