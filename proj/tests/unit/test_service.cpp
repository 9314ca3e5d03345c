#include <doctest.h>
#include <httplib.h>

#include <cmath>
#include <future>
#include <thread>

#include "henonlab_app/jobs.hpp"
#include "henonlab_app/service.hpp"

using namespace henonlab::app;

namespace {

const char* kHslc = "application/x-hslc";

ServiceOptions small_options(unsigned workers = 2) {
  ServiceOptions o;
  o.workers = workers;
  o.budget_ms = 0;
  return o;
}

std::string header(const Response& r, const std::string& key) {
  for (const auto& [k, v] : r.headers) {
    if (k == key) return v;
  }
  return {};
}

// Runs the service on an ephemeral port for the lifetime of the object.
class LiveServer {
 public:
  explicit LiveServer(const Service& service) {
    service.mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(120, 0);
    return c;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

const Query dyn_query = {{"a", "6"}, {"b", "0.3"}, {"w", "64"}, {"h", "48"}, {"depth", "80"}};

}  // namespace

TEST_CASE("meta lists endpoints and defaults") {
  const Service service(small_options(), nullptr);
  const Response r = service.handle("/meta", {}, "");
  CHECK(r.status == 200);
  const json j = json::parse(r.body);
  CHECK(j["workers"] == 2);
  for (const char* e : {"/tile/dyn", "/tile/param", "/verdict", "/meta"}) CHECK(j["endpoints"].contains(e));
  CHECK(j["endpoints"]["/tile/dyn"]["defaults"]["depth"] == 200);
}

TEST_CASE("validation failures are 400 with field errors") {
  const Service service(small_options(), nullptr);
  const auto field = [&](const std::string& path, const Query& q) {
    const Response r = service.handle(path, q, "");
    CHECK(r.status == 400);
    const json j = json::parse(r.body);
    return j["errors"][0]["field"].get<std::string>();
  };
  CHECK(field("/tile/dyn", {{"a", "6"}, {"b", "0"}}) == "b");
  CHECK(field("/tile/dyn", {{"a", "6"}, {"b", "0.3"}, {"colour", "red"}}) == "colour");
  CHECK(field("/tile/dyn", {{"a", "6"}, {"b", "0.3"}, {"w", "5000"}}) == "w");
  CHECK(field("/tile/dyn", {{"a", "6"}, {"b", "0.3"}, {"x0", "-1"}}) == "x0");
  CHECK(field("/tile/dyn", {{"b", "0.3"}}) == "a");
  CHECK(field("/verdict", {{"a", "6"}, {"b", "0"}}) == "b");
  CHECK(field("/tile/param", {{"probe", "weather"}}) == "probe");
  CHECK(service.handle("/nowhere", {}, "").status == 404);
}

TEST_CASE("a saturated pool answers 503 with Retry-After") {
  auto gate = std::make_shared<WorkGate>(1);
  const Service service(small_options(1), gate);
  {
    const auto held = gate->try_enter();
    REQUIRE(held);
    CHECK_FALSE(gate->try_enter());
    const Response r = service.handle("/tile/dyn", dyn_query, "");
    CHECK(r.status == 503);
    CHECK(header(r, "Retry-After") == "1");
    CHECK(service.handle("/meta", {}, "").status == 200);
  }
  CHECK(gate->active() == 0);
  CHECK(service.handle("/tile/dyn", dyn_query, "").status == 200);
}

TEST_CASE("tiles match the job artifact and are cacheable") {
  const Service service(small_options(), nullptr);
  const Response hslc = service.handle("/tile/dyn", dyn_query, kHslc);
  REQUIRE(hslc.status == 200);
  CHECK(hslc.content_type == kHslc);
  const json cfg = {{"a", 6.0}, {"b", 0.3}, {"width", 64}, {"height", 48}, {"depth", 80}};
  CHECK(hslc.body == run_job("render-slice", cfg).bytes);
  CHECK(header(hslc, "Cache-Control").find("max-age") != std::string::npos);

  const Response png = service.handle("/tile/dyn", dyn_query, "image/png");
  CHECK(png.content_type == "image/png");
  json png_cfg = cfg;
  png_cfg["format"] = "png";
  CHECK(png.body == run_job("render-slice", png_cfg).bytes);
  CHECK(service.handle("/tile/dyn", dyn_query, "").body == png.body);

  const Query param = {{"w", "6"}, {"h", "4"}, {"grid", "12"}, {"depth", "60"}};
  const Response p1 = service.handle("/tile/param", param, kHslc);
  REQUIRE(p1.status == 200);
  CHECK(p1.body == service.handle("/tile/param", param, kHslc).body);
}

TEST_CASE("over-budget tiles are flagged partial and not cached") {
  ServiceOptions o = small_options();
  o.budget_ms = 1;
  const Service service(o, nullptr);
  const Query big = {{"a", "6"}, {"b", "0.3"}, {"w", "1024"}, {"h", "1024"}, {"depth", "2000"}};
  const Response r = service.handle("/tile/dyn", big, kHslc);
  CHECK(r.status == 200);
  CHECK(header(r, "X-Henonlab-Partial") == "true");
  CHECK(header(r, "Cache-Control") == "no-store");
}

TEST_CASE("live server: verdict, validation and tiles over HTTP") {
  const Service service(small_options(), nullptr);
  const LiveServer live(service);
  httplib::Client client = live.client();

  const auto verdict = client.Get("/verdict?a=6&b=0.3");
  REQUIRE(verdict);
  CHECK(verdict->status == 200);
  const json v = json::parse(verdict->body);
  CHECK(v["verdict"] == "unstably_disconnected");
  CHECK(v["lambda"]["plus"]["value"].get<double>() > std::log(2.0));
  CHECK(verdict->body == client.Get("/verdict?a=6&b=0.3")->body);

  const auto bad = client.Get("/tile/dyn?a=6&b=0");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body)["errors"][0]["field"] == "b");

  const auto tile = client.Get("/tile/dyn?a=6&b=0.3&w=64&h=48&depth=80", {{"Accept", kHslc}});
  REQUIRE(tile);
  CHECK(tile->status == 200);
  CHECK(tile->get_header_value("Content-Type") == kHslc);
  CHECK(tile->body == service.handle("/tile/dyn", dyn_query, kHslc).body);
}

TEST_CASE("live server: concurrent requests agree") {
  const Service service(small_options(2), nullptr);
  const LiveServer live(service);
  std::vector<std::future<std::pair<int, std::string>>> calls;
  for (int i = 0; i < 6; ++i) {
    calls.push_back(std::async(std::launch::async, [&live] {
      httplib::Client c = live.client();
      const auto r = c.Get("/tile/dyn?a=6&b=0.3&w=64&h=48&depth=80", {{"Accept", kHslc}});
      return r ? std::pair{r->status, r->body} : std::pair{-1, std::string()};
    }));
  }
  std::string body;
  int served = 0;
  for (auto& f : calls) {
    const auto [status, bytes] = f.get();
    CHECK((status == 200 || status == 503));
    if (status != 200) continue;
    ++served;
    if (body.empty()) body = bytes;
    CHECK(bytes == body);
  }
  CHECK(served >= 1);
}
