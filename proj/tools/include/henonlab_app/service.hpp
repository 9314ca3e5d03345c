#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace httplib {
class Server;
}

namespace henonlab::app {

/// Counts requests in computation; refuses entry beyond the limit.
class WorkGate {
 public:
  explicit WorkGate(unsigned limit);

  class Ticket {
   public:
    explicit Ticket(WorkGate* gate) : gate_(gate) {}
    Ticket(Ticket&& o) noexcept : gate_(std::exchange(o.gate_, nullptr)) {}
    Ticket(const Ticket&) = delete;
    Ticket& operator=(const Ticket&) = delete;
    Ticket& operator=(Ticket&&) = delete;
    ~Ticket();

   private:
    WorkGate* gate_;
  };

  /// Null when the gate is full.
  std::unique_ptr<Ticket> try_enter();
  unsigned limit() const { return limit_; }
  unsigned active() const { return active_.load(); }

 private:
  unsigned limit_;
  std::atomic<unsigned> active_{0};
};

struct ServiceOptions {
  unsigned workers = 0;          // computation slots; 0 means worker_count()
  long long budget_ms = 60000;   // per-request wall-clock budget
  int max_side = 1024;           // largest tile width or height
  double max_cost = 2e10;        // parameter-plane cost cap
  int retry_after_s = 1;
};

struct Response {
  int status = 200;
  std::string content_type;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

using Query = std::multimap<std::string, std::string>;

/// Stateless request handling shared by the HTTP server and tests. Equal
/// queries give equal bodies unless the response is flagged partial.
class Service {
 public:
  Service(ServiceOptions options, std::shared_ptr<WorkGate> gate);

  Response handle(const std::string& path, const Query& query, const std::string& accept) const;
  void mount(httplib::Server& server) const;

  const ServiceOptions& options() const { return options_; }

 private:
  Response meta() const;
  Response tile_dyn(const Query& query, const std::string& accept) const;
  Response tile_param(const Query& query, const std::string& accept) const;
  Response verdict(const Query& query) const;

  ServiceOptions options_;
  std::shared_ptr<WorkGate> gate_;
};

/// Blocks serving on host:port until the process is stopped.
int serve(const std::string& host, int port, const ServiceOptions& options);

}  // namespace henonlab::app
