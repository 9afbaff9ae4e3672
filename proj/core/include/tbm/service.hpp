#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "tbm/advisor.hpp"
#include "tbm/sim.hpp"

namespace tbm::service {

struct ServiceConfig {
  std::filesystem::path model_dir;           // used by load() and admin reload
  std::optional<sim::DriveSpec> sim_spec;    // template for new sessions
  advisor::AdvisorConfig advisor;
  std::chrono::milliseconds tick_interval{1000};  // live stream pacing
  std::size_t max_sessions = 64;
};

// HTTP+JSON advisory service.
//
//   GET    /health
//   GET    /models
//   POST   /recommend            {ground_class, cop[5], cxp[19]}
//   POST   /session              {seed?} -> {id, ...}
//   POST   /session/{id}/step    {cop[5]} -> {record, recommendation}
//   DELETE /session/{id}
//   GET    /session/{id}/stream  text/event-stream, "event: tick"; ?ticks=N
//   POST   /admin/reload
//
// Errors: 400 malformed body, 404 unknown session or ground class,
// 409 concurrent step on one session, 503 no models loaded.
class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Loads the registry from cfg.model_dir and swaps it in.
  void load();
  void set_registry(std::shared_ptr<const advisor::Registry> registry);
  std::shared_ptr<const advisor::Registry> registry() const;

  // Blocking. Returns false if the socket could not be bound.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and serves on a background thread; returns the
  // port, or -1.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tbm::service
