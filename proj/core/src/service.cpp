#include "tbm/service.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "tbm/errors.hpp"
#include "tbm/mlp.hpp"

namespace tbm::service {

namespace {

using nlohmann::json;

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const HttpError& e) {
  send_json(res, e.status,
            json{{"schema_version", kSchemaVersion},
                 {"error", {{"code", e.code}, {"message", e.message}}}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownGroundClass:
      return 404;
    case ErrorCode::ModelNotLoaded:
    case ErrorCode::MissingModel:
      return 503;
    case ErrorCode::SessionClosed:
      return 404;
    case ErrorCode::NonFinite:
    case ErrorCode::ArityMismatch:
    case ErrorCode::NegativeMeasure:
    case ErrorCode::InvalidSpec:
      return 400;
    default:
      return 500;
  }
}

json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty()) {
    if (allow_empty) return json::object();
    throw HttpError{400, "MalformedBody", "request body is empty"};
  }
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw HttpError{400, "MalformedBody", "body must be a JSON object"};
    return j;
  } catch (const json::parse_error& e) {
    throw HttpError{400, "MalformedBody", e.what()};
  }
}

template <std::size_t N>
std::array<double, N> number_array(const json& body, const char* field) {
  if (!body.contains(field)) {
    throw HttpError{400, "MalformedBody", std::string("missing field '") + field + "'"};
  }
  const json& v = body[field];
  if (!v.is_array() || v.size() != N) {
    throw HttpError{400, "MalformedBody",
                    std::string("field '") + field + "' must be an array of " +
                        std::to_string(N) + " numbers"};
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) {
      throw HttpError{400, "MalformedBody",
                      std::string("field '") + field + "[" + std::to_string(i) + "]' is not a number"};
    }
    out[i] = v[i].get<double>();
    if (!std::isfinite(out[i])) {
      throw HttpError{400, "MalformedBody", std::string("field '") + field + "' is not finite"};
    }
  }
  return out;
}

json recommendation_json(const Recommendation& r) {
  json j = r;
  return j;
}

struct SessionSlot {
  explicit SessionSlot(const sim::DriveSpec& spec) : session(spec) {}
  std::mutex step_mutex;
  sim::Session session;
};

}  // namespace

struct Service::Impl {
  ServiceConfig cfg;
  advisor::RegistryHandle registry;
  httplib::Server server;
  std::thread thread;

  std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions;
  std::uint64_t next_id = 1;

  std::shared_ptr<const advisor::Registry> require_registry() const {
    auto r = registry.snapshot();
    if (!r || r->size() == 0) throw HttpError{503, "ModelNotLoaded", "no models loaded"};
    return r;
  }

  std::shared_ptr<SessionSlot> find_session(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw HttpError{404, "UnknownSession", "no session '" + id + "'"};
    return it->second;
  }

  json tick_json(const SensorRecord& rec) const {
    json rec_json = nlohmann::json(rec);
    json reco = nullptr;
    if (auto r = registry.snapshot(); r && r->contains(rec.ground_class)) {
      reco = recommendation_json(advisor::recommend(*r, rec.ground_class, rec.cop, rec.cxp));
    }
    return json{{"schema_version", kSchemaVersion}, {"record", rec_json}, {"recommendation", reco}};
  }

  // Wraps a handler so library and request errors map onto HTTP statuses.
  template <class F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_error(res, e);
      } catch (const Error& e) {
        send_error(res, {status_for(e.code()), std::string(to_string(e.code())), e.what()});
      } catch (const std::exception& e) {
        send_error(res, {500, "Internal", e.what()});
      }
    };
  }

  void routes();
};

void Service::Impl::routes() {
  server.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
    auto r = registry.snapshot();
    const std::size_t n = r ? r->size() : 0;
    send_json(res, 200,
              json{{"schema_version", kSchemaVersion},
                   {"status", n > 0 ? "ok" : "degraded"},
                   {"models_loaded", n}});
  }));

  server.Get("/models", guarded([this](const httplib::Request&, httplib::Response& res) {
    auto r = require_registry();
    json models = json::object();
    for (const auto& [gc, e] : r->entries()) {
      models[std::string(to_string(gc))] = {
          {"arch", e.model.architecture()},
          {"corpus_fingerprint", e.model.corpus_fingerprint},
          {"calibration", e.model.calibration ? json(*e.model.calibration) : json(nullptr)},
          {"train_config", e.model.train_config},
          {"optimality", e.optimality},
          {"index_size", e.index->size()},
          {"kernel_width", e.index->kernel_width()}};
    }
    send_json(res, 200, json{{"schema_version", kSchemaVersion}, {"models", models}});
  }));

  server.Post("/recommend", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req, false);
    if (!body.contains("ground_class") || !body["ground_class"].is_string()) {
      throw HttpError{400, "MalformedBody", "missing string field 'ground_class'"};
    }
    const GroundClass gc = parse_ground_class(body["ground_class"].get<std::string>());
    const auto cop = number_array<kNumCop>(body, "cop");
    const auto cxp = number_array<kNumCxp>(body, "cxp");
    auto r = require_registry();
    if (!r->contains(gc)) {
      throw HttpError{404, "UnknownGroundClass", "no model for " + std::string(to_string(gc))};
    }
    send_json(res, 200, recommendation_json(advisor::recommend(*r, gc, cop, cxp)));
  }));

  server.Post("/session", guarded([this](const httplib::Request& req, httplib::Response& res) {
    if (!cfg.sim_spec) throw HttpError{503, "NoSimulator", "service started without a sim spec"};
    const json body = parse_body(req, true);
    sim::DriveSpec spec = *cfg.sim_spec;
    if (body.contains("seed")) {
      if (!body["seed"].is_number_unsigned()) {
        throw HttpError{400, "MalformedBody", "field 'seed' must be a non-negative integer"};
      }
      spec.seed = body["seed"].get<std::uint64_t>();
    }
    auto slot = std::make_shared<SessionSlot>(spec);
    std::string id;
    {
      std::lock_guard lock(sessions_mutex);
      if (sessions.size() >= cfg.max_sessions) {
        throw HttpError{503, "TooManySessions", "session limit reached"};
      }
      id = "s" + std::to_string(next_id++);
      sessions.emplace(id, slot);
    }
    send_json(res, 201,
              json{{"schema_version", kSchemaVersion},
                   {"id", id},
                   {"seed", spec.seed},
                   {"ground_class", slot->session.ground_class()},
                   {"cop", slot->session.cop()}});
  }));

  server.Post(R"(/session/([^/]+)/step)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto slot = find_session(req.matches[1]);
                const json body = parse_body(req, false);
                const auto cop = number_array<kNumCop>(body, "cop");
                std::unique_lock lock(slot->step_mutex, std::try_to_lock);
                if (!lock.owns_lock()) {
                  throw HttpError{409, "StepInProgress", "another step is running on this session"};
                }
                const SensorRecord rec = slot->session.step(cop);
                send_json(res, 200, tick_json(rec));
              }));

  server.Delete(R"(/session/([^/]+))",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  std::shared_ptr<SessionSlot> slot;
                  {
                    std::lock_guard lock(sessions_mutex);
                    auto it = sessions.find(id);
                    if (it == sessions.end()) {
                      throw HttpError{404, "UnknownSession", "no session '" + id + "'"};
                    }
                    slot = it->second;
                    sessions.erase(it);
                  }
                  std::lock_guard step(slot->step_mutex);
                  slot->session.close();
                  send_json(res, 200, json{{"schema_version", kSchemaVersion}, {"closed", id}});
                }));

  server.Get(R"(/session/([^/]+)/stream)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               auto slot = find_session(req.matches[1]);
               std::size_t limit = 0;  // 0 = until the session closes
               if (req.has_param("ticks")) {
                 try {
                   limit = std::stoul(req.get_param_value("ticks"));
                 } catch (const std::exception&) {
                   throw HttpError{400, "MalformedQuery", "ticks must be a non-negative integer"};
                 }
               }
               auto sent = std::make_shared<std::size_t>(0);
               const auto interval = cfg.tick_interval;
               res.set_header("Cache-Control", "no-cache");
               res.set_chunked_content_provider(
                   "text/event-stream",
                   [this, slot, sent, limit, interval](std::size_t, httplib::DataSink& sink) {
                     if (limit != 0 && *sent >= limit) {
                       sink.done();
                       return true;
                     }
                     if (*sent > 0) std::this_thread::sleep_for(interval);
                     json payload;
                     {
                       std::lock_guard lock(slot->step_mutex);
                       if (slot->session.closed()) {
                         sink.done();
                         return true;
                       }
                       // Live mode holds the operator's current setpoints.
                       payload = tick_json(slot->session.step(slot->session.cop()));
                     }
                     const std::string event = "event: tick\ndata: " + payload.dump() + "\n\n";
                     ++*sent;
                     return sink.write(event.data(), event.size());
                   });
             }));

  server.Post("/admin/reload", guarded([this](const httplib::Request&, httplib::Response& res) {
    auto next = std::make_shared<const advisor::Registry>(
        advisor::load_registry(cfg.model_dir, cfg.advisor));
    const std::size_t n = next->size();
    registry.swap(std::move(next));
    send_json(res, 200, json{{"schema_version", kSchemaVersion}, {"models_loaded", n}});
  }));
}

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
  if (impl_->cfg.sim_spec) impl_->cfg.sim_spec->check();
  impl_->routes();
}

Service::~Service() { stop(); }

void Service::load() {
  set_registry(std::make_shared<const advisor::Registry>(
      advisor::load_registry(impl_->cfg.model_dir, impl_->cfg.advisor)));
}

void Service::set_registry(std::shared_ptr<const advisor::Registry> registry) {
  impl_->registry.swap(std::move(registry));
}

std::shared_ptr<const advisor::Registry> Service::registry() const {
  return impl_->registry.snapshot();
}

bool Service::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int Service::start_background(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) return -1;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  if (!impl_) return;
  {
    // Close sessions so open streams finish.
    std::lock_guard lock(impl_->sessions_mutex);
    for (auto& [_, slot] : impl_->sessions) {
      std::lock_guard step(slot->step_mutex);
      slot->session.close();
    }
  }
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace tbm::service
