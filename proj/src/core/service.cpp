#include "core/service.hpp"

#include <atomic>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_map>

#include "core/error.hpp"
#include "core/pipeline.hpp"
#include "core/render.hpp"
#include "core/scenario.hpp"
#include "httplib.h"
#include "json.hpp"

namespace lumen::service {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

Response json_response(int status, const json& j) {
  Response r;
  r.status = status;
  r.body = j.dump();
  return r;
}

Response error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

json indices_fields(const assess::PollutionIndices& ix) {
  json j = {{"tnl", ix.tnl}, {"nld", ix.nld}, {"nlsd", ix.nlsd}, {"score", ix.score}};
  j["level"] = ix.level ? json(*ix.level) : json(nullptr);
  return j;
}

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

}  // namespace

struct Session {
  scenario::InterventionSpec spec;
  ingest::CityDataset intervened;
  std::string report;
};

struct Service::Impl {
  ServiceOptions options;
  pipeline::WorkspaceView view;
  std::unordered_map<std::string, std::size_t> poi_index;

  std::once_flag baseline_once;
  std::unique_ptr<scenario::Baseline> baseline;

  mutable std::mutex sessions_mu;
  struct Entry {
    std::shared_ptr<const Session> session;
    Clock::time_point last_used;
  };
  std::unordered_map<std::string, Entry> sessions;

  httplib::Server server;
  std::thread worker;
  std::atomic<int> bound_port{-1};

  const scenario::Baseline& get_baseline() {
    std::call_once(baseline_once, [&] {
      baseline = std::make_unique<scenario::Baseline>(scenario::make_baseline(*view.dataset, *view.params));
    });
    return *baseline;
  }

  void evict_locked(Clock::time_point now) {
    for (auto it = sessions.begin(); it != sessions.end();) {
      if (now - it->second.last_used > options.session_ttl) it = sessions.erase(it);
      else ++it;
    }
  }

  std::shared_ptr<const Session> find_session(const std::string& id) {
    std::lock_guard lock(sessions_mu);
    const auto now = Clock::now();
    evict_locked(now);
    const auto it = sessions.find(id);
    if (it == sessions.end()) return nullptr;
    it->second.last_used = now;
    return it->second.session;
  }

  void store_session(const std::string& id, std::shared_ptr<const Session> s) {
    std::lock_guard lock(sessions_mu);
    const auto now = Clock::now();
    evict_locked(now);
    sessions[id] = {std::move(s), now};
  }

  Response areas() {
    if (!view.indices) return error_response(503, "not assessed");
    json arr = json::array();
    for (const auto& [id, ix] : *view.indices) {
      const auto& poi = view.dataset->pois[poi_index.at(id)];
      json a = {{"area_id", id}, {"lon", poi.lon}, {"lat", poi.lat}, {"score", ix.score}};
      a["level"] = ix.level ? json(*ix.level) : json(nullptr);
      arr.push_back(std::move(a));
    }
    return json_response(200, arr);
  }

  Response assessment(const std::string& id) {
    if (!view.indices) return error_response(503, "not assessed");
    if (!view.indices->count(id)) return error_response(404, "unknown area '" + id + "'");
    const auto& b = get_baseline();
    const auto* area = b.find_area(id);
    if (!area) return error_response(404, "unknown area '" + id + "'");
    auto ix = assess::compute_indices(*area, b.dataset, b.params);
    ix.level = view.indices->at(id).level;
    json j = {{"area_id", id}};
    j.update(indices_fields(ix));
    json members = json::array();
    for (const auto& m : assess::member_influences(*area, b.dataset, b.params)) {
      members.push_back({{"poi_id", m.poi_id},
                         {"category", category_name(m.category)},
                         {"distance_m", m.distance_m},
                         {"ntl", m.ntl},
                         {"influence", m.influence}});
    }
    j["members"] = std::move(members);
    return json_response(200, j);
  }

  Response post_scenario(const std::string& body, const std::map<std::string, std::string>& headers) {
    if (!view.indices) return error_response(503, "not assessed");
    if (!view.levels) return error_response(503, "not leveled");
    if (view.indices->size() > options.max_scenario_areas)
      return error_response(413, "city has " + std::to_string(view.indices->size()) +
                                     " areas, above the scenario budget of " +
                                     std::to_string(options.max_scenario_areas));
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error&) {
      return error_response(400, "request body is not valid JSON");
    }
    scenario::ScenarioOptions so;
    if (j.is_object() && j.contains("area") && !j["area"].is_null()) {
      if (!j["area"].is_string()) return error_response(400, "area must be a string");
      so.map_area = j["area"].get<std::string>();
    }
    const auto spec = scenario::parse_spec(j);
    const auto& b = get_baseline();
    auto session = std::make_shared<Session>();
    session->spec = spec;
    session->intervened = scenario::apply_intervention(b.dataset, spec);
    session->report = scenario::report_to_string(scenario::run_scenario(b, spec, *view.levels, so));

    std::string id;
    if (auto it = headers.find("X-Scenario-Session"); it != headers.end() && find_session(it->second))
      id = it->second;
    else
      id = new_session_id();
    Response r;
    r.body = session->report;
    r.headers["X-Scenario-Session"] = id;
    store_session(id, std::move(session));
    return r;
  }

  Response map(const std::string& id, const std::map<std::string, std::string>& query) {
    if (!view.indices) return error_response(503, "not assessed");
    if (!view.indices->count(id)) return error_response(404, "unknown area '" + id + "'");
    const auto& b = get_baseline();
    const auto* area = b.find_area(id);
    if (!area) return error_response(404, "unknown area '" + id + "'");
    Response r;
    r.content_type = "image/x-portable-pixmap";
    const auto it = query.find("scenario");
    if (it == query.end() || it->second.empty()) {
      r.body = render::encode_ppm(render::render_area(*area, b.dataset, b.params));
      return r;
    }
    const auto session = find_session(it->second);
    if (!session) return error_response(404, "unknown scenario session '" + it->second + "'");
    r.body = render::encode_ppm(scenario::render_scenario_map(b, session->intervened, id));
    return r;
  }

  Response ate(const std::map<std::string, std::string>& query) {
    const auto it = query.find("category");
    if (it == query.end()) return error_response(400, "missing category parameter");
    const auto cat = parse_category(it->second);
    if (!cat) return error_response(400, "unknown category '" + it->second + "'");
    const std::string name(category_name(*cat));
    std::vector<causal::AteRow> rows;
    if (view.ate)
      for (const auto& r : *view.ate)
        if (r.category == name) rows.push_back(r);
    if (rows.empty()) return error_response(404, "no DML results for '" + name + "'");
    return json_response(200, causal::ate_rows_to_json(rows));
  }

  Response dispatch(const std::string& method, const std::string& path, const std::string& body,
                    const std::map<std::string, std::string>& query,
                    const std::map<std::string, std::string>& headers) {
    if (method == "OPTIONS") {
      Response r;
      r.status = 204;
      r.content_type.clear();
      return r;
    }
    const std::string areas_prefix = "/api/areas/";
    if (path == "/api/health") {
      if (method != "GET") return error_response(405, "method not allowed");
      return json_response(200, {{"status", "ok"}});
    }
    if (path == "/api/areas") {
      if (method != "GET") return error_response(405, "method not allowed");
      return areas();
    }
    if (path == "/api/scenario") {
      if (method != "POST") return error_response(405, "method not allowed");
      return post_scenario(body, headers);
    }
    if (path == "/api/ate") {
      if (method != "GET") return error_response(405, "method not allowed");
      return ate(query);
    }
    if (path.rfind(areas_prefix, 0) == 0) {
      const std::string rest = path.substr(areas_prefix.size());
      const auto slash = rest.rfind('/');
      if (slash != std::string::npos && slash > 0) {
        const std::string id = rest.substr(0, slash);
        const std::string leaf = rest.substr(slash + 1);
        if (leaf == "assessment" || leaf == "map") {
          if (method != "GET") return error_response(405, "method not allowed");
          return leaf == "map" ? map(id, query) : assessment(id);
        }
      }
    }
    return error_response(404, "no route for " + method + " " + path);
  }

  Response handle(const std::string& method, const std::string& path, const std::string& body,
                  const std::map<std::string, std::string>& query,
                  const std::map<std::string, std::string>& headers) {
    Response r;
    try {
      r = dispatch(method, path, body, query, headers);
    } catch (const scenario::SpecError& e) {
      r = error_response(400, e.what());
    } catch (const NotFoundError& e) {
      r = error_response(404, e.what());
    } catch (const DomainError& e) {
      r = error_response(400, e.what());
    } catch (const ParseError& e) {
      r = error_response(400, e.what());
    } catch (const std::exception& e) {
      r = error_response(500, e.what());
    }
    if (!options.cors_origin.empty()) {
      r.headers["Access-Control-Allow-Origin"] = options.cors_origin;
      r.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
      r.headers["Access-Control-Allow-Headers"] = "Content-Type, X-Scenario-Session";
      r.headers["Access-Control-Expose-Headers"] = "X-Scenario-Session";
      r.headers["Vary"] = "Origin";
    }
    return r;
  }

  int bind(const std::string& host, int port) {
    int bound = -1;
    if (port == 0) bound = server.bind_to_any_port(host);
    else if (server.bind_to_port(host, port)) bound = port;
    if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    bound_port = bound;
    return bound;
  }

  void install_routes() {
    auto bridge = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query.emplace(k, v);
      std::map<std::string, std::string> headers;
      if (req.has_header("X-Scenario-Session"))
        headers["X-Scenario-Session"] = req.get_header_value("X-Scenario-Session");
      const auto r = handle(req.method, req.path, req.body, query, headers);
      res.status = r.status;
      for (const auto& [k, v] : r.headers) res.set_header(k, v);
      if (!r.content_type.empty()) res.set_content(r.body, r.content_type);
    };
    server.Get(".*", bridge);
    server.Post(".*", bridge);
    server.Options(".*", bridge);
  }
};

Service::Service(std::filesystem::path workspace, ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->view = pipeline::load_view(workspace);
  if (impl_->view.dataset) {
    const auto& pois = impl_->view.dataset->pois;
    for (std::size_t i = 0; i < pois.size(); ++i) impl_->poi_index.emplace(pois[i].id, i);
  }
  if (impl_->view.indices) {
    for (const auto& [id, ix] : *impl_->view.indices)
      if (!impl_->poi_index.count(id)) throw StaleError("indices.csv names unknown area '" + id + "'");
  }
  impl_->install_routes();
}

Service::~Service() { stop(); }

Response Service::handle(const std::string& method, const std::string& path, const std::string& body,
                         const std::map<std::string, std::string>& query,
                         const std::map<std::string, std::string>& headers) {
  return impl_->handle(method, path, body, query, headers);
}

int Service::start(const std::string& host, int port) {
  if (impl_->worker.joinable()) throw Error("service is already running");
  const int bound = impl_->bind(host, port);
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::listen(const std::string& host, int port) {
  impl_->bind(host, port);
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

int Service::port() const { return impl_->bound_port; }

std::size_t Service::session_count() const {
  std::lock_guard lock(impl_->sessions_mu);
  return impl_->sessions.size();
}

}  // namespace lumen::service
