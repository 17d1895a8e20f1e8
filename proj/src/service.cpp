#include "wia/service.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "wia/errors.hpp"
#include "wia/evolution.hpp"
#include "wia/io.hpp"
#include "wia/json_util.hpp"
#include "wia/pipeline.hpp"

namespace wia {

using ojson = nlohmann::ordered_json;

namespace {

struct ApiError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void not_found(const std::string& what) { throw ApiError{404, "not_found", what}; }

HttpResponse json_response(int status, const ojson& body) { return {status, body.dump()}; }

HttpResponse error_response(int status, const std::string& code, const std::string& message) {
  return json_response(status, {{"error", {{"code", code}, {"message", message}}}});
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ojson parse_body(std::string_view body) {
  if (body.empty()) return ojson::object();
  return parse_json<ojson>(body);
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    std::size_t j = i;
    while (j < path.size() && path[j] != '/') ++j;
    if (j > i) parts.emplace_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

ojson annotation_json(const Annotation& a) {
  return {{"cell", format_address(a.cell)},
          {"verdict", std::string(verdict_name(a.verdict))},
          {"anchor", a.anchor},
          {"round", a.round}};
}

struct StoredWorkbook {
  std::string id;
  std::shared_ptr<const CompiledWorkbook> compiled;
};

struct SessionEntry {
  SessionEntry(std::string id_, std::string workbook_id_, Workbook base, GaConfig config)
      : id(std::move(id_)),
        workbook_id(std::move(workbook_id_)),
        created_at(utc_timestamp()),
        session(std::move(base), config) {}

  std::mutex mutex;
  std::string id;
  std::string workbook_id;
  std::string created_at;
  EvolutionSession session;
  std::map<std::string, Genome> genomes;
  std::string current_genome_id;
  std::size_t steps = 0;
};

}  // namespace

struct Service::Impl {
  std::shared_mutex registry_mutex;
  std::map<std::string, std::shared_ptr<const StoredWorkbook>> workbooks;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions;
  std::atomic<std::size_t> next_workbook{1};
  std::atomic<std::size_t> next_session{1};

  std::shared_ptr<const StoredWorkbook> workbook(const std::string& id) {
    std::shared_lock lock(registry_mutex);
    auto it = workbooks.find(id);
    if (it == workbooks.end()) not_found("unknown workbook '" + id + "'");
    return it->second;
  }

  std::shared_ptr<SessionEntry> session(const std::string& id) {
    std::shared_lock lock(registry_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) not_found("unknown session '" + id + "'");
    return it->second;
  }

  HttpResponse post_workbook(std::string_view body) {
    auto compiled = std::make_shared<const CompiledWorkbook>(load_workbook(body));
    auto stored = std::make_shared<StoredWorkbook>();
    stored->id = "wb-" + std::to_string(next_workbook++);
    stored->compiled = std::move(compiled);
    {
      std::unique_lock lock(registry_mutex);
      workbooks.emplace(stored->id, stored);
    }
    spdlog::info("stored workbook {} ({} cells)", stored->id, stored->compiled->workbook().cell_count());
    return json_response(201, {{"id", stored->id}});
  }

  HttpResponse get_graph(const std::string& id, const std::map<std::string, std::string>& query) {
    auto stored = workbook(id);
    GraphLevel level = GraphLevel::Group;
    if (auto it = query.find("level"); it != query.end()) {
      auto parsed = parse_graph_level(it->second);
      if (!parsed) throw ApiError{400, "bad_request", "level must be 'group' or 'cell'"};
      level = *parsed;
    }
    return {200, export_json(analyze(*stored->compiled, level).graph)};
  }

  HttpResponse get_values(const std::string& id) {
    auto stored = workbook(id);
    return {200, export_values_json(evaluate(*stored->compiled))};
  }

  HttpResponse post_session(std::string_view body) {
    const ojson req = parse_body(body);
    if (!req.is_object()) throw SchemaError("", "request must be an object");
    if (!req.contains("workbook_id") || !req["workbook_id"].is_string())
      throw SchemaError("/workbook_id", "must be a string");
    const std::string workbook_id = req["workbook_id"].get<std::string>();
    GaConfig config;
    if (req.contains("config")) {
      try {
        config = parse_ga_config(req["config"].dump());
      } catch (const SchemaError& e) {
        throw SchemaError("/config" + e.path(), e.message());
      }
    }
    auto stored = workbook(workbook_id);
    const std::string id = "sess-" + std::to_string(next_session++);
    auto entry = std::make_shared<SessionEntry>(id, workbook_id, stored->compiled->workbook(), config);
    entry->current_genome_id = "m0-0";
    entry->genomes.emplace(entry->current_genome_id, entry->session.current());
    {
      std::unique_lock lock(registry_mutex);
      sessions.emplace(id, entry);
    }
    spdlog::info("created session {} on {} ({} genes)", id, workbook_id, entry->session.model().gene_count());
    return json_response(201, {{"id", id}, {"created_at", entry->created_at}, {"workbook_id", workbook_id}});
  }

  static ojson session_state(const SessionEntry& e) {
    ojson anns = ojson::array();
    for (const auto& a : e.session.annotations()) anns.push_back(annotation_json(a));
    return {{"id", e.id},
            {"workbook_id", e.workbook_id},
            {"created_at", e.created_at},
            {"round", e.session.round()},
            {"status", std::string(status_name(e.session.status()))},
            {"genes", e.session.model().gene_count()},
            {"annotations", std::move(anns)},
            {"fitness_terms", e.session.fitness() ? e.session.fitness()->terms.size() : 0},
            {"current_genome_id", e.current_genome_id}};
  }

  HttpResponse get_session(const std::string& id) {
    auto entry = session(id);
    std::lock_guard lock(entry->mutex);
    return json_response(200, session_state(*entry));
  }

  static std::vector<Annotation> read_annotations(const SessionEntry& e, const ojson& list) {
    return parse_annotations(list.dump(), e.session.model().base().workbook().default_sheet());
  }

  HttpResponse post_annotations(const std::string& id, std::string_view body) {
    auto entry = session(id);
    const ojson req = parse_body(body);
    std::lock_guard lock(entry->mutex);
    entry->session.add_annotations(read_annotations(*entry, req));
    spdlog::info("session {}: {} annotations", id, entry->session.annotations().size());
    return json_response(200, session_state(*entry));
  }

  HttpResponse post_step(const std::string& id, std::string_view body) {
    auto entry = session(id);
    const ojson req = parse_body(body);
    if (!req.is_object()) throw SchemaError("", "request must be an object");
    std::size_t generations = 50;
    if (req.contains("generations")) {
      if (!req["generations"].is_number_unsigned() || req["generations"].get<std::size_t>() < 1)
        throw SchemaError("/generations", "must be a positive integer");
      generations = req["generations"].get<std::size_t>();
    }
    std::lock_guard lock(entry->mutex);
    const StepResult step = evolve_step(entry->session, generations);
    const std::size_t n = ++entry->steps;

    std::set<CellAddress> targets;
    for (const auto& a : entry->session.annotations()) targets.insert(a.cell);

    ojson candidates = ojson::array();
    auto add = [&](const Genome& g, double fitness, std::size_t index) {
      const std::string gid = "m" + std::to_string(n) + "-" + std::to_string(index);
      entry->genomes.emplace(gid, g);
      const EvalResult r = entry->session.model().evaluate(g, targets);
      ojson values = ojson::object();
      for (const auto& at : targets) values[format_address(at)] = value_to_json(r.values.at(at));
      candidates.push_back({{"genome_id", gid},
                            {"fitness", fitness},
                            {"coefficients", g.values},
                            {"values", std::move(values)}});
    };
    add(step.best, step.best_fitness, 0);
    for (std::size_t i = 0; i < step.sample.size(); ++i) add(step.sample[i], step.sample_fitness[i], i + 1);
    spdlog::info("session {}: step {} ({} generations) best fitness {}", id, n, generations, step.best_fitness);
    return json_response(200, {{"round", entry->session.round()},
                               {"best_fitness", step.best_fitness},
                               {"history", step.history},
                               {"candidates", std::move(candidates)}});
  }

  static const Genome& lookup_genome(const SessionEntry& e, const std::string& gid) {
    auto it = e.genomes.find(gid);
    if (it == e.genomes.end()) not_found("unknown genome '" + gid + "'");
    return it->second;
  }

  static std::string genome_id_field(const ojson& req, bool required, const std::string& fallback) {
    if (!req.contains("genome_id")) {
      if (required) throw SchemaError("/genome_id", "must be a string");
      return fallback;
    }
    if (!req["genome_id"].is_string()) throw SchemaError("/genome_id", "must be a string");
    return req["genome_id"].get<std::string>();
  }

  HttpResponse post_choose(const std::string& id, std::string_view body) {
    auto entry = session(id);
    const ojson req = parse_body(body);
    if (!req.is_object()) throw SchemaError("", "request must be an object");
    std::lock_guard lock(entry->mutex);
    const std::string gid = genome_id_field(req, true, "");
    const Genome chosen = lookup_genome(*entry, gid);
    std::vector<Annotation> anns;
    if (req.contains("annotations")) {
      try {
        anns = read_annotations(*entry, req["annotations"]);
      } catch (const SchemaError& e) {
        throw SchemaError("/annotations" + e.path(), e.message());
      }
    }
    advance_round(entry->session, std::move(anns), chosen);
    entry->current_genome_id = gid;
    spdlog::info("session {}: round {} with {}", id, entry->session.round(), gid);
    return json_response(200, session_state(*entry));
  }

  HttpResponse post_accept(const std::string& id, std::string_view body) {
    auto entry = session(id);
    const ojson req = parse_body(body);
    if (!req.is_object()) throw SchemaError("", "request must be an object");
    std::lock_guard lock(entry->mutex);
    const std::string gid = genome_id_field(req, false, entry->current_genome_id);
    accept_model(entry->session, lookup_genome(*entry, gid));
    entry->current_genome_id = gid;
    return json_response(200, session_state(*entry));
  }

  HttpResponse get_export(const std::string& id, const std::map<std::string, std::string>& query) {
    auto entry = session(id);
    std::lock_guard lock(entry->mutex);
    auto it = query.find("genome_id");
    const std::string gid = it == query.end() ? entry->current_genome_id : it->second;
    return {200, save_workbook(export_model(entry->session, lookup_genome(*entry, gid)))};
  }

  HttpResponse route(std::string_view method, std::string_view path,
                     const std::map<std::string, std::string>& query, std::string_view body) {
    const auto parts = split_path(path);
    const bool get = method == "GET";
    const bool post = method == "POST";
    if (parts.size() == 1 && parts[0] == "workbooks" && post) return post_workbook(body);
    if (parts.size() == 3 && parts[0] == "workbooks") {
      if (parts[2] == "graph" && get) return get_graph(parts[1], query);
      if (parts[2] == "values" && get) return get_values(parts[1]);
    }
    if (parts.size() == 1 && parts[0] == "sessions" && post) return post_session(body);
    if (parts.size() == 2 && parts[0] == "sessions" && get) return get_session(parts[1]);
    if (parts.size() == 3 && parts[0] == "sessions") {
      if (parts[2] == "annotations" && post) return post_annotations(parts[1], body);
      if (parts[2] == "step" && post) return post_step(parts[1], body);
      if (parts[2] == "choose" && post) return post_choose(parts[1], body);
      if (parts[2] == "accept" && post) return post_accept(parts[1], body);
      if (parts[2] == "export" && get) return get_export(parts[1], query);
    }
    not_found("no route for " + std::string(method) + " " + std::string(path));
  }
};

Service::Service() : impl_(std::make_unique<Impl>()) { configure_logging(); }
Service::~Service() = default;

HttpResponse Service::handle(std::string_view method, std::string_view path,
                             const std::map<std::string, std::string>& query, std::string_view body) {
  HttpResponse r;
  try {
    r = impl_->route(method, path, query, body);
  } catch (const ApiError& e) {
    r = error_response(e.status, e.code, e.message);
  } catch (const SchemaError& e) {
    r = error_response(400, "schema_error", e.what());
  } catch (const ParseFailure& e) {
    r = error_response(400, "parse_failure", e.what());
  } catch (const DuplicateCell& e) {
    r = error_response(400, "duplicate_cell", e.what());
  } catch (const UnknownCell& e) {
    r = error_response(400, "unknown_cell", e.what());
  } catch (const MalformedAddress& e) {
    r = error_response(400, "malformed_address", e.what());
  } catch (const NoAnnotations& e) {
    r = error_response(409, "no_annotations", e.what());
  } catch (const AnchorMismatch& e) {
    r = error_response(409, "anchor_mismatch", e.what());
  } catch (const UnknownGenome& e) {
    r = error_response(409, "genome_not_offered", e.what());
  } catch (const SessionClosed& e) {
    r = error_response(409, "session_closed", e.what());
  } catch (const std::invalid_argument& e) {
    r = error_response(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    r = error_response(500, "internal", e.what());
  }
  spdlog::debug("{} {} -> {}", method, path, r.status);
  return r;
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;
  bool bound = false;

  explicit Impl(Service& s) : service(s) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query.emplace(k, v);
      const HttpResponse r = service.handle(req.method, req.path, query, req.body);
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound_port = port;
  if (port == 0) {
    bound_port = impl_->server.bind_to_any_port(host);
    if (bound_port < 0) throw IoError("cannot bind " + host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return bound_port;
}

void HttpServer::run() {
  if (!impl_->bound) throw std::logic_error("HttpServer::run before bind");
  impl_->server.listen_after_bind();
}

void HttpServer::start() {
  if (!impl_->bound) throw std::logic_error("HttpServer::start before bind");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] { spdlog::set_default_logger(spdlog::stderr_color_mt("wia")); });
  const char* env = std::getenv("WIA_LOG");
  const std::string level = env ? env : "off";
  if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else if (level == "info")
    spdlog::set_level(spdlog::level::info);
  else
    spdlog::set_level(spdlog::level::off);
}

}  // namespace wia
