#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace wia {

struct HttpResponse {
  int status = 200;
  std::string body;  // always JSON
};

// JSON-over-HTTP front end: uploaded workbooks, their analysis, and
// in-memory evolution sessions. Every method is safe to call from several
// threads; requests against one session are serialized.
//
//   POST /workbooks                      workbook JSON -> {"id"}
//   GET  /workbooks/{id}/graph?level=    StructureGraph JSON (group|cell)
//   GET  /workbooks/{id}/values          {"S1!A1": value, ...}
//   POST /sessions                       {"workbook_id","config"?} -> handle
//   GET  /sessions/{id}                  session state
//   POST /sessions/{id}/annotations      [Annotation, ...]
//   POST /sessions/{id}/step             {"generations"?} -> candidates
//   POST /sessions/{id}/choose           {"genome_id","annotations"?}
//   POST /sessions/{id}/accept           {"genome_id"?}
//   GET  /sessions/{id}/export?genome_id= workbook JSON
//
// Errors: {"error":{"code","message"}} with 400 (bad input), 404 (unknown
// id or route) or 409 (request not valid in the session's state).
class Service {
 public:
  Service();
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpResponse handle(std::string_view method, std::string_view path,
                      const std::map<std::string, std::string>& query, std::string_view body);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Binds a Service to a TCP port.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws IoError.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocks.
  void run();
  /// Serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Sets the log level from WIA_LOG (off|info|debug); default off.
void configure_logging();

}  // namespace wia
