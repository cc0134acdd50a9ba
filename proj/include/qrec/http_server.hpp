#pragma once

#include <memory>
#include <string>

#include "qrec/error.hpp"
#include "qrec/session_service.hpp"

namespace qrec {

int http_status(ErrorCode code);

/// JSON API over a SessionService. Error bodies are
/// `{"error_code", "message", "position"?}`.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the port; 0 picks a free one. Throws StorageError
  /// when the address is unavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qrec
