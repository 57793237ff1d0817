// Copyright 2026 The ngtestbed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "ng/wire.hpp"

namespace ng::net {

/// Anything that answers NGP/1 requests.
class Service {
 public:
  virtual ~Service() = default;
  virtual wire::Response handle(const wire::Request& req) = 0;
};

/// Decode, dispatch, encode. Malformed input yields a 400 response, handler
/// exceptions a 500; the caller always gets exactly one response frame.
std::string serve_bytes(Service& service, std::string_view bytes);

class TransportError : public Error {
 public:
  using Error::Error;
};

struct Endpoint {
  std::string host;
  int port = 0;
  std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// Accepts "host:port", "ngp://host:port" or "ngse://host:port/path".
Endpoint parse_endpoint(std::string_view url);
std::string endpoint_key(std::string_view url);

class Transport {
 public:
  virtual ~Transport() = default;
  /// `from_role` only feeds transfer accounting; it is never sent.
  virtual wire::Response call(const std::string& endpoint, const wire::Request& req,
                              std::string_view from_role = "ui") = 0;
};

enum class Purpose { Control, Payload };

struct TransferRecord {
  std::string from;
  std::string to;
  std::size_t bytes = 0;
  Purpose purpose = Purpose::Control;
  wire::Verb verb = wire::Verb::Query;
};

class TransferLedger {
 public:
  void record(TransferRecord r);
  std::vector<TransferRecord> snapshot() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<TransferRecord> rows_;
};

/// Direct dispatch through the same encoded bytes a socket would carry.
class InProcessNetwork final : public Transport {
 public:
  void bind(const std::string& endpoint, Service* service, std::string role);
  void unbind(const std::string& endpoint);
  void set_down(const std::string& endpoint, bool down);
  bool is_down(const std::string& endpoint) const;

  wire::Response call(const std::string& endpoint, const wire::Request& req, std::string_view from_role) override;

  /// Raw byte delivery, bypassing the client-side encoder.
  std::string deliver(const std::string& endpoint, std::string_view bytes);

  std::string role_of(const std::string& endpoint) const;
  TransferLedger& ledger() { return ledger_; }
  void set_accounting(bool on) { accounting_ = on; }

 private:
  struct Binding {
    Service* service = nullptr;
    std::string role;
    bool down = false;
  };
  Binding lookup(const std::string& endpoint) const;

  mutable std::mutex mu_;
  std::map<std::string, Binding> bindings_;
  TransferLedger ledger_;
  std::atomic<bool> accounting_{true};
};

class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(Duration timeout = std::chrono::seconds{10}) : timeout_(timeout) {}
  wire::Response call(const std::string& endpoint, const wire::Request& req, std::string_view from_role) override;

 private:
  Duration timeout_;
};

/// Thread-per-connection server. "Connection: keep-alive" keeps the socket
/// open for further requests.
class TcpServer {
 public:
  TcpServer(Service& service, std::string host, int port);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  void start();
  void stop();
  int port() const { return port_; }

 private:
  void accept_loop();
  void serve_connection(int fd, std::atomic<bool>& done);

  Service& service_;
  std::string host_;
  int port_;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex conn_mu_;
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::vector<Worker> workers_;
  std::set<int> open_fds_;
};

}  // namespace ng::net
