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

#include "ng/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace ng::net {

std::string serve_bytes(Service& service, std::string_view bytes) {
  wire::Request req;
  try {
    req = wire::decode_request(bytes);
  } catch (const wire::ProtocolError& e) {
    return wire::encode(wire::error_response(400, e.what()));
  }
  wire::Response resp;
  try {
    resp = service.handle(req);
  } catch (const std::exception& e) {
    resp = wire::error_response(500, e.what());
  }
  try {
    return wire::encode(resp);
  } catch (const wire::EncodingError& e) {
    return wire::encode(wire::error_response(500, e.what()));
  }
}

Endpoint parse_endpoint(std::string_view url) {
  std::string_view rest = url;
  if (auto p = rest.find("://"); p != std::string_view::npos) rest = rest.substr(p + 3);
  if (auto slash = rest.find('/'); slash != std::string_view::npos) rest = rest.substr(0, slash);
  auto colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw Error("endpoint without port: " + std::string(url));
  auto port = parse_uint(rest.substr(colon + 1));
  if (!port || *port > 65535) throw Error("bad port in endpoint: " + std::string(url));
  return Endpoint{std::string(rest.substr(0, colon)), static_cast<int>(*port)};
}

std::string endpoint_key(std::string_view url) { return parse_endpoint(url).to_string(); }

void TransferLedger::record(TransferRecord r) {
  std::lock_guard lock(mu_);
  rows_.push_back(std::move(r));
}

std::vector<TransferRecord> TransferLedger::snapshot() const {
  std::lock_guard lock(mu_);
  return rows_;
}

void TransferLedger::clear() {
  std::lock_guard lock(mu_);
  rows_.clear();
}

void InProcessNetwork::bind(const std::string& endpoint, Service* service, std::string role) {
  std::lock_guard lock(mu_);
  bindings_[endpoint_key(endpoint)] = Binding{service, std::move(role), false};
}

void InProcessNetwork::unbind(const std::string& endpoint) {
  std::lock_guard lock(mu_);
  bindings_.erase(endpoint_key(endpoint));
}

void InProcessNetwork::set_down(const std::string& endpoint, bool down) {
  std::lock_guard lock(mu_);
  auto it = bindings_.find(endpoint_key(endpoint));
  if (it == bindings_.end()) throw Error("unknown endpoint " + endpoint);
  it->second.down = down;
}

bool InProcessNetwork::is_down(const std::string& endpoint) const { return lookup(endpoint).down; }

std::string InProcessNetwork::role_of(const std::string& endpoint) const { return lookup(endpoint).role; }

InProcessNetwork::Binding InProcessNetwork::lookup(const std::string& endpoint) const {
  std::string key = endpoint_key(endpoint);
  std::lock_guard lock(mu_);
  auto it = bindings_.find(key);
  if (it == bindings_.end()) throw TransportError("no service at " + key);
  return it->second;
}

std::string InProcessNetwork::deliver(const std::string& endpoint, std::string_view bytes) {
  Binding b = lookup(endpoint);
  if (b.down) throw TransportError("connection refused: " + endpoint);
  return serve_bytes(*b.service, bytes);
}

wire::Response InProcessNetwork::call(const std::string& endpoint, const wire::Request& req,
                                      std::string_view from_role) {
  Binding b = lookup(endpoint);
  std::string out = wire::encode(req);
  if (b.down) throw TransportError("connection refused: " + endpoint_key(endpoint));
  std::string in = serve_bytes(*b.service, out);
  wire::Response resp = wire::decode_response(in);
  if (accounting_) {
    auto account = [&](const std::string& from, const std::string& to, std::size_t total, std::size_t payload) {
      if (total > payload) ledger_.record({from, to, total - payload, Purpose::Control, req.verb});
      if (payload > 0) ledger_.record({from, to, payload, Purpose::Payload, req.verb});
    };
    std::string from(from_role);
    account(from, b.role, out.size(), req.verb == wire::Verb::Put ? req.body.size() : 0);
    account(b.role, from, in.size(), req.verb == wire::Verb::Get && resp.ok() ? resp.body.size() : 0);
  }
  return resp;
}

namespace {

void set_timeouts(int fd, Duration timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

enum class ReadStatus { Frame, Closed, Malformed, Error };

// Reads one complete frame into `frame`, keeping any excess in `buffer`.
ReadStatus read_frame(int fd, std::string& buffer, std::string& frame, std::string& error) {
  char chunk[65536];
  while (true) {
    try {
      if (auto len = wire::frame_length(buffer); len && buffer.size() >= *len) {
        frame = buffer.substr(0, *len);
        buffer.erase(0, *len);
        return ReadStatus::Frame;
      }
    } catch (const wire::ProtocolError& e) {
      error = e.what();
      return ReadStatus::Malformed;
    }
    ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      error = std::strerror(errno);
      return ReadStatus::Error;
    }
    if (n == 0) {
      if (buffer.empty()) return ReadStatus::Closed;
      error = "connection closed mid-frame";
      return ReadStatus::Malformed;
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

wire::Response TcpTransport::call(const std::string& endpoint, const wire::Request& req, std::string_view) {
  Endpoint ep = parse_endpoint(endpoint);
  std::string out = wire::encode(req);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = getaddrinfo(ep.host.c_str(), std::to_string(ep.port).c_str(), &hints, &res); rc != 0)
    throw TransportError("cannot resolve " + ep.host + ": " + gai_strerror(rc));
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    set_timeouts(fd, timeout_);
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot connect to " + ep.to_string());

  std::string buffer, frame, error;
  ReadStatus st = ReadStatus::Error;
  if (send_all(fd, out)) st = read_frame(fd, buffer, frame, error);
  ::close(fd);
  if (st != ReadStatus::Frame)
    throw TransportError("no response from " + ep.to_string() + (error.empty() ? "" : ": " + error));
  return wire::decode_response(frame);
}

TcpServer::TcpServer(Service& service, std::string host, int port)
    : service_(service), host_(std::move(host)), port_(port) {}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (int rc = getaddrinfo(host_.c_str(), std::to_string(port_).c_str(), &hints, &res); rc != 0)
    throw TransportError("cannot resolve " + host_ + ": " + gai_strerror(rc));
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(listen_fd_, 64) != 0) {
    std::string err = std::strerror(errno);
    freeaddrinfo(res);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw TransportError("cannot listen on " + host_ + ":" + std::to_string(port_) + ": " + err);
  }
  freeaddrinfo(res);
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<Worker> workers;
  {
    std::lock_guard lock(conn_mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& w : workers)
    if (w.thread.joinable()) w.thread.join();
}

void TcpServer::accept_loop() {
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    int r = ::poll(&pfd, 1, 200);
    if (r <= 0) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard lock(conn_mu_);
    if (!running_) {
      ::close(fd);
      break;
    }
    for (auto it = workers_.begin(); it != workers_.end();) {
      if (it->done->load()) {
        it->thread.join();
        it = workers_.erase(it);
      } else {
        ++it;
      }
    }
    open_fds_.insert(fd);
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back({std::thread([this, fd, done] { serve_connection(fd, *done); }), done});
  }
}

void TcpServer::serve_connection(int fd, std::atomic<bool>& done) {
  set_timeouts(fd, std::chrono::seconds{30});
  std::string buffer, frame, error;
  while (running_) {
    ReadStatus st = read_frame(fd, buffer, frame, error);
    if (st == ReadStatus::Malformed) {
      send_all(fd, wire::encode(wire::error_response(400, error)));
      break;
    }
    if (st != ReadStatus::Frame) break;
    std::string reply = serve_bytes(service_, frame);
    if (!send_all(fd, reply)) break;
    bool keep_alive = false;
    try {
      keep_alive = iequals(wire::decode_request(frame).headers.get("Connection"), "keep-alive");
    } catch (const wire::ProtocolError&) {
    }
    if (!keep_alive) break;
  }
  std::lock_guard lock(conn_mu_);
  open_fds_.erase(fd);
  ::close(fd);
  done = true;
}

}  // namespace ng::net
