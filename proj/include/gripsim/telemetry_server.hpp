// Copyright 2026 The gripsim Authors
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

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gripsim/protocol.hpp"

namespace gripsim {

class ServerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// TCP server speaking the line-delimited JSON protocol. One I/O thread polls
/// the listener and client sockets; `broadcast` may be called from the
/// simulation thread. Valid commands go onto the queue and are acknowledged;
/// anything else gets an error reply and the connection stays open. Sends
/// never block: output is buffered per client and a client that falls more
/// than `kMaxBacklog` bytes behind is disconnected.
class TelemetryServer {
 public:
  static constexpr std::size_t kMaxBacklog = 8u << 20;

  explicit TelemetryServer(CommandQueue& queue) : queue_(queue) {}
  TelemetryServer(const TelemetryServer&) = delete;
  TelemetryServer& operator=(const TelemetryServer&) = delete;
  ~TelemetryServer() { stop(); }

  /// Binds on all interfaces; port 0 picks an ephemeral port.
  void start(std::uint16_t port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw ServerError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
      const std::string why = std::strerror(errno);
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw ServerError("cannot bind port " + std::to_string(port) + ": " + why);
    }
    if (::listen(listen_fd_, 8) < 0) {
      const std::string why = std::strerror(errno);
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw ServerError("listen: " + why);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    io_thread_ = std::thread([this] { io_loop(); });
  }

  void stop() {
    if (!running_.exchange(false)) return;
    if (io_thread_.joinable()) io_thread_.join();
    std::lock_guard lock(clients_mutex_);
    for (auto& c : clients_) ::close(c->fd);
    clients_.clear();
    ::close(listen_fd_);
    listen_fd_ = -1;
  }

  std::uint16_t port() const { return port_; }

  std::size_t client_count() const {
    std::lock_guard lock(clients_mutex_);
    return clients_.size();
  }

  void broadcast(const std::string& line) {
    std::lock_guard lock(clients_mutex_);
    for (auto& c : clients_) enqueue(*c, line);
  }

 private:
  struct Client {
    int fd = -1;
    std::string inbox;
    std::string outbox;
    bool broken = false;
  };

  static void flush(Client& c) {
    while (!c.broken && !c.outbox.empty()) {
      const ssize_t n = ::send(c.fd, c.outbox.data(), c.outbox.size(), MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return;
      if (n <= 0) {
        c.broken = true;
        return;
      }
      c.outbox.erase(0, static_cast<std::size_t>(n));
    }
  }

  static void enqueue(Client& c, const std::string& data) {
    if (c.broken) return;
    c.outbox += data;
    flush(c);
    if (c.outbox.size() > kMaxBacklog) c.broken = true;
  }

  void handle_line(Client& c, const std::string& line) {
    if (line.empty()) return;
    auto parsed = parse_client_message(line);
    if (auto* cmd = std::get_if<CommandMessage>(&parsed)) {
      queue_.push(cmd->text);
      enqueue(c, ack_line(cmd->text));
    } else {
      enqueue(c, error_line(std::get<ProtocolError>(parsed).message));
    }
  }

  void io_loop() {
    while (running_) {
      std::vector<pollfd> fds;
      fds.push_back({listen_fd_, POLLIN, 0});
      {
        std::lock_guard lock(clients_mutex_);
        for (auto& c : clients_)
          fds.push_back({c->fd, static_cast<short>(POLLIN | (c->outbox.empty() ? 0 : POLLOUT)), 0});
      }
      const int ready = ::poll(fds.data(), fds.size(), 20);
      if (ready <= 0) continue;

      if (fds[0].revents & POLLIN) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd >= 0) {
          ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
          auto client = std::make_unique<Client>();
          client->fd = fd;
          std::lock_guard lock(clients_mutex_);
          clients_.push_back(std::move(client));
        }
      }

      std::lock_guard lock(clients_mutex_);
      for (std::size_t i = 1; i < fds.size(); ++i) {
        if (!fds[i].revents) continue;
        auto it = std::find_if(clients_.begin(), clients_.end(), [&](auto& c) { return c->fd == fds[i].fd; });
        if (it == clients_.end()) continue;
        Client& c = **it;
        if (fds[i].revents & POLLOUT) flush(c);
        if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
        char buf[4096];
        const ssize_t n = ::recv(c.fd, buf, sizeof(buf), 0);
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) continue;
        if (n <= 0) {
          c.broken = true;
          continue;
        }
        c.inbox.append(buf, static_cast<std::size_t>(n));
        std::size_t pos;
        while ((pos = c.inbox.find('\n')) != std::string::npos) {
          std::string line = c.inbox.substr(0, pos);
          c.inbox.erase(0, pos + 1);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          handle_line(c, line);
        }
        if (c.inbox.size() > kMaxBacklog) c.broken = true;
      }
      std::erase_if(clients_, [](auto& c) {
        if (c->broken) ::close(c->fd);
        return c->broken;
      });
    }
  }

  CommandQueue& queue_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread io_thread_;
  mutable std::mutex clients_mutex_;
  std::vector<std::unique_ptr<Client>> clients_;
};

}  // namespace gripsim
