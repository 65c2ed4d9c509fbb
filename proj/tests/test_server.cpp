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

#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <optional>
#include <string>
#include <thread>

#include "gripsim/simulation.hpp"
#include "gripsim/telemetry_server.hpp"

using namespace gripsim;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

class Client {
 public:
  explicit Client(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    connected_ = ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0;
  }
  ~Client() { ::close(fd_); }

  bool connected() const { return connected_; }

  void send_line(const std::string& line) {
    const std::string data = line + "\n";
    ASSERT_EQ(::send(fd_, data.data(), data.size(), MSG_NOSIGNAL), static_cast<ssize_t>(data.size()));
  }

  std::optional<json> read_json(std::chrono::milliseconds timeout = 2000ms) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      if (auto pos = buf_.find('\n'); pos != std::string::npos) {
        const std::string line = buf_.substr(0, pos);
        buf_.erase(0, pos + 1);
        return json::parse(line);
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) return std::nullopt;
      char tmp[4096];
      const ssize_t n = ::recv(fd_, tmp, sizeof(tmp), 0);
      if (n <= 0) return std::nullopt;
      buf_.append(tmp, static_cast<std::size_t>(n));
    }
  }

  // Skips telemetry until a message of the given type arrives.
  std::optional<json> read_type(const std::string& type) {
    while (auto j = read_json()) {
      if ((*j)["type"] == type) return j;
    }
    return std::nullopt;
  }

 private:
  int fd_ = -1;
  bool connected_ = false;
  std::string buf_;
};

void wait_for_clients(const TelemetryServer& server, std::size_t n) {
  const auto deadline = std::chrono::steady_clock::now() + 2s;
  while (server.client_count() < n && std::chrono::steady_clock::now() < deadline) std::this_thread::sleep_for(5ms);
}

}  // namespace

TEST(TelemetryServer, EphemeralPortAndBroadcast) {
  CommandQueue q;
  TelemetryServer server(q);
  server.start(0);
  ASSERT_NE(server.port(), 0);
  Client a(server.port()), b(server.port());
  ASSERT_TRUE(a.connected() && b.connected());
  wait_for_clients(server, 2);
  TelemetrySnapshot s;
  s.phase = "Scan";
  server.broadcast(telemetry_line(s));
  for (Client* c : {&a, &b}) {
    auto j = c->read_json();
    ASSERT_TRUE(j.has_value());
    EXPECT_FALSE(validate_telemetry(*j).has_value());
    EXPECT_EQ((*j)["phase"], "Scan");
  }
}

TEST(TelemetryServer, CommandsAreAckedAndQueued) {
  CommandQueue q;
  TelemetryServer server(q);
  server.start(0);
  Client c(server.port());
  c.send_line(R"({"type":"command","text":"bottle"})");
  auto ack = c.read_type("ack");
  ASSERT_TRUE(ack.has_value());
  EXPECT_EQ((*ack)["text"], "bottle");
  EXPECT_EQ(q.drain(), std::vector<std::string>{"bottle"});
}

TEST(TelemetryServer, MalformedMessageKeepsSession) {
  CommandQueue q;
  TelemetryServer server(q);
  server.start(0);
  Client c(server.port());
  c.send_line("{not json");
  auto err = c.read_type("error");
  ASSERT_TRUE(err.has_value());
  EXPECT_TRUE((*err)["message"].is_string());
  c.send_line(R"({"type":"bogus"})");
  ASSERT_TRUE(c.read_type("error").has_value());
  c.send_line(R"({"type":"command","text":"open"})");
  ASSERT_TRUE(c.read_type("ack").has_value());
  EXPECT_EQ(q.drain(), std::vector<std::string>{"open"});
  EXPECT_EQ(server.client_count(), 1u);
}

TEST(TelemetryServer, PortInUseIsReported) {
  CommandQueue q;
  TelemetryServer first(q);
  first.start(0);
  TelemetryServer second(q);
  EXPECT_THROW(second.start(first.port()), ServerError);
}

TEST(TelemetryServer, DisconnectedClientIsDropped) {
  CommandQueue q;
  TelemetryServer server(q);
  server.start(0);
  {
    Client c(server.port());
    wait_for_clients(server, 1);
    ASSERT_EQ(server.client_count(), 1u);
  }
  const auto deadline = std::chrono::steady_clock::now() + 2s;
  while (server.client_count() > 0 && std::chrono::steady_clock::now() < deadline) {
    server.broadcast("{}\n");
    std::this_thread::sleep_for(5ms);
  }
  EXPECT_EQ(server.client_count(), 0u);
}

TEST(TelemetryServer, StalledClientDoesNotBlockBroadcast) {
  CommandQueue q;
  TelemetryServer server(q);
  server.start(0);
  Client idle(server.port());
  wait_for_clients(server, 1);
  const std::string line(64 * 1024, 'x');
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 200; ++i) server.broadcast(line + "\n");
  EXPECT_LT(std::chrono::steady_clock::now() - start, 2s);
}

TEST(TelemetryServer, OperatorOpensJawsDuringHandover) {
  SimConfig config;
  config.tof.noise_sigma = 0.0;
  const std::vector<SceneObject> scene{[] {
    SceneObject o;
    o.class_label = "bottle";
    o.position = {0.75, 0.10, 0.18};
    o.bounding_radius = 0.035;
    return o;
  }()};
  CommandQueue queue;
  TelemetryServer server(queue);
  server.start(0);
  Client console(server.port());
  wait_for_clients(server, 1);

  ScenarioOptions opt;
  opt.max_duration_s = 60.0;
  opt.external_commands = &queue;
  bool sent_bottle = false, sent_open = false;
  int invalid = 0;
  opt.on_tick = [&](const TelemetrySnapshot& s) {
    server.broadcast(telemetry_line(s));
    if (validate_telemetry(telemetry_to_json(s))) ++invalid;
    // Stand in for the operator: react to the streamed phase over the socket
    // and wait for the ack so the next tick sees the command.
    if (!sent_bottle && s.phase == "Scan") {
      sent_bottle = true;
      console.send_line(R"({"type":"command","text":"bottle"})");
      ASSERT_TRUE(console.read_type("ack").has_value());
    }
    if (!sent_open && s.phase == "Handover") {
      sent_open = true;
      console.send_line(R"({"type":"command","text":"open"})");
      ASSERT_TRUE(console.read_type("ack").has_value());
    }
  };
  const auto rec = run_pipeline_scenario(config, scene, {}, 3, opt);
  EXPECT_TRUE(sent_open);
  EXPECT_EQ(invalid, 0);
  EXPECT_EQ(rec.completed_cycles, 1);
  using P = PipelinePhase;
  EXPECT_EQ(rec.phases(), (std::vector<P>{P::PreScan, P::Scan, P::Align, P::Reach, P::Grasp, P::Handover, P::PreScan}));
}
