#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <functional>
#include <iostream>
#include <thread>

#include "gaitplan/io.hpp"

namespace gaitplan {

/// Line-delimited JSON session around one environment. Every request line
/// produces exactly one reply line; errors never end the session.
class ProtocolSession {
 public:
  explicit ProtocolSession(GaitPlannerEnv env) : env_(std::move(env)) {}

  std::string handle(const std::string& line) {
    Json reply;
    try {
      Json req;
      try {
        req = Json::parse(line);
      } catch (const Json::parse_error&) {
        return error("bad_request", "request is not valid JSON");
      }
      if (!req.is_object() || !req.contains("cmd") || !req["cmd"].is_string())
        return error("bad_request", "request needs a string field 'cmd'");
      const std::string cmd = req["cmd"];
      if (cmd == "spec") return ok(spec());
      if (cmd == "reset") return reset(req);
      if (cmd == "step") return step(req);
      return error("unknown_cmd", "unknown cmd '" + cmd + "'; expected spec, reset or step");
    } catch (const SchemaError& e) {
      return error("bad_request", e.what());
    } catch (const ResetFailure& e) {
      return error("reset_failed", e.what());
    } catch (const std::exception& e) {
      return error("internal", e.what());
    }
  }

  const GaitPlannerEnv& env() const { return env_; }

  static Json spec_body(const EnvConfig& cfg) {
    // Unbounded components carry null limits.
    auto box = [](std::vector<int> shape, Json lo, Json hi) {
      Json j;
      j["shape"] = shape;
      j["low"] = lo;
      j["high"] = hi;
      return j;
    };
    const Json inf = nullptr;
    Json obs;
    obs["o_R"] = box({1}, -kPi, kPi);
    obs["o_v"] = box({2}, inf, inf);
    obs["o_F"] = box({8}, inf, inf);
    obs["o_c"] = box({4}, -1.0, 1.0);
    obs["o_M"] = box({kLocalMapSize, kLocalMapSize}, inf, inf);
    Json act;
    act["a_R"] = box({1}, -1.0, 1.0);
    act["a_B"] = box({2}, -1.0, 1.0);
    act["a_v"] = box({2}, -1.0, 1.0);
    act["a_F"] = box({8}, -1.0, 1.0);
    act["a_c"] = box({3}, -1.0, 1.0);
    act["a_t"] = box({2}, -1.0, 1.0);
    Json j;
    j["protocol"] = "gaitplan.env";
    j["version"] = kFormatVersion;
    j["observation"] = std::move(obs);
    j["action"] = std::move(act);
    j["max_episode_length"] = cfg.max_episode_length;
    j["terminal_reward"] = cfg.terminal_reward;
    j["local_map_resolution_m"] = kLocalMapResolution;
    return j;
  }

 private:
  static std::string ok(Json body) {
    Json j;
    j["ok"] = true;
    for (auto& [k, v] : body.items()) j[k] = v;
    return j.dump();
  }

  static std::string error(const std::string& code, const std::string& message) {
    Json j;
    j["ok"] = false;
    j["error"] = {{"code", code}, {"message", message}};
    return j.dump();
  }

  Json spec() const { return spec_body(env_.config()); }

  std::string reset(const Json& req) {
    if (!req.contains("seed")) return error("bad_request", "reset.seed: missing field");
    if (!req["seed"].is_number_unsigned() && !(req["seed"].is_number_integer() && req["seed"].get<long long>() >= 0))
      return error("bad_request", "reset.seed: expected a non-negative integer");
    const auto obs = env_.reset(req["seed"].get<std::uint64_t>());
    Json body;
    body["observation"] = io::to_json(obs);
    body["goal_xy_m"] = io::detail::array(env_.state().goal_xy);
    return ok(std::move(body));
  }

  std::string step(const Json& req) {
    if (!env_.has_state()) return error("no_episode", "step before reset");
    if (env_.done()) return error("episode_done", "episode finished; send reset");
    const PlannerAction a = io::action_from_json(io::detail::need(req, "action", "step"), "step.action");
    const auto flat = a.flat();
    static constexpr std::array<const char*, PlannerAction::kDim> names{
        "a_R", "a_B[0]", "a_B[1]", "a_v[0]", "a_v[1]", "a_F[0]", "a_F[1]", "a_F[2]", "a_F[3]",
        "a_F[4]", "a_F[5]", "a_F[6]", "a_F[7]", "a_c[0]", "a_c[1]", "a_c[2]", "a_t[0]", "a_t[1]"};
    for (int i = 0; i < PlannerAction::kDim; ++i)
      if (!std::isfinite(flat[i]) || std::abs(flat[i]) > 1.0) {
        std::ostringstream msg;
        msg << "action component " << names[i] << " = " << flat[i] << " outside the clip range [-1, 1]";
        return error("action_out_of_range", msg.str());
      }
    const StepOutcome o = env_.step(a);
    Json body;
    body["observation"] = io::to_json(o.observation);
    body["reward"] = o.reward;
    body["terms"] = io::to_json(o.terms);
    body["terminated"] = o.terminated;
    body["reason"] = to_string(o.reason);
    body["success"] = o.success;
    body["done"] = o.done;
    return ok(std::move(body));
  }

  GaitPlannerEnv env_;
};

using SessionFactory = std::function<GaitPlannerEnv()>;

/// Serves one session until the input stream ends.
inline void serve_stream(std::istream& in, std::ostream& out, const SessionFactory& make_env) {
  ProtocolSession session(make_env());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << session.handle(line) << '\n';
    out.flush();
    if (!out) return;
  }
}

namespace detail {

inline bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

inline void serve_socket(int fd, const SessionFactory& make_env) {
  ProtocolSession session(make_env());
  std::string buffer;
  char chunk[4096];
  for (;;) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (!send_all(fd, session.handle(line) + "\n")) {
        ::close(fd);
        return;
      }
    }
  }
  ::close(fd);
}

}  // namespace detail

/// TCP listener; each connection is an independent session on its own thread.
class TcpServer {
 public:
  TcpServer(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res); rc != 0)
      throw std::runtime_error("cannot resolve '" + host + "': " + gai_strerror(rc));
    fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd_ < 0) {
      ::freeaddrinfo(res);
      throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    }
    const int yes = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    if (::bind(fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd_, 16) != 0) {
      const std::string msg = std::strerror(errno);
      ::freeaddrinfo(res);
      ::close(fd_);
      throw std::runtime_error("cannot listen on " + host + ":" + service + ": " + msg);
    }
    ::freeaddrinfo(res);
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;
  ~TcpServer() {
    if (fd_ >= 0) ::close(fd_);
  }

  /// Port actually bound (useful when constructed with port 0).
  int port() const { return port_; }

  /// Accepts connections until max_sessions have been served (0 = forever).
  /// Returns after all served sessions have ended.
  void run(const SessionFactory& make_env, int max_sessions = 0) {
    std::vector<std::jthread> sessions;
    for (int served = 0; max_sessions == 0 || served < max_sessions; ++served) {
      const int client = ::accept(fd_, nullptr, nullptr);
      if (client < 0) {
        if (errno == EINTR) {
          --served;
          continue;
        }
        break;
      }
      sessions.emplace_back([client, &make_env] { detail::serve_socket(client, make_env); });
    }
  }

 private:
  int fd_ = -1;
  int port_ = 0;
};

}  // namespace gaitplan
