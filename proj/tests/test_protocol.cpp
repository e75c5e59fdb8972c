#include <gtest/gtest.h>

#include <sstream>

#include "gaitplan/protocol.hpp"
#include "support.hpp"

using namespace gaitplan;
using namespace gaitplan::testing;

namespace {

Json send(ProtocolSession& s, const std::string& line) { return Json::parse(s.handle(line)); }

std::string zero_action() {
  return io::to_json(PlannerAction{}).dump();
}

void expect_error(const Json& reply, const std::string& code) {
  EXPECT_FALSE(reply["ok"].get<bool>()) << reply.dump();
  EXPECT_EQ(reply["error"]["code"], code) << reply.dump();
  EXPECT_TRUE(reply["error"]["message"].is_string());
}

}  // namespace

TEST(Protocol, SpecDescribesSpaces) {
  ProtocolSession s(flat_env());
  const Json r = send(s, R"({"cmd":"spec"})");
  ASSERT_TRUE(r["ok"].get<bool>());
  EXPECT_EQ(r["observation"]["o_M"]["shape"], Json::parse("[32,32]"));
  EXPECT_TRUE(r["observation"]["o_M"]["low"].is_null());
  EXPECT_EQ(r["observation"]["o_c"]["high"], 1.0);
  EXPECT_EQ(r["action"]["a_F"]["shape"], Json::parse("[8]"));
  EXPECT_EQ(r["action"]["a_c"]["low"], -1.0);
  EXPECT_EQ(r["max_episode_length"], 50);
}

TEST(Protocol, ResetThenStep) {
  ProtocolSession s(flat_env());
  const Json r = send(s, R"({"cmd":"reset","seed":3})");
  ASSERT_TRUE(r["ok"].get<bool>()) << r.dump();
  EXPECT_EQ(r["goal_xy_m"].size(), 2u);
  EXPECT_EQ(r["observation"]["o_M"].size(), 32u);
  const Json st = send(s, R"({"cmd":"step","action":)" + zero_action() + "}");
  ASSERT_TRUE(st["ok"].get<bool>()) << st.dump();
  for (const char* k : {"observation", "reward", "terms", "terminated", "reason", "success", "done"})
    EXPECT_TRUE(st.contains(k)) << k;
  EXPECT_EQ(st["reason"], "none");
  EXPECT_TRUE(st["terms"].contains("r_c"));
}

TEST(Protocol, ErrorCodes) {
  ProtocolSession s(flat_env());
  expect_error(send(s, "{nope"), "bad_request");
  expect_error(send(s, R"({"seed":1})"), "bad_request");
  expect_error(send(s, R"({"cmd":"fly"})"), "unknown_cmd");
  expect_error(send(s, R"({"cmd":"step","action":)" + zero_action() + "}"), "no_episode");
  expect_error(send(s, R"({"cmd":"reset"})"), "bad_request");
  expect_error(send(s, R"({"cmd":"reset","seed":-2})"), "bad_request");
  ASSERT_TRUE(send(s, R"({"cmd":"reset","seed":1})")["ok"].get<bool>());
  expect_error(send(s, R"({"cmd":"step"})"), "bad_request");

  Json a = io::to_json(PlannerAction{});
  a["a_F"][3] = 1.5;
  const Json r = send(s, R"({"cmd":"step","action":)" + a.dump() + "}");
  expect_error(r, "action_out_of_range");
  const std::string msg = r["error"]["message"];
  EXPECT_NE(msg.find("a_F[3]"), std::string::npos) << msg;
  EXPECT_NE(msg.find("[-1, 1]"), std::string::npos) << msg;

  // errors do not end the session
  EXPECT_TRUE(send(s, R"({"cmd":"step","action":)" + zero_action() + "}")["ok"].get<bool>());
}

TEST(Protocol, DoneEpisodeRejectsSteps) {
  EnvConfig cfg;
  cfg.max_episode_length = 1;
  ProtocolSession s(flat_env(cfg));
  send(s, R"({"cmd":"reset","seed":0})");
  const Json st = send(s, R"({"cmd":"step","action":)" + zero_action() + "}");
  ASSERT_TRUE(st["done"].get<bool>());
  expect_error(send(s, R"({"cmd":"step","action":)" + zero_action() + "}"), "episode_done");
  EXPECT_TRUE(send(s, R"({"cmd":"reset","seed":0})")["ok"].get<bool>());
}

TEST(Protocol, EqualSeedsGiveEqualReplies) {
  ProtocolSession a(flat_env()), b(flat_env());
  EXPECT_EQ(a.handle(R"({"cmd":"reset","seed":9})"), b.handle(R"({"cmd":"reset","seed":9})"));
  const std::string step = R"({"cmd":"step","action":)" + zero_action() + "}";
  EXPECT_EQ(a.handle(step), b.handle(step));
}

TEST(Protocol, StreamRepliesOncePerLine) {
  std::istringstream in("{\"cmd\":\"spec\"}\r\n\n{bad\n{\"cmd\":\"reset\",\"seed\":2}\n");
  std::ostringstream out;
  serve_stream(in, out, [] { return flat_env(); });
  std::istringstream lines(out.str());
  std::vector<Json> replies;
  for (std::string l; std::getline(lines, l);) replies.push_back(Json::parse(l));
  ASSERT_EQ(replies.size(), 3u);
  EXPECT_TRUE(replies[0]["ok"].get<bool>());
  expect_error(replies[1], "bad_request");
  EXPECT_TRUE(replies[2]["ok"].get<bool>());
}

TEST(Protocol, TcpSession) {
  TcpServer server("127.0.0.1", 0);
  ASSERT_GT(server.port(), 0);
  std::thread srv([&] { server.run([] { return flat_env(); }, 1); });

  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(server.port()));
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  const std::string req = "{\"cmd\":\"spec\"}\n{\"cmd\":\"reset\",\"seed\":4}\n";
  ASSERT_TRUE(detail::send_all(fd, req));
  ::shutdown(fd, SHUT_WR);
  std::string got;
  char buf[4096];
  for (ssize_t n; (n = ::recv(fd, buf, sizeof buf, 0)) > 0;) got.append(buf, static_cast<std::size_t>(n));
  ::close(fd);
  srv.join();

  std::istringstream lines(got);
  std::vector<std::string> replies;
  for (std::string l; std::getline(lines, l);) replies.push_back(l);
  ASSERT_EQ(replies.size(), 2u);
  ProtocolSession local(flat_env());
  EXPECT_EQ(replies[0], local.handle("{\"cmd\":\"spec\"}"));
  EXPECT_EQ(replies[1], local.handle("{\"cmd\":\"reset\",\"seed\":4}"));
}
