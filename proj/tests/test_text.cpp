#include "doctest.h"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "caresim/chat_client.hpp"
#include "caresim/error.hpp"
#include "caresim/simulation.hpp"

using namespace caresim;
using nlohmann::json;

namespace {

InteractionContext shop_ctx() {
  InteractionContext ctx;
  ctx.scenario_name = "shopping";
  ctx.task_name = "Select 3 items on the shopping list correctly";
  ctx.subtask_name = "Identify item one";
  return ctx;
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

std::string reply_body(const std::string& content) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

// Local chat-completions stand-in. Each test installs its own handler.
class FakeEndpoint {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  FakeEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      Handler h;
      {
        std::lock_guard lock(mu_);
        last_body = req.body;
        last_auth = req.get_header_value("Authorization");
        h = handler_;
      }
      h(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  void handle(Handler h) {
    std::lock_guard lock(mu_);
    handler_ = std::move(h);
  }

  ChatClientConfig config() const {
    ChatClientConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.model = "test-model";
    c.api_key = "sk-test";
    c.timeout_ms = 3000;
    c.retry_base_delay_ms = 5;
    return c;
  }

  std::atomic<int> hits{0};
  std::string last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  Handler handler_;
};

}  // namespace

TEST_CASE("interaction context keeps a bounded history") {
  InteractionContext ctx(3);
  CHECK_FALSE(ctx.latest_person_behavior());
  for (int i = 0; i < 5; ++i) ctx.record(Speaker::kPerson, "p" + std::to_string(i));
  ctx.record(Speaker::kCaregiver, "c");
  CHECK(ctx.history().size() == 3);
  CHECK(ctx.history().front().text == "p3");
  CHECK(ctx.latest_caregiver_utterance() == "c");
  CHECK(ctx.latest_person_behavior() == "p4");
  CHECK(ctx.turns_recorded() == 6);
  CHECK_THROWS_AS(InteractionContext(0), UsageError);
}

TEST_CASE("template narration") {
  TemplateBackend t(7);
  const auto ctx = shop_ctx();

  const auto calm = t.narrate(StatusVector{}, ctx);
  CHECK(parse_state_marker(calm.nonverbal) == StatusVector{});
  CHECK_FALSE(calm.verbal.empty());
  CHECK(t.narrate(StatusVector{}, ctx) == calm);

  const auto withdrawn = t.narrate(StatusVector(0, 0, 0, 1), ctx);
  const auto& nv = withdrawn.nonverbal;
  CHECK((contains(nv, "eye contact") || contains(nv, "gazes past") || contains(nv, "attention wandering")));
  CHECK(parse_state_marker(nv) == StatusVector(0, 0, 0, 1));

  TemplateBackend other(8);
  bool differs = false;
  for (int i = 0; i < kNumStates; ++i) {
    const auto s = StatusVector::from_index(i);
    CHECK(TemplateBackend(7).narrate(s, ctx) == t.narrate(s, ctx));
    differs |= !(other.narrate(s, ctx) == t.narrate(s, ctx));
  }
  CHECK(differs);
}

TEST_CASE("template perception") {
  TemplateBackend t(1);
  const auto ctx = shop_ctx();
  Rng rng(3);
  for (int i = 0; i < kNumStates; ++i) {
    const auto s = StatusVector::from_index(i);
    const auto b = t.narrate(s, ctx);
    const auto p = t.perceive(b, ctx, 0.0, rng);
    CHECK(p.state == s);
    CHECK(p.provenance == Provenance::kExact);
    CHECK(t.perceive(b, ctx, 1.0, rng).state.index() == 15 - i);
  }

  const int n = 100000;
  long flips = 0;
  const auto b = t.narrate(StatusVector(1, 0, 1, 0), ctx);
  for (int k = 0; k < n; ++k) {
    const auto p = t.perceive(b, ctx, 0.1, rng);
    flips += __builtin_popcount(static_cast<unsigned>(p.state.index() ^ 10));
  }
  CHECK(std::abs(flips / (4.0 * n) - 0.1) <= 0.01);

  try {
    t.perceive({"no marker here", "hello"}, ctx, 0.0, rng);
    FAIL("expected an error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::kUnparseable);
    CHECK(contains(e.raw(), "no marker here"));
  }
  CHECK_THROWS_AS(t.perceive(b, ctx, 2.0, rng), UsageError);
}

TEST_CASE("template assistance utterances") {
  TemplateBackend t(2);
  const auto ctx = shop_ctx();
  const PromptVariant brief;
  CHECK(t.render_assist(AssistAction::kNoAssistance, ctx, brief, std::nullopt).empty());
  const auto a1 = t.render_assist(AssistAction::kVerbalSupportive, ctx, brief, std::nullopt);
  CHECK_FALSE(a1.empty());
  CHECK(contains(a1, "."));
  const auto a2 = t.render_assist(AssistAction::kVerbalNonDirective, ctx, brief, std::nullopt);
  CHECK(contains(a2, "?"));
  const auto a3 = t.render_assist(AssistAction::kVerbalDirective, ctx, brief, std::nullopt);
  CHECK_FALSE(contains(a3, "?"));

  const auto with_state = *PromptVariant::parse("brief+state");
  CHECK_THROWS_AS(t.render_assist(AssistAction::kVerbalSupportive, ctx, with_state, std::nullopt), UsageError);
  for (const auto& v : all_prompt_variants()) {
    CHECK(PromptVariant::parse(v.name()) == v);
    const auto out = t.render_assist(AssistAction::kVerbalDirective, ctx, v, StatusVector(0, 0, 1, 0));
    CHECK_FALSE(out.empty());
  }
  CHECK(all_prompt_variants().size() == 4);
  CHECK_FALSE(PromptVariant::parse("verbose"));
}

TEST_CASE("prompts carry their sections") {
  auto ctx = shop_ctx();
  ctx.record(Speaker::kCaregiver, "Is there anything missing?");
  const auto b = behavior_prompt(StatusVector(0, 1, 0, 0), ctx);
  std::string all;
  for (const auto& m : b) all += m.content + "\n";
  CHECK(contains(all, "[0,1,0,0]"));
  CHECK(contains(all, "Is there anything missing?"));
  CHECK(contains(all, ctx.task_name));

  const auto detailed = *PromptVariant::parse("detailed+state");
  std::string a;
  for (const auto& m : assist_prompt(AssistAction::kVerbalDirective, ctx, detailed, StatusVector(1, 0, 0, 0)))
    a += m.content + "\n";
  CHECK(contains(a, "[1,0,0,0]"));
  std::string brief;
  for (const auto& m : assist_prompt(AssistAction::kVerbalDirective, ctx, PromptVariant{}, std::nullopt))
    brief += m.content + "\n";
  CHECK_FALSE(contains(brief, "## Current state"));
  CHECK(a.size() > brief.size());

  CHECK(find_status_vector("the state is [1, 0,1,0] probably") == StatusVector(1, 0, 1, 0));
  CHECK_FALSE(find_status_vector("no vector [1,0,1] here"));
  CHECK(parse_state_marker(state_marker(StatusVector(0, 1, 1, 0))) == StatusVector(0, 1, 1, 0));
}

TEST_CASE("chat client config") {
  const auto c = chat_client_config_from_json(
      R"({"base_url":"http://localhost:8080/v1","model":"m","temperature":0.2,"timeout_ms":500,"max_retries":1})");
  CHECK(c.model == "m");
  CHECK(c.timeout_ms == 500);
  CHECK_THROWS_AS(chat_client_config_from_json(R"({"base_url":"ftp://x"})"), ConfigError);
  CHECK_THROWS_AS(chat_client_config_from_json(R"({"apikey":"x"})"), ConfigError);
  CHECK_THROWS_AS(chat_client_config_from_json(R"({"timeout_ms":1.5})"), ConfigError);

  const auto body = json::parse(chat_request_body(c, {{"system", "s"}, {"user", "u"}}));
  CHECK(body["model"] == "m");
  CHECK(body["messages"].size() == 2);
  CHECK(body["messages"][1]["role"] == "user");
  CHECK(parse_chat_response(reply_body("hi")) == "hi");
  CHECK_THROWS_AS(parse_chat_response("{}"), BackendError);
}

TEST_CASE("http backend without a credential is a configuration error") {
  ChatClientConfig c;
  c.base_url = "http://127.0.0.1:9/v1";
  c.api_key_env = "CARESIM_TEST_SURELY_UNSET";
  ::unsetenv("CARESIM_TEST_SURELY_UNSET");
  try {
    HttpBackend backend(c);
    FAIL("expected an error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::kConfig);
    CHECK(contains(e.what(), "CARESIM_TEST_SURELY_UNSET"));
  }
  ::setenv("CARESIM_TEST_SURELY_UNSET", "sk-x", 1);
  CHECK_NOTHROW(HttpBackend{c});
  ::unsetenv("CARESIM_TEST_SURELY_UNSET");
}

TEST_CASE("chat client against a local endpoint") {
  FakeEndpoint ep;

  SUBCASE("success sends the request convention") {
    ep.handle([](const httplib::Request&, httplib::Response& res) { res.set_content(reply_body("ok"), "application/json"); });
    ChatClient client(ep.config());
    CHECK(client.complete({{"user", "hello"}}) == "ok");
    CHECK(ep.last_auth == "Bearer sk-test");
    const auto body = json::parse(ep.last_body);
    CHECK(body["model"] == "test-model");
    CHECK(body["messages"][0]["content"] == "hello");
    CHECK(client.last_attempts() == 1);
  }

  SUBCASE("transient failures are retried") {
    ep.handle([&](const httplib::Request&, httplib::Response& res) {
      if (ep.hits <= 2) {
        res.status = 503;
        return;
      }
      res.set_content(reply_body("finally"), "application/json");
    });
    ChatClient client(ep.config());
    CHECK(client.complete({{"user", "x"}}) == "finally");
    CHECK(client.last_attempts() == 3);
  }

  SUBCASE("retry budget is never exceeded") {
    ep.handle([](const httplib::Request&, httplib::Response& res) { res.status = 429; });
    auto cfg = ep.config();
    cfg.max_retries = 2;
    ChatClient client(cfg);
    try {
      client.complete({{"user", "x"}});
      FAIL("expected an error");
    } catch (const BackendError& e) {
      CHECK(e.kind() == BackendError::Kind::kHttpStatus);
      CHECK(e.http_status() == 429);
    }
    CHECK(ep.hits == 3);
  }

  SUBCASE("client errors fail at once") {
    ep.handle([](const httplib::Request&, httplib::Response& res) {
      res.status = 401;
      res.set_content("{\"error\":\"bad key\"}", "application/json");
    });
    ChatClient client(ep.config());
    try {
      client.complete({{"user", "x"}});
      FAIL("expected an error");
    } catch (const BackendError& e) {
      CHECK(e.kind() == BackendError::Kind::kHttpStatus);
      CHECK(e.http_status() == 401);
      CHECK(contains(e.raw(), "bad key"));
    }
    CHECK(ep.hits == 1);
  }

  SUBCASE("malformed replies are typed errors") {
    ep.handle([](const httplib::Request&, httplib::Response& res) { res.set_content("not json", "text/plain"); });
    ChatClient client(ep.config());
    try {
      client.complete({{"user", "x"}});
      FAIL("expected an error");
    } catch (const BackendError& e) {
      CHECK(e.kind() == BackendError::Kind::kMalformedReply);
      CHECK(e.raw() == "not json");
    }
  }

  SUBCASE("the deadline bounds the whole call") {
    ep.handle([](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(700));
      res.set_content(reply_body("late"), "application/json");
    });
    auto cfg = ep.config();
    cfg.timeout_ms = 200;
    cfg.max_retries = 5;
    ChatClient client(cfg);
    const auto start = std::chrono::steady_clock::now();
    try {
      client.complete({{"user", "x"}});
      FAIL("expected an error");
    } catch (const BackendError& e) {
      CHECK(e.kind() == BackendError::Kind::kTimeout);
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(elapsed < std::chrono::milliseconds(600));
  }

  SUBCASE("backend narrates, perceives and assists through the endpoint") {
    ep.handle([](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const std::string prompt = body["messages"].back()["content"];
      std::string content;
      if (contains(prompt, "\"nonverbal\""))
        content = "```json\n{\"nonverbal\": \"The person frowns.\", \"verbal\": \"Which one?\"}\n```";
      else if (contains(prompt, "binary vector"))
        content = "I think it is [0,1,0,0].";
      else
        content = "Is there anything missing?\n";
      res.set_content(reply_body(content), "application/json");
    });
    HttpBackend backend(ep.config());
    const auto ctx = shop_ctx();
    const auto b = backend.narrate(StatusVector(0, 1, 0, 0), ctx);
    CHECK(b.nonverbal == "The person frowns.");
    CHECK(b.verbal == "Which one?");
    Rng rng(1);
    const auto p = backend.perceive(b, ctx, 0.0, rng);
    CHECK(p.state == StatusVector(0, 1, 0, 0));
    CHECK(p.provenance == Provenance::kParsed);
    const int before = ep.hits;
    CHECK(backend.render_assist(AssistAction::kNoAssistance, ctx, PromptVariant{}, std::nullopt).empty());
    CHECK(ep.hits == before);
    CHECK(backend.render_assist(AssistAction::kVerbalNonDirective, ctx, PromptVariant{}, std::nullopt) ==
          "Is there anything missing?");
  }

  SUBCASE("unparseable perception is reported with the raw reply") {
    ep.handle([](const httplib::Request&, httplib::Response& res) {
      res.set_content(reply_body("they seem fine"), "application/json");
    });
    HttpBackend backend(ep.config());
    Rng rng(1);
    try {
      backend.perceive({"x", "y"}, shop_ctx(), 0.0, rng);
      FAIL("expected an error");
    } catch (const BackendError& e) {
      CHECK(e.kind() == BackendError::Kind::kUnparseable);
      CHECK(e.raw() == "they seem fine");
    }
  }
}

TEST_CASE("unreachable endpoint") {
  ChatClientConfig c;
  c.base_url = "http://127.0.0.1:1/v1";
  c.api_key = "k";
  c.timeout_ms = 1000;
  c.max_retries = 1;
  c.retry_base_delay_ms = 1;
  ChatClient client(c);
  try {
    client.complete({{"user", "x"}});
    FAIL("expected an error");
  } catch (const BackendError& e) {
    CHECK((e.kind() == BackendError::Kind::kConnection || e.kind() == BackendError::Kind::kTimeout));
    CHECK(e.attempts() <= 2);
  }
}

TEST_CASE("simulation transcripts") {
  const EnvConfig env;
  const Policy policy = Policy::from_id("2111311131113111");
  auto run = [&](std::uint64_t seed, SimulationOptions opts) {
    TemplateBackend backend(seed);
    Rng rng(seed);
    std::ostringstream out;
    const auto r = run_interaction(policy, env, backend, opts, rng, out);
    return std::make_pair(r, out.str());
  };

  const auto [r1, t1] = run(4, {});
  const auto [r2, t2] = run(4, {});
  CHECK(t1 == t2);
  CHECK(r1.total_return == r2.total_return);
  CHECK(r1.misperceived_steps == 0);
  CHECK(r1.steps <= env.scenario.max_episode_length());
  CHECK(contains(t1, "=== Timestep 1 ===\nTrueState: [0,0,0,0]\nPLWD: "));
  CHECK(contains(t1, "Progress: task 1 subtask 1 trial 1\n"));
  CHECK(contains(t1, "=== End ===\n"));

  int timesteps = 0;
  for (std::size_t pos = 0; (pos = t1.find("=== Timestep ", pos)) != std::string::npos; ++pos) ++timesteps;
  CHECK(timesteps == r1.steps);

  SimulationOptions noisy;
  noisy.use_perceived = true;
  noisy.perception_noise = 0.2;
  int mis = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto [r, t] = run(seed, noisy);
    CHECK(contains(t, "DecisionInput: perceived"));
    mis += r.misperceived_steps;
  }
  CHECK(mis > 0);
}
