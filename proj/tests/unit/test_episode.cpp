#include <doctest.h>

#include <boost/asio.hpp>
#include <future>
#include <memory>
#include <sstream>
#include <thread>

#include "rvarena/error.hpp"
#include "rvarena/forge.hpp"
#include "rvarena/protocol.hpp"

using namespace rvarena;

namespace {

const Suite& fixture_suite() {
  static const Suite s = forge_suite(1000, {{Tier::easy, 1}, {Tier::medium, 1}, {Tier::hard, 1}});
  return s;
}

const TaskBundle& bundle_for(Tier t) {
  for (const auto& b : fixture_suite().tasks) {
    if (b.tier == t) return b;
  }
  throw std::runtime_error("fixture tier missing");
}

struct FakeClock {
  std::shared_ptr<double> now = std::make_shared<double>(1000.0);
  Clock fn() const {
    auto p = now;
    return [p] { return *p; };
  }
  void advance(double s) const { *now += s; }
};

Submission truth_of(const TaskBundle& b) { return truth_submission(b, true); }

Submission with_match(const TaskBundle& b, double scale_k) {
  Submission s = truth_of(b);
  for (auto& p : s.planets) p.msini_mjup *= scale_k;
  return s;
}

// Keys that only the hidden truth document carries.
bool leaks_truth(const Json& j) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (k == "planets" || k == "offsets" || k == "noise" || k == "seed" ||
          k == "truth_planets" || k == "truth_offsets") {
        return true;
      }
      if (leaks_truth(v)) return true;
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (leaks_truth(v)) return true;
    }
  }
  return false;
}

Json msg(std::string type, const std::string& id, std::uint64_t seq, Json extra = Json::object()) {
  extra["type"] = std::move(type);
  extra["episode_id"] = id;
  extra["seq"] = seq;
  return extra;
}

TaskProvider fixture_provider() {
  return [](const std::string& id) {
    for (const auto& b : fixture_suite().tasks) {
      if (b.task_id == id) return b;
    }
    throw Error(ErrorKind::not_found, "unknown task '" + id + "'");
  };
}

}  // namespace

TEST_CASE("tier configurations") {
  const auto e = EpisodeConfig::for_tier(Tier::easy);
  CHECK(e.max_tokens == 200000);
  CHECK(e.max_wall_seconds == 600.0);
  CHECK(e.max_submissions == 3);
  CHECK(e.max_planets_per_submission == 3);
  const auto m = EpisodeConfig::for_tier(Tier::medium);
  CHECK(m.max_tokens == 450000);
  CHECK(m.max_wall_seconds == 900.0);
  CHECK(m.max_submissions == 5);
  CHECK(m.max_planets_per_submission == 5);
  const auto h = EpisodeConfig::for_tier(Tier::hard);
  CHECK(h.max_tokens == 900000);
  CHECK(h.max_wall_seconds == 1500.0);
  CHECK(h.max_submissions == 10);
  CHECK(h.max_planets_per_submission == 8);
  EpisodeConfig bad = e;
  bad.max_submissions = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("start_episode hides truth and isolates episodes") {
  const TaskBundle& b = bundle_for(Tier::easy);
  EpisodeEngine eng;
  const Json task = eng.start_episode("a", b, EpisodeConfig::for_tier(Tier::easy));
  CHECK_FALSE(leaks_truth(task));
  CHECK(task.at("t_ref_days").get<double>() == task.at("observations").at("times_days").at(0).get<double>());
  CHECK(task.at("star_mass_sun").get<double>() == b.dataset.star_mass_sun);
  CHECK(task.at("observations").at("rvs_ms").size() == b.dataset.size());

  CHECK_THROWS_AS(eng.start_episode("a", b, EpisodeConfig::for_tier(Tier::easy)), Error);
  CHECK_THROWS_AS(eng.start_episode("b", b, EpisodeConfig::for_tier(Tier::hard)), Error);
  eng.start_episode("b", b, EpisodeConfig::for_tier(Tier::easy));
  eng.handle_submit("a", truth_of(b));
  eng.report_usage("a", 500);
  CHECK(eng.snapshot("a").submissions.size() == 1);
  CHECK(eng.snapshot("b").submissions.empty());
  CHECK(eng.snapshot("b").tokens_used == 0);
  CHECK_THROWS_AS(eng.budget("zzz"), Error);
}

TEST_CASE("submission caps per tier") {
  for (Tier t : {Tier::easy, Tier::medium, Tier::hard}) {
    const TaskBundle& b = bundle_for(t);
    const auto cfg = EpisodeConfig::for_tier(t);
    EpisodeEngine eng;
    eng.start_episode("ep", b, cfg);
    for (std::size_t i = 0; i < cfg.max_submissions; ++i) {
      const SubmitOutcome o = eng.handle_submit("ep", Submission{});
      CHECK(o.attempt_consumed);
      CHECK(o.budget.submissions_used == i + 1);
      CHECK(o.budget.submissions_remaining == cfg.max_submissions - i - 1);
      CHECK(o.budget.status ==
            (i + 1 == cfg.max_submissions ? EpisodeStatus::env_done : EpisodeStatus::running));
    }
    try {
      eng.handle_submit("ep", truth_of(b));
      FAIL("expected attempt cap");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::attempt_cap);
    }
    CHECK(eng.snapshot("ep").submissions.size() == cfg.max_submissions);
    const EpisodeResult r = eng.finalize_episode("ep");
    CHECK(r.reason == FinalizeReason::cap);
    CHECK(r.status == EpisodeStatus::env_done);
  }
}

TEST_CASE("format rejections consume one attempt") {
  const TaskBundle& b = bundle_for(Tier::easy);
  EpisodeEngine eng;
  eng.start_episode("ep", b, EpisodeConfig::for_tier(Tier::easy));
  Submission bad = truth_of(b);
  bad.planets[0].ecc = 0.9;
  const SubmitOutcome o = eng.handle_submit("ep", bad);
  CHECK(o.report.rejected);
  CHECK_FALSE(o.report.passed());
  CHECK(o.budget.submissions_remaining == 2);

  const SubmitOutcome m = eng.handle_submit("ep", Json{{"planets", "nope"}});
  CHECK(m.report.rejected);
  CHECK(m.budget.submissions_remaining == 1);
  CHECK(eng.snapshot("ep").submissions[1].submission.planets.empty());
  CHECK_FALSE(eng.snapshot("ep").best_index.has_value());

  Submission four = truth_of(b);
  while (four.planets.size() <= 3) four.planets.push_back(four.planets.front());
  const SubmitOutcome c = eng.handle_submit("ep", four);
  CHECK(c.report.rejected);
  CHECK(c.budget.status == EpisodeStatus::env_done);
}

TEST_CASE("token budget") {
  for (Tier t : {Tier::easy, Tier::medium, Tier::hard}) {
    const auto cfg = EpisodeConfig::for_tier(t);
    EpisodeEngine eng;
    eng.start_episode("ep", bundle_for(t), cfg);
    CHECK(eng.report_usage("ep", 0).accepted);
    CHECK(eng.report_usage("ep", cfg.max_tokens - 1).accepted);
    CHECK(eng.report_usage("ep", cfg.max_tokens).accepted);
    const UsageOutcome over = eng.report_usage("ep", cfg.max_tokens + 1);
    CHECK_FALSE(over.accepted);
    CHECK(over.budget.status == EpisodeStatus::budget_exceeded);
    CHECK_THROWS_AS(eng.report_usage("ep", cfg.max_tokens + 2), Error);
    CHECK_THROWS_AS(eng.handle_submit("ep", Submission{}), Error);
    const EpisodeResult r = eng.finalize_episode("ep");
    CHECK(r.reason == FinalizeReason::token_limit);
    CHECK(r.status == EpisodeStatus::budget_exceeded);
    CHECK_FALSE(r.passed);
  }

  EpisodeEngine eng;
  eng.start_episode("ep", bundle_for(Tier::easy), EpisodeConfig::for_tier(Tier::easy));
  eng.report_usage("ep", 199999);
  const UsageOutcome o = eng.report_usage("ep", 200001);
  CHECK_FALSE(o.accepted);
  CHECK(o.budget.tokens_remaining == 0);
  EpisodeEngine dec;
  dec.start_episode("ep", bundle_for(Tier::easy), EpisodeConfig::for_tier(Tier::easy));
  dec.report_usage("ep", 10, 2);
  try {
    dec.report_usage("ep", 9);
    FAIL("expected invalid usage");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_usage);
  }
  CHECK_THROWS_AS(dec.report_usage("ep", 10, 1), Error);
  CHECK(dec.snapshot("ep").tokens_used == 10);
  CHECK(dec.snapshot("ep").tool_calls == 2);
}

TEST_CASE("wall-clock budget under a mocked clock") {
  for (Tier t : {Tier::easy, Tier::medium, Tier::hard}) {
    const auto cfg = EpisodeConfig::for_tier(t);
    const FakeClock clock;
    EpisodeEngine eng(clock.fn());
    eng.start_episode("ep", bundle_for(t), cfg);
    clock.advance(cfg.max_wall_seconds);
    CHECK(eng.report_usage("ep", 1).accepted);  // exactly at the limit
    CHECK(eng.budget("ep").seconds_remaining == 0.0);
    clock.advance(1e-3);
    const auto before = eng.snapshot("ep");
    try {
      eng.handle_submit("ep", truth_of(bundle_for(t)));
      FAIL("expected budget_exceeded");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::budget_exceeded);
    }
    CHECK_THROWS_AS(eng.report_usage("ep", 5), Error);
    const auto after = eng.snapshot("ep");
    CHECK(after.submissions.size() == before.submissions.size());
    CHECK(after.tokens_used == before.tokens_used);
    const EpisodeResult r = eng.finalize_episode("ep");
    CHECK(r.reason == FinalizeReason::timeout);
    CHECK(r.status == EpisodeStatus::budget_exceeded);
    CHECK_FALSE(r.passed);
    CHECK(r.elapsed_seconds == doctest::Approx(cfg.max_wall_seconds + 1e-3));
  }

  const FakeClock clock;
  EpisodeEngine replay(clock.fn(), true);
  replay.start_episode("ep", bundle_for(Tier::easy), EpisodeConfig::for_tier(Tier::easy));
  clock.advance(1e6);
  CHECK(replay.handle_submit("ep", truth_of(bundle_for(Tier::easy))).report.passed());
  CHECK(replay.budget("ep").elapsed_seconds == 0.0);
}

TEST_CASE("best submission and finalize") {
  const TaskBundle& b = bundle_for(Tier::medium);
  EpisodeEngine eng;
  eng.start_episode("ep", b, EpisodeConfig::for_tier(Tier::medium));
  const SubmitOutcome weak = eng.handle_submit("ep", with_match(b, 1.6));
  const SubmitOutcome good = eng.handle_submit("ep", truth_of(b));
  CHECK(weak.report.match_score < good.report.match_score);
  CHECK(eng.snapshot("ep").best_index == 1);
  eng.handle_submit("ep", Submission{});
  CHECK(eng.snapshot("ep").best_index == 1);

  const EpisodeResult r = eng.finalize_episode("ep", FinalizeReason::agent_done);
  CHECK(r.passed);
  CHECK(r.status == EpisodeStatus::env_done);
  CHECK(r.best_index == 1);
  CHECK(r.submissions.size() == 3);
  CHECK(eng.finalize_episode("ep", FinalizeReason::timeout).reason == FinalizeReason::agent_done);
  CHECK_THROWS_AS(eng.report_usage("ep", 1), Error);
  CHECK_THROWS_AS(eng.handle_submit("ep", truth_of(b)), Error);
  CHECK_THROWS_AS(eng.finalize_episode("missing"), Error);

  EpisodeEngine empty;
  empty.start_episode("ep", b, EpisodeConfig::for_tier(Tier::medium));
  const EpisodeResult t = empty.finalize_episode("ep", FinalizeReason::timeout);
  CHECK_FALSE(t.passed);
  CHECK(t.status == EpisodeStatus::budget_exceeded);
  CHECK_FALSE(t.best_report.has_value());

  std::vector<SubmissionRecord> recs(3);
  recs[0].report.match_score = 0.5;
  recs[1].report.match_score = 0.93;
  recs[2].report.match_score = 0.93;
  recs[1].report.rms_ms = 2.0;
  recs[2].report.rms_ms = 1.0;
  CHECK(best_submission(recs) == 2);
  recs[2].report.rms_ms = 2.0;
  CHECK(best_submission(recs) == 1);
  recs[1].report.rejected = true;
  recs[2].report.rejected = true;
  CHECK(best_submission(recs) == 0);
}

TEST_CASE("result documents round-trip") {
  const TaskBundle& b = bundle_for(Tier::easy);
  EpisodeEngine eng;
  eng.start_episode("ep", b, EpisodeConfig::for_tier(Tier::easy));
  eng.handle_submit("ep", truth_of(b));
  eng.report_usage("ep", 1234, 7);
  const EpisodeResult r = eng.finalize_episode("ep");
  const Json j = result_to_json(r);
  const EpisodeResult back = result_from_json(j);
  CHECK(result_to_json(back) == j);
  CHECK(back.tool_calls == 7);
  CHECK(back.best_report == r.best_report);

  Json bad = j;
  bad["schema_version"] = 99;
  CHECK_THROWS_AS(result_from_json(bad), Error);
  bad = j;
  bad.erase("status");
  CHECK_THROWS_AS(result_from_json(bad), Error);
}

TEST_CASE("protocol transcript") {
  EpisodeEngine eng;
  ProtocolHandler h(eng, fixture_provider());
  const TaskBundle& b = bundle_for(Tier::easy);

  Json t = h.handle(msg("hello", "e1", 0, {{"task_id", b.task_id}}));
  REQUIRE(t.at("type") == "task");
  CHECK(t.at("seq") == 0);
  CHECK(t.at("protocol_version") == kProtocolVersion);
  CHECK(t.at("limits").at("max_submissions") == 3);
  CHECK_FALSE(leaks_truth(t));

  Json r = h.handle(msg("submit", "e1", 1, {{"submission", submission_to_json(truth_of(b))}}));
  REQUIRE(r.at("type") == "report");
  CHECK(r.at("report").at("ok_match") == true);
  CHECK(r.at("attempt_consumed") == true);
  CHECK(r.at("budget").at("submissions_remaining") == 2);

  Json gap = h.handle(msg("usage", "e1", 5, {{"tokens", 10}}));
  CHECK(gap.at("type") == "error");
  CHECK(gap.at("kind") == "protocol");
  CHECK(gap.at("seq") == 5);

  Json u = h.handle(msg("usage", "e1", 2, {{"tokens", 10}, {"tool_calls", 1}}));
  CHECK(u.at("type") == "usage_ack");
  CHECK(u.at("accepted") == true);
  CHECK(u.at("status") == "running");

  CHECK(h.handle(msg("usage", "e1", 3, {{"tokens", -5}})).at("kind") == "protocol");
  Json dec = h.handle(msg("usage", "e1", 4, {{"tokens", 5}}));
  CHECK(dec.at("kind") == "invalid_usage");
  CHECK(dec.contains("budget"));

  Json fin = h.handle(msg("finalize", "e1", 5, {{"reason", "agent_done"}}));
  REQUIRE(fin.at("type") == "result");
  CHECK(fin.at("result").at("passed") == true);
  CHECK_FALSE(leaks_truth(fin.at("result").at("best_report")));
  Json late = h.handle(msg("usage", "e1", 6, {{"tokens", 11}}));
  CHECK(late.at("kind") == "terminal_state");

  CHECK(h.handle(msg("hello", "e1", 0, {{"task_id", b.task_id}})).at("kind") == "conflict");
  CHECK(h.handle(msg("usage", "e9", 1, {{"tokens", 1}})).at("kind") == "not_found");
  CHECK(h.handle(msg("hello", "e2", 3, {{"task_id", b.task_id}})).at("kind") == "protocol");
  CHECK(h.handle(msg("hello", "e3", 0, {{"task_id", "nope"}})).at("kind") == "not_found");
  CHECK(h.handle(msg("hello", "e3", 0, {{"task_id", b.task_id}})).at("type") == "task");
  CHECK(h.handle(msg("dance", "e3", 1)).at("kind") == "protocol");
  CHECK(h.handle(Json{{"type", "usage"}, {"seq", 2}}).at("kind") == "protocol");

  const Json bad = Json::parse(h.handle_line("{not json"));
  CHECK(bad.at("type") == "error");
  CHECK(bad.at("seq").is_null());
  CHECK(bad.at("episode_id").is_null());
}

TEST_CASE("protocol caps via transcripts") {
  for (Tier tier : {Tier::easy, Tier::medium, Tier::hard}) {
    const auto cfg = EpisodeConfig::for_tier(tier);
    const TaskBundle& b = bundle_for(tier);
    {
      EpisodeEngine eng;
      ProtocolHandler h(eng, fixture_provider());
      std::uint64_t seq = 0;
      h.handle(msg("hello", "s", seq++, {{"task_id", b.task_id}}));
      for (std::size_t i = 0; i < cfg.max_submissions; ++i) {
        CHECK(h.handle(msg("submit", "s", seq++, {{"submission", Json{{"planets", Json::array()}}}}))
                  .at("type") == "report");
      }
      const Json cap = h.handle(msg("submit", "s", seq++, {{"submission", Json{{"planets", Json::array()}}}}));
      CHECK(cap.at("kind") == "attempt_cap");
      CHECK(cap.at("budget").at("status") == "env_done");
    }
    {
      EpisodeEngine eng;
      ProtocolHandler h(eng, fixture_provider());
      h.handle(msg("hello", "t", 0, {{"task_id", b.task_id}}));
      CHECK(h.handle(msg("usage", "t", 1, {{"tokens", cfg.max_tokens}})).at("accepted") == true);
      const Json over = h.handle(msg("usage", "t", 2, {{"tokens", cfg.max_tokens + 1}}));
      CHECK(over.at("accepted") == false);
      CHECK(over.at("status") == "budget_exceeded");
      CHECK(h.handle(msg("finalize", "t", 3)).at("result").at("reason") == "token_limit");
    }
    {
      const FakeClock clock;
      EpisodeEngine eng(clock.fn());
      ProtocolHandler h(eng, fixture_provider());
      h.handle(msg("hello", "w", 0, {{"task_id", b.task_id}}));
      clock.advance(cfg.max_wall_seconds - 1.0);
      CHECK(h.handle(msg("usage", "w", 1, {{"tokens", 1}})).at("type") == "usage_ack");
      clock.advance(2.0);
      const Json late = h.handle(msg("submit", "w", 2, {{"submission", submission_to_json(truth_of(b))}}));
      CHECK(late.at("kind") == "budget_exceeded");
      CHECK(late.at("budget").at("submissions_used") == 0);
      CHECK(h.handle(msg("finalize", "w", 3)).at("result").at("reason") == "timeout");
    }
  }
}

TEST_CASE("replay determinism") {
  const TaskBundle& b = bundle_for(Tier::hard);
  Submission half = truth_of(b);
  half.planets.resize(1);
  const std::vector<Json> transcript{
      msg("hello", "r", 0, {{"task_id", b.task_id}}),
      msg("submit", "r", 1, {{"submission", submission_to_json(half)}}),
      msg("usage", "r", 2, {{"tokens", 4000}}),
      msg("submit", "r", 3, {{"submission", submission_to_json(truth_of(b))}}),
      msg("finalize", "r", 4)};
  auto run = [&] {
    EpisodeEngine eng(steady_clock_seconds(), true);
    ProtocolHandler h(eng, fixture_provider());
    std::string out;
    for (const auto& m : transcript) out += h.handle_line(m.dump()) + "\n";
    return out;
  };
  const std::string a = run();
  CHECK(a == run());
  CHECK(a.find("\"type\":\"error\"") == std::string::npos);
}

TEST_CASE("stream and TCP transport") {
  EpisodeEngine eng;
  ProtocolHandler h(eng, fixture_provider());
  const TaskBundle& b = bundle_for(Tier::easy);
  std::istringstream in(msg("hello", "s1", 0, {{"task_id", b.task_id}}).dump() + "\r\n\n" +
                        msg("finalize", "s1", 1).dump() + "\n");
  std::ostringstream out;
  serve_stream(in, out, h);
  std::istringstream lines(out.str());
  std::string l1, l2, l3;
  std::getline(lines, l1);
  std::getline(lines, l2);
  CHECK(Json::parse(l1).at("type") == "task");
  CHECK(Json::parse(l2).at("type") == "result");
  CHECK_FALSE(std::getline(lines, l3));

  CHECK(parse_listen_address("127.0.0.1:8080") == std::pair<std::string, unsigned short>{"127.0.0.1", 8080});
  CHECK(parse_listen_address(":9") == std::pair<std::string, unsigned short>{"127.0.0.1", 9});
  CHECK(parse_listen_address("0").second == 0);
  CHECK_THROWS_AS(parse_listen_address("host:port"), Error);
  CHECK_THROWS_AS(parse_listen_address("70000"), Error);

  std::promise<unsigned short> ready;
  auto fut = ready.get_future();
  std::thread([&h, &ready] {
    serve_tcp("127.0.0.1", 0, h, [&ready](unsigned short p) { ready.set_value(p); });
  }).detach();
  REQUIRE(fut.wait_for(std::chrono::seconds(10)) == std::future_status::ready);
  const unsigned short port = fut.get();

  namespace asio = boost::asio;
  asio::io_context io;
  asio::ip::tcp::socket sock(io);
  sock.connect({asio::ip::make_address("127.0.0.1"), port});
  const std::string req = msg("hello", "tcp", 0, {{"task_id", b.task_id}}).dump() + "\n" +
                          msg("usage", "tcp", 1, {{"tokens", 3}}).dump() + "\n";
  asio::write(sock, asio::buffer(req));
  asio::streambuf buf;
  asio::read_until(sock, buf, '\n');
  std::istream is(&buf);
  std::string line;
  std::getline(is, line);
  CHECK(Json::parse(line).at("type") == "task");
  if (buf.size() == 0 || std::string(asio::buffers_begin(buf.data()), asio::buffers_end(buf.data())).find('\n') == std::string::npos) {
    asio::read_until(sock, buf, '\n');
  }
  std::getline(is, line);
  CHECK(Json::parse(line).at("type") == "usage_ack");
  sock.close();
}
