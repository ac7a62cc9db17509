#include <doctest.h>

#include <random>

#include "rvarena/error.hpp"
#include "rvarena/report.hpp"

using namespace rvarena;

namespace {

CriteriaReport report(bool rms, bool bic, double match, std::size_t n_truth, std::size_t n_guess) {
  CriteriaReport r;
  r.ok_rms = rms;
  r.ok_delta_bic = bic;
  r.match_score = match;
  r.ok_match = match >= 0.8;
  r.n_truth = n_truth;
  r.n_guess = n_guess;
  r.ok_count = n_truth == n_guess;
  return r;
}

EpisodeResult result(Tier tier, std::optional<CriteriaReport> best, int i = 0) {
  EpisodeResult r;
  r.episode_id = "ep" + std::to_string(i);
  r.task_id = "t" + std::to_string(i);
  r.tier = tier;
  r.reason = FinalizeReason::agent_done;
  r.status = EpisodeStatus::env_done;
  if (best) {
    r.submissions.push_back({Submission{}, *best});
    r.best_index = 0;
    r.best_report = best;
    r.passed = best->passed();
  }
  return r;
}

}  // namespace

TEST_CASE("all-pass inputs") {
  std::vector<EpisodeResult> rs;
  for (int i = 0; i < 6; ++i) {
    rs.push_back(result(static_cast<Tier>(i % 3), report(true, true, 0.95, 2, 2), i));
  }
  const AggregateReport a = aggregate_results(rs);
  CHECK(a.overall.n_tasks == 6);
  for (const auto& c : {a.overall, a.per_tier.at(Tier::easy), a.per_tier.at(Tier::hard)}) {
    CHECK(c.pass == 100.0);
    CHECK(c.rms == 100.0);
    CHECK(c.delta_bic == 100.0);
    CHECK(c.match == 100.0);
    CHECK(c.count == 100.0);
    CHECK(c.env_done == 100.0);
    CHECK(c.mean_predicted_count == 2.0);
  }
  REQUIRE(a.sweep.size() == 3);
  for (const auto& p : a.sweep) CHECK(p.pass == 100.0);
}

TEST_CASE("stored match of 0.75 across the sweep") {
  const std::vector<EpisodeResult> rs{result(Tier::medium, report(true, true, 0.75, 1, 1))};
  const AggregateReport a = aggregate_results(rs);
  CHECK(a.overall.pass == 0.0);
  REQUIRE(a.sweep.size() == 3);
  CHECK(a.sweep[0].threshold == 0.72);
  CHECK(a.sweep[0].pass == 100.0);
  CHECK(a.sweep[1].pass == 0.0);
  CHECK(a.sweep[2].pass == 0.0);
  CHECK(a.sweep[0].per_tier.at(Tier::medium) == 100.0);

  CriteriaReport rej = report(true, true, 0.99, 1, 1);
  rej.rejected = true;
  CHECK_FALSE(passes_at(rej, 0.5));
  CHECK_FALSE(passes_at(report(true, true, 0.99, 1, 2), 0.5));
  CHECK(passes_at(report(true, true, 0.8, 1, 1), 0.8));
}

TEST_CASE("conjunction bound and sweep properties on random aggregates") {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EpisodeResult> rs;
    const int n = 1 + static_cast<int>(u(g) * 40);
    for (int i = 0; i < n; ++i) {
      const auto tier = static_cast<Tier>(static_cast<int>(u(g) * 3));
      if (u(g) < 0.1) {
        rs.push_back(result(tier, std::nullopt, i));
        rs.back().status = EpisodeStatus::budget_exceeded;
        continue;
      }
      const std::size_t nt = 1 + static_cast<std::size_t>(u(g) * 3);
      const std::size_t ng = u(g) < 0.7 ? nt : static_cast<std::size_t>(u(g) * 4);
      rs.push_back(result(tier, report(u(g) < 0.8, u(g) < 0.9, u(g), nt, ng), i));
    }
    const AggregateReport a = aggregate_results(rs);
    CHECK_NOTHROW(a.check_invariants());
    const auto& o = a.overall;
    CHECK(o.pass <= std::min({o.rms, o.delta_bic, o.match, o.count}) + 1e-12);
    for (const auto& [tier, c] : a.per_tier) {
      CHECK(c.pass <= std::min({c.rms, c.delta_bic, c.match, c.count}) + 1e-12);
      for (std::size_t k = 1; k < a.sweep.size(); ++k) {
        CHECK(a.sweep[k].per_tier.at(tier) <= a.sweep[k - 1].per_tier.at(tier));
      }
    }
    // Each step drops exactly the reports whose score falls between the two thresholds.
    for (std::size_t k = 1; k < a.sweep.size(); ++k) {
      std::size_t between = 0;
      for (const auto& r : rs) {
        if (!r.best_report) continue;
        const auto& b = *r.best_report;
        if (passes_at(b, a.sweep[k - 1].threshold) && !passes_at(b, a.sweep[k].threshold)) {
          ++between;
          CHECK(b.match_score >= a.sweep[k - 1].threshold);
          CHECK(b.match_score < a.sweep[k].threshold);
        }
      }
      CHECK(a.sweep[k - 1].pass - a.sweep[k].pass ==
            doctest::Approx(100.0 * static_cast<double>(between) / static_cast<double>(n)));
    }
    const double at80 = a.sweep[1].pass;
    CHECK(at80 == doctest::Approx(o.pass));
  }
}

TEST_CASE("aggregate_report from documents") {
  const std::vector<Json> docs{result_to_json(result(Tier::easy, report(true, true, 0.9, 1, 1), 1)),
                               result_to_json(result(Tier::hard, report(true, false, 0.9, 2, 1), 2))};
  const AggregateReport a = aggregate_report(docs);
  CHECK(a.overall.pass == 50.0);
  CHECK(a.overall.mean_predicted_count == 1.0);
  CHECK(a.per_tier.count(Tier::medium) == 0);

  const Json j = aggregate_to_json(a);
  CHECK(j.at("schema_version") == kSchemaVersion);
  CHECK(j.at("overall").at("pass") == 50.0);
  const std::string csv = sweep_to_csv(a);
  CHECK(csv.rfind("tau,all,easy,medium,hard\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK_FALSE(aggregate_to_text(a).empty());

  std::vector<Json> mixed = docs;
  mixed[1]["schema_version"] = 2;
  try {
    aggregate_report(mixed);
    FAIL("expected aggregation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::aggregation);
  }
  CHECK_THROWS_AS(aggregate_report(std::vector<Json>{}), Error);

  const std::vector<Json> pure{docs[0], docs[1]};
  CHECK(aggregate_to_json(aggregate_report(pure)) == aggregate_to_json(aggregate_report(pure)));
}

TEST_CASE("invariant checker rejects inconsistent aggregates") {
  AggregateReport a;
  a.overall = {10, 60.0, 50.0, 100.0, 100.0, 100.0, 100.0, 1.0};
  CHECK_THROWS_AS(a.check_invariants(), Error);
  a.overall.pass = 40.0;
  CHECK_NOTHROW(a.check_invariants());
  a.overall.rms = 120.0;
  CHECK_THROWS_AS(a.check_invariants(), Error);
  a.overall.rms = 50.0;
  a.sweep = {{0.72, 30.0, {}}, {0.80, 40.0, {}}};
  CHECK_THROWS_AS(a.check_invariants(), Error);
}
