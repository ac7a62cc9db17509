#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "rvarena/episode.hpp"
#include "rvarena/forge.hpp"
#include "rvarena/io.hpp"

using namespace rvarena;
namespace fs = std::filesystem;

namespace {

const fs::path kBin = RVARENA_BIN;
const fs::path kFixtures = RVARENA_FIXTURES;

int run(const std::string& args) {
  const std::string cmd = kBin.string() + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// One forged 1/1/1 suite shared by every case.
const fs::path& work() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "rvarena_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    REQUIRE(run("forge --seed-base 1000 --counts 1,1,1 --out " + (d / "suite").string()) == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("forge writes a manifest and per-task files") {
  const fs::path suite = work() / "suite";
  const Json m = read_json_file(suite / "manifest.json");
  const SuiteManifest man = manifest_from_json(m);
  CHECK(man.counts.at(Tier::easy) == 1);
  std::size_t tasks = 0, truths = 0;
  for (const auto& e : fs::directory_iterator(suite)) {
    const auto name = e.path().filename().string();
    tasks += name.ends_with(".task.json") ? 1 : 0;
    truths += name.ends_with(".truth.json") ? 1 : 0;
  }
  CHECK(tasks == 3);
  CHECK(truths == 3);

  const fs::path again = work() / "again";
  REQUIRE(run("forge --seed-base 1000 --counts 1,1,1 --threads 2 --out " + again.string()) == 0);
  for (const auto& e : fs::directory_iterator(suite)) {
    CHECK(slurp(e.path()) == slurp(again / e.path().filename()));
  }
  CHECK(run("forge --seed-base 1000 --counts 1,x,1 --out " + (work() / "bad").string()) == 2);
  CHECK(run("forge --seed-base 1000 --counts 0,1,1 --out " + (work() / "bad").string()) == 2);
}

TEST_CASE("grade exit codes") {
  const fs::path suite = work() / "suite";
  const Suite s = read_suite(suite);
  const TaskBundle& b = s.tasks.front();
  const std::string task = (suite / (b.task_id + ".task.json")).string();
  const std::string truth = (suite / (b.task_id + ".truth.json")).string();

  const fs::path good = work() / "good.json";
  write_json_file(good, submission_to_json(truth_submission(b, true)));
  const fs::path report = work() / "report.json";
  CHECK(run("grade " + task + " " + truth + " " + good.string() + " --out " + report.string()) == 0);
  const CriteriaReport r = report_from_json(read_json_file(report));
  CHECK(r.passed());

  const fs::path empty = work() / "empty.json";
  write_json_file(empty, Json{{"planets", Json::array()}});
  CHECK(run("grade " + task + " " + truth + " " + empty.string()) == 1);

  const fs::path malformed = work() / "malformed.json";
  std::ofstream(malformed) << "{\"planets\": [";
  CHECK(run("grade " + task + " " + truth + " " + malformed.string()) == 2);
  CHECK(run("grade " + task + " " + truth + " " + task) == 2);
  CHECK(run("grade " + task + " " + truth + " /nonexistent.json") == 2);
}

TEST_CASE("baseline then report") {
  const fs::path out = work() / "base";
  REQUIRE(run("baseline --suite " + (work() / "suite").string() + " --out " + out.string() +
              " --series") == 0);
  std::size_t results = 0;
  for (const auto& e : fs::directory_iterator(out / "results")) {
    const EpisodeResult r = result_from_json(read_json_file(e.path()));
    CHECK(r.submissions.size() == 1);
    ++results;
  }
  CHECK(results == 3);
  CHECK(fs::exists(out / "submissions"));
  CHECK(fs::exists(out / "logs"));
  CHECK_FALSE(fs::is_empty(out / "series"));

  const fs::path agg = work() / "agg.json";
  const fs::path csv = work() / "sweep.csv";
  CHECK(run("report " + out.string() + " --json " + agg.string() + " --sweep-csv " + csv.string()) == 0);
  const Json a = read_json_file(agg);
  CHECK(a.at("overall").at("n_tasks") == 3);
  CHECK(slurp(csv).rfind("tau,all,easy,medium,hard\n", 0) == 0);

  const fs::path mixed = work() / "mixed";
  fs::create_directories(mixed);
  fs::path first;
  for (const auto& e : fs::directory_iterator(out / "results")) {
    if (first.empty()) first = e.path();
  }
  Json v2 = read_json_file(first);
  v2["schema_version"] = 2;
  write_json_file(mixed / "a.result.json", read_json_file(first));
  write_json_file(mixed / "b.result.json", v2);
  CHECK(run("report " + mixed.string()) == 2);
  CHECK(run("report " + (work() / "nothing_here").string()) == 2);
}

TEST_CASE("usage errors") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("grade") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("serve golden transcript") {
  const fs::path out = work() / "serve.out";
  const std::string cmd = "RVARENA_REPLAY=1 " + kBin.string() + " serve --suite " +
                          (work() / "suite").string() + " < " +
                          (kFixtures / "serve_replay.in.ndjson").string() + " > " + out.string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(slurp(out) == slurp(kFixtures / "serve_replay.golden.ndjson"));
}
