// rvarena: forge suites, grade submissions, run the baseline, serve episodes,
// aggregate results and ingest archival tables.
//
// Exit codes: 0 ok, 1 task failure, 2 usage or schema error.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "rvarena/baseline.hpp"
#include "rvarena/error.hpp"
#include "rvarena/forge.hpp"
#include "rvarena/protocol.hpp"
#include "rvarena/report.hpp"

namespace fs = std::filesystem;
using namespace rvarena;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTaskFailure = 1;
constexpr int kExitUsage = 2;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::schema:
    case ErrorKind::ingestion:
    case ErrorKind::invalid_truth:
    case ErrorKind::invalid_argument:
    case ErrorKind::not_found:
    case ErrorKind::aggregation:
    case ErrorKind::rejected_submission:
      return kExitUsage;
    default:
      return kExitTaskFailure;
  }
}

std::map<Tier, std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long n = std::stoll(item, &used);
      if (used != item.size() || n < 1) throw std::invalid_argument(item);
      v.push_back(static_cast<std::size_t>(n));
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_argument, "bad count '" + item + "'");
    }
  }
  if (v.size() != 3) {
    throw Error(ErrorKind::invalid_argument, "--counts takes easy,medium,hard");
  }
  return {{Tier::easy, v[0]}, {Tier::medium, v[1]}, {Tier::hard, v[2]}};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::invalid_argument, "cannot write " + path.string());
  f << text;
}

std::vector<fs::path> collect_results(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > 12 &&
            name.compare(name.size() - 12, 12, ".result.json") == 0) {
          files.push_back(e.path());
        }
      }
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      throw Error(ErrorKind::not_found, "no such file: " + in);
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

struct ForgeArgs {
  std::uint64_t seed_base = 1000;
  std::string counts = "20,40,40";
  std::string out;
  std::string suite_id = "suite";
  unsigned threads = 1;
  bool noiseless = false;
  bool multi_instrument = false;
};

int cmd_forge(const ForgeArgs& a) {
  GeneratorConfig cfg;
  cfg.noiseless = a.noiseless;
  cfg.multi_instrument = a.multi_instrument;
  const Suite suite = forge_suite(a.seed_base, parse_counts(a.counts), cfg, a.suite_id, a.threads);
  write_suite(a.out, suite);
  const auto& m = suite.manifest;
  std::cout << "forged " << suite.tasks.size() << " tasks into " << a.out << " (easy "
            << m.seeds.at(Tier::easy).size() << ", medium " << m.seeds.at(Tier::medium).size()
            << ", hard " << m.seeds.at(Tier::hard).size() << "; config " << m.config_hash
            << ")\n";
  return kExitOk;
}

struct GradeArgs {
  std::string task, truth, submission, out;
  double threshold = 0.8;
};

int cmd_grade(const GradeArgs& a) {
  const TaskBundle bundle = bundle_from_json(read_json_file(a.task), read_json_file(a.truth));
  const Submission sub = submission_from_json(read_json_file(a.submission));
  MatchConfig mc;
  mc.pass_threshold = a.threshold;
  mc.validate();
  CriteriaReport report;
  try {
    report = evaluate(sub, bundle, mc);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::rejected_submission) throw;
    report = rejection_report(e.what(), bundle.truth_planets.size());
  }
  const Json j = report_to_json(report);
  if (!a.out.empty()) write_json_file(a.out, j);
  std::cout << j.dump(2) << '\n';
  return report.passed() ? kExitOk : kExitTaskFailure;
}

struct BaselineArgs {
  std::string suite, out;
  unsigned threads = 1;
  bool series = false;
};

void write_series(const fs::path& dir, const TaskBundle& b, const Submission& sub) {
  write_text(dir / "periodogram.csv", periodogram_csv(gls_periodogram(b.dataset)));
  write_text(dir / "residuals.csv", residuals_csv(b.dataset, sub));
  for (std::size_t i = 0; i < sub.planets.size(); ++i) {
    write_text(dir / ("phase_fold_" + std::to_string(i) + ".csv"),
               phase_fold_csv(b.dataset, sub, i));
  }
}

int cmd_baseline(const BaselineArgs& a) {
  const Suite suite = read_suite(a.suite);
  const fs::path out(a.out);
  std::vector<BaselineOutcome> outcomes(suite.tasks.size());
  const unsigned threads = std::max(1u, a.threads);
  for (std::size_t start = 0; start < suite.tasks.size(); start += threads) {
    const std::size_t end = std::min(suite.tasks.size(), start + threads);
    std::vector<std::future<BaselineOutcome>> jobs;
    for (std::size_t i = start; i < end; ++i) {
      jobs.push_back(std::async(threads == 1 ? std::launch::deferred : std::launch::async,
                                [&suite, i] { return run_baseline(suite.tasks[i]); }));
    }
    for (std::size_t i = start; i < end; ++i) outcomes[i] = jobs[i - start].get();
  }
  std::size_t passed = 0;
  for (std::size_t i = 0; i < suite.tasks.size(); ++i) {
    const TaskBundle& b = suite.tasks[i];
    const BaselineOutcome& o = outcomes[i];
    write_json_file(out / "submissions" / (b.task_id + ".submission.json"),
                    submission_to_json(o.submission));
    std::string log;
    for (const auto& line : o.log.lines) log += line + '\n';
    write_text(out / "logs" / (b.task_id + ".log"), log);
    write_json_file(out / "results" / (b.task_id + ".result.json"), result_to_json(o.result));
    if (a.series) write_series(out / "series" / b.task_id, b, o.submission);
    passed += o.result.passed ? 1 : 0;
    std::cout << b.task_id << ' ' << to_string(b.tier) << ' '
              << (o.result.passed ? "pass" : "fail") << " n=" << o.submission.planets.size()
              << '\n';
  }
  std::cout << passed << '/' << suite.tasks.size() << " passed\n";
  return kExitOk;
}

struct ServeArgs {
  std::string suite;
  std::string listen;
  bool replay = false;
};

int cmd_serve(ServeArgs a) {
  if (a.listen.empty()) {
    if (const char* env = std::getenv("RVARENA_LISTEN")) a.listen = env;
  }
  if (!a.replay) {
    if (const char* env = std::getenv("RVARENA_REPLAY")) a.replay = std::string(env) == "1";
  }
  if (!fs::is_directory(a.suite)) {
    throw Error(ErrorKind::not_found, "suite directory not found: " + a.suite);
  }
  EpisodeEngine engine(steady_clock_seconds(), a.replay);
  ProtocolHandler handler(engine, suite_provider(a.suite));
  if (a.listen.empty()) {
    serve_stream(std::cin, std::cout, handler);
    return kExitOk;
  }
  const auto [host, port] = parse_listen_address(a.listen);
  serve_tcp(host, port, handler, [&](unsigned short bound) {
    std::cerr << "listening on " << host << ':' << bound << std::endl;
  });
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string json_out, sweep_csv;
  std::vector<double> thresholds{kSweepThresholds.begin(), kSweepThresholds.end()};
};

int cmd_report(const ReportArgs& a) {
  std::vector<Json> docs;
  for (const auto& f : collect_results(a.inputs)) docs.push_back(read_json_file(f));
  const AggregateReport agg = aggregate_report(docs, a.thresholds);
  std::cout << aggregate_to_text(agg);
  if (!a.json_out.empty()) write_json_file(a.json_out, aggregate_to_json(agg));
  if (!a.sweep_csv.empty()) write_text(a.sweep_csv, sweep_to_csv(agg));
  return kExitOk;
}

struct IngestArgs {
  std::string table, truth, task_id, out;
};

int cmd_ingest(const IngestArgs& a) {
  const TaskBundle b = ingest_archive(read_archive_table(a.table),
                                      archive_truth_from_json(read_json_file(a.truth)), a.task_id);
  const fs::path out(a.out);
  write_json_file(out / (b.task_id + ".task.json"), task_to_json(b));
  write_json_file(out / (b.task_id + ".truth.json"), truth_to_json(b));
  std::cout << "ingested " << b.task_id << ": " << b.dataset.size() << " points, "
            << b.dataset.instruments().size() << " instrument(s), tier " << to_string(b.tier)
            << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial-velocity planet-finding arena"};
  app.require_subcommand(1);

  ForgeArgs forge;
  auto* f = app.add_subcommand("forge", "Generate a task suite");
  f->add_option("--seed-base", forge.seed_base, "First seed")->capture_default_str();
  f->add_option("--counts", forge.counts, "Tasks per tier: easy,medium,hard")
      ->capture_default_str();
  f->add_option("--out", forge.out, "Output directory")->required();
  f->add_option("--suite-id", forge.suite_id)->capture_default_str();
  f->add_option("--threads", forge.threads)->capture_default_str();
  f->add_flag("--noiseless", forge.noiseless, "Skip the noise draw");
  f->add_flag("--multi-instrument", forge.multi_instrument, "Split data across instruments");

  GradeArgs grade;
  auto* g = app.add_subcommand("grade", "Grade a submission against ground truth");
  g->add_option("task", grade.task)->required()->check(CLI::ExistingFile);
  g->add_option("truth", grade.truth)->required()->check(CLI::ExistingFile);
  g->add_option("submission", grade.submission)->required()->check(CLI::ExistingFile);
  g->add_option("--threshold", grade.threshold, "Match threshold")->capture_default_str();
  g->add_option("--out", grade.out, "Also write the report here");

  BaselineArgs base;
  auto* b = app.add_subcommand("baseline", "Run the classical solver over a suite");
  b->add_option("--suite", base.suite)->required()->check(CLI::ExistingDirectory);
  b->add_option("--out", base.out)->required();
  b->add_option("--threads", base.threads)->capture_default_str();
  b->add_flag("--series", base.series, "Write periodogram, residual and phase-fold CSVs");

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "Serve episodes over stdio or TCP");
  s->add_option("--suite", serve.suite, "Directory of task and truth files")->required();
  s->add_option("--listen", serve.listen, "host:port (default: stdio, or $RVARENA_LISTEN)");
  s->add_flag("--replay", serve.replay, "Disable wall-clock limits ($RVARENA_REPLAY=1)");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Aggregate result files");
  r->add_option("inputs", report.inputs, "Result files or directories")->required();
  r->add_option("--json", report.json_out, "Write the aggregate as JSON");
  r->add_option("--sweep-csv", report.sweep_csv, "Write the threshold sweep as CSV");
  r->add_option("--thresholds", report.thresholds, "Match thresholds for the sweep")
      ->capture_default_str();

  IngestArgs ingest;
  auto* i = app.add_subcommand("ingest", "Convert an archival RV table into a task");
  i->add_option("--table", ingest.table)->required()->check(CLI::ExistingFile);
  i->add_option("--truth", ingest.truth)->required()->check(CLI::ExistingFile);
  i->add_option("--task-id", ingest.task_id)->required();
  i->add_option("--out", ingest.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*f) return cmd_forge(forge);
    if (*g) return cmd_grade(grade);
    if (*b) return cmd_baseline(base);
    if (*s) return cmd_serve(serve);
    if (*r) return cmd_report(report);
    if (*i) return cmd_ingest(ingest);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitTaskFailure;
  }
  return kExitUsage;
}
