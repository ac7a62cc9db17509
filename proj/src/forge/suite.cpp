#include <algorithm>
#include <future>
#include <set>

#include "rvarena/error.hpp"
#include "rvarena/forge.hpp"

namespace rvarena {

namespace {

constexpr Tier kTiers[] = {Tier::easy, Tier::medium, Tier::hard};

std::optional<TaskBundle> try_generate(std::uint64_t seed, const GeneratorConfig& cfg) {
  try {
    return generate_task(seed, cfg);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::generation_exhausted) throw;
    return std::nullopt;
  }
}

}  // namespace

void SuiteManifest::validate() const {
  std::set<std::uint64_t> seen;
  for (const auto& [tier, n] : counts) {
    if (n < 1) throw Error(ErrorKind::schema, "suite count for a tier must be >= 1");
    const auto it = seeds.find(tier);
    const std::size_t have = it == seeds.end() ? 0 : it->second.size();
    if (have != n) {
      throw Error(ErrorKind::schema, std::string(to_string(tier)) + ": " +
                                         std::to_string(have) + " seeds for count " +
                                         std::to_string(n));
    }
  }
  for (const auto& [tier, list] : seeds) {
    if (!counts.count(tier)) throw Error(ErrorKind::schema, "seeds for a tier without count");
    for (auto s : list) {
      if (!seen.insert(s).second) {
        throw Error(ErrorKind::schema, "seed " + std::to_string(s) + " repeats");
      }
    }
  }
}

Suite forge_suite(std::uint64_t seed_base, const std::map<Tier, std::size_t>& counts,
                  const GeneratorConfig& cfg, const std::string& suite_id, unsigned threads,
                  std::uint64_t max_seeds) {
  Suite suite;
  SuiteManifest& m = suite.manifest;
  m.suite_id = suite_id;
  m.seed_base = seed_base;
  m.counts = counts;
  m.config_hash = config_hash(cfg);
  for (const auto& [tier, n] : counts) {
    if (n < 1) throw Error(ErrorKind::invalid_argument, "suite counts must be >= 1");
    m.seeds[tier];
  }

  auto full = [&] {
    for (const auto& [tier, n] : counts) {
      if (m.seeds[tier].size() < n) return false;
    }
    return true;
  };

  threads = std::max(1u, threads);
  std::uint64_t next = seed_base;
  while (!full()) {
    if (next - seed_base >= max_seeds) {
      throw Error(ErrorKind::generation_exhausted,
                  "suite not filled after " + std::to_string(max_seeds) + " seeds");
    }
    const std::uint64_t batch = std::min<std::uint64_t>(threads, max_seeds - (next - seed_base));
    std::vector<std::optional<TaskBundle>> made(batch);
    if (threads == 1) {
      made[0] = try_generate(next, cfg);
    } else {
      std::vector<std::future<std::optional<TaskBundle>>> jobs;
      for (std::uint64_t i = 0; i < batch; ++i) {
        jobs.push_back(std::async(std::launch::async, try_generate, next + i, std::cref(cfg)));
      }
      for (std::uint64_t i = 0; i < batch; ++i) made[i] = jobs[i].get();
    }
    for (std::uint64_t i = 0; i < batch && !full(); ++i) {
      const std::uint64_t seed = next + i;
      if (!made[i]) {
        m.exhausted_seeds.push_back(seed);
        continue;
      }
      const auto want = counts.find(made[i]->tier);
      if (want == counts.end() || m.seeds[made[i]->tier].size() >= want->second) continue;
      m.seeds[made[i]->tier].push_back(seed);
      suite.tasks.push_back(std::move(*made[i]));
    }
    next += batch;
  }
  m.validate();
  return suite;
}

Json manifest_to_json(const SuiteManifest& m) {
  Json counts = Json::object();
  Json seeds = Json::object();
  for (Tier t : kTiers) {
    const std::string name(to_string(t));
    if (const auto it = m.counts.find(t); it != m.counts.end()) counts[name] = it->second;
    if (const auto it = m.seeds.find(t); it != m.seeds.end()) seeds[name] = it->second;
  }
  return Json{{"schema_version", kSchemaVersion},
              {"suite_id", m.suite_id},
              {"seed_base", m.seed_base},
              {"counts", counts},
              {"seeds", seeds},
              {"config_hash", m.config_hash},
              {"exhausted_seeds", m.exhausted_seeds}};
}

SuiteManifest manifest_from_json(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorKind::schema, "unsupported manifest schema_version");
    }
    SuiteManifest m;
    m.suite_id = j.at("suite_id").get<std::string>();
    m.seed_base = j.at("seed_base").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("counts").items()) {
      m.counts[tier_from_string(k)] = v.get<std::size_t>();
    }
    for (const auto& [k, v] : j.at("seeds").items()) {
      m.seeds[tier_from_string(k)] = v.get<std::vector<std::uint64_t>>();
    }
    m.config_hash = j.at("config_hash").get<std::string>();
    if (j.contains("exhausted_seeds")) {
      m.exhausted_seeds = j.at("exhausted_seeds").get<std::vector<std::uint64_t>>();
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("manifest: ") + e.what());
  }
}

void write_suite(const std::filesystem::path& dir, const Suite& suite) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "manifest.json", manifest_to_json(suite.manifest));
  for (const auto& b : suite.tasks) {
    write_json_file(dir / (b.task_id + ".task.json"), task_to_json(b));
    write_json_file(dir / (b.task_id + ".truth.json"), truth_to_json(b));
  }
}

Suite read_suite(const std::filesystem::path& dir) {
  Suite suite;
  suite.manifest = manifest_from_json(read_json_file(dir / "manifest.json"));
  std::vector<std::uint64_t> seeds;
  for (const auto& [tier, list] : suite.manifest.seeds) {
    seeds.insert(seeds.end(), list.begin(), list.end());
  }
  std::sort(seeds.begin(), seeds.end());
  for (auto s : seeds) {
    const std::string id = synthetic_task_id(s);
    suite.tasks.push_back(bundle_from_json(read_json_file(dir / (id + ".task.json")),
                                           read_json_file(dir / (id + ".truth.json"))));
  }
  return suite;
}

}  // namespace rvarena
