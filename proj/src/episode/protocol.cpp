#include "rvarena/protocol.hpp"

#include <istream>
#include <ostream>

#include "rvarena/error.hpp"

namespace rvarena {

namespace {

Json limits_to_json(const EpisodeConfig& c) {
  return Json{{"max_tokens", c.max_tokens},
              {"max_wall_seconds", c.max_wall_seconds},
              {"max_submissions", c.max_submissions},
              {"max_planets_per_submission", c.max_planets_per_submission}};
}

Json reply(std::string_view type, const std::string& episode_id, std::uint64_t seq) {
  return Json{{"type", std::string(type)}, {"episode_id", episode_id}, {"seq", seq}};
}

bool is_count(const Json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

}  // namespace

Json error_message(const std::string& episode_id, const Json& seq, std::string_view kind,
                   const std::string& message) {
  Json j{{"type", "error"}, {"seq", seq}, {"kind", std::string(kind)}, {"message", message}};
  j["episode_id"] = episode_id.empty() ? Json(nullptr) : Json(episode_id);
  return j;
}

TaskProvider suite_provider(const std::filesystem::path& dir) {
  auto cache = std::make_shared<std::map<std::string, TaskBundle>>();
  auto mu = std::make_shared<std::mutex>();
  return [dir, cache, mu](const std::string& task_id) {
    std::lock_guard lock(*mu);
    if (const auto it = cache->find(task_id); it != cache->end()) return it->second;
    if (task_id.empty() || task_id.find('/') != std::string::npos ||
        task_id.find("..") != std::string::npos) {
      throw Error(ErrorKind::not_found, "invalid task id '" + task_id + "'");
    }
    const auto task_path = dir / (task_id + ".task.json");
    const auto truth_path = dir / (task_id + ".truth.json");
    if (!std::filesystem::exists(task_path) || !std::filesystem::exists(truth_path)) {
      throw Error(ErrorKind::not_found, "unknown task '" + task_id + "'");
    }
    TaskBundle b = bundle_from_json(read_json_file(task_path), read_json_file(truth_path));
    cache->emplace(task_id, b);
    return b;
  };
}

ProtocolHandler::ProtocolHandler(EpisodeEngine& engine, TaskProvider provider)
    : engine_(engine), provider_(std::move(provider)) {}

std::string ProtocolHandler::handle_line(const std::string& line) {
  Json msg;
  try {
    msg = Json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    return error_message("", nullptr, "protocol", std::string("malformed JSON: ") + e.what())
        .dump();
  }
  return handle(msg).dump();
}

Json ProtocolHandler::handle(const Json& msg) {
  if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string()) {
    return error_message("", nullptr, "protocol", "message needs a string 'type'");
  }
  const Json seq_field = msg.contains("seq") ? msg.at("seq") : Json(nullptr);
  if (!msg.contains("episode_id") || !msg.at("episode_id").is_string() ||
      msg.at("episode_id").get<std::string>().empty()) {
    return error_message("", seq_field, "protocol", "message needs a non-empty 'episode_id'");
  }
  const std::string episode_id = msg.at("episode_id").get<std::string>();
  if (!is_count(seq_field)) {
    return error_message(episode_id, seq_field, "protocol", "message needs an unsigned 'seq'");
  }
  const std::uint64_t seq = seq_field.get<std::uint64_t>();
  const std::string type = msg.at("type").get<std::string>();

  std::shared_ptr<Channel> ch;
  {
    std::lock_guard lock(mu_);
    const auto it = channels_.find(episode_id);
    if (it != channels_.end()) {
      ch = it->second;
    } else if (type == "hello") {
      ch = std::make_shared<Channel>();
    } else {
      return error_message(episode_id, seq, "not_found",
                           "unknown episode '" + episode_id + "'; send hello first");
    }
  }

  std::lock_guard lock(ch->mu);
  if (type == "hello") {
    if (seq != 0) return error_message(episode_id, seq, "protocol", "hello must carry seq 0");
    {
      std::lock_guard map_lock(mu_);
      if (channels_.count(episode_id)) {
        return error_message(episode_id, seq, "conflict",
                             "episode '" + episode_id + "' already exists");
      }
    }
    Json out = dispatch(type, episode_id, seq, msg);
    if (out.at("type") != "error") {
      ch->next_seq = 1;
      std::lock_guard map_lock(mu_);
      channels_.emplace(episode_id, ch);
    }
    return out;
  }
  if (seq != ch->next_seq) {
    return error_message(episode_id, seq, "protocol",
                         "expected seq " + std::to_string(ch->next_seq) + ", got " +
                             std::to_string(seq));
  }
  ch->next_seq = seq + 1;
  return dispatch(type, episode_id, seq, msg);
}

Json ProtocolHandler::dispatch(const std::string& type, const std::string& episode_id,
                               std::uint64_t seq, const Json& msg) {
  try {
    if (type == "hello") {
      if (!msg.contains("task_id") || !msg.at("task_id").is_string()) {
        return error_message(episode_id, seq, "protocol", "hello needs a string 'task_id'");
      }
      const TaskBundle bundle = provider_(msg.at("task_id").get<std::string>());
      const EpisodeConfig cfg = EpisodeConfig::for_tier(bundle.tier);
      Json task = engine_.start_episode(episode_id, bundle, cfg);
      Json out = reply("task", episode_id, seq);
      out["protocol_version"] = kProtocolVersion;
      out["task"] = std::move(task);
      out["limits"] = limits_to_json(cfg);
      out["budget"] = budget_to_json(engine_.budget(episode_id));
      return out;
    }
    if (type == "submit") {
      if (!msg.contains("submission")) {
        return error_message(episode_id, seq, "protocol", "submit needs a 'submission'");
      }
      const SubmitOutcome o = engine_.handle_submit(episode_id, msg.at("submission"));
      Json out = reply("report", episode_id, seq);
      out["report"] = report_to_json(o.report);
      out["attempt_consumed"] = o.attempt_consumed;
      out["budget"] = budget_to_json(o.budget);
      return out;
    }
    if (type == "usage") {
      if (!msg.contains("tokens") || !is_count(msg.at("tokens"))) {
        return error_message(episode_id, seq, "protocol", "usage needs an unsigned 'tokens'");
      }
      std::optional<std::uint64_t> tools;
      if (msg.contains("tool_calls")) {
        if (!is_count(msg.at("tool_calls"))) {
          return error_message(episode_id, seq, "protocol", "'tool_calls' must be unsigned");
        }
        tools = msg.at("tool_calls").get<std::uint64_t>();
      }
      const UsageOutcome o =
          engine_.report_usage(episode_id, msg.at("tokens").get<std::uint64_t>(), tools);
      Json out = reply("usage_ack", episode_id, seq);
      out["accepted"] = o.accepted;
      out["status"] = std::string(to_string(o.budget.status));
      out["budget"] = budget_to_json(o.budget);
      return out;
    }
    if (type == "finalize") {
      std::optional<FinalizeReason> reason;
      if (msg.contains("reason") && !msg.at("reason").is_null()) {
        if (!msg.at("reason").is_string()) {
          return error_message(episode_id, seq, "protocol", "'reason' must be a string");
        }
        reason = finalize_reason_from_string(msg.at("reason").get<std::string>());
      }
      const EpisodeResult r = engine_.finalize_episode(episode_id, reason);
      Json out = reply("result", episode_id, seq);
      out["result"] = result_to_json(r);
      return out;
    }
    return error_message(episode_id, seq, "protocol", "unknown message type '" + type + "'");
  } catch (const Error& e) {
    Json out = error_message(episode_id, seq, to_string(e.kind()), e.what());
    if (type != "hello") {
      try {
        out["budget"] = budget_to_json(engine_.budget(episode_id));
      } catch (const Error&) {
      }
    }
    return out;
  }
}

void serve_stream(std::istream& in, std::ostream& out, ProtocolHandler& handler) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out << handler.handle_line(line) << '\n';
    out.flush();
  }
}

std::pair<std::string, unsigned short> parse_listen_address(const std::string& spec) {
  std::string host = "127.0.0.1";
  std::string port = spec;
  if (const auto colon = spec.rfind(':'); colon != std::string::npos) {
    if (colon > 0) host = spec.substr(0, colon);
    port = spec.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    const unsigned long p = std::stoul(port, &used);
    if (used != port.size() || p > 65535) throw std::out_of_range(port);
    return {host, static_cast<unsigned short>(p)};
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_argument, "bad listen address '" + spec + "'");
  }
}

}  // namespace rvarena
