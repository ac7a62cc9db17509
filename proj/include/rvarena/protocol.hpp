#pragma once

// Newline-delimited JSON protocol over a byte stream.
//
// Client → server: hello, submit, usage, finalize.
// Server → client: task, report, usage_ack, result, error.
// Every message carries {type, episode_id, seq}. Client seq numbers start at
// 0 with hello and increase by one; replies echo the request's seq.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "rvarena/episode.hpp"

namespace rvarena {

inline constexpr int kProtocolVersion = 1;

using TaskProvider = std::function<TaskBundle(const std::string& task_id)>;

/// Loads `<id>.task.json` and `<id>.truth.json` from `dir`, caching bundles.
/// Throws Error(not_found) for an unknown id.
TaskProvider suite_provider(const std::filesystem::path& dir);

class ProtocolHandler {
 public:
  ProtocolHandler(EpisodeEngine& engine, TaskProvider provider);

  /// One inbound line in, one outbound line out (no trailing newline).
  std::string handle_line(const std::string& line);
  Json handle(const Json& message);

 private:
  struct Channel {
    std::mutex mu;
    std::uint64_t next_seq = 0;
  };

  Json dispatch(const std::string& type, const std::string& episode_id, std::uint64_t seq,
                const Json& message);

  EpisodeEngine& engine_;
  TaskProvider provider_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Channel>> channels_;
};

Json error_message(const std::string& episode_id, const Json& seq, std::string_view kind,
                   const std::string& message);

/// Serves one stream until EOF.
void serve_stream(std::istream& in, std::ostream& out, ProtocolHandler& handler);

/// Accepts TCP connections on host:port, one thread per connection. Runs
/// until the process exits. `on_ready` receives the bound port.
void serve_tcp(const std::string& host, unsigned short port, ProtocolHandler& handler,
               const std::function<void(unsigned short)>& on_ready = {});

/// Parses "host:port" (or ":port"/"port", host defaults to 127.0.0.1).
std::pair<std::string, unsigned short> parse_listen_address(const std::string& spec);

}  // namespace rvarena
