#ifndef HIERG_SERVICE_HPP_
#define HIERG_SERVICE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "json.hpp"

#include "hierg/experiment.hpp"
#include "hierg/expert.hpp"

namespace httplib {
class Server;
}

namespace hierg::service {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kWireSchema = 1;

// Query kinds carried over the wire. Demonstrate serves hg-DAgger's
// warm-start episodes.
enum class QueryKind { InspectFull, LabelHi, InspectLo, LabelLo, Demonstrate };
const char* to_string(QueryKind k);

// Exact state codec; the synthetic client rebuilds identical states from it.
json state_json(const maze::MazeState& s);
maze::MazeState state_from_json(const json& j);
json segment_json(const expert::Segment& seg);
expert::Segment segment_from_json(const json& j);

// Answers queries with the synthetic expert, working only from the payload.
class WireOracle {
 public:
  json answer(const json& query);

 private:
  expert::SyntheticExpert ex_;
};

class Session;

struct ServiceOptions {
  fs::path store;            // journals live here, one file per session
  int poll_timeout_ms = 30000;
};

// HTTP/JSON front end over human-expert hg-DAgger sessions.
//
//   POST /sessions                 config document -> 201 {"id": ...}
//   GET  /sessions/{id}/query      long-poll; 200 query, 204 none pending
//   POST /sessions/{id}/answer     200 ledger delta; 409 wrong query; 422 bad shape
//   GET  /sessions/{id}/metrics    progress, and the CSVs once finished
class Service {
 public:
  explicit Service(ServiceOptions opts);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Re-creates every journaled session and replays its answers.
  int resume_all();

  // Binds and serves on a background thread. Port 0 picks a free port;
  // returns the bound port.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  void routes();
  std::shared_ptr<Session> find(const std::string& id);
  std::shared_ptr<Session> open(const exp::ExperimentConfig& cfg, const std::string& id,
                                const std::vector<json>& replay, int journaled);

  ServiceOptions opts_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace hierg::service

#endif  // HIERG_SERVICE_HPP_
