#include "hierg/service.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>

#include "httplib.h"

namespace hierg::service {

using expert::HierTrajectory;
using expert::LoLabel;
using expert::Segment;
using expert::Trajectory;
using expert::Verdict;
using maze::MazeSpec;
using maze::MazeState;

const char* to_string(QueryKind k) {
  switch (k) {
    case QueryKind::InspectFull: return "inspect_full";
    case QueryKind::LabelHi: return "label_hi";
    case QueryKind::InspectLo: return "inspect_lo";
    case QueryKind::LabelLo: return "label_lo";
    case QueryKind::Demonstrate: return "demonstrate";
  }
  return "?";
}

// --- codec ----------------------------------------------------------------------

namespace {

json cell_json(maze::Cell c) { return {c.row, c.col}; }

maze::Cell cell_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected a [row, col] pair");
  const maze::Cell c{j[0].get<int>(), j[1].get<int>()};
  if (c.row < 0 || c.col < 0 || c.row >= maze::kSize || c.col >= maze::kSize) throw ParseError("cell out of range");
  return c;
}

maze::Terminal terminal_from(const std::string& s) {
  for (auto t : {maze::Terminal::None, maze::Terminal::ReachedGoal, maze::Terminal::HitLava,
                 maze::Terminal::HorizonExpired})
    if (s == maze::to_string(t)) return t;
  throw ParseError("unknown terminal '" + s + "'");
}

}  // namespace

json state_json(const MazeState& s) {
  return {{"agent", cell_json(s.agent)},
          {"room", {s.room.row, s.room.col}},
          {"steps", s.steps},
          {"terminal", maze::to_string(s.terminal)},
          {"trail", s.trail.to_string()}};
}

MazeState state_from_json(const json& j) {
  MazeState s;
  s.agent = cell_from_json(j.at("agent"));
  s.room = {j.at("room").at(0).get<int>(), j.at("room").at(1).get<int>()};
  s.steps = j.at("steps").get<int>();
  s.terminal = terminal_from(j.at("terminal").get<std::string>());
  s.trail = std::bitset<maze::kCells>(j.at("trail").get<std::string>());
  return s;
}

json segment_json(const Segment& seg) {
  json steps = json::array();
  for (const auto& st : seg.steps)
    steps.push_back({{"state", state_json(st.state)}, {"action", maze::to_string(st.action)}, {"omega", st.omega}});
  return {{"entry", state_json(seg.entry)},
          {"subgoal", maze::to_string(seg.subgoal)},
          {"steps", steps},
          {"exit", state_json(seg.exit)}};
}

Segment segment_from_json(const json& j) {
  Segment seg;
  seg.entry = state_from_json(j.at("entry"));
  const auto g = maze::parse_subgoal(j.at("subgoal").get<std::string>());
  if (!g) throw ParseError("unknown subgoal");
  seg.subgoal = *g;
  for (const auto& st : j.at("steps")) {
    const auto a = maze::parse_action(st.at("action").get<std::string>());
    if (!a) throw ParseError("unknown action");
    seg.steps.push_back({state_from_json(st.at("state")), *a, st.at("omega").get<bool>()});
  }
  seg.exit = state_from_json(j.at("exit"));
  return seg;
}

// --- synthetic client -------------------------------------------------------------

json WireOracle::answer(const json& q) {
  const std::string kind = q.at("kind").get<std::string>();
  const MazeSpec spec = MazeSpec::from_text(q.at("render").at("maze").get<std::string>());
  CostLedger scratch;
  json a = {{"query_id", q.at("query_id")}, {"kind", kind}};
  auto verdict = [](Verdict v) { return v == Verdict::Pass ? "pass" : "fail"; };
  if (kind == "inspect_full") {
    Trajectory t;
    for (const auto& s : q.at("trajectory").at("states")) t.states.push_back(state_from_json(s));
    for (const auto& x : q.at("trajectory").at("actions"))
      t.actions.push_back(*maze::parse_action(x.get<std::string>()));
    a["verdict"] = verdict(ex_.inspect_full(spec, t, scratch));
  } else if (kind == "label_hi") {
    std::vector<MazeState> states;
    for (const auto& s : q.at("hi_states")) states.push_back(state_from_json(s));
    json names = json::array();
    for (auto g : ex_.label_hi(spec, states, scratch)) names.push_back(maze::to_string(g));
    a["subgoals"] = names;
  } else if (kind == "inspect_lo") {
    a["verdict"] = verdict(ex_.inspect_lo(spec, segment_from_json(q.at("segment")), scratch));
  } else if (kind == "label_lo") {
    json labels = json::array();
    for (const auto& l : ex_.label_lo(spec, segment_from_json(q.at("segment")), scratch))
      labels.push_back({{"action", maze::to_string(l.action)}, {"omega", l.omega}});
    a["labels"] = labels;
  } else if (kind == "demonstrate") {
    json segs = json::array();
    for (const auto& seg : ex_.hier_demo(spec, scratch).segments) {
      json steps = json::array();
      for (const auto& st : seg.steps) steps.push_back({{"action", maze::to_string(st.action)}, {"omega", st.omega}});
      segs.push_back({{"subgoal", maze::to_string(seg.subgoal)}, {"steps", steps}});
    }
    a["segments"] = segs;
  } else {
    throw ParseError("unknown query kind '" + kind + "'");
  }
  return a;
}

// --- sessions -------------------------------------------------------------------

namespace {

struct Closed {};

// Thrown while validating an answer; maps to 422.
struct BadShape : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Pending {
  int id = 0;
  QueryKind kind = QueryKind::InspectFull;
  std::size_t expected = 0;  // label count, or segment length
  MazeSpec spec;
  json payload;
};

Verdict parse_verdict(const json& a) {
  const json& v = a.contains("verdict") ? a["verdict"] : json();
  if (v == "pass") return Verdict::Pass;
  if (v == "fail") return Verdict::Fail;
  throw BadShape("verdict must be \"pass\" or \"fail\"");
}

std::vector<maze::Subgoal> parse_subgoals(const json& a, std::size_t n) {
  if (!a.contains("subgoals") || !a["subgoals"].is_array()) throw BadShape("subgoals must be a list");
  if (a["subgoals"].size() != n)
    throw BadShape("expected " + std::to_string(n) + " subgoals, got " + std::to_string(a["subgoals"].size()));
  std::vector<maze::Subgoal> out;
  for (const auto& x : a["subgoals"]) {
    const auto g = x.is_string() ? maze::parse_subgoal(x.get<std::string>()) : std::nullopt;
    if (!g) throw BadShape("unknown subgoal " + x.dump());
    out.push_back(*g);
  }
  return out;
}

LoLabel parse_label(const json& x) {
  if (!x.is_object() || !x.contains("action") || !x["action"].is_string())
    throw BadShape("each label needs an action");
  const auto act = maze::parse_action(x["action"].get<std::string>());
  if (!act) throw BadShape("unknown action " + x["action"].dump());
  const bool omega = x.contains("omega") ? x["omega"].is_boolean() && x["omega"].get<bool>() : false;
  if (x.contains("omega") && !x["omega"].is_boolean()) throw BadShape("omega must be true or false");
  return {*act, omega};
}

std::vector<LoLabel> parse_labels(const json& a, std::size_t n) {
  if (!a.contains("labels") || !a["labels"].is_array()) throw BadShape("labels must be a list");
  if (a["labels"].size() != n)
    throw BadShape("expected " + std::to_string(n) + " labels, got " + std::to_string(a["labels"].size()));
  std::vector<LoLabel> out;
  for (const auto& x : a["labels"]) out.push_back(parse_label(x));
  return out;
}

// Replays a demonstration from the maze's start.
HierTrajectory parse_demo(const json& a, const MazeSpec& spec) {
  if (!a.contains("segments") || !a["segments"].is_array() || a["segments"].empty())
    throw BadShape("segments must be a nonempty list");
  HierTrajectory d;
  d.initial = maze::initial_state(spec);
  MazeState s = d.initial;
  for (const auto& js : a["segments"]) {
    if (!js.is_object() || !js.contains("subgoal") || !js["subgoal"].is_string())
      throw BadShape("each segment needs a subgoal");
    const auto g = maze::parse_subgoal(js["subgoal"].get<std::string>());
    if (!g) throw BadShape("unknown subgoal " + js["subgoal"].dump());
    if (!js.contains("steps") || !js["steps"].is_array() || js["steps"].empty())
      throw BadShape("each segment needs a nonempty step list");
    Segment seg{s, *g, {}, s};
    for (const auto& x : js["steps"]) {
      if (s.terminal != maze::Terminal::None) throw BadShape("demonstration continues past the end of the episode");
      const LoLabel l = parse_label(x);
      seg.steps.push_back({s, l.action, l.omega});
      s = maze::step(spec, s, l.action).state;
    }
    seg.exit = s;
    d.segments.push_back(std::move(seg));
  }
  return d;
}

// What an accepted answer adds to the ledger.
json ledger_delta(const Pending& p, const json& a, const CostModel& m) {
  json rows = json::array();
  auto add = [&](OpKind op, Level level, double cost) {
    rows.push_back({{"op", hierg::to_string(op)}, {"level", hierg::to_string(level)}, {"cost", cost}});
  };
  switch (p.kind) {
    case QueryKind::InspectFull: add(OpKind::Inspect, Level::Full, m.full_inspect.charge(p.expected)); break;
    case QueryKind::LabelHi: add(OpKind::Label, Level::Hi, m.hi_label.charge(p.expected)); break;
    case QueryKind::InspectLo: add(OpKind::Inspect, Level::Lo, m.lo_inspect.charge(p.expected)); break;
    case QueryKind::LabelLo: add(OpKind::Label, Level::Lo, m.lo_label.charge(p.expected)); break;
    case QueryKind::Demonstrate: {
      const HierTrajectory d = parse_demo(a, p.spec);
      add(OpKind::Label, Level::Hi, m.hi_label.charge(d.segments.size()));
      for (const auto& seg : d.segments) add(OpKind::Label, Level::Lo, m.lo_label.charge(seg.steps.size()));
      break;
    }
  }
  return rows;
}

// Throws BadShape unless the answer fits the pending query.
void validate(const Pending& p, const json& a) {
  switch (p.kind) {
    case QueryKind::InspectFull:
    case QueryKind::InspectLo: parse_verdict(a); break;
    case QueryKind::LabelHi: parse_subgoals(a, p.expected); break;
    case QueryKind::LabelLo: parse_labels(a, p.expected); break;
    case QueryKind::Demonstrate: parse_demo(a, p.spec); break;
  }
}

json metrics_json(const algo::EpisodeMetrics& m) {
  return {{"episode", m.episode},
          {"success", m.success},
          {"trailing_success", m.trailing_success},
          {"hi_labels", m.hi_labels},
          {"lo_label_cost", m.lo_label_cost},
          {"inspect_cost", m.inspect_cost},
          {"total_cost", m.total_cost}};
}

}  // namespace

class Session {
 public:
  Session(std::string id, exp::ExperimentConfig cfg, fs::path journal, std::deque<json> replay, int journaled)
      : id_(std::move(id)),
        cfg_(std::move(cfg)),
        journal_(std::move(journal)),
        replay_(std::move(replay)),
        journaled_(journaled) {}

  ~Session() { close(); }

  void start() { worker_ = std::thread([this] { run(); }); }

  void close() {
    {
      std::lock_guard lk(mu_);
      closing_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
  }

  void write_journal(const json& line) {
    std::ofstream out(journal_, std::ios::app | std::ios::binary);
    out << line.dump() << "\n";
    out.flush();
  }

  std::optional<json> wait_query(int timeout_ms) {
    std::unique_lock lk(mu_);
    const long seen = episodes_;
    cv_.wait_for(lk, std::chrono::milliseconds(timeout_ms), [&] {
      return (pending_ && !answer_) || episodes_ != seen || status_ != "running" || closing_;
    });
    if (pending_ && !answer_) return pending_->payload;
    return std::nullopt;
  }

  std::pair<int, json> answer(const json& a) {
    std::unique_lock lk(mu_);
    if (!a.is_object() || !a.contains("query_id") || !a["query_id"].is_number_integer() || !a.contains("kind"))
      return {422, {{"error", "answer needs query_id and kind"}}};
    const int qid = a["query_id"].get<int>();
    if (!pending_ || answer_ || pending_->id != qid)
      return {409, {{"error", "query " + std::to_string(qid) + " is not pending"}}};
    if (a["kind"] != to_string(pending_->kind))
      return {409, {{"error", std::string("pending query is ") + to_string(pending_->kind)}}};
    json delta;
    try {
      validate(*pending_, a);
      delta = ledger_delta(*pending_, a, cfg_.run.costs);
    } catch (const BadShape& e) {
      return {422, {{"error", e.what()}}};
    }
    write_journal({{"type", "answer"}, {"query_id", qid}, {"kind", a["kind"]}, {"answer", a}});
    answer_ = a;
    lk.unlock();
    cv_.notify_all();
    double cost = 0.0;
    for (const auto& r : delta) cost += r["cost"].get<double>();
    return {200, {{"query_id", qid}, {"ledger_delta", delta}, {"cost", cost}}};
  }

  json metrics() {
    std::lock_guard lk(mu_);
    json j = {{"id", id_},
              {"status", status_},
              {"config_hash", cfg_.hash},
              {"episodes", episodes_},
              {"pending", pending_.has_value() && !answer_}};
    if (last_) j["last"] = metrics_json(*last_);
    if (!error_.empty()) j["error"] = error_;
    if (status_ == "finished") {
      j["metrics_csv"] = metrics_csv_;
      j["ledger_csv"] = ledger_csv_;
    }
    return j;
  }

  // Called from the training thread; blocks until answered.
  json ask(Pending p) {
    std::unique_lock lk(mu_);
    p.id = next_id_++;
    p.payload["schema"] = kWireSchema;
    p.payload["query_id"] = p.id;
    p.payload["kind"] = to_string(p.kind);
    p.payload["episode"] = episodes_ + 1;
    if (!replay_.empty()) {
      json a = std::move(replay_.front());
      replay_.pop_front();
      if (a.at("query_id") != p.id || a.at("kind") != to_string(p.kind))
        throw Error("session journal does not match the replayed run at query " + std::to_string(p.id));
      return a.at("answer");
    }
    if (p.id > journaled_) write_journal({{"type", "query"}, {"query_id", p.id}, {"kind", to_string(p.kind)}});
    pending_ = std::move(p);
    cv_.notify_all();
    cv_.wait(lk, [&] { return answer_.has_value() || closing_; });
    if (!answer_) throw Closed{};
    json a = std::move(*answer_);
    answer_.reset();
    pending_.reset();
    return a;
  }

  const exp::ExperimentConfig& config() const { return cfg_; }

 private:
  void run();

  std::string id_;
  exp::ExperimentConfig cfg_;
  fs::path journal_;
  std::deque<json> replay_;
  int journaled_ = 0;

  std::mutex mu_;
  std::condition_variable cv_;
  std::optional<Pending> pending_;
  std::optional<json> answer_;
  int next_id_ = 1;
  long episodes_ = 0;
  std::optional<algo::EpisodeMetrics> last_;
  std::string status_ = "running";
  std::string error_;
  std::string metrics_csv_, ledger_csv_;
  bool closing_ = false;
  std::thread worker_;
};

namespace {

// Expert whose every answer comes over the wire.
class RemoteExpert : public expert::Expert {
 public:
  explicit RemoteExpert(Session& s) : s_(s) {}

  void set_rollout(const HierTrajectory& h) { rollout_ = h; }

 protected:
  Verdict do_inspect_full(const MazeSpec& spec, const Trajectory& t) override {
    json states = json::array(), actions = json::array();
    for (const auto& st : t.states) states.push_back(state_json(st));
    for (auto a : t.actions) actions.push_back(maze::to_string(a));
    json payload = {{"render", render(spec, t)}, {"trajectory", {{"states", states}, {"actions", actions}}}};
    return parse_verdict(s_.ask({0, QueryKind::InspectFull, t.length(), spec, payload}));
  }

  std::vector<maze::Action> do_label_full(const MazeSpec&, const Trajectory&) override {
    throw Error("full labels are not served to a human expert");
  }

  std::vector<maze::Subgoal> do_label_hi(const MazeSpec& spec, std::span<const MazeState> hi) override {
    json states = json::array();
    for (const auto& st : hi) states.push_back(state_json(st));
    json payload = {{"render", render(spec, rollout_.full())}, {"hi_states", states}};
    return parse_subgoals(s_.ask({0, QueryKind::LabelHi, hi.size(), spec, payload}), hi.size());
  }

  Verdict do_inspect_lo(const MazeSpec& spec, const Segment& seg) override {
    return parse_verdict(s_.ask({0, QueryKind::InspectLo, seg.steps.size(), spec, lo_payload(spec, seg)}));
  }

  std::vector<LoLabel> do_label_lo(const MazeSpec& spec, const Segment& seg) override {
    return parse_labels(s_.ask({0, QueryKind::LabelLo, seg.steps.size(), spec, lo_payload(spec, seg)}),
                        seg.steps.size());
  }

  HierTrajectory do_hier_demo(const MazeSpec& spec) override {
    const MazeState init = maze::initial_state(spec);
    Trajectory start{{init}, {}};
    json payload = {{"render", {{"maze", spec.to_text()}, {"trail", json::array()}, {"segments", json::array()}}},
                    {"initial", state_json(init)}};
    (void)start;
    return parse_demo(s_.ask({0, QueryKind::Demonstrate, 0, spec, payload}), spec);
  }

  Trajectory do_flat_demo(const MazeSpec&) override {
    throw Error("flat demonstrations are not served to a human expert");
  }

 private:
  json render(const MazeSpec& spec, const Trajectory& t) const {
    json trail = json::array();
    for (const auto& st : t.states) trail.push_back(cell_json(st.agent));
    json segs = json::array();
    std::size_t start = 0;
    for (const auto& seg : rollout_.segments) {
      segs.push_back({{"start", start}, {"length", seg.steps.size()}, {"subgoal", maze::to_string(seg.subgoal)}});
      start += seg.steps.size();
    }
    return {{"maze", spec.to_text()}, {"trail", trail}, {"segments", segs}};
  }

  json lo_payload(const MazeSpec& spec, const Segment& seg) const {
    int index = -1;
    for (std::size_t h = 0; h < rollout_.segments.size(); ++h)
      if (rollout_.segments[h].entry == seg.entry) index = static_cast<int>(h);
    return {{"render", render(spec, rollout_.full())}, {"segment_index", index}, {"segment", segment_json(seg)}};
  }

  Session& s_;
  HierTrajectory rollout_;
};

}  // namespace

void Session::run() {
  std::string status = "finished", error;
  try {
    algo::RunConfig rc = cfg_.run;
    rc.seed = cfg_.seeds.front();
    rc.config_hash = cfg_.hash;
    RemoteExpert ex(*this);
    algo::Observer obs;
    obs.on_episode = [&](const algo::EpisodeMetrics& m) {
      {
        std::lock_guard lk(mu_);
        last_ = m;
        ++episodes_;
      }
      cv_.notify_all();
    };
    obs.on_maze_rollout = [&](int, const HierTrajectory& h) { ex.set_rollout(h); };
    obs.cancelled = [&] {
      std::lock_guard lk(mu_);
      return closing_;
    };
    const algo::RunResult r = algo::run(rc, &ex, &obs);
    std::lock_guard lk(mu_);
    metrics_csv_ = r.log.to_csv();
    ledger_csv_ = exp::preamble(cfg_.hash, rc.seed) + r.ledger.to_csv();
    if (r.stopped_early) status = "cancelled";
  } catch (const Closed&) {
    status = "cancelled";
  } catch (const std::exception& e) {
    status = "failed";
    error = e.what();
  }
  {
    std::lock_guard lk(mu_);
    status_ = status;
    error_ = error;
  }
  cv_.notify_all();
}

// --- service ----------------------------------------------------------------------

namespace {

std::string fresh_id() {
  static std::mutex m;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lk(m);
  std::ostringstream out;
  out << "s" << std::hex << std::setw(16) << std::setfill('0') << gen();
  return out.str();
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

Service::Service(ServiceOptions opts) : opts_(std::move(opts)), http_(std::make_unique<httplib::Server>()) {
  fs::create_directories(opts_.store);
  routes();
}

Service::~Service() {
  // Closing first wakes any long-polls so the server can drain.
  std::map<std::string, std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lk(mu_);
    sessions.swap(sessions_);
  }
  for (auto& [id, s] : sessions) s->close();
  stop();
}

std::shared_ptr<Session> Service::find(const std::string& id) {
  std::lock_guard lk(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<Session> Service::open(const exp::ExperimentConfig& cfg, const std::string& id,
                                       const std::vector<json>& replay, int journaled) {
  auto s = std::make_shared<Session>(id, cfg, opts_.store / (id + ".journal"),
                                     std::deque<json>(replay.begin(), replay.end()), journaled);
  {
    std::lock_guard lk(mu_);
    sessions_[id] = s;
  }
  s->start();
  return s;
}

int Service::resume_all() {
  int n = 0;
  std::vector<fs::path> journals;
  for (const auto& e : fs::directory_iterator(opts_.store))
    if (e.path().extension() == ".journal") journals.push_back(e.path());
  std::sort(journals.begin(), journals.end());
  for (const auto& path : journals) {
    const std::string id = path.stem().string();
    if (find(id)) continue;
    std::ifstream in(path);
    std::string line;
    std::optional<exp::ExperimentConfig> cfg;
    std::vector<json> answers;
    int journaled = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string type = j.at("type");
      if (type == "create") cfg = exp::parse_config(j.at("config"));
      else if (type == "query") journaled = std::max(journaled, j.at("query_id").get<int>());
      else if (type == "answer") answers.push_back(j);
    }
    if (!cfg) continue;
    open(*cfg, id, answers, journaled);
    ++n;
  }
  return n;
}

void Service::routes() {
  auto& srv = *http_;
  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    exp::ExperimentConfig cfg;
    try {
      cfg = exp::parse_config(json::parse(req.body));
    } catch (const json::exception& e) {
      return reply(res, 400, {{"error", std::string("invalid JSON: ") + e.what()}});
    } catch (const ConfigError& e) {
      return reply(res, 400, {{"error", e.what()}});
    }
    if (cfg.expert != exp::ExpertMode::Human)
      return reply(res, 400, {{"error", "expert: sessions serve a human expert; synthetic runs need no session"}});
    std::string id;
    do id = fresh_id();
    while (find(id) || fs::exists(opts_.store / (id + ".journal")));
    {
      std::ofstream out(opts_.store / (id + ".journal"), std::ios::binary);
      out << json{{"type", "create"}, {"schema", kWireSchema}, {"id", id}, {"config", exp::to_json(cfg)}}.dump()
          << "\n";
    }
    open(cfg, id, {}, 0);
    reply(res, 201, {{"id", id}, {"config_hash", cfg.hash}});
  });

  srv.Get(R"(/sessions/([^/]+)/query)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = find(req.matches[1]);
    if (!s) return reply(res, 404, {{"error", "unknown session"}});
    int timeout = opts_.poll_timeout_ms;
    if (req.has_param("timeout_ms")) {
      try {
        timeout = std::clamp(std::stoi(req.get_param_value("timeout_ms")), 0, opts_.poll_timeout_ms);
      } catch (const std::exception&) {
        return reply(res, 400, {{"error", "timeout_ms must be an integer"}});
      }
    }
    if (auto q = s->wait_query(timeout)) return reply(res, 200, *q);
    res.status = 204;
  });

  srv.Post(R"(/sessions/([^/]+)/answer)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = find(req.matches[1]);
    if (!s) return reply(res, 404, {{"error", "unknown session"}});
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      return reply(res, 422, {{"error", std::string("invalid JSON: ") + e.what()}});
    }
    const auto [status, out] = s->answer(body);
    reply(res, status, out);
  });

  srv.Get(R"(/sessions/([^/]+)/metrics)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = find(req.matches[1]);
    if (!s) return reply(res, 404, {{"error", "unknown session"}});
    reply(res, 200, s->metrics());
  });
}

int Service::start(const std::string& host, int port) {
  const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return bound;
}

void Service::listen(const std::string& host, int port) {
  if (!http_->listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
  http_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace hierg::service
