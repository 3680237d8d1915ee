#include "hierg/chain_env.hpp"

#include <bit>
#include <deque>
#include <sstream>

#include "hierg/common.hpp"

namespace hierg::chain {

namespace {

constexpr std::array<Pos, kNumActions> kDelta = {
    Pos{-1, 0}, Pos{1, 0}, Pos{0, -1}, Pos{0, 1}, Pos{-1, -1}, Pos{-1, 1}, Pos{1, -1}, Pos{1, 1}};

constexpr char kCellChars[] = {'.', '#', 'X', 'H', 'K', 'D'};

enum Code : std::uint8_t { kFloor, kSolid, kHazard, kLadder, kKeyItem, kDoorClosed, kAgent = 9 };

}  // namespace

const char* to_string(Action a) {
  static const char* names[] = {"N", "S", "W", "E", "NW", "NE", "SW", "SE"};
  return names[static_cast<int>(a)];
}

Pos moved(Pos p, Action a) {
  const Pos d = kDelta[static_cast<int>(a)];
  return {p.row + d.row, p.col + d.col};
}

ChainSpec::ChainSpec(int rows, int cols, std::vector<CellKind> cells,
                     std::array<Box, kNumLandmarks> landmarks, Pos start,
                     std::array<double, kNumLandmarks> rewards)
    : rows_(rows), cols_(cols), cells_(std::move(cells)), landmarks_(landmarks), start_(start),
      rewards_(rewards) {
  if (rows_ <= 0 || cols_ <= 0 || static_cast<int>(cells_.size()) != rows_ * cols_)
    throw ParseError("chain: grid size mismatch");
  for (const Box& b : landmarks_) {
    if (b.r0 > b.r1 || b.c0 > b.c1 || !inside({b.r0, b.c0}) || !inside({b.r1, b.c1}))
      throw ParseError("chain: landmark box outside grid");
  }
  if (!inside(start_) || kind(start_) == CellKind::Solid || kind(start_) == CellKind::Hazard)
    throw ParseError("chain: bad start");
}

std::string ChainSpec::to_text() const {
  std::ostringstream out;
  out << "chain " << rows_ << ' ' << cols_ << '\n';
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      const Pos p{r, c};
      out << (p == start_ ? 'S' : kCellChars[static_cast<int>(kind(p))]);
    }
    out << '\n';
  }
  out << "landmarks\n";
  for (int k = 0; k < kNumLandmarks; ++k) {
    const Box& b = landmarks_[k];
    out << k + 1 << ' ' << b.r0 << ' ' << b.c0 << ' ' << b.r1 << ' ' << b.c1 << '\n';
  }
  out << "rewards\n";
  for (int k = 0; k < kNumLandmarks; ++k)
    if (rewards_[k] != 0.0) out << k + 1 << ' ' << fmt_num(rewards_[k]) << '\n';
  return out.str();
}

ChainSpec ChainSpec::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string word;
  int rows = 0, cols = 0;
  if (!(in >> word >> rows >> cols) || word != "chain" || rows <= 0 || cols <= 0)
    throw ParseError("chain: missing 'chain <rows> <cols>' header");
  std::string line;
  std::getline(in, line);
  std::vector<CellKind> cells(static_cast<std::size_t>(rows) * cols);
  Pos start{-1, -1};
  for (int r = 0; r < rows; ++r) {
    if (!std::getline(in, line) || static_cast<int>(line.size()) != cols)
      throw ParseError("chain: row " + std::to_string(r) + " must have " + std::to_string(cols) +
                       " characters");
    for (int c = 0; c < cols; ++c) {
      CellKind k;
      switch (line[c]) {
        case '.': k = CellKind::Open; break;
        case 'S': k = CellKind::Open; start = {r, c}; break;
        case '#': k = CellKind::Solid; break;
        case 'X': k = CellKind::Hazard; break;
        case 'H': k = CellKind::Ladder; break;
        case 'K': k = CellKind::Key; break;
        case 'D': k = CellKind::Door; break;
        default: throw ParseError(std::string("chain: unknown cell '") + line[c] + "'");
      }
      cells[static_cast<std::size_t>(r) * cols + c] = k;
    }
  }
  if (start.row < 0) throw ParseError("chain: missing start");

  std::array<Box, kNumLandmarks> boxes{};
  std::array<bool, kNumLandmarks> seen{};
  std::array<double, kNumLandmarks> rewards{};
  std::string section;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "landmarks" || line == "rewards") {
      section = line;
      continue;
    }
    std::istringstream row(line);
    int k = 0;
    if (!(row >> k) || k < 1 || k > kNumLandmarks) throw ParseError("chain: bad trailer line '" + line + "'");
    if (section == "landmarks") {
      Box& b = boxes[k - 1];
      if (!(row >> b.r0 >> b.c0 >> b.r1 >> b.c1)) throw ParseError("chain: bad landmark line '" + line + "'");
      seen[k - 1] = true;
    } else if (section == "rewards") {
      if (!(row >> rewards[k - 1])) throw ParseError("chain: bad reward line '" + line + "'");
    } else {
      throw ParseError("chain: trailer line outside a section");
    }
  }
  for (bool s : seen)
    if (!s) throw ParseError("chain: exactly 4 landmarks required");
  return ChainSpec(rows, cols, std::move(cells), boxes, start, rewards);
}

const ChainSpec& default_chain() {
  static const ChainSpec spec = ChainSpec::from_text(
#include "hierg/chain_default.inc"
  );
  return spec;
}

int ChainState::done_count() const { return std::popcount(done); }

ChainState initial_state(const ChainSpec& spec) {
  ChainState s;
  s.agent = spec.start();
  return s;
}

bool finished(const ChainState& s, int horizon) {
  return !s.alive || s.complete() || s.steps >= horizon;
}

StepResult step(const ChainSpec& spec, const ChainState& state, Action a, int horizon) {
  if (finished(state, horizon)) throw InvalidState("chain: step from a finished state");
  StepResult out;
  ChainState& s = out.state;
  s = state;
  s.steps += 1;
  const Pos to = moved(state.agent, a);
  if (!spec.inside(to)) return out;
  switch (spec.kind(to)) {
    case CellKind::Solid: return out;
    case CellKind::Door:
      if (!s.has_key) return out;
      break;
    case CellKind::Hazard:
      s.agent = to;
      s.alive = false;
      out.pseudo = -1.0;
      return out;
    case CellKind::Key: s.has_key = true; break;
    default: break;
  }
  s.agent = to;
  const int next = s.done_count();
  if (next < kNumLandmarks && spec.landmarks()[next].contains(to)) {
    s.done |= static_cast<std::uint8_t>(1u << next);
    out.completed = next;
    out.pseudo = 1.0;
    out.external = spec.external_reward(next);
  }
  return out;
}

std::vector<std::uint8_t> render(const ChainSpec& spec, const ChainState& state) {
  std::vector<std::uint8_t> frame(spec.num_cells());
  const bool door_open = state.complete();
  for (int r = 0; r < spec.rows(); ++r) {
    for (int c = 0; c < spec.cols(); ++c) {
      const Pos p{r, c};
      std::uint8_t code = kFloor;
      switch (spec.kind(p)) {
        case CellKind::Open: code = kFloor; break;
        case CellKind::Solid: code = kSolid; break;
        case CellKind::Hazard: code = kHazard; break;
        case CellKind::Ladder: code = kLadder; break;
        case CellKind::Key: code = state.has_key ? kFloor : kKeyItem; break;
        case CellKind::Door: code = door_open ? kFloor : kDoorClosed; break;
      }
      frame[spec.index(p)] = code;
    }
  }
  if (spec.inside(state.agent)) frame[spec.index(state.agent)] = kAgent;
  return frame;
}

bool detect_subgoal(const ChainSpec& spec, const LandmarkDetector& d,
                    const std::vector<std::uint8_t>& before, const std::vector<std::uint8_t>& after) {
  int changed = 0;
  for (int r = d.box.r0; r <= d.box.r1; ++r)
    for (int c = d.box.c0; c <= d.box.c1; ++c) {
      const int i = spec.index({r, c});
      changed += before[i] != after[i];
    }
  const double fraction = static_cast<double>(changed) / d.box.area();
  return changed > 0 && fraction >= d.threshold;
}

bool occupies(const LandmarkDetector& d, const ChainState& s) { return d.box.contains(s.agent); }

std::uint64_t state_key(const ChainSpec& spec, const ChainState& s) {
  return static_cast<std::uint64_t>(spec.index(s.agent)) +
         (s.has_key ? static_cast<std::uint64_t>(spec.num_cells()) : 0);
}

int meta_key(const ChainSpec& spec, const ChainState& s) {
  const int rr = s.agent.row * kRegionRows / spec.rows();
  const int rc = s.agent.col * kRegionCols / spec.cols();
  return ((s.done_count() * 2 + (s.has_key ? 1 : 0)) * kRegionRows + rr) * kRegionCols + rc;
}

int distance_to_landmark(const ChainSpec& spec, const ChainState& s) {
  if (finished(s, INT32_MAX)) return -1;
  const int n = spec.num_cells();
  std::vector<int> dist(2 * static_cast<std::size_t>(n), -1);
  auto key = [&](const ChainState& x) { return static_cast<std::size_t>(state_key(spec, x)); };
  ChainState start = s;
  start.steps = 0;
  std::deque<ChainState> frontier{start};
  dist[key(start)] = 0;
  while (!frontier.empty()) {
    const ChainState cur = frontier.front();
    frontier.pop_front();
    for (int a = 0; a < kNumActions; ++a) {
      const StepResult r = step(spec, cur, static_cast<Action>(a), INT32_MAX);
      if (r.completed >= 0) return dist[key(cur)] + 1;
      if (!r.state.alive) continue;
      ChainState nxt = r.state;
      nxt.steps = 0;
      if (dist[key(nxt)] >= 0) continue;
      dist[key(nxt)] = dist[key(cur)] + 1;
      frontier.push_back(nxt);
    }
  }
  return -1;
}

}  // namespace hierg::chain
