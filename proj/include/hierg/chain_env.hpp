#ifndef HIERG_CHAIN_ENV_HPP_
#define HIERG_CHAIN_ENV_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hierg::chain {

inline constexpr int kNumLandmarks = 4;
inline constexpr int kFullHorizon = 1000;
inline constexpr double kDefaultThreshold = 0.30;

// Solid cells block movement without harm; the rest follow the usual
// platformer reading (ladders are walkable like open floor).
enum class CellKind : std::uint8_t { Open, Solid, Hazard, Ladder, Key, Door };

struct Pos {
  int row = 0;
  int col = 0;
  auto operator<=>(const Pos&) const = default;
};

// Inclusive rectangle.
struct Box {
  int r0 = 0, c0 = 0, r1 = 0, c1 = 0;
  bool contains(Pos p) const { return p.row >= r0 && p.row <= r1 && p.col >= c0 && p.col <= c1; }
  int area() const { return (r1 - r0 + 1) * (c1 - c0 + 1); }
  bool operator==(const Box&) const = default;
};

// King moves.
enum class Action : std::uint8_t { N, S, W, E, NW, NE, SW, SE };
inline constexpr int kNumActions = 8;
const char* to_string(Action a);
Pos moved(Pos p, Action a);

class ChainSpec {
 public:
  ChainSpec() = default;
  ChainSpec(int rows, int cols, std::vector<CellKind> cells, std::array<Box, kNumLandmarks> landmarks,
            Pos start, std::array<double, kNumLandmarks> rewards);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int num_cells() const { return rows_ * cols_; }
  bool inside(Pos p) const { return p.row >= 0 && p.row < rows_ && p.col >= 0 && p.col < cols_; }
  int index(Pos p) const { return p.row * cols_ + p.col; }
  CellKind kind(Pos p) const { return cells_[index(p)]; }
  const std::array<Box, kNumLandmarks>& landmarks() const { return landmarks_; }
  Pos start() const { return start_; }
  // External reward for completing landmark k (0-based).
  double external_reward(int k) const { return rewards_[k]; }

  std::string to_text() const;
  static ChainSpec from_text(std::string_view text);

  bool operator==(const ChainSpec&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<CellKind> cells_;
  std::array<Box, kNumLandmarks> landmarks_{};
  Pos start_{};
  std::array<double, kNumLandmarks> rewards_{};
};

// The checked-in 24x32 instance.
const ChainSpec& default_chain();

struct ChainState {
  Pos agent;
  bool has_key = false;
  std::uint8_t done = 0;  // bit k set once landmark k is completed, in order
  int steps = 0;
  bool alive = true;

  int done_count() const;
  bool complete() const { return done == (1u << kNumLandmarks) - 1; }
  bool operator==(const ChainState&) const = default;
};

ChainState initial_state(const ChainSpec& spec);
// Dead, all landmarks done, or out of steps.
bool finished(const ChainState& s, int horizon = kFullHorizon);

struct StepResult {
  ChainState state;
  double pseudo = 0.0;
  double external = 0.0;
  int completed = -1;  // landmark finished by this step, if any
};

StepResult step(const ChainSpec& spec, const ChainState& state, Action a,
                int horizon = kFullHorizon);

// Frame of cell codes; the agent overwrites its cell, a taken key renders as
// floor and an opened door as floor.
std::vector<std::uint8_t> render(const ChainSpec& spec, const ChainState& state);

struct LandmarkDetector {
  Box box;
  double threshold = kDefaultThreshold;
};

// Pixel-change test: the changed fraction of the box must reach the threshold
// and be nonzero.
bool detect_subgoal(const ChainSpec& spec, const LandmarkDetector& d,
                    const std::vector<std::uint8_t>& before, const std::vector<std::uint8_t>& after);
bool occupies(const LandmarkDetector& d, const ChainState& s);

// Tabular key for subpolicies: cell and key possession.
std::uint64_t state_key(const ChainSpec& spec, const ChainState& s);

inline constexpr int kRegionRows = 4;
inline constexpr int kRegionCols = 4;
inline constexpr int kMetaStates = (kNumLandmarks + 1) * 2 * kRegionRows * kRegionCols;
// Coarse meta observation: landmarks done, key, and a 4x4 region of the map.
int meta_key(const ChainSpec& spec, const ChainState& s);

// Shortest number of moves from s to the completion of landmark k (the next
// one in order), ignoring the step limit. -1 when unreachable.
int distance_to_landmark(const ChainSpec& spec, const ChainState& s);

}  // namespace hierg::chain

#endif  // HIERG_CHAIN_ENV_HPP_
