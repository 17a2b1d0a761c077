#pragma once

#include <deque>
#include <map>
#include <sstream>

#include "aifnav/planner.hpp"
#include "json.hpp"

namespace aifnav {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell& o) const { return x == o.x && y == o.y; }
  bool operator<(const Cell& o) const { return y != o.y ? y < o.y : x < o.x; }
};

struct Event {
  enum class Kind { Kidnap, PlaceObstacle, RemoveObstacle, BlockJunction };
  Kind kind = Kind::Kidnap;
  int at_step = 0;
  int every = 0;       // >0: periodic instead of one-shot
  Cell cell;
  bool cell_is_start = false;  // kidnap target "start"
  char label = 0;              // junction label
};

struct SenseResult {
  ObservationSymbol obs;
  std::array<double, kNumHeadings> per_heading_collision{};  // 0/1 within one spacing
  std::array<double, kNumHeadings> free_dist{};              // capped at lidar range
};

// Deterministic 2D grid environment. Cells are 1m squares addressed by their
// integer centers; y grows northward (map files are stored top row first).
struct Environment {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> walls;  // row-major by y
  std::vector<int> obs_field;  // symbol id per cell, -1 on walls
  std::vector<Event> events;
  double lidar_range = 12.0;
  Cell start{1, 1};
  Cell goal{1, 1};
  bool has_goal = false;
  std::map<char, Cell> junctions;
  int n_symbols = 1;

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool wall(int x, int y) const { return !in_bounds(x, y) || walls[y * width + x]; }
  bool wall(const Cell& c) const { return wall(c.x, c.y); }
  int obs_at(int x, int y) const { return obs_field[y * width + x]; }
  void set_wall(const Cell& c, bool v) { walls[c.y * width + c.x] = v ? 1 : 0; }

  Cell cell_of(const Pose& p) const {
    return Cell{static_cast<int>(std::llround(p.x)), static_cast<int>(std::llround(p.y))};
  }
};

// Reserved symbol ids for letter glyphs. Digits map to their value.
inline constexpr int kSymbolStart = 0;
inline constexpr int kSymbolJunctionA = 2;
inline constexpr int kSymbolJunctionB = 3;
inline constexpr int kSymbolGoal = 9;

// ASCII map format, first line "aifmap v1":
//   '#' wall, '.' free (symbol 0), digits = symbol ids,
//   'S' start, 'G' goal / preferred cell, 'A'/'B' labeled junctions.
inline Environment load_environment(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("aifmap v1", 0) != 0)
    throw std::runtime_error("map: missing 'aifmap v1' header");
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw std::runtime_error("map: empty grid");
  Environment env;
  env.height = static_cast<int>(rows.size());
  env.width = static_cast<int>(rows[0].size());
  env.walls.assign(env.width * env.height, 0);
  env.obs_field.assign(env.width * env.height, -1);
  int max_sym = 0;
  for (int r = 0; r < env.height; ++r) {
    if (static_cast<int>(rows[r].size()) != env.width)
      throw std::runtime_error("map: ragged row " + std::to_string(r));
    int y = env.height - 1 - r;  // top file row = highest y
    for (int x = 0; x < env.width; ++x) {
      char g = rows[r][x];
      int idx = y * env.width + x;
      int sym = -1;
      switch (g) {
        case '#': env.walls[idx] = 1; break;
        case '.': sym = 0; break;
        case 'S': sym = kSymbolStart; env.start = Cell{x, y}; break;
        case 'G': sym = kSymbolGoal; env.goal = Cell{x, y}; env.has_goal = true; break;
        case 'A': sym = kSymbolJunctionA; env.junctions['A'] = Cell{x, y}; break;
        case 'B': sym = kSymbolJunctionB; env.junctions['B'] = Cell{x, y}; break;
        default:
          if (g >= '0' && g <= '9')
            sym = g - '0';
          else
            throw std::runtime_error(std::string("map: unknown glyph '") + g + "'");
      }
      env.obs_field[idx] = sym;
      max_sym = std::max(max_sym, sym);
    }
  }
  // Border must be walled.
  for (int x = 0; x < env.width; ++x)
    if (!env.wall(x, 0) || !env.wall(x, env.height - 1))
      throw std::runtime_error("map: border not walled");
  for (int y = 0; y < env.height; ++y)
    if (!env.wall(0, y) || !env.wall(env.width - 1, y))
      throw std::runtime_error("map: border not walled");
  env.n_symbols = max_sym + 1;
  return env;
}

// Sidecar event list: [{"step":20,"kind":"kidnap","cell":[x,y]|"start"}, ...]
// with kinds kidnap, place_obstacle, remove_obstacle, block_junction and an
// optional "every" for periodic kidnaps.
inline std::vector<Event> load_events(const nlohmann::json& j, const Environment& env) {
  std::vector<Event> out;
  for (const auto& e : j) {
    Event ev;
    std::string kind = e.at("kind").get<std::string>();
    ev.at_step = e.value("step", 0);
    ev.every = e.value("every", 0);
    if (kind == "kidnap") {
      ev.kind = Event::Kind::Kidnap;
      if (e.at("cell").is_string() && e.at("cell").get<std::string>() == "start")
        ev.cell_is_start = true;
      else
        ev.cell = Cell{e.at("cell")[0].get<int>(), e.at("cell")[1].get<int>()};
    } else if (kind == "place_obstacle" || kind == "remove_obstacle") {
      ev.kind = kind == "place_obstacle" ? Event::Kind::PlaceObstacle
                                         : Event::Kind::RemoveObstacle;
      ev.cell = Cell{e.at("cell")[0].get<int>(), e.at("cell")[1].get<int>()};
    } else if (kind == "block_junction") {
      ev.kind = Event::Kind::BlockJunction;
      ev.label = e.at("label").get<std::string>()[0];
      if (!env.junctions.count(ev.label))
        throw std::runtime_error("events: unknown junction label");
      ev.cell = env.junctions.at(ev.label);
    } else {
      throw std::runtime_error("events: unknown kind " + kind);
    }
    if (!ev.cell_is_start && !env.in_bounds(ev.cell.x, ev.cell.y))
      throw std::runtime_error("events: target cell out of bounds");
    out.push_back(ev);
  }
  return out;
}

// Swept-segment motion: the move succeeds iff every traversed cell is free,
// with diagonal jumps requiring both cut-corner cells free. The agent lands
// on the nearest free cell center along the ray.
inline MotionOutcome step(const Environment& env, const Pose& true_pose,
                          const Action& action) {
  MotionOutcome out;
  out.intended = action;
  out.physically_attempted = true;
  out.resulting_pose = true_pose;
  if (action.is_stay()) {
    out.succeeded = true;
    return out;
  }
  Pose d = action.displacement();
  Pose target{true_pose.x + d.x, true_pose.y + d.y};
  Cell tc{static_cast<int>(std::llround(target.x)), static_cast<int>(std::llround(target.y))};

  Cell prev = env.cell_of(true_pose);
  bool blocked = env.wall(tc);
  const int samples = std::max(8, static_cast<int>(action.step_length * 20));
  for (int s = 1; s <= samples && !blocked; ++s) {
    double t = static_cast<double>(s) / samples;
    Pose p{true_pose.x + d.x * t, true_pose.y + d.y * t};
    // snap endpoint samples to the landing cell
    Cell c = s == samples ? tc : env.cell_of(p);
    if (env.wall(c)) {
      blocked = true;
      break;
    }
    if (c.x != prev.x && c.y != prev.y) {
      // diagonal jump: both traversed cell edges must be free
      if (env.wall(c.x, prev.y) || env.wall(prev.x, c.y)) blocked = true;
    }
    prev = c;
  }
  out.succeeded = !blocked;
  if (!blocked) out.resulting_pose = Pose{static_cast<double>(tc.x), static_cast<double>(tc.y)};
  return out;
}

// Distance along a heading until the ray enters a wall cell, capped at range.
inline double ray_free_distance(const Environment& env, const Pose& from, int heading,
                                double range) {
  double ang = heading * (M_PI / 6.0);
  double dx = std::cos(ang), dy = std::sin(ang);
  const double dt = 0.02;
  for (double t = dt; t <= range + 1e-9; t += dt) {
    Cell c{static_cast<int>(std::llround(from.x + dx * t)),
           static_cast<int>(std::llround(from.y + dy * t))};
    if (env.wall(c)) return t;
  }
  return range;
}

inline SenseResult sense(const Environment& env, const Pose& pose, double spacing) {
  SenseResult out;
  Cell c = env.cell_of(pose);
  out.obs = ObservationSymbol{env.obs_at(c.x, c.y)};
  for (int h = 0; h < kNumHeadings; ++h) {
    double fd = ray_free_distance(env, pose, h, env.lidar_range);
    out.free_dist[h] = fd;
    out.per_heading_collision[h] = fd < spacing - 1e-9 ? 1.0 : 0.0;
  }
  return out;
}

struct EventOutcome {
  bool kidnapped = false;
  Pose new_true_pose;
};

// Applies all events scheduled for `step_index`. Kidnaps move the true pose
// without informing the agent.
inline EventOutcome apply_events(Environment& env, int step_index, const Pose& true_pose) {
  EventOutcome out;
  out.new_true_pose = true_pose;
  for (const auto& ev : env.events) {
    bool fires = ev.every > 0 ? (step_index > 0 && step_index % ev.every == 0)
                              : (ev.at_step == step_index);
    if (!fires) continue;
    switch (ev.kind) {
      case Event::Kind::Kidnap: {
        Cell target = ev.cell_is_start ? env.start : ev.cell;
        if (env.wall(target)) throw std::runtime_error("kidnap target occupied");
        out.kidnapped = true;
        out.new_true_pose = Pose{static_cast<double>(target.x), static_cast<double>(target.y)};
        break;
      }
      case Event::Kind::PlaceObstacle:
        env.set_wall(ev.cell, true);
        break;
      case Event::Kind::RemoveObstacle:
        env.set_wall(ev.cell, false);
        break;
      case Event::Kind::BlockJunction:
        env.set_wall(ev.cell, true);
        break;
    }
  }
  return out;
}

// Line of sight between cell centers: no wall cell strictly between them.
inline bool visible(const Environment& env, const Cell& a, const Cell& b, double range) {
  double dx = b.x - a.x, dy = b.y - a.y;
  double len = std::hypot(dx, dy);
  if (len > range + 1e-9) return false;
  if (len < 1e-12) return !env.wall(b);
  if (env.wall(b)) return false;  // callers reveal wall hits via rays instead
  const double dt = 0.05;
  for (double t = dt; t < 1.0 - 1e-9; t += dt) {
    Cell c{static_cast<int>(std::llround(a.x + dx * t)),
           static_cast<int>(std::llround(a.y + dy * t))};
    if (c == a || c == b) continue;
    if (env.wall(c)) return false;
  }
  return true;
}

// Fraction of free cells with line of sight (within lidar range) of any
// visited pose. Incremental; monotone over steps.
class CoverageTracker {
 public:
  explicit CoverageTracker(const Environment& env)
      : seen_(env.width * env.height, 0) {
    for (int y = 0; y < env.height; ++y)
      for (int x = 0; x < env.width; ++x)
        if (!env.wall(x, y)) ++free_cells_;
  }

  void add_pose(const Environment& env, const Pose& pose) {
    Cell from = env.cell_of(pose);
    int r = static_cast<int>(std::ceil(env.lidar_range));
    for (int y = from.y - r; y <= from.y + r; ++y) {
      for (int x = from.x - r; x <= from.x + r; ++x) {
        if (!env.in_bounds(x, y) || env.wall(x, y)) continue;
        int idx = y * env.width + x;
        if (seen_[idx]) continue;
        if (visible(env, from, Cell{x, y}, env.lidar_range)) seen_[idx] = 1;
      }
    }
  }

  double fraction() const {
    int n = 0;
    for (uint8_t s : seen_) n += s;
    return free_cells_ == 0 ? 0.0 : static_cast<double>(n) / free_cells_;
  }

 private:
  std::vector<uint8_t> seen_;
  int free_cells_ = 0;
};

// Nearest-frontier baseline. Accumulates known occupancy from line-of-sight
// reveals and always heads for the closest known-free cell that borders
// unknown space.
class FrontierAgent {
 public:
  explicit FrontierAgent(const Environment& env)
      : width_(env.width), height_(env.height),
        known_(env.width * env.height, Unknown) {}

  void observe(const Environment& env, const Pose& pose) {
    Cell from = env.cell_of(pose);
    known_[from.y * width_ + from.x] = Free;
    int r = static_cast<int>(std::ceil(env.lidar_range));
    for (int y = from.y - r; y <= from.y + r; ++y) {
      for (int x = from.x - r; x <= from.x + r; ++x) {
        if (!env.in_bounds(x, y)) continue;
        Cell c{x, y};
        if (env.wall(x, y)) {
          // a wall is revealed when the ray to it is otherwise clear
          if (wall_visible(env, from, c)) known_[y * width_ + x] = Wall;
        } else if (visible(env, from, c, env.lidar_range)) {
          known_[y * width_ + x] = Free;
        }
      }
    }
  }

  // First step of the shortest known-free path to the nearest frontier.
  Action next_action(const Pose& pose) const {
    Cell from{static_cast<int>(std::llround(pose.x)), static_cast<int>(std::llround(pose.y))};
    std::vector<int> dist(width_ * height_, -1);
    std::vector<int> parent(width_ * height_, -1);
    std::deque<Cell> queue{from};
    dist[from.y * width_ + from.x] = 0;
    Cell target{-1, -1};
    int best_dist = -1;
    // 8-connected BFS in deterministic neighbour order
    static const int nx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int ny[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!queue.empty()) {
      Cell c = queue.front();
      queue.pop_front();
      int ci = c.y * width_ + c.x;
      if (best_dist >= 0 && dist[ci] > best_dist) break;
      if (is_frontier(c) && !(c == from)) {
        if (best_dist < 0) best_dist = dist[ci];
        if (dist[ci] == best_dist && (target.x < 0 || c < target)) target = c;
      }
      for (int k = 0; k < 8; ++k) {
        Cell n{c.x + nx[k], c.y + ny[k]};
        if (n.x < 0 || n.x >= width_ || n.y < 0 || n.y >= height_) continue;
        int ni = n.y * width_ + n.x;
        if (dist[ni] >= 0 || known_[ni] != Free) continue;
        if (nx[k] != 0 && ny[k] != 0) {
          // no corner cutting through known or suspected walls
          if (known_[c.y * width_ + n.x] == Wall || known_[n.y * width_ + c.x] == Wall)
            continue;
        }
        dist[ni] = dist[ci] + 1;
        parent[ni] = ci;
        queue.push_back(n);
      }
    }
    if (target.x < 0) return Action::stay();
    // walk back to the first step
    int cur = target.y * width_ + target.x;
    int fromi = from.y * width_ + from.x;
    while (parent[cur] != fromi && parent[cur] >= 0) cur = parent[cur];
    int sx = cur % width_ - from.x;
    int sy = cur / width_ - from.y;
    double ang = std::atan2(static_cast<double>(sy), static_cast<double>(sx));
    int heading = static_cast<int>(std::llround(ang / (M_PI / 6.0)));
    heading = ((heading % kNumHeadings) + kNumHeadings) % kNumHeadings;
    return Action::heading(heading, std::hypot(sx, sy));
  }

  bool fully_explored() const {
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x)
        if (known_[y * width_ + x] == Free && is_frontier(Cell{x, y})) return false;
    return true;
  }

 private:
  enum CellState : int8_t { Unknown = -1, Free = 0, Wall = 1 };

  bool is_frontier(const Cell& c) const {
    if (known_[c.y * width_ + c.x] != Free) return false;
    static const int nx[4] = {1, -1, 0, 0};
    static const int ny[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      int x = c.x + nx[k], y = c.y + ny[k];
      if (x < 0 || x >= width_ || y < 0 || y >= height_) continue;
      if (known_[y * width_ + x] == Unknown) return true;
    }
    return false;
  }

  static bool wall_visible(const Environment& env, const Cell& from, const Cell& wall_cell) {
    double dx = wall_cell.x - from.x, dy = wall_cell.y - from.y;
    double len = std::hypot(dx, dy);
    if (len > env.lidar_range + 1e-9) return false;
    const double dt = 0.05;
    for (double t = dt; t < 1.0 - 1e-9; t += dt) {
      Cell c{static_cast<int>(std::llround(from.x + dx * t)),
             static_cast<int>(std::llround(from.y + dy * t))};
      if (c == from || c == wall_cell) continue;
      if (env.wall(c)) return false;
    }
    return true;
  }

  int width_, height_;
  std::vector<int8_t> known_;
};

}  // namespace aifnav
