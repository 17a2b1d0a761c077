#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace aifnav {

// Dirichlet counts are clamped to this floor after every update.
inline constexpr double kCountFloor = 1e-3;
// Guard against count blow-up from repeated multiplicative updates.
inline constexpr double kCountCap = 1e12;
// Entries above this are treated as real graph edges; floor-level noise is not.
inline constexpr double kSupportMin = 0.05;
inline constexpr double kEps = 1e-6;

struct Pose {
  double x = 0.0;
  double y = 0.0;

  Pose() = default;
  Pose(double x_, double y_) : x(x_), y(y_) {}
};

inline double distance(const Pose& a, const Pose& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline bool approx_equal(const Pose& a, const Pose& b, double tol = 1e-9) {
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol;
}

// 12 headings at 30 degree increments plus Stay.
inline constexpr int kNumHeadings = 12;
inline constexpr int kStayKind = 12;
inline constexpr int kNumActions = 13;

struct Action {
  int kind = kStayKind;          // 0..11 headings, 12 = Stay
  double step_length = 1.0;

  static Action stay() { return Action{kStayKind, 0.0}; }
  static Action heading(int h, double step) { return Action{h, step}; }

  bool is_stay() const { return kind == kStayKind; }
  double angle_rad() const { return kind * (M_PI / 6.0); }

  // Displacement applied to a pose when the motion succeeds.
  Pose displacement() const {
    if (is_stay()) return Pose{0.0, 0.0};
    return Pose{std::cos(angle_rad()) * step_length,
                std::sin(angle_rad()) * step_length};
  }
};

inline int opposite_heading(int kind) {
  if (kind == kStayKind) return kStayKind;
  return (kind + 6) % kNumHeadings;
}

struct ObservationSymbol {
  int id = 0;
  std::vector<double> features;  // optional; empty means symbol-id matching

  ObservationSymbol() = default;
  explicit ObservationSymbol(int id_) : id(id_) {}
  ObservationSymbol(int id_, std::vector<double> f) : id(id_), features(std::move(f)) {}
};

struct CollisionFlag {
  bool value = false;
};

}  // namespace aifnav
