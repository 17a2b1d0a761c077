#pragma once

#include <algorithm>
#include <cassert>
#include <cstring>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "aifnav/types.hpp"

namespace aifnav {

struct NodeRecord {
  int id = 0;
  Pose anchor;           // mean of the node's Gaussian pose region
  bool visited = false;  // the agent confidently localized here at least once
  bool expanded = false; // a growth scan was performed from here
};

// The agent's whole world model. Value type; all operations below are pure
// unless they take the model by mutable reference.
struct GenerativeModel {
  std::vector<NodeRecord> nodes;
  std::vector<std::vector<double>> a_o;  // [node][symbol] Dirichlet counts
  std::vector<Pose> imagined;            // B_p: one imagined position per node
  // B_s: [action][from][to] Dirichlet counts.
  std::array<std::vector<std::vector<double>>, kNumActions> b_s;
  double confidence = 1.0;
  double spacing = 1.0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int n_symbols() const { return a_o.empty() ? 0 : static_cast<int>(a_o[0].size()); }
  double anchor_stddev() const { return spacing * 0.5; }
};

inline double clamp_count(double c) {
  return std::min(std::max(c, kCountFloor), kCountCap);
}

// Dirichlet mean: counts normalized to a categorical.
inline std::vector<double> expected_likelihood(const std::vector<double>& counts) {
  if (counts.empty()) throw std::invalid_argument("expected_likelihood: empty row");
  double z = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::vector<double> p(counts.size());
  for (size_t i = 0; i < counts.size(); ++i) p[i] = counts[i] / z;
  return p;
}

inline double categorical_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

// Similarity in [0,1]. With feature vectors: exp(-scale * L2 distance).
// Without features: Kronecker delta on the symbol id.
inline double obs_similarity(const ObservationSymbol& a, const ObservationSymbol& b,
                             double scale = 1.0) {
  if (a.features.size() != b.features.size())
    throw std::invalid_argument("obs_similarity: feature dimension mismatch");
  if (a.features.empty()) return a.id == b.id ? 1.0 : 0.0;
  double sq = 0.0;
  for (size_t i = 0; i < a.features.size(); ++i) {
    double d = a.features[i] - b.features[i];
    sq += d * d;
  }
  return std::exp(-scale * std::sqrt(sq));
}

// Per-node density of `pose` under each node's isotropic Gaussian anchor,
// normalized over nodes.
inline std::vector<double> pose_likelihood(const GenerativeModel& m, const Pose& pose) {
  assert(!m.nodes.empty());
  std::vector<double> w(m.nodes.size());
  double best = -1e300;
  for (size_t i = 0; i < m.nodes.size(); ++i) {
    double d = distance(m.nodes[i].anchor, pose);
    double s = m.anchor_stddev();
    w[i] = -(d * d) / (2.0 * s * s);
    best = std::max(best, w[i]);
  }
  double z = 0.0;
  for (double& v : w) {
    v = std::exp(v - best);
    z += v;
  }
  for (double& v : w) v /= z;
  return w;
}

// Bootstraps a single-node model around the first observation.
inline GenerativeModel new_model(const ObservationSymbol& initial_obs,
                                 const Pose& initial_pose, double spacing,
                                 int n_symbols = 0) {
  if (spacing <= 0.0) throw std::invalid_argument("new_model: spacing must be > 0");
  int ns = std::max(n_symbols, initial_obs.id + 1);
  GenerativeModel m;
  m.spacing = spacing;
  m.confidence = 1.0;
  m.nodes.push_back(NodeRecord{0, initial_pose, true, false});
  m.imagined.push_back(initial_pose);
  std::vector<double> row(ns, kCountFloor);
  row[initial_obs.id] += 1.0;
  m.a_o.push_back(std::move(row));
  for (auto& mat : m.b_s) mat.assign(1, std::vector<double>(1, kCountFloor));
  m.b_s[kStayKind][0][0] = 1.0;
  return m;
}

// Widen every A_o row so `symbol_id` is representable.
inline void ensure_symbol(GenerativeModel& m, int symbol_id) {
  int need = symbol_id + 1;
  if (m.n_symbols() >= need) return;
  for (auto& row : m.a_o) row.resize(need, kCountFloor);
}

inline int nearest_node(const GenerativeModel& m, const Pose& pose) {
  int best = -1;
  double best_d = 1e300;
  for (int i = 0; i < m.node_count(); ++i) {
    double d = distance(m.nodes[i].anchor, pose);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

// Distinct supported non-self neighbours of `node`, over all actions.
inline int neighbor_count(const GenerativeModel& m, int node) {
  std::vector<char> seen(m.nodes.size(), 0);
  int n = 0;
  for (int a = 0; a < kNumActions; ++a) {
    const auto& row = m.b_s[a][node];
    for (size_t j = 0; j < row.size(); ++j) {
      if (static_cast<int>(j) == node) continue;
      if (row[j] >= kSupportMin && !seen[j]) {
        seen[j] = 1;
        ++n;
      }
    }
  }
  return n;
}

// FNV-1a over the model's numeric content; used to assert update freezes.
inline uint64_t model_hash(const GenerativeModel& m) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& nd : m.nodes) {
    mix(&nd.anchor.x, sizeof(double));
    mix(&nd.anchor.y, sizeof(double));
  }
  for (const auto& row : m.a_o) mix(row.data(), row.size() * sizeof(double));
  for (const auto& mat : m.b_s)
    for (const auto& row : mat) mix(row.data(), row.size() * sizeof(double));
  return h;
}

struct Belief {
  std::vector<double> q_s;             // categorical over nodes
  std::vector<Pose> pose_candidates;   // support of q_p
  std::vector<double> q_p;             // categorical over pose_candidates
};

inline int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline void normalize(std::vector<double>& v) {
  double z = std::accumulate(v.begin(), v.end(), 0.0);
  if (z <= 0.0) {
    double u = 1.0 / static_cast<double>(v.size());
    std::fill(v.begin(), v.end(), u);
    return;
  }
  for (double& x : v) x /= z;
}

}  // namespace aifnav
