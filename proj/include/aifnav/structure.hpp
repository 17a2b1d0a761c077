#pragma once

#include <functional>

#include "aifnav/inference.hpp"

namespace aifnav {

struct ExpansionCandidate {
  enum class Kind { NewNode, EdgeLink };
  Kind kind = Kind::NewNode;
  Pose pose;
  int heading = 0;            // heading from the source anchor
  double collision_prob = 0.0;
  double efe = 0.0;           // G(A_p); only meaningful for NewNode
  double prior = 0.0;         // sigma(-G) across the batch
  int link_target = -1;       // existing node id for EdgeLink
};

// EFE of adding a pose region: negative expected information gain (entropy of
// the uniform would-be A_o column, discounted by collision risk) plus the
// expected-collision penalty.
inline double efe_expansion(const Pose& /*pose*/, double collision_prob,
                            const GenerativeModel& m) {
  double gain = std::log(std::max(2, m.n_symbols())) * (1.0 - collision_prob);
  double collision = -std::log(1.0 - collision_prob + kEps);
  return -gain + collision;
}

// Softmax of -G over a candidate batch.
inline std::vector<double> expansion_prior(const std::vector<double>& g_values) {
  if (g_values.empty()) throw std::invalid_argument("expansion_prior: empty batch");
  double g_min = *std::min_element(g_values.begin(), g_values.end());
  std::vector<double> p(g_values.size());
  double z = 0.0;
  for (size_t i = 0; i < g_values.size(); ++i) {
    p[i] = std::exp(-(g_values[i] - g_min));
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

// Scans the 12 headings around `node` and proposes where the map could grow.
// Poses within spacing of an existing anchor become edge-link proposals; the
// rest compete on EFE, with at most 6 new-node candidates retained and
// mutual spacing enforced among them. `snap` lets the caller round proposed
// poses onto reachable positions (e.g. grid cell centers).
inline std::vector<ExpansionCandidate> propose_candidates(
    const GenerativeModel& m, int node, const std::array<double, kNumHeadings>& ray_collisions,
    const std::function<Pose(const Pose&)>& snap = {}) {
  const Pose& src = m.nodes[node].anchor;
  std::vector<ExpansionCandidate> links;
  std::vector<ExpansionCandidate> fresh;
  for (int h = 0; h < kNumHeadings; ++h) {
    double pc = ray_collisions[h];
    if (pc >= 1.0 - 1e-9) continue;  // fully blocked direction
    Action a = Action::heading(h, m.spacing);
    Pose d = a.displacement();
    Pose pose{src.x + d.x, src.y + d.y};
    if (snap) pose = snap(pose);
    if (approx_equal(pose, src, 1e-6)) continue;
    // the snapped pose must stay inside the corridor the ray actually scanned
    if (distance(pose, Pose{src.x + d.x, src.y + d.y}) > 0.35 * m.spacing) continue;

    // Existing anchor nearby? Propose a link instead of a node.
    int close = -1;
    double close_d = 1e300;
    for (int j = 0; j < m.node_count(); ++j) {
      double dj = distance(m.nodes[j].anchor, pose);
      if (dj < close_d) {
        close_d = dj;
        close = j;
      }
    }
    if (close_d < m.spacing - 1e-9) {
      if (close == node) continue;
      ExpansionCandidate c;
      c.kind = ExpansionCandidate::Kind::EdgeLink;
      c.pose = m.nodes[close].anchor;
      c.heading = h;
      c.collision_prob = pc;
      c.link_target = close;
      bool dup = false;
      for (const auto& e : links)
        if (e.link_target == close) dup = true;
      if (!dup) links.push_back(c);
      continue;
    }
    ExpansionCandidate c;
    c.kind = ExpansionCandidate::Kind::NewNode;
    c.pose = pose;
    c.heading = h;
    c.collision_prob = pc;
    c.efe = efe_expansion(pose, pc, m);
    fresh.push_back(c);
  }

  // Lowest EFE first, ties broken by heading index; then greedily keep
  // candidates that respect spacing among themselves, up to six.
  std::stable_sort(fresh.begin(), fresh.end(),
                   [](const ExpansionCandidate& a, const ExpansionCandidate& b) {
                     if (a.efe != b.efe) return a.efe < b.efe;
                     return a.heading < b.heading;
                   });
  std::vector<ExpansionCandidate> kept;
  for (const auto& c : fresh) {
    if (kept.size() >= 6) break;
    bool ok = true;
    for (const auto& k : kept)
      if (distance(k.pose, c.pose) < m.spacing - 1e-9) ok = false;
    if (ok) kept.push_back(c);
  }
  if (!kept.empty()) {
    std::vector<double> gs;
    gs.reserve(kept.size());
    for (const auto& c : kept) gs.push_back(c.efe);
    auto prior = expansion_prior(gs);
    for (size_t i = 0; i < kept.size(); ++i) kept[i].prior = prior[i];
  }
  for (const auto& l : links) kept.push_back(l);
  return kept;
}

struct WindowStep {
  Action action;
  ObservationSymbol obs;
  Pose pose;  // dead-reckoned pose at observation time
};

// Negative log evidence of an observation window under a model, via the
// forward filter with point-pose weighting.
inline double negative_log_evidence(const GenerativeModel& m,
                                    const std::vector<WindowStep>& window) {
  const int n = m.node_count();
  std::vector<double> q(n, 1.0 / n);
  double nll = 0.0;
  bool first = true;
  for (const auto& w : window) {
    std::vector<double> prior = first ? q : predicted_state_prior(m, w.action, q);
    first = false;
    auto pw = pose_likelihood(m, w.pose);
    double z = 0.0;
    std::vector<double> post(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double olik = w.obs.id < m.n_symbols() ? expected_likelihood(m.a_o[i])[w.obs.id]
                                             : kCountFloor;
      post[i] = olik * pw[i] * prior[i];
      z += post[i];
    }
    if (z <= 1e-300) {
      nll += 700.0;  // effectively -log(0) clamped
      std::fill(post.begin(), post.end(), 1.0 / n);
    } else {
      nll -= std::log(z);
      for (double& v : post) v /= z;
    }
    q = std::move(post);
  }
  return nll;
}

// Free-energy difference between an expanded model and the current one on a
// recent observation window. Negative means the expansion explains the
// evidence better.
inline double delta_free_energy(const GenerativeModel& model,
                                const GenerativeModel& expanded,
                                const std::vector<WindowStep>& window) {
  if (expanded.node_count() < model.node_count())
    throw std::invalid_argument("delta_free_energy: expanded model is smaller");
  return negative_log_evidence(expanded, window) - negative_log_evidence(model, window);
}

// Growth is accepted on evidence (dF < 0) or on sufficient expected
// information gain, so never-visited regions can still be added.
inline bool accept_expansion(double delta_f, double info_gain, double epistemic_bar) {
  return delta_f < 0.0 || info_gain >= epistemic_bar;
}

// Appends a new node for an accepted candidate. Returns nullopt when the
// transaction would violate anchor spacing or the six-neighbour cap.
inline std::optional<GenerativeModel> grow(const GenerativeModel& model,
                                           const ExpansionCandidate& cand, int source) {
  if (cand.kind != ExpansionCandidate::Kind::NewNode) return std::nullopt;
  for (const auto& nd : model.nodes)
    if (distance(nd.anchor, cand.pose) < model.spacing - 1e-9) return std::nullopt;
  if (neighbor_count(model, source) >= 6) return std::nullopt;

  GenerativeModel m = model;
  int id = m.node_count();
  m.nodes.push_back(NodeRecord{id, cand.pose, false, false});
  m.imagined.push_back(cand.pose);
  m.a_o.push_back(std::vector<double>(std::max(1, m.n_symbols()), kCountFloor));
  for (int a = 0; a < kNumActions; ++a) {
    for (auto& row : m.b_s[a]) row.push_back(kCountFloor);
    m.b_s[a].push_back(std::vector<double>(id + 1, kCountFloor));
  }
  m.b_s[kStayKind][id][id] = 1.0;

  double scale = 1.0 - cand.collision_prob;
  m.b_s[cand.heading][source][id] = clamp_count(5.0 * scale);
  m.b_s[opposite_heading(cand.heading)][id][source] = clamp_count(3.0 * scale);
  return m;
}

// Extends the map along freely-sensed rays: chain nodes are grown at lattice
// spacing for predicted states ahead of observation, and a ray ending inside
// the next hop records the block as self-loop evidence, so scanned structure
// stops looking unknown without having been visited. Only lattice-aligned
// headings walk; diagonals never land on the anchor grid.
inline void grow_along_rays(GenerativeModel& m, int node,
                            const std::array<double, kNumHeadings>& ray_free_dist,
                            double sensing_range, int max_depth, double q_product) {
  if (max_depth < 1 || node < 0 || node >= m.node_count()) return;
  const Pose src = m.nodes[node].anchor;
  for (int h = 0; h < kNumHeadings; ++h) {
    Action a = Action::heading(h, m.spacing);
    Pose d = a.displacement();
    Pose one{src.x + d.x, src.y + d.y};
    Pose snapped{std::round(one.x / m.spacing) * m.spacing,
                 std::round(one.y / m.spacing) * m.spacing};
    if (distance(one, snapped) > 0.35 * m.spacing) continue;
    int cur = node;
    for (int depth = 1; depth <= max_depth; ++depth) {
      double reach = depth * m.spacing;
      if (reach > sensing_range + 1e-9) break;
      if (ray_free_dist[h] + 1e-9 < reach) {
        // blocked within this hop: predicted-impossible evidence lands on the
        // self-loop, marking the direction as resolved
        double& self = m.b_s[h][cur][cur];
        self = clamp_count(self + q_product * self * 5.0);
        break;
      }
      Pose expect{src.x + d.x * depth, src.y + d.y * depth};
      int nxt = nearest_node(m, expect);
      if (distance(m.nodes[nxt].anchor, expect) <= m.spacing * 0.5 + 1e-9) {
        cur = nxt;
        continue;
      }
      ExpansionCandidate c;
      c.kind = ExpansionCandidate::Kind::NewNode;
      c.pose = expect;
      c.heading = h;
      c.collision_prob = 0.0;
      auto grown = grow(m, c, cur);
      if (!grown) break;
      m = std::move(*grown);
      cur = m.node_count() - 1;
    }
  }
}

}  // namespace aifnav
