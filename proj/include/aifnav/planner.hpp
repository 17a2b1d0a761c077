#pragma once

#include <random>

#include "aifnav/structure.hpp"

namespace aifnav {

struct Policy {
  std::vector<Action> actions;
};

struct EFEBreakdown {
  double learning_gain = 0.0;
  double inference_gain = 0.0;
  double collision_cost = 0.0;
  double preference_value = 0.0;
  double total = 0.0;
};

struct MotionOutcome {
  Action intended;
  bool succeeded = true;
  bool physically_attempted = true;  // false: outcome predicted from sensing
  Pose resulting_pose;
};

struct PlannerConfig {
  int horizon = 14;
  int beam = 13;
  double temperature = 0.5;
  double utility_weight = 0.0;
  int preferred_symbol = -1;  // <0: no preference term
  int sweep_depth = 8;
};

// Precomputed per-(action,node) sparse view of B_s: support entries plus the
// uniform floor background, so belief rolls cost O(nodes) instead of O(nodes^2).
struct SparseTransitions {
  int n = 0;
  // per action, per from-node: normalizer and (to, count) pairs above floor
  std::array<std::vector<double>, kNumActions> z;
  std::array<std::vector<std::vector<std::pair<int, double>>>, kNumActions> support;

  explicit SparseTransitions(const GenerativeModel& m) : n(m.node_count()) {
    for (int a = 0; a < kNumActions; ++a) {
      z[a].resize(n);
      support[a].resize(n);
      for (int i = 0; i < n; ++i) {
        const auto& row = m.b_s[a][i];
        double zz = 0.0;
        for (int j = 0; j < n; ++j) {
          zz += row[j];
          if (row[j] > kCountFloor * (1.0 + 1e-9))
            support[a][i].push_back({j, row[j]});
        }
        z[a][i] = zz;
      }
    }
  }

  // q' = q B-hat(a); exact, exploiting the constant floor background.
  std::vector<double> roll(int action, const std::vector<double>& q) const {
    std::vector<double> out(n, 0.0);
    double floor_mass = 0.0;
    for (int i = 0; i < n; ++i) {
      if (q[i] <= 0.0) continue;
      floor_mass += q[i] * (kCountFloor / z[action][i]);
      for (const auto& [j, c] : support[action][i])
        out[j] += q[i] * (c - kCountFloor) / z[action][i];
    }
    for (double& v : out) v += floor_mass;
    return out;
  }

  double self_prob(int action, int i) const {
    double c = kCountFloor;
    for (const auto& [j, cc] : support[action][i])
      if (j == i) c = cc;
    return c / z[action][i];
  }
};

// Cardinal transition rows still sitting at the count floor: structure the
// model knows nothing about yet. Scanning or bumping there would shrink the
// edge Dirichlet entropy.
inline int unknown_cardinal_rows(const GenerativeModel& m, int node) {
  int unknown = 0;
  for (int h : {0, 3, 6, 9}) {
    bool any = false;
    for (double c : m.b_s[h][node])
      if (c > kCountFloor * (1.0 + 1e-9)) {
        any = true;
        break;
      }
    if (!any) ++unknown;
  }
  return unknown;
}

namespace detail {

struct ModelCaches {
  SparseTransitions trans;
  std::vector<double> novelty;   // edge-entropy still reducible by being there
  std::vector<double> pref_logp; // log P(preferred symbol | node)

  ModelCaches(const GenerativeModel& m, int preferred_symbol) : trans(m) {
    const int n = m.node_count();
    novelty.resize(n);
    pref_logp.assign(n, 0.0);
    double full = std::log(std::max(2, m.n_symbols()));
    for (int i = 0; i < n; ++i) {
      novelty[i] = full * unknown_cardinal_rows(m, i) / 4.0;
      if (preferred_symbol >= 0) {
        auto lik = expected_likelihood(m.a_o[i]);
        pref_logp[i] = std::log(preferred_symbol < m.n_symbols()
                                    ? lik[preferred_symbol]
                                    : kCountFloor);
      }
    }
  }
};

}  // namespace detail

// Scores one policy by rolling the state belief through B_s. Per step:
//  - collision probability = expected self-transition mass (move bounced);
//  - learning gain = expected reducible edge-Dirichlet entropy at the reached
//    nodes (unknown transition rows that being there would resolve);
//  - inference gain = mutual information between the next state and the
//    collision outcome (expected entropy reduction once c is observed);
//  - preference value = expected log-probability of the preferred symbol.
inline EFEBreakdown efe_policy_cached(const Policy& policy, const GenerativeModel& m,
                                      const Belief& belief, const detail::ModelCaches& cc,
                                      double utility_weight, bool has_preference) {
  EFEBreakdown out;
  std::vector<double> q = belief.q_s;
  const int n = m.node_count();
  for (size_t t = 0; t < policy.actions.size(); ++t) {
    const Action& a = policy.actions[t];
    std::vector<double> qn;
    double pc = 0.0;
    double mi = 0.0;
    if (a.is_stay()) {
      qn = q;
    } else {
      qn = cc.trans.roll(a.kind, q);
      std::vector<double> blocked(n, 0.0);
      for (int i = 0; i < n; ++i) {
        if (q[i] <= 0.0) continue;
        double s = q[i] * cc.trans.self_prob(a.kind, i);
        blocked[i] = s;
        pc += s;
      }
      if (pc > 1e-12 && pc < 1.0 - 1e-12) {
        std::vector<double> moved(n);
        for (int i = 0; i < n; ++i) moved[i] = (qn[i] - blocked[i]) / (1.0 - pc);
        for (double& v : blocked) v /= pc;
        mi = categorical_entropy(qn) - pc * categorical_entropy(blocked) -
             (1.0 - pc) * categorical_entropy(moved);
        mi = std::max(0.0, mi);
      }
    }
    double lg = 0.0, pv = 0.0;
    for (int j = 0; j < n; ++j) {
      if (qn[j] <= 0.0) continue;
      lg += qn[j] * cc.novelty[j];
      if (has_preference) pv += qn[j] * cc.pref_logp[j];
    }
    out.learning_gain += lg;
    out.inference_gain += mi;
    out.collision_cost += a.is_stay() ? 0.0 : -std::log(1.0 - pc + kEps);
    out.preference_value += pv;
    q = std::move(qn);
  }
  out.total = -out.learning_gain - out.inference_gain + out.collision_cost -
              utility_weight * out.preference_value;
  return out;
}

inline EFEBreakdown efe_policy(const Policy& policy, const GenerativeModel& m,
                               const Belief& belief, const PlannerConfig& cfg) {
  detail::ModelCaches cc(m, cfg.preferred_symbol);
  return efe_policy_cached(policy, m, belief, cc, cfg.utility_weight,
                           cfg.preferred_symbol >= 0);
}

// Supported successor of (node, action): the argmax outgoing edge, if any
// entry in the row clears the support threshold. Stay maps to the node itself.
inline int supported_successor(const GenerativeModel& m, int node, int action_kind) {
  if (action_kind == kStayKind) return node;
  const auto& row = m.b_s[action_kind][node];
  int best = -1;
  double best_c = kSupportMin;
  for (size_t j = 0; j < row.size(); ++j) {
    if (static_cast<int>(j) == node) continue;
    if (row[j] >= best_c && (best < 0 || row[j] > best_c)) {
      best_c = row[j];
      best = static_cast<int>(j);
    }
  }
  return best;
}

// Candidate policies: all 13 depth-1 primitives; one shortest action path
// (breadth-first over supported transitions, deterministic action-kind order)
// to every node reachable within the horizon; and, past the horizon, shortest
// paths to the nearest nodes with unresolved structure, so distant frontiers
// stay visible to the scorer. `beam` bounds each group of path targets.
inline std::vector<Policy> enumerate_policies(const GenerativeModel& m,
                                              const Belief& belief, int horizon,
                                              int beam,
                                              const PlannerConfig& cfg = {}) {
  assert(horizon >= 1);
  (void)cfg;
  double step = m.spacing;
  std::vector<Policy> out;
  for (int k = 0; k < kNumActions; ++k) {
    Policy p;
    p.actions.push_back(k == kStayKind ? Action::stay() : Action::heading(k, step));
    out.push_back(p);
  }
  if (horizon < 2) return out;

  const int n = m.node_count();
  int start = argmax(belief.q_s);
  std::vector<int> dist(n, -1), via_action(n, -1), parent(n, -1);
  std::vector<int> queue{start};
  dist[start] = 0;
  int max_near = std::max(1, beam) * horizon;
  int max_far = std::max(1, beam);
  int near = 0, far = 0;
  auto emit = [&](int succ) {
    std::vector<int> kinds;
    for (int at = succ; at != start; at = parent[at]) kinds.push_back(via_action[at]);
    Policy p;
    for (size_t i = kinds.size(); i-- > 0;)
      p.actions.push_back(Action::heading(kinds[i], step));
    out.push_back(std::move(p));
  };
  for (size_t head = 0; head < queue.size(); ++head) {
    int cur = queue[head];
    if (dist[cur] > horizon && far >= max_far) break;
    for (int k = 0; k < kNumHeadings; ++k) {
      int succ = supported_successor(m, cur, k);
      if (succ < 0 || dist[succ] >= 0) continue;
      dist[succ] = dist[cur] + 1;
      via_action[succ] = k;
      parent[succ] = cur;
      queue.push_back(succ);
      if (dist[succ] <= horizon) {
        if (dist[succ] >= 2 && near < max_near) {
          ++near;
          emit(succ);
        }
      } else if (unknown_cardinal_rows(m, succ) > 0 && far < max_far) {
        ++far;
        emit(succ);
      }
    }
  }
  return out;
}

// Samples from softmax(-total / temperature); temperature -> 0 recovers the
// argmin with lowest-index tie-break.
inline size_t select_policy_index(const std::vector<EFEBreakdown>& scored,
                                  double temperature, std::mt19937& rng) {
  if (scored.empty()) throw std::invalid_argument("select_policy: empty list");
  if (temperature < 1e-12) {
    size_t best = 0;
    for (size_t i = 1; i < scored.size(); ++i)
      if (scored[i].total < scored[best].total) best = i;
    return best;
  }
  double mn = scored[0].total;
  for (const auto& s : scored) mn = std::min(mn, s.total);
  std::vector<double> w(scored.size());
  double z = 0.0;
  for (size_t i = 0; i < scored.size(); ++i) {
    w[i] = std::exp(-(scored[i].total - mn) / temperature);
    z += w[i];
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng) * z;
  double acc = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (r <= acc) return i;
  }
  return w.size() - 1;
}

inline Policy select_policy(const std::vector<std::pair<Policy, EFEBreakdown>>& scored,
                            double temperature, std::mt19937& rng) {
  std::vector<EFEBreakdown> b;
  b.reserve(scored.size());
  for (const auto& s : scored) b.push_back(s.second);
  return scored[select_policy_index(b, temperature, rng)].first;
}

// Table of transition learning rates.
inline double transition_lambda(bool physically_attempted, bool possible, bool forward) {
  double mag;
  if (physically_attempted)
    mag = forward ? 7.0 : 5.0;
  else
    mag = forward ? 5.0 : 3.0;
  return possible ? mag : -mag;
}

// Dirichlet pseudo-count update B += q_product * B * lambda on the forward
// edge and its reverse, clamped to the floor. Failed transitions push the
// removed forward mass onto the self-loop.
inline void learn_transition(GenerativeModel& m, int from, int to, const Action& action,
                             const MotionOutcome& outcome, double q_product = 1.0) {
  if (from < 0 || to < 0 || from >= m.node_count() || to >= m.node_count())
    throw std::invalid_argument("learn_transition: unknown node id");
  if (action.is_stay() || from == to) return;
  int a = action.kind;
  int ra = opposite_heading(a);

  auto apply = [&](int act, int f, int t, double lambda) {
    double& b = m.b_s[act][f][t];
    double old = b;
    // Positive evidence may only create an edge toward a new neighbour when
    // the node still has cap room (existing neighbours can be strengthened).
    if (lambda > 0.0 && old < kSupportMin && neighbor_count(m, f) >= 6) {
      bool already = false;
      for (int aa = 0; aa < kNumActions && !already; ++aa)
        if (m.b_s[aa][f][t] >= kSupportMin) already = true;
      if (!already) return 0.0;
    }
    b = clamp_count(old + q_product * old * lambda);
    return old - b;  // mass removed (positive when weakened)
  };

  double removed = apply(a, from, to,
                         transition_lambda(outcome.physically_attempted,
                                           outcome.succeeded, true));
  apply(ra, to, from,
        transition_lambda(outcome.physically_attempted, outcome.succeeded, false));
  if (!outcome.succeeded && removed > 0.0)
    m.b_s[a][from][from] = clamp_count(m.b_s[a][from][from] + removed);
}

// Walks chains of collinear edges outward from the node nearest `pose` and
// applies predicted possible/impossible updates according to per-heading ray
// free distances. Chains stop at max_depth nodes or the sensing range.
inline void predicted_transition_sweep(GenerativeModel& m, const Pose& pose,
                                       const std::array<double, kNumHeadings>& ray_free_dist,
                                       double sensing_range, int max_depth = 8,
                                       double q_product = 1.0) {
  if (max_depth < 1 || m.node_count() == 0) return;
  int origin = nearest_node(m, pose);
  for (int h = 0; h < kNumHeadings; ++h) {
    Action a = Action::heading(h, m.spacing);
    Pose d = a.displacement();
    int cur = origin;
    for (int depth = 1; depth <= max_depth; ++depth) {
      double reach = depth * m.spacing;
      if (reach > sensing_range + 1e-9) break;
      Pose expect{m.nodes[origin].anchor.x + d.x * depth,
                  m.nodes[origin].anchor.y + d.y * depth};
      int nxt = nearest_node(m, expect);
      if (nxt == cur || distance(m.nodes[nxt].anchor, expect) > m.spacing * 0.5 + 1e-9)
        break;  // no collinear node there
      bool possible = ray_free_dist[h] + 1e-9 >= reach;
      MotionOutcome oc;
      oc.intended = a;
      oc.succeeded = possible;
      oc.physically_attempted = false;
      learn_transition(m, cur, nxt, a, oc, q_product);
      cur = nxt;
    }
  }
}

}  // namespace aifnav
