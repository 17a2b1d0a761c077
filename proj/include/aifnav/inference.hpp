#pragma once

#include "aifnav/model.hpp"

namespace aifnav {

struct InferenceConfig {
  double surprise_threshold = 2.0;   // nats
  double confidence_threshold = 0.6;
  int recovery_window = 3;           // consistent steps required to recover
  double obs_learning_rate = 1.0;
};

struct KidnapState {
  bool suspected = false;
  int consistent_streak = 0;
};

struct PoseBelief {
  std::vector<Pose> candidates;
  std::vector<double> p;
};

// Normalized B_s row for (action, from).
inline std::vector<double> transition_row(const GenerativeModel& m, int action, int from) {
  return expected_likelihood(m.b_s[action][from]);
}

// Predicted prior over nodes after taking `action` from `prev_q_s`.
inline std::vector<double> predicted_state_prior(const GenerativeModel& m,
                                                 const Action& action,
                                                 const std::vector<double>& prev_q_s) {
  std::vector<double> prior(m.node_count(), 0.0);
  for (int j = 0; j < m.node_count(); ++j) {
    if (prev_q_s[j] <= 0.0) continue;
    auto row = transition_row(m, action.kind, j);
    for (int i = 0; i < m.node_count(); ++i) prior[i] += prev_q_s[j] * row[i];
  }
  return prior;
}

// Dead-reckoning over the pose candidates: each candidate is displaced by the
// action; with expected collision probability `collision_prob` the
// corresponding mass stays put instead.
inline PoseBelief predict_pose(const PoseBelief& prev, const Action& action,
                               const GenerativeModel& /*model*/,
                               double collision_prob = 0.0) {
  PoseBelief out;
  if (action.is_stay() || collision_prob >= 1.0 - 1e-12) {
    out = prev;
    return out;
  }
  Pose d = action.displacement();
  if (collision_prob <= 0.0) {
    out.p = prev.p;
    out.candidates.reserve(prev.candidates.size());
    for (const auto& c : prev.candidates)
      out.candidates.push_back(Pose{c.x + d.x, c.y + d.y});
    return out;
  }
  // Mixture of moved and blocked outcomes; merge near-duplicate poses.
  auto push = [&out](const Pose& pose, double mass) {
    for (size_t k = 0; k < out.candidates.size(); ++k) {
      if (approx_equal(out.candidates[k], pose)) {
        out.p[k] += mass;
        return;
      }
    }
    out.candidates.push_back(pose);
    out.p.push_back(mass);
  };
  for (size_t k = 0; k < prev.candidates.size(); ++k) {
    const Pose& c = prev.candidates[k];
    push(Pose{c.x + d.x, c.y + d.y}, prev.p[k] * (1.0 - collision_prob));
    push(c, prev.p[k] * collision_prob);
  }
  return out;
}

struct JointResult {
  Belief belief;
  bool mismatch = false;  // all-zero joint mass; q_s fell back to uniform
};

// Approximate posterior over (s, p): the state posterior combines the
// observation likelihood, the pose-region density weighted by the predicted
// pose distribution, and the action-conditioned transition prior; the pose
// posterior is re-weighted by agreement with q_s.
inline JointResult infer_joint(const ObservationSymbol& obs, const PoseBelief& predicted,
                               const std::vector<double>& prev_q_s, const Action& action,
                               const GenerativeModel& m) {
  const int n = m.node_count();
  assert(static_cast<int>(prev_q_s.size()) == n);

  std::vector<double> pose_w(n, 0.0);
  std::vector<std::vector<double>> cand_lik(predicted.candidates.size());
  for (size_t k = 0; k < predicted.candidates.size(); ++k) {
    cand_lik[k] = pose_likelihood(m, predicted.candidates[k]);
    for (int i = 0; i < n; ++i) pose_w[i] += predicted.p[k] * cand_lik[k][i];
  }

  std::vector<double> trans = predicted_state_prior(m, action, prev_q_s);

  JointResult out;
  out.belief.q_s.assign(n, 0.0);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    double olik = obs.id < m.n_symbols() ? expected_likelihood(m.a_o[i])[obs.id]
                                         : kCountFloor;  // never-seen symbol
    out.belief.q_s[i] = olik * pose_w[i] * trans[i];
    z += out.belief.q_s[i];
  }
  if (z <= 1e-300) {
    out.mismatch = true;
    std::fill(out.belief.q_s.begin(), out.belief.q_s.end(), 1.0 / n);
    out.belief.pose_candidates = predicted.candidates;
    out.belief.q_p = predicted.p;
    normalize(out.belief.q_p);
    return out;
  }
  for (double& v : out.belief.q_s) v /= z;

  out.belief.pose_candidates = predicted.candidates;
  out.belief.q_p.assign(predicted.candidates.size(), 0.0);
  for (size_t k = 0; k < predicted.candidates.size(); ++k) {
    double agree = 0.0;
    for (int i = 0; i < n; ++i) agree += out.belief.q_s[i] * cand_lik[k][i];
    out.belief.q_p[k] = predicted.p[k] * agree;
  }
  normalize(out.belief.q_p);
  return out;
}

// -log of the observation's probability under the current state belief.
inline double surprise(const ObservationSymbol& obs, const Belief& belief,
                       const GenerativeModel& m) {
  double p = 0.0;
  for (int i = 0; i < m.node_count(); ++i) {
    double olik = obs.id < m.n_symbols() ? expected_likelihood(m.a_o[i])[obs.id]
                                         : kCountFloor;
    p += belief.q_s[i] * olik;
  }
  p = std::min(p, 1.0);
  return p <= 0.0 ? 1e9 : -std::log(p);
}

// Coherence proxy: the transition prior must give the posterior argmax at
// least 0.1 probability.
inline bool transition_coherent(const std::vector<double>& predicted_prior,
                                const std::vector<double>& posterior_q_s) {
  if (predicted_prior.empty()) return true;
  return predicted_prior[argmax(posterior_q_s)] >= 0.1;
}

struct KidnapUpdate {
  KidnapState state;
  bool model_update_permitted = true;
  bool trigger_obs_learning = false;  // surprising but coherent
};

// `best_alt_olik`: the highest observation likelihood any single node assigns
// to the current observation. A surprising observation that some other place
// explains confidently points at displacement, not at appearance drift.
inline KidnapUpdate update_kidnap_state(double surprise_nats, bool coherent,
                                        double max_q_s, const KidnapState& ks,
                                        const InferenceConfig& cfg,
                                        double best_alt_olik = 0.0) {
  KidnapUpdate out;
  out.state = ks;
  bool surprising = surprise_nats > cfg.surprise_threshold;

  if (surprising && (!coherent || best_alt_olik >= cfg.confidence_threshold)) {
    out.state.suspected = true;
    out.state.consistent_streak = 0;
    out.model_update_permitted = false;
    return out;
  }
  if (out.state.suspected) {
    if (!surprising && coherent)
      out.state.consistent_streak += 1;
    else
      out.state.consistent_streak = 0;
    if (out.state.consistent_streak >= cfg.recovery_window &&
        max_q_s >= cfg.confidence_threshold) {
      out.state.suspected = false;
      out.state.consistent_streak = 0;
      out.model_update_permitted = true;
    } else {
      out.model_update_permitted = false;
    }
    return out;
  }
  out.model_update_permitted = true;
  out.trigger_obs_learning = surprising;  // observation drift, not kidnap
  return out;
}

// Strengthens A_o at the believed node. Returns false (no-op) when model
// updates are frozen.
inline bool learn_observation(GenerativeModel& m, int node, const ObservationSymbol& obs,
                              double rate, bool permission) {
  if (!permission) return false;
  ensure_symbol(m, obs.id);
  m.a_o[node][obs.id] = clamp_count(m.a_o[node][obs.id] + rate);
  return true;
}

}  // namespace aifnav
