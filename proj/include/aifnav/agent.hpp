#pragma once

#include "aifnav/gridworld.hpp"
#include "aifnav/map_io.hpp"

namespace aifnav {

struct AgentConfig {
  InferenceConfig inference;
  PlannerConfig planner;
  double spacing = 1.0;
  int n_symbols = 1;
  double epistemic_bar = 0.5;  // nats of expansion gain that justify growth
  int window_len = 5;
};

struct StepTrace {
  Action action;
  EFEBreakdown efe;
  double surprise = 0.0;
  bool kidnap_suspected = false;
  Pose believed_pose;
  int believed_node = 0;
};

// The active-inference navigation agent: joint filtering, kidnap handling,
// structure growth, transition learning and EFE action selection, driven by
// sense results and motion outcomes supplied by the caller.
class AifAgent {
 public:
  AifAgent(const AgentConfig& cfg, const ObservationSymbol& first_obs,
           const Pose& start_pose, uint32_t seed)
      : cfg_(cfg), rng_(seed) {
    model_ = new_model(first_obs, start_pose, cfg.spacing, cfg.n_symbols);
    reset_run(start_pose);
  }

  // Continue an earlier run with the already-learned model (cumulative
  // learning across runs).
  AifAgent(const AgentConfig& cfg, GenerativeModel model, const Pose& start_pose,
           uint32_t seed)
      : cfg_(cfg), model_(std::move(model)), rng_(seed) {
    reset_run(start_pose);
  }

  const GenerativeModel& model() const { return model_; }
  const Belief& belief() const { return belief_; }
  const KidnapState& kidnap_state() const { return ks_; }
  int believed_node() const { return cur_node_; }
  Pose believed_pose() const { return model_.nodes[cur_node_].anchor; }

  // Incorporate this step's sensing plus the previous step's motion outcome.
  StepTrace update(const SenseResult& sensed, const MotionOutcome* last_outcome) {
    StepTrace trace;
    ensure_symbol(model_, sensed.obs.id);

    Action last_act = last_outcome ? last_outcome->intended : Action::stay();
    if (last_outcome && last_outcome->succeeded && !last_act.is_stay()) {
      Pose d = last_act.displacement();
      dead_reckon_ = Pose{dead_reckon_.x + d.x, dead_reckon_.y + d.y};
      // odometry-style snap onto the executed landing point
      dead_reckon_ = Pose{std::round(dead_reckon_.x), std::round(dead_reckon_.y)};
    }

    PoseBelief pb{belief_.pose_candidates, belief_.q_p};
    double pc_last = (last_outcome && !last_outcome->succeeded) ? 1.0 : 0.0;
    PoseBelief predicted = predict_pose(pb, last_act, model_, pc_last);
    augment_with_anchors(predicted);

    auto prior = predicted_state_prior(model_, last_act, belief_.q_s);
    JointResult joint = infer_joint(sensed.obs, predicted, belief_.q_s, last_act, model_);

    double s = surprise(sensed.obs, joint.belief, model_);
    bool coherent = !joint.mismatch && transition_coherent(prior, joint.belief.q_s);
    double max_qs = *std::max_element(joint.belief.q_s.begin(), joint.belief.q_s.end());
    double best_alt = 0.0;
    for (int i = 0; i < model_.node_count(); ++i)
      if (sensed.obs.id < model_.n_symbols())
        best_alt = std::max(best_alt, expected_likelihood(model_.a_o[i])[sensed.obs.id]);
    auto ku = update_kidnap_state(s, coherent, max_qs, ks_, cfg_.inference, best_alt);
    bool was_suspected = ks_.suspected;
    ks_ = ku.state;

    if (ks_.suspected && !was_suspected) {
      relocalize(sensed.obs);
    } else {
      belief_ = joint.belief;
      prune_candidates();
    }
    cur_node_ = argmax(belief_.q_s);
    model_.confidence = *std::max_element(belief_.q_s.begin(), belief_.q_s.end());
    if (!ks_.suspected && model_.confidence >= cfg_.inference.confidence_threshold)
      dead_reckon_ = model_.nodes[cur_node_].anchor;

    bool confident = model_.confidence >= cfg_.inference.confidence_threshold;
    if (ku.model_update_permitted) {
      if (confident) {
        learn_observation(model_, cur_node_, sensed.obs, cfg_.inference.obs_learning_rate,
                          true);
        model_.nodes[cur_node_].visited = true;
      }
      if (last_outcome && !last_act.is_stay() && prev_node_ >= 0)
        learn_motion(*last_outcome, last_act);
      if (confident) grow_from(sensed);
      predicted_transition_sweep(model_, believed_pose(), sensed.free_dist,
                                 sensing_range_, cfg_.planner.sweep_depth,
                                 model_.confidence);
    }

    window_.push_back(WindowStep{last_act, sensed.obs, dead_reckon_});
    if (static_cast<int>(window_.size()) > cfg_.window_len)
      window_.erase(window_.begin());

    trace.surprise = s;
    trace.kidnap_suspected = ks_.suspected;
    trace.believed_node = cur_node_;
    trace.believed_pose = believed_pose();
    prev_node_ = cur_node_;
    return trace;
  }

  void set_sensing_range(double r) { sensing_range_ = r; }

  // Enumerate, score (policies padded to the horizon with Stay so totals are
  // comparable across lengths), and sample an action.
  std::pair<Action, EFEBreakdown> act() {
    auto policies = enumerate_policies(model_, belief_, cfg_.planner.horizon,
                                       cfg_.planner.beam, cfg_.planner);
    detail::ModelCaches cc(model_, cfg_.planner.preferred_symbol);
    std::vector<EFEBreakdown> scored(policies.size());
    for (size_t i = 0; i < policies.size(); ++i) {
      Policy padded = policies[i];
      while (static_cast<int>(padded.actions.size()) < cfg_.planner.horizon)
        padded.actions.push_back(Action::stay());
      scored[i] = efe_policy_cached(padded, model_, belief_, cc,
                                    cfg_.planner.utility_weight,
                                    cfg_.planner.preferred_symbol >= 0);
    }
    size_t pick = select_policy_index(scored, cfg_.planner.temperature, rng_);
    return {policies[pick].actions.front(), scored[pick]};
  }

 private:
  void reset_run(const Pose& start_pose) {
    dead_reckon_ = start_pose;
    int n = model_.node_count();
    belief_.q_s = pose_likelihood(model_, start_pose);
    belief_.pose_candidates.clear();
    belief_.q_p.clear();
    for (int i = 0; i < n; ++i) belief_.pose_candidates.push_back(model_.nodes[i].anchor);
    belief_.pose_candidates.push_back(start_pose);
    belief_.q_p.assign(belief_.pose_candidates.size(), 1.0);
    normalize(belief_.q_p);
    cur_node_ = argmax(belief_.q_s);
    prev_node_ = cur_node_;
    ks_ = KidnapState{};
  }

  // During kidnap recovery, anchors not present among the candidates get a
  // share of probability mass so the pose can re-attach anywhere. When not
  // suspected the odometry chain is trusted as-is; leaking mass to anchors
  // would let symbol aliasing hijack the pose posterior.
  void augment_with_anchors(PoseBelief& pb) {
    if (!ks_.suspected) return;
    double eps = 0.5;
    size_t before = pb.candidates.size();
    std::vector<Pose> added;
    for (const auto& nd : model_.nodes) {
      bool present = false;
      for (size_t k = 0; k < before; ++k)
        if (approx_equal(pb.candidates[k], nd.anchor, 1e-6)) present = true;
      if (!present) added.push_back(nd.anchor);
    }
    if (added.empty()) return;
    for (double& v : pb.p) v *= (1.0 - eps);
    double each = eps / added.size();
    for (const auto& a : added) {
      pb.candidates.push_back(a);
      pb.p.push_back(each);
    }
  }

  void prune_candidates() {
    size_t cap = model_.nodes.size() + 1;
    if (belief_.pose_candidates.size() <= cap) return;
    std::vector<size_t> idx(belief_.pose_candidates.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [this](size_t a, size_t b) {
      return belief_.q_p[a] > belief_.q_p[b];
    });
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    std::vector<Pose> cands;
    std::vector<double> probs;
    for (size_t i : idx) {
      cands.push_back(belief_.pose_candidates[i]);
      probs.push_back(belief_.q_p[i]);
    }
    normalize(probs);
    belief_.pose_candidates = std::move(cands);
    belief_.q_p = std::move(probs);
  }

  // Kidnap suspected: restart localization from the observation alone, with
  // anchors as the pose hypotheses.
  void relocalize(const ObservationSymbol& obs) {
    int n = model_.node_count();
    belief_.q_s.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      belief_.q_s[i] = obs.id < model_.n_symbols()
                           ? expected_likelihood(model_.a_o[i])[obs.id]
                           : kCountFloor;
    }
    normalize(belief_.q_s);
    belief_.pose_candidates.clear();
    belief_.q_p.clear();
    for (int i = 0; i < n; ++i) {
      belief_.pose_candidates.push_back(model_.nodes[i].anchor);
      belief_.q_p.push_back(belief_.q_s[i]);
    }
    normalize(belief_.q_p);
    dead_reckon_ = model_.nodes[argmax(belief_.q_s)].anchor;
  }

  void learn_motion(const MotionOutcome& outcome, const Action& act) {
    int expected = supported_successor(model_, prev_node_, act.kind);
    if (outcome.succeeded) {
      if (cur_node_ != prev_node_)
        learn_transition(model_, prev_node_, cur_node_, act, outcome, model_.confidence);
    } else if (expected >= 0) {
      learn_transition(model_, prev_node_, expected, act, outcome, model_.confidence);
    }
  }

  // An already-expanded node re-scans when a free adjacent lattice cell has
  // no anchor: space that opened up later (e.g. a removed obstacle) would
  // otherwise stay unmapped forever.
  bool frontier_opened(const SenseResult& sensed) const {
    const Pose& src = model_.nodes[cur_node_].anchor;
    double sp = model_.spacing;
    for (int h = 0; h < kNumHeadings; ++h) {
      if (sensed.per_heading_collision[h] >= 1.0 - 1e-9) continue;
      Pose d = Action::heading(h, sp).displacement();
      Pose p{src.x + d.x, src.y + d.y};
      Pose s{std::round(p.x / sp) * sp, std::round(p.y / sp) * sp};
      if (distance(p, s) > 0.35 * sp) continue;
      int nn = nearest_node(model_, s);
      if (nn < 0 || distance(model_.nodes[nn].anchor, s) >= sp - 1e-9) return true;
    }
    return false;
  }

  void grow_from(const SenseResult& sensed) {
    if (model_.nodes[cur_node_].expanded && !frontier_opened(sensed)) return;
    // snap onto the model's own anchor lattice so candidates keep parity with
    // the existing nodes (unit rounding at spacing 2 admits half-lattice
    // anchors via the 30-degree headings)
    double sp = model_.spacing;
    auto snap = [sp](const Pose& p) {
      return Pose{std::round(p.x / sp) * sp, std::round(p.y / sp) * sp};
    };
    auto candidates = propose_candidates(model_, cur_node_, sensed.per_heading_collision,
                                         snap);
    for (const auto& c : candidates) {
      if (c.kind == ExpansionCandidate::Kind::EdgeLink) {
        MotionOutcome oc;
        oc.intended = Action::heading(c.heading, model_.spacing);
        oc.succeeded = c.collision_prob < 0.5;
        oc.physically_attempted = false;
        learn_transition(model_, cur_node_, c.link_target, oc.intended, oc,
                         model_.confidence);
        continue;
      }
      double gain = std::log(std::max(2, model_.n_symbols())) * (1.0 - c.collision_prob);
      double df = 0.0;
      if (gain < cfg_.epistemic_bar) {
        auto expanded = grow(model_, c, cur_node_);
        if (!expanded) continue;
        df = delta_free_energy(model_, *expanded, window_);
        if (!accept_expansion(df, gain, cfg_.epistemic_bar)) continue;
        model_ = std::move(*expanded);
      } else {
        auto expanded = grow(model_, c, cur_node_);
        if (!expanded) continue;
        model_ = std::move(*expanded);
      }
      belief_.q_s.push_back(0.0);
    }
    model_.nodes[cur_node_].expanded = true;
    grow_along_rays(model_, cur_node_, sensed.free_dist, sensing_range_,
                    cfg_.planner.sweep_depth, model_.confidence);
    belief_.q_s.resize(model_.node_count(), 0.0);
  }

  AgentConfig cfg_;
  GenerativeModel model_;
  Belief belief_;
  KidnapState ks_;
  Pose dead_reckon_;
  std::vector<WindowStep> window_;
  std::mt19937 rng_;
  int cur_node_ = 0;
  int prev_node_ = -1;
  double sensing_range_ = 12.0;
};

}  // namespace aifnav
