#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "aifnav/structure.hpp"
#include "oracles.hpp"

using namespace aifnav;

namespace {

GenerativeModel four_symbol_model() {
  return new_model(ObservationSymbol{0}, Pose{0, 0}, 1.0, 4);
}

}  // namespace

TEST_CASE("efe_expansion hand values") {
  auto m = four_symbol_model();
  // free direction: G = -ln(4) - ln(1 + 1e-6)
  double g_free = efe_expansion(Pose{1, 0}, 0.0, m);
  CHECK(g_free == doctest::Approx(-1.3862944 - std::log(1.0 + 1e-6)).epsilon(1e-7));
  // fully risky: gain gone, penalty -ln(1e-6)
  double g_wall = efe_expansion(Pose{1, 0}, 1.0, m);
  CHECK(g_wall == doctest::Approx(13.8155106).epsilon(1e-6));
  // half risk
  double g_half = efe_expansion(Pose{1, 0}, 0.5, m);
  CHECK(g_half == doctest::Approx(-0.5 * std::log(4.0) - std::log(0.5 + 1e-6)).epsilon(1e-9));
  // monotone in collision risk
  CHECK(g_free < g_half);
  CHECK(g_half < g_wall);
}

TEST_CASE("expansion_prior is a shifted softmax") {
  auto p = expansion_prior({0.0, std::log(3.0)});
  CHECK(p[0] == doctest::Approx(0.75));
  CHECK(p[1] == doctest::Approx(0.25));
  // shift invariance
  auto q = expansion_prior({100.0, 100.0 + std::log(3.0)});
  CHECK(q[0] == doctest::Approx(0.75));
  CHECK(q[1] == doctest::Approx(0.25));
  auto u = expansion_prior({2.0, 2.0, 2.0});
  for (double v : u) CHECK(v == doctest::Approx(1.0 / 3));
  CHECK_THROWS(expansion_prior({}));
}

TEST_CASE("propose_candidates: open space keeps six spaced directions") {
  auto m = four_symbol_model();
  std::array<double, kNumHeadings> pc{};
  pc.fill(0.0);
  auto cands = propose_candidates(m, 0, pc);
  CHECK(cands.size() == 6);
  for (const auto& c : cands) {
    CHECK(c.kind == ExpansionCandidate::Kind::NewNode);
    CHECK(distance(c.pose, m.nodes[0].anchor) == doctest::Approx(1.0));
    for (const auto& d : cands)
      if (&c != &d) CHECK(distance(c.pose, d.pose) >= m.spacing - 1e-9);
  }
  // equal EFE -> uniform prior over the kept six
  for (const auto& c : cands) CHECK(c.prior == doctest::Approx(1.0 / 6));
}

TEST_CASE("propose_candidates: blocked directions are dropped, risky ones demoted") {
  auto m = four_symbol_model();
  std::array<double, kNumHeadings> pc{};
  pc.fill(1.0);
  pc[0] = 0.0;   // east free
  pc[3] = 0.6;   // north risky
  auto cands = propose_candidates(m, 0, pc);
  REQUIRE(cands.size() == 2);
  CHECK(cands[0].heading == 0);  // lower EFE first
  CHECK(cands[1].heading == 3);
  CHECK(cands[0].prior > cands[1].prior);
  CHECK(cands[0].prior + cands[1].prior == doctest::Approx(1.0));
}

TEST_CASE("propose_candidates: near-existing anchors become edge links") {
  auto m = four_symbol_model();
  // second node one spacing east, with no edge yet
  auto grown = grow(m,
                    [] {
                      ExpansionCandidate c;
                      c.pose = Pose{1, 0};
                      c.heading = 0;
                      return c;
                    }(),
                    0);
  REQUIRE(grown.has_value());
  m = *grown;
  // remove the seeded edges so the link proposal is observable
  m.b_s[0][0][1] = kCountFloor;
  m.b_s[6][1][0] = kCountFloor;

  std::array<double, kNumHeadings> pc{};
  pc.fill(1.0);
  pc[0] = 0.0;
  auto snap = [](const Pose& p) { return Pose{std::round(p.x), std::round(p.y)}; };
  auto cands = propose_candidates(m, 0, pc, snap);
  REQUIRE(cands.size() == 1);
  CHECK(cands[0].kind == ExpansionCandidate::Kind::EdgeLink);
  CHECK(cands[0].link_target == 1);
  CHECK(cands[0].heading == 0);
}

TEST_CASE("propose_candidates: snapping onto the source anchor is skipped") {
  auto m = four_symbol_model();
  std::array<double, kNumHeadings> pc{};
  pc.fill(0.0);
  auto snap = [](const Pose&) { return Pose{0, 0}; };
  CHECK(propose_candidates(m, 0, pc, snap).empty());
}

TEST_CASE("negative_log_evidence: a fitting model scores better") {
  // model A: two nodes with distinct symbols; model B: single node
  GenerativeModel b = new_model(ObservationSymbol{0}, Pose{0, 0}, 1.0, 4);
  ExpansionCandidate c;
  c.pose = Pose{1, 0};
  c.heading = 0;
  auto a_opt = grow(b, c, 0);
  REQUIRE(a_opt.has_value());
  GenerativeModel a = *a_opt;
  a.a_o[0] = {5.0, kCountFloor, kCountFloor, kCountFloor};
  a.a_o[1] = {kCountFloor, 5.0, kCountFloor, kCountFloor};

  std::vector<WindowStep> window{
      {Action::stay(), ObservationSymbol{0}, Pose{0, 0}},
      {Action::heading(0, 1.0), ObservationSymbol{1}, Pose{1, 0}},
      {Action::heading(6, 1.0), ObservationSymbol{0}, Pose{0, 0}},
  };
  double nll_a = negative_log_evidence(a, window);
  double nll_b = negative_log_evidence(b, window);
  CHECK(nll_a < nll_b);
  CHECK(delta_free_energy(b, a, window) == doctest::Approx(nll_a - nll_b));
  CHECK_THROWS(delta_free_energy(a, b, window));
}

TEST_CASE("negative_log_evidence matches a hand-rolled single step") {
  GenerativeModel m = new_model(ObservationSymbol{0}, Pose{0, 0}, 1.0, 2);
  // one node, A_o = [1+floor, floor]
  double p_obs = (1.0 + kCountFloor) / (1.0 + 2 * kCountFloor);
  std::vector<WindowStep> w{{Action::stay(), ObservationSymbol{0}, Pose{0, 0}}};
  CHECK(negative_log_evidence(m, w) == doctest::Approx(-std::log(p_obs)).epsilon(1e-12));
}

TEST_CASE("accept_expansion") {
  CHECK(accept_expansion(-0.1, 0.0, 0.5));
  CHECK(accept_expansion(3.0, 0.5, 0.5));
  CHECK(accept_expansion(3.0, 0.9, 0.5));
  CHECK_FALSE(accept_expansion(0.1, 0.4, 0.5));
  CHECK_FALSE(accept_expansion(0.0, 0.0, 0.5));
}

TEST_CASE("grow appends a consistent node") {
  auto m = four_symbol_model();
  ExpansionCandidate c;
  c.pose = Pose{1, 0};
  c.heading = 0;
  c.collision_prob = 0.2;
  auto g = grow(m, c, 0);
  REQUIRE(g.has_value());
  CHECK(g->node_count() == 2);
  CHECK(g->nodes[1].id == 1);
  CHECK_FALSE(g->nodes[1].visited);
  CHECK_FALSE(g->nodes[1].expanded);
  // forward 5(1-pc), reverse 3(1-pc)
  CHECK(g->b_s[0][0][1] == doctest::Approx(4.0));
  CHECK(g->b_s[6][1][0] == doctest::Approx(2.4));
  CHECK(g->b_s[kStayKind][1][1] == doctest::Approx(1.0));
  // all rows resized to 2 nodes
  for (int a = 0; a < kNumActions; ++a) {
    REQUIRE(g->b_s[a].size() == 2);
    for (const auto& row : g->b_s[a]) REQUIRE(row.size() == 2);
  }
  CHECK(g->a_o[1].size() == 4);
  // source model untouched
  CHECK(m.node_count() == 1);
}

TEST_CASE("grow refuses spacing violations and link candidates") {
  auto m = four_symbol_model();
  ExpansionCandidate too_close;
  too_close.pose = Pose{0.4, 0};
  CHECK_FALSE(grow(m, too_close, 0).has_value());

  ExpansionCandidate link;
  link.kind = ExpansionCandidate::Kind::EdgeLink;
  link.pose = Pose{1, 0};
  CHECK_FALSE(grow(m, link, 0).has_value());
}

TEST_CASE("grow refuses a seventh neighbour") {
  auto m = four_symbol_model();
  std::array<double, kNumHeadings> pc{};
  pc.fill(0.0);
  auto cands = propose_candidates(m, 0, pc);
  REQUIRE(cands.size() == 6);
  for (const auto& c : cands) {
    auto g = grow(m, c, 0);
    REQUIRE(g.has_value());
    m = *g;
  }
  CHECK(neighbor_count(m, 0) == 6);
  ExpansionCandidate extra;
  extra.pose = Pose{0, -2};  // spacing respected, but the cap is hit
  extra.heading = 9;
  CHECK_FALSE(grow(m, extra, 0).has_value());
}
