#pragma once

#include <iomanip>

#include "aifnav/model.hpp"
#include "json.hpp"

namespace aifnav {

// JSON schema:
// {nodes:[{id, anchor:[x,y], obs_mode, obs_counts:[...]}],
//  edges:[{action, from, to, count, prob}], confidence, spacing}
inline nlohmann::json model_to_json(const GenerativeModel& m) {
  nlohmann::json j;
  j["schema"] = "aifnav-map-v1";
  j["confidence"] = m.confidence;
  j["spacing"] = m.spacing;
  j["nodes"] = nlohmann::json::array();
  for (int i = 0; i < m.node_count(); ++i) {
    nlohmann::json n;
    n["id"] = i;
    n["anchor"] = {m.nodes[i].anchor.x, m.nodes[i].anchor.y};
    n["obs_mode"] = argmax(m.a_o[i]);
    n["obs_counts"] = m.a_o[i];
    n["visited"] = m.nodes[i].visited;
    n["expanded"] = m.nodes[i].expanded;
    n["imagined_pose"] = {m.imagined[i].x, m.imagined[i].y};
    j["nodes"].push_back(n);
  }
  j["edges"] = nlohmann::json::array();
  for (int a = 0; a < kNumActions; ++a) {
    for (int f = 0; f < m.node_count(); ++f) {
      auto row = expected_likelihood(m.b_s[a][f]);
      for (int t = 0; t < m.node_count(); ++t) {
        if (m.b_s[a][f][t] <= kCountFloor * (1.0 + 1e-9)) continue;
        nlohmann::json e;
        e["action"] = a;
        e["from"] = f;
        e["to"] = t;
        e["count"] = m.b_s[a][f][t];
        e["prob"] = row[t];
        j["edges"].push_back(e);
      }
    }
  }
  return j;
}

inline GenerativeModel model_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "aifnav-map-v1")
    throw std::runtime_error("model_from_json: unknown schema");
  GenerativeModel m;
  m.confidence = j.at("confidence").get<double>();
  m.spacing = j.at("spacing").get<double>();
  int n = static_cast<int>(j.at("nodes").size());
  for (const auto& jn : j.at("nodes")) {
    NodeRecord nd;
    nd.id = jn.at("id").get<int>();
    nd.anchor = Pose{jn.at("anchor")[0].get<double>(), jn.at("anchor")[1].get<double>()};
    nd.visited = jn.value("visited", false);
    nd.expanded = jn.value("expanded", false);
    m.nodes.push_back(nd);
    m.a_o.push_back(jn.at("obs_counts").get<std::vector<double>>());
    auto ip = jn.value("imagined_pose", nlohmann::json{nd.anchor.x, nd.anchor.y});
    m.imagined.push_back(Pose{ip[0].get<double>(), ip[1].get<double>()});
  }
  for (auto& mat : m.b_s) mat.assign(n, std::vector<double>(n, kCountFloor));
  for (const auto& je : j.at("edges")) {
    m.b_s[je.at("action").get<int>()][je.at("from").get<int>()][je.at("to").get<int>()] =
        je.at("count").get<double>();
  }
  return m;
}

inline std::string export_map_json(const GenerativeModel& m) {
  return model_to_json(m).dump(2) + "\n";
}

// DOT rendering; edge pen width proportional to the normalized transition
// probability, node color keyed by observation mode.
inline std::string export_map_dot(const GenerativeModel& m) {
  static const char* palette[] = {"#e6194b", "#3cb44b", "#4363d8", "#f58231",
                                  "#911eb4", "#46f0f0", "#f032e6", "#bcf60c",
                                  "#fabebe", "#008080", "#9a6324", "#800000"};
  std::ostringstream out;
  out << "digraph topomap {\n";
  out << "  // aifnav-map-v1\n";
  out << "  node [shape=circle style=filled];\n";
  out << std::fixed << std::setprecision(3);
  for (int i = 0; i < m.node_count(); ++i) {
    int mode = argmax(m.a_o[i]);
    out << "  n" << i << " [label=\"" << i << "\" fillcolor=\""
        << palette[mode % 12] << "\" pos=\"" << m.nodes[i].anchor.x << ","
        << m.nodes[i].anchor.y << "!\"];\n";
  }
  for (int a = 0; a < kNumActions; ++a) {
    if (a == kStayKind) continue;
    for (int f = 0; f < m.node_count(); ++f) {
      auto row = expected_likelihood(m.b_s[a][f]);
      for (int t = 0; t < m.node_count(); ++t) {
        if (f == t || m.b_s[a][f][t] <= kCountFloor * (1.0 + 1e-9)) continue;
        out << "  n" << f << " -> n" << t << " [penwidth=" << std::max(0.05, row[t] * 5.0)
            << " label=\"a" << a << "\"];\n";
      }
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace aifnav
