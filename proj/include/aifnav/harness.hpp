#pragma once

#include <filesystem>
#include <fstream>

#include "aifnav/agent.hpp"

namespace aifnav {

struct ConditionSpec {
  std::string name;
  std::vector<Event> events;
};

struct ScenarioConfig {
  std::string name;
  std::string environment_path;
  std::string agent_kind = "aif";  // aif | frontier
  std::vector<uint32_t> seeds;
  int runs = 1;
  int steps = 100;
  bool stop_at_goal = false;
  double spacing = 1.0;
  int n_symbols = 1;
  double lidar_range = 12.0;
  double epistemic_bar = 0.5;
  InferenceConfig inference;
  PlannerConfig planner;
  std::vector<Event> base_events;
  std::vector<ConditionSpec> conditions;
  Environment base_env;  // parsed once at load time
};

namespace cfgdetail {

inline void merge_json(nlohmann::json& base, const nlohmann::json& overlay) {
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object())
      merge_json(base[it.key()], *it);
    else
      base[it.key()] = *it;
  }
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace cfgdetail

// Loads a scenario config; an "extends" key merges the file over its base.
inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  nlohmann::json j = cfgdetail::load_json_file(path);
  fs::path dir = path.parent_path();
  if (j.contains("extends")) {
    fs::path base_path = dir / j.at("extends").get<std::string>();
    nlohmann::json base = cfgdetail::load_json_file(base_path);
    if (base.contains("extends")) throw std::runtime_error("extends: only one level supported");
    nlohmann::json merged = base;
    j.erase("extends");
    cfgdetail::merge_json(merged, j);
    j = merged;
    dir = base_path.parent_path();
  }
  if (j.value("schema", "") != "scenario-v1")
    throw std::runtime_error(path.string() + ": expected schema scenario-v1");

  ScenarioConfig c;
  c.name = j.value("name", path.stem().string());
  c.environment_path = (dir / j.at("environment").get<std::string>()).string();
  c.agent_kind = j.value("agent", "aif");
  if (c.agent_kind != "aif" && c.agent_kind != "frontier")
    throw std::runtime_error("agent must be 'aif' or 'frontier'");
  for (const auto& s : j.at("seeds")) c.seeds.push_back(s.get<uint32_t>());
  if (c.seeds.empty()) throw std::runtime_error("at least one seed required");
  c.runs = j.value("runs", 1);
  c.steps = j.value("steps", 100);

  if (j.contains("model")) {
    c.spacing = j["model"].value("spacing", 1.0);
    c.n_symbols = j["model"].value("n_symbols", 1);
  }
  if (j.contains("sim")) c.lidar_range = j["sim"].value("lidar_range", 12.0);
  if (j.contains("inference")) {
    const auto& ji = j["inference"];
    c.inference.surprise_threshold = ji.value("surprise_threshold", 2.0);
    c.inference.confidence_threshold = ji.value("confidence_threshold", 0.6);
    c.inference.recovery_window = ji.value("recovery_window", 3);
    c.inference.obs_learning_rate = ji.value("obs_learning_rate", 1.0);
  }
  if (j.contains("planner")) {
    const auto& jp = j["planner"];
    c.planner.horizon = jp.value("horizon", 14);
    c.planner.beam = jp.value("beam", 13);
    c.planner.temperature = jp.value("temperature", 0.5);
    c.planner.utility_weight = jp.value("utility_weight", 0.0);
    c.planner.preferred_symbol = jp.value("preferred_symbol", -1);
    c.planner.sweep_depth = jp.value("sweep_depth", 8);
  }
  c.epistemic_bar = j.value("epistemic_bar", 0.5);
  c.stop_at_goal = j.value("stop_at_goal", c.planner.preferred_symbol >= 0);

  std::ifstream menv(c.environment_path);
  if (!menv) throw std::runtime_error("cannot open map " + c.environment_path);
  std::stringstream ss;
  ss << menv.rdbuf();
  c.base_env = load_environment(ss.str());
  c.base_env.lidar_range = c.lidar_range;

  if (j.contains("events")) c.base_events = load_events(j["events"], c.base_env);
  if (j.contains("conditions")) {
    for (const auto& jc : j["conditions"]) {
      ConditionSpec cs;
      cs.name = jc.at("name").get<std::string>();
      if (jc.contains("events")) cs.events = load_events(jc["events"], c.base_env);
      c.conditions.push_back(cs);
    }
  }
  if (c.conditions.empty()) c.conditions.push_back(ConditionSpec{"default", {}});
  return c;
}

struct RunRow {
  int step = 0;
  Pose true_pose;
  Pose believed_pose;
  int action = kStayKind;
  EFEBreakdown efe;
  double surprise = 0.0;
  bool kidnap = false;
  double coverage = 0.0;
  double distance = 0.0;
};

struct RunRecord {
  std::string condition;
  uint32_t seed = 0;
  int run = 0;
  std::string agent_kind;
  bool completed = false;
  std::vector<RunRow> rows;
};

inline std::string run_record_csv(const RunRecord& r) {
  std::ostringstream out;
  out << "# runrecord v1 condition=" << r.condition << " seed=" << r.seed
      << " run=" << r.run << " agent=" << r.agent_kind
      << " completed=" << (r.completed ? 1 : 0) << "\n";
  out << "step,true_x,true_y,bel_x,bel_y,action,efe_total,learning_gain,"
         "inference_gain,collision_cost,preference_value,surprise,kidnap,"
         "coverage,distance\n";
  char buf[512];
  for (const auto& w : r.rows) {
    snprintf(buf, sizeof(buf),
             "%d,%.10g,%.10g,%.10g,%.10g,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d,%.10g,%.10g\n",
             w.step, w.true_pose.x, w.true_pose.y, w.believed_pose.x, w.believed_pose.y,
             w.action, w.efe.total, w.efe.learning_gain, w.efe.inference_gain,
             w.efe.collision_cost, w.efe.preference_value, w.surprise,
             w.kidnap ? 1 : 0, w.coverage, w.distance);
    out << buf;
  }
  return out.str();
}

inline RunRecord run_record_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  RunRecord r;
  if (!std::getline(in, line) || line.rfind("# runrecord v1", 0) != 0)
    throw std::runtime_error("runrecord: bad header");
  {
    std::istringstream hs(line.substr(15));
    std::string kv;
    while (hs >> kv) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
      if (k == "condition") r.condition = v;
      else if (k == "seed") r.seed = static_cast<uint32_t>(std::stoul(v));
      else if (k == "run") r.run = std::stoi(v);
      else if (k == "agent") r.agent_kind = v;
      else if (k == "completed") r.completed = v == "1";
    }
  }
  std::getline(in, line);  // column header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RunRow w;
    std::istringstream ls(line);
    std::string f;
    auto next = [&ls, &f]() {
      std::getline(ls, f, ',');
      return std::stod(f);
    };
    w.step = static_cast<int>(next());
    w.true_pose.x = next();
    w.true_pose.y = next();
    w.believed_pose.x = next();
    w.believed_pose.y = next();
    w.action = static_cast<int>(next());
    w.efe.total = next();
    w.efe.learning_gain = next();
    w.efe.inference_gain = next();
    w.efe.collision_cost = next();
    w.efe.preference_value = next();
    w.surprise = next();
    w.kidnap = next() != 0.0;
    w.coverage = next();
    w.distance = next();
    r.rows.push_back(w);
  }
  return r;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << content;
  }
  fs::rename(tmp, path);
}

// Executes one run of one agent; the model (for aif agents) is carried in and
// out so learning accumulates across runs and conditions.
inline RunRecord run_once(const ScenarioConfig& cfg, const ConditionSpec& cond,
                          uint32_t seed, int run_index, int cond_index,
                          std::optional<GenerativeModel>& carried_model) {
  Environment env = cfg.base_env;
  env.events = cfg.base_events;
  for (const auto& e : cond.events) env.events.push_back(e);

  Pose true_pose{static_cast<double>(env.start.x), static_cast<double>(env.start.y)};
  RunRecord rec;
  rec.condition = cond.name;
  rec.seed = seed;
  rec.run = run_index;
  rec.agent_kind = cfg.agent_kind;

  uint32_t run_seed = seed * 9176u + static_cast<uint32_t>(cond_index) * 131u +
                      static_cast<uint32_t>(run_index);

  CoverageTracker coverage(env);
  std::optional<AifAgent> aif;
  std::optional<FrontierAgent> frontier;
  if (cfg.agent_kind == "frontier") {
    frontier.emplace(env);
  }

  std::optional<MotionOutcome> last_outcome;
  double dist = 0.0;
  for (int t = 0; t < cfg.steps; ++t) {
    EventOutcome ev = apply_events(env, t, true_pose);
    true_pose = ev.new_true_pose;  // kidnaps do not count as travel

    SenseResult sensed = sense(env, true_pose, cfg.spacing);
    coverage.add_pose(env, true_pose);

    RunRow row;
    row.step = t;
    row.kidnap = ev.kidnapped;
    row.true_pose = true_pose;

    Action action = Action::stay();
    if (aif || cfg.agent_kind == "aif") {
      if (!aif) {
        AgentConfig ac;
        ac.inference = cfg.inference;
        ac.planner = cfg.planner;
        ac.spacing = cfg.spacing;
        ac.n_symbols = std::max(cfg.n_symbols, env.n_symbols);
        ac.epistemic_bar = cfg.epistemic_bar;
        if (carried_model)
          aif.emplace(ac, *carried_model, true_pose, run_seed);
        else
          aif.emplace(ac, sensed.obs, true_pose, run_seed);
        aif->set_sensing_range(cfg.lidar_range);
      }
      StepTrace trace = aif->update(sensed, last_outcome ? &*last_outcome : nullptr);
      auto [act, efe] = aif->act();
      action = act;
      row.efe = efe;
      row.surprise = trace.surprise;
      row.believed_pose = trace.believed_pose;
    } else {
      frontier->observe(env, true_pose);
      action = frontier->next_action(true_pose);
      row.believed_pose = true_pose;
    }

    MotionOutcome outcome = step(env, true_pose, action);
    dist += distance(true_pose, outcome.resulting_pose);
    true_pose = outcome.resulting_pose;
    last_outcome = outcome;

    row.action = action.kind;
    row.coverage = coverage.fraction();
    row.distance = dist;
    rec.rows.push_back(row);

    if (env.has_goal && env.cell_of(true_pose) == env.goal && cfg.stop_at_goal) {
      rec.completed = true;
      // terminal arrival marker row
      RunRow final = row;
      final.step = t + 1;
      final.true_pose = true_pose;
      rec.rows.push_back(final);
      break;
    }
  }
  if (aif) carried_model = aif->model();
  return rec;
}

// Runs every (condition, seed, run) cell; emits one CSV per run plus the
// final model per (condition, seed) for aif agents.
inline std::vector<RunRecord> run_scenario(const ScenarioConfig& cfg,
                                           const std::filesystem::path& out_dir,
                                           bool write_artifacts = true) {
  namespace fs = std::filesystem;
  std::vector<RunRecord> records;
  for (uint32_t seed : cfg.seeds) {
    std::optional<GenerativeModel> carried;
    for (size_t ci = 0; ci < cfg.conditions.size(); ++ci) {
      const auto& cond = cfg.conditions[ci];
      for (int run = 0; run < cfg.runs; ++run) {
        RunRecord rec = run_once(cfg, cond, seed, run, static_cast<int>(ci), carried);
        if (write_artifacts) {
          fs::path p = out_dir / "records" /
                       ("cond-" + cond.name + "_seed-" + std::to_string(seed) +
                        "_run-" + std::to_string(run) + ".csv");
          atomic_write(p, run_record_csv(rec));
        }
        records.push_back(std::move(rec));
      }
      if (write_artifacts && carried) {
        fs::path base = out_dir / "maps" /
                        ("cond-" + cond.name + "_seed-" + std::to_string(seed));
        atomic_write(base.string() + ".json", export_map_json(*carried));
        atomic_write(base.string() + ".dot", export_map_dot(*carried));
      }
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Tolman route reporting

struct RouteTable {
  // per condition: {route1, route2, route3, incomplete} counts
  std::map<std::string, std::array<int, 4>> counts;

  std::array<double, 4> shares(const std::string& cond) const {
    const auto& c = counts.at(cond);
    double tot = c[0] + c[1] + c[2] + c[3];
    if (tot == 0) return {0, 0, 0, 0};
    return {c[0] / tot, c[1] / tot, c[2] / tot, c[3] / tot};
  }
};

// Cells of the vertical corridor containing a junction: same column,
// contiguous free span, walled east and west.
inline std::vector<Cell> junction_corridor(const Environment& env, char label) {
  Cell j = env.junctions.at(label);
  auto is_corridor = [&env](int x, int y) {
    return !env.wall(x, y) && env.wall(x - 1, y) && env.wall(x + 1, y);
  };
  std::vector<Cell> out;
  int y = j.y;
  while (is_corridor(j.x, y - 1)) --y;
  for (; is_corridor(j.x, y); ++y) out.push_back(Cell{j.x, y});
  return out;
}

// Classifies each completed start-to-goal traversal by which junction
// corridor was fully traversed between leaving the start row and reaching the
// goal. Index: 0=route1 (via A), 1=route2 (via B), 2=route3, 3=incomplete.
inline int classify_route(const RunRecord& rec, const Environment& env) {
  if (!rec.completed) return 3;
  auto corridor_a = junction_corridor(env, 'A');
  auto corridor_b = junction_corridor(env, 'B');
  int t_goal = -1;
  for (size_t t = 0; t < rec.rows.size(); ++t) {
    if (env.cell_of(rec.rows[t].true_pose) == env.goal) {
      t_goal = static_cast<int>(t);
      break;
    }
  }
  if (t_goal < 0) return 3;
  int t_start = 0;
  for (int t = t_goal; t >= 0; --t) {
    if (env.cell_of(rec.rows[t].true_pose).y == env.start.y) {
      t_start = t;
      break;
    }
  }
  auto fully_traversed = [&](const std::vector<Cell>& corridor) {
    for (const auto& c : corridor) {
      bool hit = false;
      for (int t = t_start; t <= t_goal; ++t)
        if (env.cell_of(rec.rows[t].true_pose) == c) hit = true;
      if (!hit) return false;
    }
    return !corridor.empty();
  };
  if (fully_traversed(corridor_a)) return 0;
  if (fully_traversed(corridor_b)) return 1;
  return 2;
}

inline RouteTable tolman_report(const std::vector<RunRecord>& records,
                                const Environment& env) {
  RouteTable table;
  for (const auto& rec : records) {
    auto& c = table.counts[rec.condition];
    c[classify_route(rec, env)] += 1;
  }
  return table;
}

inline std::string route_table_csv(const RouteTable& table) {
  std::ostringstream out;
  out << "# tolman-routes v1\n";
  out << "condition,route1,route2,route3,incomplete,share1,share2,share3\n";
  for (const auto& [cond, c] : table.counts) {
    auto s = table.shares(cond);
    char buf[256];
    snprintf(buf, sizeof(buf), "%s,%d,%d,%d,%d,%.6g,%.6g,%.6g\n", cond.c_str(), c[0],
             c[1], c[2], c[3], s[0], s[1], s[2]);
    out << buf;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Coverage reporting

// Linear interpolation of coverage at a travelled distance; flat beyond the
// run's end.
inline double coverage_at_distance(const RunRecord& rec, double d) {
  if (rec.rows.empty()) return 0.0;
  if (d <= rec.rows.front().distance) return rec.rows.front().coverage;
  for (size_t i = 1; i < rec.rows.size(); ++i) {
    const auto& a = rec.rows[i - 1];
    const auto& b = rec.rows[i];
    if (d <= b.distance) {
      if (b.distance - a.distance < 1e-12) return b.coverage;
      double t = (d - a.distance) / (b.distance - a.distance);
      return a.coverage + t * (b.coverage - a.coverage);
    }
  }
  return rec.rows.back().coverage;
}

// Distance travelled when a coverage fraction is first reached; +inf if never.
inline double distance_to_coverage(const RunRecord& rec, double frac) {
  for (size_t i = 0; i < rec.rows.size(); ++i) {
    if (rec.rows[i].coverage >= frac) {
      if (i == 0) return rec.rows[0].distance;
      const auto& a = rec.rows[i - 1];
      const auto& b = rec.rows[i];
      if (b.coverage - a.coverage < 1e-12) return b.distance;
      double t = (frac - a.coverage) / (b.coverage - a.coverage);
      return a.distance + t * (b.distance - a.distance);
    }
  }
  return std::numeric_limits<double>::infinity();
}

struct CoverageCurves {
  std::vector<double> checkpoints;
  // per agent kind: median / min / max coverage at each checkpoint
  std::map<std::string, std::array<std::vector<double>, 3>> bands;
};

inline CoverageCurves coverage_report(const std::vector<RunRecord>& records,
                                      double checkpoint_spacing = 5.0) {
  CoverageCurves out;
  double max_d = 0.0;
  for (const auto& r : records)
    if (!r.rows.empty()) max_d = std::max(max_d, r.rows.back().distance);
  for (double d = 0.0; d <= max_d + 1e-9; d += checkpoint_spacing)
    out.checkpoints.push_back(d);

  std::map<std::string, std::vector<const RunRecord*>> by_kind;
  for (const auto& r : records) by_kind[r.agent_kind].push_back(&r);
  for (const auto& [kind, recs] : by_kind) {
    auto& band = out.bands[kind];
    for (double d : out.checkpoints) {
      std::vector<double> vals;
      for (const auto* r : recs) vals.push_back(coverage_at_distance(*r, d));
      std::sort(vals.begin(), vals.end());
      double med = vals.size() % 2 ? vals[vals.size() / 2]
                                   : 0.5 * (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]);
      band[0].push_back(med);
      band[1].push_back(vals.front());
      band[2].push_back(vals.back());
    }
  }
  return out;
}

inline std::string coverage_curves_csv(const CoverageCurves& c) {
  std::ostringstream out;
  out << "# coverage-curves v1\ndistance";
  for (const auto& [kind, band] : c.bands)
    out << "," << kind << "_median," << kind << "_min," << kind << "_max";
  out << "\n";
  for (size_t i = 0; i < c.checkpoints.size(); ++i) {
    char buf[64];
    snprintf(buf, sizeof(buf), "%.10g", c.checkpoints[i]);
    out << buf;
    for (const auto& [kind, band] : c.bands) {
      snprintf(buf, sizeof(buf), ",%.10g,%.10g,%.10g", band[0][i], band[1][i], band[2][i]);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

// Standalone SVG with the data embedded as comments, so the plot is
// inspectable without external tooling.
inline std::string coverage_curves_svg(const CoverageCurves& c) {
  const int W = 640, H = 420, ML = 60, MB = 40, MT = 20, MR = 20;
  double max_d = c.checkpoints.empty() ? 1.0 : c.checkpoints.back();
  if (max_d <= 0) max_d = 1.0;
  auto px = [&](double d) { return ML + (W - ML - MR) * d / max_d; };
  auto py = [&](double cov) { return H - MB - (H - MB - MT) * cov; };
  static const char* colors[] = {"#4363d8", "#e6194b", "#3cb44b", "#f58231"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\">\n<!-- coverage vs distance -->\n";
  out << "<!--DATA\n" << coverage_curves_csv(c) << "-->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
      << H - MB << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\""
      << H - MB << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 8
      << "\" text-anchor=\"middle\" font-size=\"12\">distance travelled (m)</text>\n";
  out << "<text x=\"14\" y=\"" << H / 2
      << "\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\" font-size=\"12\">coverage</text>\n";
  int ci = 0;
  for (const auto& [kind, band] : c.bands) {
    const char* color = colors[ci % 4];
    // min/max band
    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (size_t i = 0; i < c.checkpoints.size(); ++i)
      out << px(c.checkpoints[i]) << "," << py(band[1][i]) << " ";
    for (size_t i = c.checkpoints.size(); i-- > 0;)
      out << px(c.checkpoints[i]) << "," << py(band[2][i]) << " ";
    out << "\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < c.checkpoints.size(); ++i)
      out << px(c.checkpoints[i]) << "," << py(band[0][i]) << " ";
    out << "\"/>\n";
    out << "<text x=\"" << W - MR - 120 << "\" y=\"" << MT + 16 + 16 * ci
        << "\" font-size=\"12\" fill=\"" << color << "\">" << kind << " (median)</text>\n";
    ++ci;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace aifnav
