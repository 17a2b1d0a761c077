// aifnav command line: run scenarios, build reports, export maps.

#include <iostream>

#include "CLI11.hpp"
#include "aifnav/harness.hpp"

namespace fs = std::filesystem;
using namespace aifnav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitCheckFailed = 3;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<RunRecord> load_records_dir(const fs::path& dir) {
  std::vector<RunRecord> out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(run_record_from_csv(slurp(f)));
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::vector<uint32_t> seed_override, bool check) {
  ScenarioConfig cfg;
  try {
    cfg = load_scenario(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  if (!seed_override.empty()) cfg.seeds = seed_override;

  auto records = run_scenario(cfg, out_dir);
  int completed = 0;
  for (const auto& r : records) completed += r.completed ? 1 : 0;
  std::cout << "scenario " << cfg.name << ": " << records.size() << " runs, "
            << completed << " completed, records in " << out_dir << "/records\n";

  if (check) {
    // determinism check: re-run the first cell and compare bytes
    ScenarioConfig one = cfg;
    one.seeds = {cfg.seeds.front()};
    one.runs = 1;
    one.conditions = {cfg.conditions.front()};
    auto a = run_scenario(one, out_dir, false);
    auto b = run_scenario(one, out_dir, false);
    if (run_record_csv(a.front()) != run_record_csv(b.front())) {
      std::cerr << "check failed: scenario is not deterministic\n";
      return kExitCheckFailed;
    }
    std::cout << "check passed: deterministic replay\n";
  }
  return kExitOk;
}

int cmd_report_tolman(const std::string& records_dir, const std::string& map_path,
                      const std::string& out_dir) {
  auto records = load_records_dir(records_dir);
  Environment env = load_environment(slurp(map_path));
  auto table = tolman_report(records, env);
  std::string csv = route_table_csv(table);
  atomic_write(fs::path(out_dir) / "tolman_routes.csv", csv);
  std::cout << csv;
  return kExitOk;
}

int cmd_report_coverage(const std::string& records_dir, const std::string& out_dir,
                        double checkpoint) {
  auto records = load_records_dir(records_dir);
  auto curves = coverage_report(records, checkpoint);
  atomic_write(fs::path(out_dir) / "coverage.csv", coverage_curves_csv(curves));
  atomic_write(fs::path(out_dir) / "coverage.svg", coverage_curves_svg(curves));
  std::cout << coverage_curves_csv(curves);
  return kExitOk;
}

int cmd_export_map(const std::string& model_path, const std::string& format,
                   const std::string& out_path) {
  auto model = model_from_json(nlohmann::json::parse(slurp(model_path)));
  std::string text = format == "dot" ? export_map_dot(model) : export_map_json(model);
  if (out_path.empty())
    std::cout << text;
  else
    atomic_write(out_path, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-inference topological navigation experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", records_dir, map_path, model_path;
  std::string format = "json", out_path;
  std::vector<uint32_t> seeds;
  bool check = false;
  double checkpoint = 5.0;

  auto* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("config", config_path)->required();
  run->add_option("--out-dir", out_dir);
  run->add_option("--seed", seeds, "Override the config's seed list");
  run->add_flag("--check", check, "Verify deterministic replay after the run");

  auto* report = app.add_subcommand("report", "Aggregate run records");
  auto* tolman = report->add_subcommand("tolman", "Route-frequency table");
  tolman->add_option("records-dir", records_dir)->required();
  tolman->add_option("--map", map_path, "Unblocked maze map file")->required();
  tolman->add_option("--out-dir", out_dir);
  auto* cover = report->add_subcommand("coverage", "Coverage vs distance curves");
  cover->add_option("records-dir", records_dir)->required();
  cover->add_option("--out-dir", out_dir);
  cover->add_option("--checkpoint", checkpoint, "Distance checkpoint spacing (m)");
  report->require_subcommand(1);

  auto* exp = app.add_subcommand("export-map", "Convert a model JSON artifact");
  exp->add_option("model", model_path)->required();
  exp->add_option("--format", format)->check(CLI::IsMember({"json", "dot"}));
  exp->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;  // bad arguments -> 2
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seeds, check);
    if (report->parsed()) {
      if (tolman->parsed()) return cmd_report_tolman(records_dir, map_path, out_dir);
      return cmd_report_coverage(records_dir, out_dir, checkpoint);
    }
    if (exp->parsed()) return cmd_export_map(model_path, format, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitOk;
}
