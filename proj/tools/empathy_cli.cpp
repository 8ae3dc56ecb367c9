#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "empathy/empathy.hpp"

namespace fs = std::filesystem;
using namespace empathy;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config;
  std::string out = "empathy_out";
  std::optional<double> epsilon;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

GameConfig LoadConfig(const Common& c) {
  GameConfig cfg = c.config.empty() ? GameConfig{} : ParseConfig(ReadFile(c.config));
  if (c.epsilon) cfg.epsilon = *c.epsilon;
  cfg.Validate();
  return cfg;
}

// Hash of everything the solves and surrogates depend on (all but epsilon).
std::string TrainingHash(GameConfig cfg) {
  cfg.epsilon = GameConfig{}.epsilon;
  return ConfigHash(cfg);
}

nlohmann::json LoadManifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  if (!fs::exists(path)) return nlohmann::json::object();
  return nlohmann::json::parse(ReadFile(path));
}

// Output directories belong to one config; another config's manifest aborts.
void ClaimOutput(const fs::path& dir, const GameConfig& cfg) {
  const auto m = LoadManifest(dir);
  if (m.contains("config_hash") && m["config_hash"] != ConfigHash(cfg))
    throw ConfigError("manifest in " + dir.string() + " belongs to config " +
                      m["config_hash"].get<std::string>() + ", not " + ConfigHash(cfg));
}

void UpdateManifest(const fs::path& dir, const GameConfig& cfg, const std::string& key,
                    const nlohmann::json& section) {
  ClaimOutput(dir, cfg);
  auto m = LoadManifest(dir);
  m["config_hash"] = ConfigHash(cfg);
  m["training_hash"] = TrainingHash(cfg);
  m["config"] = SerializeConfig(cfg);
  m["versions"] = {{"dataset", kDatasetFormatVersion},
                   {"trajectory", kTrajectoryFormatVersion},
                   {"surrogate", kWeightFormatVersion},
                   {"log", kLogFormatVersion},
                   {"report", kReportFormatVersion}};
  m[key] = section;
  WriteFile(dir / "manifest.json", m.dump(2) + "\n");
}

void CheckTrainingHash(const fs::path& dir, const GameConfig& cfg) {
  const auto m = LoadManifest(dir);
  if (m.contains("training_hash") && m["training_hash"] != TrainingHash(cfg))
    throw ConfigError("artifacts in " + dir.string() + " were produced with a different config");
}

SurrogateSet LoadSurrogates(const fs::path& dir, const GameConfig& cfg) {
  CheckTrainingHash(dir, cfg);
  SurrogateSet set;
  for (const auto& theta : AllThetaPairs()) {
    const auto path = dir / SurrogateFileName(theta);
    if (!fs::exists(path))
      throw MissingSurrogate("missing surrogate weights " + path.string() +
                             " (run 'empathy train' first)");
    auto net = ReadSurrogate(path);
    if (net.theta != theta) throw IoError(path.string() + " holds the wrong aggressiveness pair");
    set.Add(std::move(net));
  }
  return set;
}

void NoteSeedUnused(const Common& c) {
  if (c.seed)
    std::cerr << "note: --seed has no effect here; simulation is deterministic given the "
                 "trained weights\n";
}

int CmdSolve(const Common& c, double spacing, std::size_t test_points) {
  const auto cfg = LoadConfig(c);
  const fs::path out = c.out;
  ClaimOutput(out, cfg);
  fs::create_directories(out / "trajectories");
  auto opts = DefaultDatasetOptions(cfg, spacing, c.seed.value_or(36));
  if (test_points != opts.test_states.size())
    opts.test_states = LatinHypercubeStates(cfg, test_points, opts.test_seed);
  opts.jobs = c.jobs;
  opts.trajectory_dir = out / "trajectories";
  opts.progress = [](const SolveSummary& s, std::size_t done, std::size_t total) {
    std::cerr << "[solve " << done << "/" << total << "] " << s.stem
              << (s.cached ? " cached" : "") << (s.converged ? " ok" : " FAILED ") << " "
              << (s.converged ? "" : s.diagnostics) << "\n";
  };
  const auto ds = GenerateDataset(cfg, opts);
  WriteDataset(out / "dataset", ds);
  double swap = 0.0;
  for (const auto& s : ds.swap_checks) swap = std::max(swap, s.state_error);
  UpdateManifest(out, cfg, "dataset",
                 {{"path", "dataset"},
                  {"trajectories", "trajectories"},
                  {"mesh_spacing", spacing},
                  {"test_seed", ds.test_seed},
                  {"test_points", test_points},
                  {"solves", ds.solves.size()},
                  {"converged", ds.NumConverged()},
                  {"records", ds.records.size()}});
  std::cerr << "converged " << ds.NumConverged() << "/" << ds.solves.size()
            << ", max swap error " << swap << "\n";
  return kExitOk;
}

int CmdTrain(const Common& c, const std::string& dataset, const TrainOptions& base) {
  const auto cfg = LoadConfig(c);
  const fs::path out = c.out;
  const fs::path stem = dataset.empty() ? out / "dataset" : fs::path(dataset);
  ClaimOutput(out, cfg);
  const auto ds = ReadDataset(stem);
  if (ds.config_hash != ConfigHash(cfg)) {
    // Accept a dataset solved under another epsilon only via its manifest.
    const auto m = LoadManifest(stem.parent_path());
    if (!(m.value("config_hash", std::string()) == ds.config_hash &&
          m.value("training_hash", std::string()) == TrainingHash(cfg)))
      throw ConfigError("dataset " + stem.string() + " was produced with a different config");
  }
  TrainOptions opts = base;
  if (c.seed) opts.seed = *c.seed;
  fs::create_directories(out);
  const auto thetas = AllThetaPairs();
  std::vector<ValueSurrogate> nets(thetas.size());
  ParallelFor(thetas.size(), c.jobs, [&](std::size_t k) {
    nets[k] = Train(ds.records, thetas[k], cfg, opts);
  });
  nlohmann::json files = nlohmann::json::object();
  std::printf("%-8s %12s %12s %12s %12s\n", "theta", "train_V", "test_V", "train_lam", "test_lam");
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const auto& t = nets[k].training;
    if (!std::isfinite(t.train_value_rel_mae))
      throw Error("training diverged for " + ThetaPairName(thetas[k]));
    const auto name = SurrogateFileName(thetas[k]);
    WriteSurrogate(out / name, nets[k]);
    files[ThetaPairName(thetas[k])] = name;
    std::printf("%-8s %12.4f %12.4f %12.4f %12.4f\n", ThetaPairName(thetas[k]).c_str(),
                t.train_value_rel_mae, t.test_value_rel_mae, t.train_costate_rel_mae,
                t.test_costate_rel_mae);
  }
  UpdateManifest(out, cfg, "surrogates",
                 {{"files", files},
                  {"dataset", fs::absolute(stem).string()},
                  {"costate_weight", opts.costate_weight},
                  {"learning_rate", opts.learning_rate},
                  {"epochs", opts.epochs},
                  {"batch_size", opts.batch_size},
                  {"seed", opts.seed}});
  return kExitOk;
}

int CmdSimulate(const Common& c, const std::string& scenario_file, const std::string& weights) {
  NoteSeedUnused(c);
  const auto cfg = LoadConfig(c);
  const auto scenario = ScenarioFromJson(nlohmann::json::parse(ReadFile(scenario_file)), cfg);
  const auto set = LoadSurrogates(weights.empty() ? fs::path(c.out) : fs::path(weights), cfg);
  const auto log = Simulate(scenario, set);
  const fs::path out = c.out;
  fs::create_directories(out);
  const auto stem = out / fs::path(scenario_file).stem();
  WriteLog(stem, log);
  std::cerr << "wrote " << stem.string() << ".csv/.json, social value "
            << FormatDouble(log.social_value) << "\n";
  return kExitOk;
}

void PrintSummary(const nlohmann::json& report) {
  for (const char* h : {"hypothesis1", "hypothesis2"}) {
    const auto& r = report.at(h);
    std::cerr << h << ": " << (r.at("pass").get<bool>() ? "PASS" : "FAIL") << "\n";
    for (const auto& cell : r.at("cells"))
      std::cerr << "  theta*=" << cell.at("case").get<std::string>()
                << " prior=" << cell.at("prior").get<std::string>()
                << " |X0'|=" << cell.at("winners") << "/" << cell.at("points")
                << " mean_diff=" << cell.at("mean_difference")
                << " not_worse=" << cell.at("not_worse_fraction")
                << (cell.at("pass").get<bool>() ? " pass" : " fail") << "\n";
  }
}

int CmdSweep(const Common& c, double spacing, const std::string& weights) {
  NoteSeedUnused(c);
  const auto cfg = LoadConfig(c);
  const fs::path out = c.out;
  ClaimOutput(out, cfg);
  const auto set = LoadSurrogates(weights.empty() ? out : fs::path(weights), cfg);
  const auto spec = DefaultSweepSpec(cfg, spacing);
  spec.Validate();
  fs::create_directories(out / "logs");
  const auto entries =
      RunSweep(spec, cfg, set, c.jobs, out / "logs",
               [](const SweepEntry& e, std::size_t done, std::size_t total) {
                 if (done % 50 == 0 || done == total)
                   std::cerr << "[sweep " << done << "/" << total << "] " << e.id << "\n";
               });
  WriteReport(out, entries);
  const auto report = nlohmann::json::parse(ReadFile(out / "report.json"));
  UpdateManifest(out, cfg, "sweep",
                 {{"logs", "logs"},
                  {"mesh_spacing", spacing},
                  {"points", spec.x0_set.size()},
                  {"scenarios", entries.size()},
                  {"report", "report.json"},
                  {"digest", report.at("digest")}});
  PrintSummary(report);
  return kExitOk;
}

int CmdReport(const Common& c, double spacing, const std::string& logs) {
  const auto cfg = LoadConfig(c);
  const fs::path out = c.out;
  const fs::path log_dir = logs.empty() ? out / "logs" : fs::path(logs);
  ClaimOutput(out, cfg);
  const auto spec = DefaultSweepSpec(cfg, spacing);
  const auto entries = LoadSweep(spec, cfg, log_dir);
  fs::create_directories(out);
  WriteReport(out, entries);
  const auto report = nlohmann::json::parse(ReadFile(out / "report.json"));
  std::cerr << "digest " << report.at("digest").get<std::string>() << "\n";
  PrintSummary(report);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empathetic intent inference in a two-agent intersection game"};
  app.require_subcommand(1);
  Common common;
  double spacing = 0.5;
  std::size_t test_points = 36;
  std::string dataset, scenario, weights, logs;
  TrainOptions train;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "key = value config file (defaults if omitted)");
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--epsilon", common.epsilon, "belief learning rate override");
    sub->add_option("--seed", common.seed, "seed (test sample for solve, init for train)");
    sub->add_option("--jobs", common.jobs, "worker count")->check(CLI::PositiveNumber);
  };
  auto* solve = app.add_subcommand("solve", "solve the equilibrium BVPs and build the dataset");
  add_common(solve);
  solve->add_option("--mesh-spacing", spacing, "initial-position grid spacing")
      ->check(CLI::PositiveNumber);
  solve->add_option("--test-points", test_points, "Latin-hypercube test initial states");

  auto* tr = app.add_subcommand("train", "fit the four value surrogates");
  add_common(tr);
  tr->add_option("--dataset", dataset, "dataset stem (default <out>/dataset)");
  tr->add_option("--C", train.costate_weight, "co-state loss weight");
  tr->add_option("--lr", train.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
  tr->add_option("--epochs", train.epochs, "training epochs")->check(CLI::NonNegativeNumber);
  tr->add_option("--batch-size", train.batch_size, "minibatch size (0 = full batch)");

  auto* sim = app.add_subcommand("simulate", "run one interaction scenario");
  add_common(sim);
  sim->add_option("--scenario", scenario, "scenario JSON file")->required();
  sim->add_option("--weights", weights, "directory with surrogate weights (default <out>)");

  auto* sweep = app.add_subcommand("sweep", "run the hypothesis sweep and write the report");
  add_common(sweep);
  sweep->add_option("--mesh-spacing", spacing, "initial-position grid spacing")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--weights", weights, "directory with surrogate weights (default <out>)");

  auto* report = app.add_subcommand("report", "rebuild the report from sweep logs");
  add_common(report);
  report->add_option("--mesh-spacing", spacing, "initial-position grid spacing")
      ->check(CLI::PositiveNumber);
  report->add_option("--logs", logs, "log directory (default <out>/logs)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (solve->parsed()) return CmdSolve(common, spacing, test_points);
    if (tr->parsed()) return CmdTrain(common, dataset, train);
    if (sim->parsed()) return CmdSimulate(common, scenario, weights);
    if (sweep->parsed()) return CmdSweep(common, spacing, weights);
    if (report->parsed()) return CmdReport(common, spacing, logs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const AllSolvesFailed& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const SweepFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const EmptySplit& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
