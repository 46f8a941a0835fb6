#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "fedgm/errors.hpp"
#include "fedgm/harness.hpp"

namespace fs = std::filesystem;

namespace {

std::string kebab(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::string infer_name(const fs::path& raw_dir) {
  std::vector<std::string> names;
  if (fs::is_directory(raw_dir)) {
    for (const auto& e : fs::directory_iterator(raw_dir)) {
      if (e.path().extension() == ".content") names.push_back(e.path().stem().string());
    }
  }
  if (names.size() != 1) {
    throw fedgm::Error("cannot infer dataset name in " + raw_dir.string() + " (found " + std::to_string(names.size()) +
                       " .content files); pass --name");
  }
  return names.front();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated graph learning simulator: FedGM, FedAvg and local-only baselines"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one method over all configured seeds");
  std::string config_path;
  bool force = false;
  bool quiet = false;
  run->add_option("-c,--config", config_path, "key = value config file");
  run->add_flag("--force", force, "Overwrite artifacts in an existing output directory");
  run->add_flag("-q,--quiet", quiet, "Suppress progress output");
  std::map<std::string, std::string> overrides;
  for (const auto& key : fedgm::config_keys()) {
    run->add_option("--" + kebab(key), overrides[key], "Override '" + key + "'");
  }

  auto* compare = app.add_subcommand("compare", "Tabulate summaries of finished runs");
  std::vector<std::string> run_dirs;
  std::string csv_path = "compare.csv";
  compare->add_option("dirs", run_dirs, "Run output directories")->required();
  compare->add_option("--csv", csv_path, "Where to write the CSV table")->capture_default_str();

  auto* convert = app.add_subcommand("convert", "Convert a plain citation dataset to the graph text format");
  std::string raw_dir;
  std::string out_path;
  std::string name;
  std::uint64_t split_seed = 0;
  convert->add_option("raw_dir", raw_dir, "Directory holding <name>.content and <name>.cites")->required();
  convert->add_option("out", out_path, "Output graph file")->required();
  convert->add_option("--name", name, "Dataset file stem (default: the only .content file)");
  convert->add_option("--split-seed", split_seed, "Seed for the stratified 60/20/20 split")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      fedgm::ExperimentConfig cfg;
      if (!config_path.empty()) cfg = fedgm::load_config(config_path);
      for (const auto& key : fedgm::config_keys()) {
        if (run->count("--" + kebab(key)) > 0) fedgm::set_config_value(cfg, key, overrides[key]);
      }
      fedgm::validate(cfg);
      fedgm::RunOptions opt;
      opt.force = force;
      opt.workers = fedgm::workers_from_env();
      opt.log = quiet ? nullptr : &std::cerr;
      const auto outcomes = fedgm::run_experiment(cfg, opt);
      const auto s = fedgm::summarize(cfg.method, cfg.dataset, outcomes);
      std::cout << cfg.method << " on " << cfg.dataset << ": " << 100.0 * s.mean << " ± " << 100.0 * s.std << " over "
                << s.seeds.size() << " seeds -> " << cfg.output << "\n";
    } else if (*compare) {
      std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
      const auto rows = fedgm::compare_runs(dirs);
      fedgm::write_compare_text(std::cout, rows);
      std::ofstream csv(csv_path);
      if (!csv) throw fedgm::Error("cannot write " + csv_path);
      fedgm::write_compare_csv(csv, rows);
    } else if (*convert) {
      const std::string stem = name.empty() ? infer_name(raw_dir) : name;
      const auto st = fedgm::convert_citation(raw_dir, stem, out_path, split_seed);
      std::cout << "N " << st.nodes << " D " << st.features << " C " << st.classes << "\n"
                << "undirected edges " << st.edges << ", citations to unknown papers dropped " << st.dropped_edges
                << "\n";
    }
  } catch (const fedgm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedgm::PhaseError& e) {
    std::cerr << "error " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error [" << (*run ? "run" : *compare ? "compare" : "convert") << "] " << e.what() << "\n";
    return 1;
  }
  return 0;
}
