#include "fedgm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fedgm/errors.hpp"

namespace fedgm {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path p = fs::path(::testing::TempDir()) / "fedgm_harness" / (std::string(info->name()) + "_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig parse(const std::string& text, ExperimentConfig base = {}) {
  std::istringstream in(text);
  return parse_config(in, std::move(base));
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig tiny_experiment(const fs::path& out) {
  ExperimentConfig c;
  c.clients = 3;
  c.stage1_epochs = 4;
  c.rounds = 2;
  c.steps_per_round = 1;
  c.hidden = 8;
  c.mlp_hidden = 6;
  c.final_epochs = 6;
  c.probe_every = 1;
  c.probe_epochs = 3;
  c.seeds = {1, 2};
  c.output = out.string();
  return c;
}

TEST(Config, ParsesKeysCommentsAndWhitespace) {
  const auto c = parse(
      "# experiment\n"
      "method = fedavg\n"
      "  rounds=7   # trailing comment\n"
      "\n"
      "ratio = 0.5\n"
      "seeds = 4, 5,6\n"
      "dataset = graphs/cora.graph\n");
  EXPECT_EQ(c.method, "fedavg");
  EXPECT_EQ(c.rounds, 7);
  EXPECT_EQ(c.ratio, 0.5);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5, 6}));
  EXPECT_EQ(c.dataset, "graphs/cora.graph");
  EXPECT_EQ(c.hidden, 256);
}

TEST(Config, DefaultsMatchTheProtocol) {
  const ExperimentConfig c;
  EXPECT_EQ(c.clients, 10);
  EXPECT_EQ(c.rounds, 100);
  EXPECT_EQ(c.stage1_epochs, 1000);
  EXPECT_EQ(c.lr_gnn, 1e-2);
  EXPECT_EQ(c.weight_decay, 5e-4);
  EXPECT_EQ(c.hidden, 256);
  EXPECT_EQ(c.mlp_hidden, 128);
  EXPECT_EQ(c.final_epochs, 300);
  EXPECT_EQ(c.local_epochs, 3);
  EXPECT_EQ(c.delta, 0.5);
  EXPECT_EQ(c.seeds.size(), 3u);
}

TEST(Config, LaterSourcesOverrideEarlierOnes) {
  ExperimentConfig base;
  base.rounds = 3;
  base.method = "fedavg";
  const auto c = parse("rounds = 9\n", base);
  EXPECT_EQ(c.rounds, 9);
  EXPECT_EQ(c.method, "fedavg");
  ExperimentConfig d = c;
  set_config_value(d, "rounds", "11");
  EXPECT_EQ(d.rounds, 11);
}

TEST(Config, StrictErrorsCarryLineNumbers) {
  EXPECT_NE(config_error("rounds = 3\nroundz = 4\n").find("line 2"), std::string::npos);
  EXPECT_NE(config_error("rounds = 3\nroundz = 4\n").find("roundz"), std::string::npos);
  EXPECT_NE(config_error("rounds = 3\nrounds = 4\n").find("duplicate"), std::string::npos);
  EXPECT_NE(config_error("\n\nrounds 3\n").find("line 3"), std::string::npos);
  EXPECT_NE(config_error("rounds = 3x\n").find("rounds"), std::string::npos);
  EXPECT_NE(config_error("rounds = \n").find("rounds"), std::string::npos);
  EXPECT_NE(config_error("ratio = 0.5.1\n").find("ratio"), std::string::npos);
  EXPECT_NE(config_error("seeds = 1,,2\n").find("seeds"), std::string::npos);
  EXPECT_NE(config_error("clients = -2x\n").find("clients"), std::string::npos);
  ExperimentConfig c;
  EXPECT_THROW(set_config_value(c, "nope", "1"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/fedgm.cfg"), ConfigError);
}

TEST(Config, EntriesRoundTrip) {
  ExperimentConfig c;
  c.ratio = 0.1;
  c.lr_phi = 3.3e-4;
  c.delta = 0.7;
  c.seeds = {9, 1};
  c.method = "local-only";
  std::string text;
  for (const auto& [k, v] : config_entries(c)) text += k + " = " + v + "\n";
  const auto back = parse(text);
  EXPECT_EQ(config_entries(back), config_entries(c));
  EXPECT_EQ(back.lr_phi, c.lr_phi);
  EXPECT_EQ(config_keys().size(), config_entries(c).size());
}

TEST(Config, ValidationRanges) {
  auto rejects = [](auto mutate) {
    ExperimentConfig c;
    mutate(c);
    EXPECT_THROW(validate(c), ConfigError);
  };
  EXPECT_NO_THROW(validate(ExperimentConfig{}));
  rejects([](ExperimentConfig& c) { c.clients = 0; });
  rejects([](ExperimentConfig& c) { c.ratio = 0.0; });
  rejects([](ExperimentConfig& c) { c.ratio = 1.5; });
  rejects([](ExperimentConfig& c) { c.lr_gnn = 0.0; });
  rejects([](ExperimentConfig& c) { c.lr_feat = -1.0; });
  rejects([](ExperimentConfig& c) { c.lr_x = 0.0; });
  rejects([](ExperimentConfig& c) { c.lr_phi = 0.0; });
  rejects([](ExperimentConfig& c) { c.method = "fedprox"; });
  rejects([](ExperimentConfig& c) { c.delta = 1.5; });
  rejects([](ExperimentConfig& c) { c.rounds = -1; });
  rejects([](ExperimentConfig& c) { c.seeds.clear(); });
  rejects([](ExperimentConfig& c) { c.seeds = {1, 1}; });
  rejects([](ExperimentConfig& c) { c.distance = "l1"; });
  rejects([](ExperimentConfig& c) { c.class_weights = "uniform"; });
  ExperimentConfig ok;
  ok.ratio = 1.0;
  EXPECT_NO_THROW(validate(ok));
}

TEST(Config, FedConfigMapping) {
  ExperimentConfig c;
  c.method = "fedgm-stage1";
  c.rounds = 40;
  c.lr_x = 2e-3;
  c.class_weights = "real";
  c.distance = "l2";
  const FedConfig f = to_fed_config(c, 7, 3);
  EXPECT_EQ(f.rounds, 0);
  EXPECT_EQ(f.condense.lr_features, 2e-3);
  EXPECT_TRUE(f.weight_by_real_counts);
  EXPECT_EQ(f.condense.distance, DistanceKind::kSquaredL2);
  EXPECT_EQ(f.seed, 7u);
  EXPECT_EQ(f.workers, 3);
  EXPECT_EQ(f.train.epochs, 300);
  EXPECT_EQ(f.train.optimizer, OptimizerKind::kAdam);
  EXPECT_EQ(f.condense.optimizer, OptimizerKind::kSgd);
}

TEST(Summary, MeanIsArithmeticAndStdIsSample) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 1; n <= 6; ++n) {
    std::vector<SeedOutcome> o;
    for (int i = 0; i < n; ++i) o.push_back({static_cast<std::uint64_t>(i), u(rng), {}});
    const Summary s = summarize("fedgm", "sbm:default", o);
    double sum = 0.0;
    for (const auto& x : o) sum += x.final_acc;
    const double mean = sum / n;
    EXPECT_NEAR(s.mean, mean, 1e-15);
    double ss = 0.0;
    for (const auto& x : o) ss += (x.final_acc - mean) * (x.final_acc - mean);
    EXPECT_NEAR(s.std, n > 1 ? std::sqrt(ss / (n - 1)) : 0.0, 1e-15);
    EXPECT_EQ(s.finals.size(), static_cast<std::size_t>(n));
  }
}

TEST(Metrics, RowEncoding) {
  MetricsRow r;
  r.round = 4;
  r.phase = "stage2";
  r.match_loss = 0.25;
  r.msg_up_bytes = 10;
  r.msg_down_bytes = 20;
  EXPECT_EQ(format_metrics_row(r), "4,stage2,0.25,,,,10,20");
  r.client_id = 3;
  r.client_acc = 1.0;
  r.match_loss.reset();
  EXPECT_EQ(format_metrics_row(r), "4,stage2,,,3,1,10,20");
  EXPECT_EQ(metrics_header(), "round,phase,match_loss,overall_acc,client_id,client_acc,msg_up_bytes,msg_down_bytes");
}

TEST(Dataset, SbmSpecsAndPaths) {
  ExperimentConfig c;
  const Graph a = prepare_dataset(c);
  EXPECT_EQ(a.num_nodes, 600);
  EXPECT_EQ(a.num_features(), 32);
  c.dataset = "sbm:default@3";
  const Graph b = prepare_dataset(c);
  EXPECT_EQ(b.num_nodes, 600);
  EXPECT_NE(a.features, b.features);
  c.dataset = "sbm:large";
  EXPECT_THROW(prepare_dataset(c), ConfigError);
  c.dataset = "/nonexistent/graph.txt";
  EXPECT_THROW(prepare_dataset(c), ConfigError);
}

TEST(Dataset, ClientsPartitionTheGraph) {
  const Graph g = prepare_dataset(ExperimentConfig{});
  const auto clients = make_clients(g, 10, 0);
  ASSERT_EQ(clients.size(), 10u);
  int total = 0;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    EXPECT_EQ(clients[i].id, static_cast<int>(i));
    EXPECT_GT(clients[i].graph.num_nodes, 0);
    total += clients[i].graph.num_nodes;
  }
  EXPECT_EQ(total, g.num_nodes);

  // Each client is split per class on its own: round(0.6 n_c) train, round(0.2 n_c) val.
  for (const auto& c : clients) {
    const auto& sub = c.graph;
    for (int cls = 0; cls < sub.num_classes; ++cls) {
      int n = 0, train = 0, val = 0;
      for (int v = 0; v < sub.num_nodes; ++v) {
        if (sub.labels[static_cast<std::size_t>(v)] != cls) continue;
        ++n;
        train += sub.split[static_cast<std::size_t>(v)] == Split::kTrain;
        val += sub.split[static_cast<std::size_t>(v)] == Split::kVal;
      }
      EXPECT_EQ(train, static_cast<int>(std::lround(0.6 * n))) << "client " << c.id << " class " << cls;
      EXPECT_EQ(val, static_cast<int>(std::lround(0.2 * n))) << "client " << c.id << " class " << cls;
    }
  }
}

TEST(Accounting, DetectsWrongCounts) {
  MessageLog log;
  for (int k = 0; k < 2; ++k) log.record({0, "condensed_graph", Direction::kUp, k, 8});
  EXPECT_NO_THROW(check_accounting("fedgm-stage1", log, 2, 0));
  EXPECT_THROW(check_accounting("fedgm", log, 2, 1), Error);
  for (int k = 0; k < 2; ++k) {
    log.record({1, "theta", Direction::kDown, k, 8});
    log.record({1, "class_gradients", Direction::kUp, k, 8});
  }
  EXPECT_NO_THROW(check_accounting("fedgm", log, 2, 1));
  EXPECT_THROW(check_accounting("fedgm", log, 3, 1), Error);
  EXPECT_THROW(check_accounting("local-only", log, 2, 1), Error);
  EXPECT_NO_THROW(check_accounting("local-only", MessageLog{}, 2, 1));
}

TEST(RunExperiment, WritesArtifactsAndStreamsEveryRow) {
  const fs::path out = scratch("run");
  ExperimentConfig c = tiny_experiment(out);
  c.method = "fedavg";
  const auto outcomes = run_experiment(c, {});
  ASSERT_EQ(outcomes.size(), 2u);
  for (const auto& o : outcomes) {
    const fs::path dir = out / ("seed_" + std::to_string(o.seed));
    std::istringstream csv(slurp(dir / "metrics.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, metrics_header());
    std::size_t i = 0;
    while (std::getline(csv, line)) {
      ASSERT_LT(i, o.result.rows.size());
      EXPECT_EQ(line, format_metrics_row(o.result.rows[i++]));
    }
    EXPECT_EQ(i, o.result.rows.size());
    // One aggregate row plus one row per client, every round.
    EXPECT_EQ(i, static_cast<std::size_t>(c.rounds * (c.clients + 1)));
    EXPECT_TRUE(fs::exists(dir / "timings.csv"));
  }
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["config"]["method"], "fedavg");
  EXPECT_EQ(manifest["config"]["rounds"], "2");
  EXPECT_TRUE(manifest.contains("constants"));
  EXPECT_TRUE(manifest.contains("version"));

  const Summary s = read_summary(out);
  EXPECT_EQ(s.finals, (std::vector<double>{outcomes[0].final_acc, outcomes[1].final_acc}));
  EXPECT_EQ(s.mean, (outcomes[0].final_acc + outcomes[1].final_acc) / 2.0);
  EXPECT_NE(slurp(out / "summary.csv").find("fedavg,sbm:default,mean,"), std::string::npos);
}

TEST(RunExperiment, ZeroRoundsEqualsStageOneAblation) {
  ExperimentConfig full = tiny_experiment(scratch("full"));
  full.rounds = 0;
  ExperimentConfig ablation = tiny_experiment(scratch("ablation"));
  ablation.method = "fedgm-stage1";
  ablation.rounds = 5;
  const auto a = run_experiment(full, {});
  const auto b = run_experiment(ablation, {});
  const Summary sa = read_summary(full.output);
  const Summary sb = read_summary(ablation.output);
  EXPECT_EQ(sa.finals, sb.finals);
  EXPECT_EQ(sa.mean, sb.mean);
  EXPECT_EQ(sa.std, sb.std);
  EXPECT_EQ(slurp(fs::path(full.output) / "seed_1" / "metrics.csv"),
            slurp(fs::path(ablation.output) / "seed_1" / "metrics.csv"));
}

TEST(RunExperiment, RefusesExistingOutputUnlessForced) {
  const fs::path out = scratch("force");
  ExperimentConfig c = tiny_experiment(out);
  c.method = "local-only";
  c.seeds = {1};
  run_experiment(c, {});
  const std::string first = slurp(out / "seed_1" / "metrics.csv");
  std::ofstream(out / "notes.txt") << "keep me\n";
  fs::create_directories(out / "seed_9");
  std::ofstream(out / "seed_9" / "metrics.csv") << "stale\n";

  try {
    run_experiment(c, {});
    FAIL() << "expected a refusal";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("--force"), std::string::npos);
  }
  EXPECT_EQ(slurp(out / "seed_1" / "metrics.csv"), first);

  RunOptions opt;
  opt.force = true;
  run_experiment(c, opt);
  EXPECT_EQ(slurp(out / "seed_1" / "metrics.csv"), first);
  EXPECT_EQ(slurp(out / "notes.txt"), "keep me\n");
  EXPECT_FALSE(fs::exists(out / "seed_9"));
}

TEST(RunExperiment, CsvsAreBitwiseReproducible) {
  ExperimentConfig a = tiny_experiment(scratch("a"));
  ExperimentConfig b = tiny_experiment(scratch("b"));
  run_experiment(a, {});
  RunOptions parallel;
  parallel.workers = 3;
  run_experiment(b, parallel);
  for (const char* seed : {"seed_1", "seed_2"}) {
    const std::string x = slurp(fs::path(a.output) / seed / "metrics.csv");
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, slurp(fs::path(b.output) / seed / "metrics.csv"));
  }
  EXPECT_EQ(slurp(fs::path(a.output) / "summary.json"), slurp(fs::path(b.output) / "summary.json"));
  EXPECT_EQ(slurp(fs::path(a.output) / "summary.csv"), slurp(fs::path(b.output) / "summary.csv"));
  // The manifests differ only in the output path.
  auto ma = nlohmann::json::parse(slurp(fs::path(a.output) / "manifest.json"));
  auto mb = nlohmann::json::parse(slurp(fs::path(b.output) / "manifest.json"));
  ma["config"].erase("output");
  mb["config"].erase("output");
  EXPECT_EQ(ma, mb);
}

TEST(RunExperiment, ValidatesBeforeTouchingDisk) {
  const fs::path out = scratch("invalid");
  ExperimentConfig c = tiny_experiment(out);
  c.ratio = 0.0;
  EXPECT_THROW(run_experiment(c, {}), ConfigError);
  EXPECT_FALSE(fs::exists(out));
}

void write_summary(const fs::path& dir, const std::string& method, const std::string& dataset,
                   std::vector<double> finals) {
  fs::create_directories(dir);
  std::vector<SeedOutcome> o;
  for (std::size_t i = 0; i < finals.size(); ++i) o.push_back({i + 1, finals[i], {}});
  const Summary s = summarize(method, dataset, o);
  nlohmann::json j{{"method", s.method}, {"dataset", s.dataset}, {"seeds", s.seeds},
                   {"final_acc", s.finals}, {"mean", s.mean}, {"std", s.std}};
  std::ofstream(dir / "summary.json") << j.dump();
}

TEST(Compare, IdenticalRunsHaveZeroGap) {
  const fs::path root = scratch("cmp");
  write_summary(root / "a", "fedgm", "sbm:default", {0.5, 0.6, 0.7});
  write_summary(root / "b", "fedgm", "sbm:default", {0.5, 0.6, 0.7});
  const auto rows = compare_runs({root / "a", root / "b"});
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.gap_to_best, 0.0);
    EXPECT_TRUE(r.best);
  }
}

TEST(Compare, TwoMethodsGiveTwoRows) {
  const fs::path root = scratch("cmp");
  write_summary(root / "gm", "fedgm", "sbm:default", {0.7, 0.72, 0.71});
  write_summary(root / "avg", "fedavg", "sbm:default", {0.6, 0.62, 0.64});
  const auto rows = compare_runs({root / "avg", root / "gm"});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].summary.method, "fedgm");
  EXPECT_TRUE(rows[0].best);
  EXPECT_FALSE(rows[1].best);
  EXPECT_NEAR(rows[1].gap_to_best, 0.62 - 0.71, 1e-12);

  std::ostringstream text, csv;
  write_compare_text(text, rows);
  write_compare_csv(csv, rows);
  EXPECT_NE(text.str().find("fedgm"), std::string::npos);
  EXPECT_NE(text.str().find("*"), std::string::npos);
  std::istringstream lines(csv.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 3);
}

TEST(Compare, OrderMatchesManualSort) {
  const fs::path root = scratch("cmp");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.3, 0.9);
  std::vector<fs::path> dirs;
  std::vector<std::pair<double, std::string>> expected;
  for (int i = 0; i < 8; ++i) {
    const fs::path d = root / ("run" + std::to_string(i));
    const std::vector<double> f{u(rng), u(rng), u(rng)};
    write_summary(d, "m" + std::to_string(i), "sbm:default", f);
    dirs.push_back(d);
    expected.emplace_back(read_summary(d).mean, d.string());
  }
  std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const auto rows = compare_runs(dirs);
  ASSERT_EQ(rows.size(), expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].dir, expected[i].second);
    EXPECT_NEAR(rows[i].gap_to_best, expected[i].first - expected[0].first, 1e-15);
  }
}

TEST(Compare, BestIsPerDataset) {
  const fs::path root = scratch("cmp");
  write_summary(root / "a", "fedgm", "cora", {0.8});
  write_summary(root / "b", "fedavg", "cora", {0.7});
  write_summary(root / "c", "fedavg", "sbm:default", {0.6});
  const auto rows = compare_runs({root / "a", root / "b", root / "c"});
  int best = 0;
  for (const auto& r : rows) best += r.best;
  EXPECT_EQ(best, 2);
}

TEST(Compare, MissingSummaryNamesTheDirectory) {
  const fs::path root = scratch("cmp");
  write_summary(root / "a", "fedgm", "sbm:default", {0.8});
  fs::create_directories(root / "empty");
  try {
    compare_runs({root / "a", root / "empty"});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find((root / "empty").string()), std::string::npos);
  }
  EXPECT_THROW(compare_runs({root / "a"}), ConfigError);
}

void write_citation_fixture(const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream content(dir / "toy.content");
  // id, 4 binary features, label; labels chosen so sorting changes their order.
  const char* labels[] = {"Theory", "Agents", "Theory", "ML", "Agents", "ML", "Theory", "Agents", "ML", "Theory"};
  for (int i = 0; i < 10; ++i) {
    content << "p" << i * 7;
    for (int j = 0; j < 4; ++j) content << "\t" << ((i + j) % 3 == 0 ? 1 : 0);
    content << "\t" << labels[i] << "\n";
  }
  std::ofstream cites(dir / "toy.cites");
  cites << "p0\tp7\n"
        << "p7\tp0\n"    // reverse duplicate
        << "p14\tp14\n"  // self citation
        << "p21\tp28\n"
        << "p35\tmissing\n"
        << "ghost\tp0\n"
        << "p63\tp56\n"
        << "p0\tp63\n";
}

TEST(Convert, CitationFixture) {
  const fs::path dir = scratch("raw");
  write_citation_fixture(dir);
  const fs::path out = dir / "toy.graph";
  const ConvertStats st = convert_citation(dir, "toy", out, 3);
  EXPECT_EQ(st.nodes, 10);
  EXPECT_EQ(st.features, 4);
  EXPECT_EQ(st.classes, 3);
  EXPECT_EQ(st.dropped_edges, 2);
  EXPECT_EQ(st.edges, 4);
  EXPECT_EQ(st.class_names, (std::vector<std::string>{"Agents", "ML", "Theory"}));

  const Graph g = load_graph(out).graph;
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.num_nodes, 10);
  EXPECT_EQ(g.num_classes, 3);
  EXPECT_EQ(g.labels[0], 2);
  EXPECT_EQ(g.labels[1], 0);
  EXPECT_EQ(g.labels[3], 1);
  EXPECT_EQ(g.features(0, 0), 1.0);
  EXPECT_EQ(g.features(0, 1), 0.0);
  EXPECT_EQ(g.edges, (std::vector<std::pair<int, int>>{{0, 1}, {0, 9}, {3, 4}, {8, 9}}));
  int train = 0;
  for (auto s : g.split) train += s == Split::kTrain;
  EXPECT_GT(train, 0);
}

TEST(Convert, DeterministicInTheSplitSeed) {
  const fs::path dir = scratch("raw");
  write_citation_fixture(dir);
  convert_citation(dir, "toy", dir / "a.graph", 5);
  convert_citation(dir, "toy", dir / "b.graph", 5);
  EXPECT_EQ(slurp(dir / "a.graph"), slurp(dir / "b.graph"));
}

TEST(Convert, Errors) {
  const fs::path dir = scratch("raw");
  write_citation_fixture(dir);
  EXPECT_THROW(convert_citation(dir, "cora", dir / "x.graph"), Error);
  fs::remove(dir / "toy.cites");
  EXPECT_THROW(convert_citation(dir, "toy", dir / "x.graph"), Error);
  write_citation_fixture(dir);
  std::ofstream(dir / "toy.content", std::ios::app) << "p99\t1\t0\tML\n";
  EXPECT_THROW(convert_citation(dir, "toy", dir / "x.graph"), ParseError);
}

}  // namespace
}  // namespace fedgm
