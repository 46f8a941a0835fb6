#include "fedgm/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "fedgm/partition.hpp"
#include "fedgm/random.hpp"
#include "fedgm/sbm.hpp"

#ifndef FEDGM_VERSION
#define FEDGM_VERSION "unknown"
#endif

namespace fedgm {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kTrainFraction = 0.6;
constexpr double kValFraction = 0.2;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("invalid value for " + key + ": '" + text + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_number<std::uint64_t>("seeds", trim(item)));
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field number_field(T ExperimentConfig::*member, const char* key) {
  return {[member, key](ExperimentConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

Field string_field(std::string ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) { c.*member = v; },
          [member](const ExperimentConfig& c) { return c.*member; }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"dataset", string_field(&ExperimentConfig::dataset)},
      {"clients", number_field(&ExperimentConfig::clients, "clients")},
      {"partition_seed", number_field(&ExperimentConfig::partition_seed, "partition_seed")},
      {"method", string_field(&ExperimentConfig::method)},
      {"ratio", number_field(&ExperimentConfig::ratio, "ratio")},
      {"stage1_epochs", number_field(&ExperimentConfig::stage1_epochs, "stage1_epochs")},
      {"rounds", number_field(&ExperimentConfig::rounds, "rounds")},
      {"steps_per_round", number_field(&ExperimentConfig::steps_per_round, "steps_per_round")},
      {"lr_gnn", number_field(&ExperimentConfig::lr_gnn, "lr_gnn")},
      {"lr_feat", number_field(&ExperimentConfig::lr_feat, "lr_feat")},
      {"lr_x", number_field(&ExperimentConfig::lr_x, "lr_x")},
      {"lr_phi", number_field(&ExperimentConfig::lr_phi, "lr_phi")},
      {"weight_decay", number_field(&ExperimentConfig::weight_decay, "weight_decay")},
      {"hidden", number_field(&ExperimentConfig::hidden, "hidden")},
      {"mlp_hidden", number_field(&ExperimentConfig::mlp_hidden, "mlp_hidden")},
      {"final_epochs", number_field(&ExperimentConfig::final_epochs, "final_epochs")},
      {"local_epochs", number_field(&ExperimentConfig::local_epochs, "local_epochs")},
      {"probe_every", number_field(&ExperimentConfig::probe_every, "probe_every")},
      {"probe_epochs", number_field(&ExperimentConfig::probe_epochs, "probe_epochs")},
      {"delta", number_field(&ExperimentConfig::delta, "delta")},
      {"class_weights", string_field(&ExperimentConfig::class_weights)},
      {"distance", string_field(&ExperimentConfig::distance)},
      {"optimizer", string_field(&ExperimentConfig::optimizer)},
      {"condense_optimizer", string_field(&ExperimentConfig::condense_optimizer)},
      {"seeds",
       {[](ExperimentConfig& c, const std::string& v) { c.seeds = parse_seeds(v); },
        [](const ExperimentConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.seeds.size(); ++i) s += (i ? "," : "") + std::to_string(c.seeds[i]);
          return s;
        }}},
      {"output", string_field(&ExperimentConfig::output)},
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return &f;
  }
  return nullptr;
}

OptimizerKind optimizer_of(const std::string& name) {
  return name == "sgd" ? OptimizerKind::kSgd : OptimizerKind::kAdam;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, f] : fields()) k.push_back(key);
    return k;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key '" + key + "'");
  f->set(cfg, value);
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::set<std::string> seen;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    try {
      set_config_value(base, key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return parse_config(in, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  static const std::set<std::string> methods{"fedgm", "fedgm-stage1", "fedavg", "local-only"};
  require(methods.count(c.method) == 1, "method must be one of fedgm, fedgm-stage1, fedavg, local-only (got '" +
                                            c.method + "')");
  require(c.clients >= 1, "clients must be >= 1");
  require(c.ratio > 0.0 && c.ratio <= 1.0, "ratio must lie in (0, 1]");
  for (const auto& [name, v] : {std::pair{"lr_gnn", c.lr_gnn}, {"lr_feat", c.lr_feat}, {"lr_x", c.lr_x}, {"lr_phi", c.lr_phi}}) {
    require(v > 0.0, std::string(name) + " must be > 0");
  }
  require(c.weight_decay >= 0.0, "weight_decay must be >= 0");
  require(c.stage1_epochs >= 0 && c.rounds >= 0 && c.steps_per_round >= 0 && c.final_epochs >= 0 &&
              c.local_epochs >= 0 && c.probe_every >= 0 && c.probe_epochs >= 0,
          "epoch, round and step counts must be >= 0");
  require(c.hidden >= 1 && c.mlp_hidden >= 1, "hidden sizes must be >= 1");
  require(c.delta >= 0.0 && c.delta <= 1.0, "delta must lie in [0, 1]");
  require(c.class_weights == "condensed" || c.class_weights == "real", "class_weights must be condensed or real");
  require(c.distance == "cosine" || c.distance == "l2", "distance must be cosine or l2");
  require(c.optimizer == "adam" || c.optimizer == "sgd", "optimizer must be adam or sgd");
  require(c.condense_optimizer == "adam" || c.condense_optimizer == "sgd", "condense_optimizer must be adam or sgd");
  require(!c.seeds.empty(), "seeds must list at least one seed");
  require(std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() == c.seeds.size(), "seeds must be distinct");
  require(!c.output.empty(), "output must be set");
  require(!c.dataset.empty(), "dataset must be set");
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, f] : fields()) out.emplace_back(key, f.get(cfg));
  return out;
}

FedConfig to_fed_config(const ExperimentConfig& c, std::uint64_t seed, int workers) {
  FedConfig f;
  f.condense.ratio = c.ratio;
  f.condense.epochs = c.stage1_epochs;
  f.condense.lr_features = c.lr_x;
  f.condense.lr_phi = c.lr_phi;
  f.condense.gcn_hidden = c.hidden;
  f.condense.mlp_hidden = c.mlp_hidden;
  f.condense.distance = c.distance == "l2" ? DistanceKind::kSquaredL2 : DistanceKind::kCosine;
  f.condense.optimizer = optimizer_of(c.condense_optimizer);
  f.rounds = c.method == "fedgm-stage1" ? 0 : c.rounds;
  f.steps_per_round = c.steps_per_round;
  f.lr_feat = c.lr_feat;
  f.train.epochs = c.final_epochs;
  f.train.lr = c.lr_gnn;
  f.train.weight_decay = c.weight_decay;
  f.train.hidden = c.hidden;
  f.train.optimizer = optimizer_of(c.optimizer);
  f.local_epochs = c.local_epochs;
  f.delta = c.delta;
  f.probe_every = c.probe_every;
  f.probe_epochs = c.probe_epochs;
  f.weight_by_real_counts = c.class_weights == "real";
  f.seed = seed;
  f.workers = workers;
  return f;
}

Graph prepare_dataset(const ExperimentConfig& cfg) {
  const std::string& d = cfg.dataset;
  const std::string sbm = "sbm:default";
  if (d.rfind(sbm, 0) == 0) {
    std::uint64_t gen_seed = 0;
    if (d.size() > sbm.size()) {
      if (d[sbm.size()] != '@') throw ConfigError("unknown dataset '" + d + "'");
      gen_seed = parse_number<std::uint64_t>("dataset", d.substr(sbm.size() + 1));
    }
    return sbm_generate(SbmSpec::defaults(), gen_seed).graph;
  }
  if (d.rfind("sbm:", 0) == 0) throw ConfigError("unknown dataset '" + d + "'");
  if (!fs::exists(d)) throw ConfigError("dataset file not found: " + d);
  return load_graph(d).graph;
}

std::vector<ClientState> make_clients(const Graph& g, int k, std::uint64_t partition_seed) {
  const auto members = louvain_partition(g, k, partition_seed).members();
  std::vector<ClientState> clients;
  for (int i = 0; i < k; ++i) {
    Graph sub = induce_subgraph(g, members[static_cast<std::size_t>(i)]);
    stratified_split(sub, kTrainFraction, kValFraction,
                     derive_seed(partition_seed, {stream::kSplit, static_cast<std::uint64_t>(i)}));
    clients.push_back(ClientState::make(i, std::move(sub)));
  }
  return clients;
}

RunResult run_method(const std::string& method, std::span<const ClientState> clients, const FedConfig& cfg,
                     const RowSink& sink) {
  if (method == "fedgm") return run_fedgm(clients, cfg, sink);
  if (method == "fedgm-stage1") {
    FedConfig ablation = cfg;
    ablation.rounds = 0;
    return run_fedgm(clients, ablation, sink);
  }
  if (method == "fedavg") return run_fedavg(clients, cfg, sink);
  if (method == "local-only") return run_local_only(clients, cfg, sink);
  throw ConfigError("unknown method '" + method + "'");
}

std::string metrics_header() {
  return "round,phase,match_loss,overall_acc,client_id,client_acc,msg_up_bytes,msg_down_bytes";
}

std::string format_metrics_row(const MetricsRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string s = std::to_string(r.round) + "," + r.phase + "," + opt(r.match_loss) + "," + opt(r.overall_acc) + ",";
  s += r.client_id ? std::to_string(*r.client_id) : std::string();
  s += "," + opt(r.client_acc) + "," + std::to_string(r.msg_up_bytes) + "," + std::to_string(r.msg_down_bytes);
  return s;
}

Summary summarize(const std::string& method, const std::string& dataset, const std::vector<SeedOutcome>& outcomes) {
  Summary s;
  s.method = method;
  s.dataset = dataset;
  for (const auto& o : outcomes) {
    s.seeds.push_back(o.seed);
    s.finals.push_back(o.final_acc);
  }
  const double n = static_cast<double>(s.finals.size());
  if (n > 0) s.mean = std::accumulate(s.finals.begin(), s.finals.end(), 0.0) / n;
  if (n > 1) {
    double ss = 0.0;
    for (double v : s.finals) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1));
  }
  return s;
}

int workers_from_env() {
  const char* v = std::getenv("FEDGM_WORKERS");
  if (!v || !*v) return 1;
  const int w = parse_number<int>("FEDGM_WORKERS", v);
  if (w < 1) throw ConfigError("FEDGM_WORKERS must be >= 1");
  return w;
}

void check_accounting(const std::string& method, const MessageLog& log, int clients, int rounds) {
  auto expect = [&](const char* kind, Direction d, std::size_t want) {
    const std::size_t got = log.count(kind, d);
    if (got != want) {
      throw Error("message accounting: expected " + std::to_string(want) + " '" + kind + "' messages, logged " +
                  std::to_string(got));
    }
  };
  const auto k = static_cast<std::size_t>(clients);
  const auto t = static_cast<std::size_t>(rounds);
  if (method == "fedgm" || method == "fedgm-stage1") {
    const std::size_t r = method == "fedgm" ? t : 0;
    expect("condensed_graph", Direction::kUp, k);
    expect("class_gradients", Direction::kUp, r * k);
    expect("theta", Direction::kDown, r * k);
    expect("params", Direction::kUp, 0);
  } else if (method == "fedavg") {
    expect("params", Direction::kUp, t * k);
    expect("params", Direction::kDown, t * k);
    expect("condensed_graph", Direction::kUp, 0);
  } else if (!log.messages().empty()) {
    throw Error("message accounting: local-only run logged messages");
  }
}

namespace {

json summary_json(const Summary& s) {
  return json{{"method", s.method}, {"dataset", s.dataset}, {"seeds", s.seeds},
              {"final_acc", s.finals}, {"mean", s.mean}, {"std", s.std}};
}

json manifest_json(const ExperimentConfig& cfg) {
  json config = json::object();
  for (const auto& [k, v] : config_entries(cfg)) config[k] = v;
  return json{
      {"version", FEDGM_VERSION},
      {"config", config},
      {"seeds", cfg.seeds},
      {"constants",
       {{"gcn", "2 layers, no bias, ReLU hidden, linear output, dropout 0"},
        {"gcn_init", "glorot uniform"},
        {"mlp_adjacency", "3 affine layers, ReLU hidden, symmetrized sigmoid, zero bias init"},
        {"adjacency_normalization", "D^-1/2 (A + I) D^-1/2"},
        {"threshold_rule", "entries strictly below delta are zeroed"},
        {"distance_fallback", "squared L2 for columns with norm^2 < 1e-24"},
        {"stage1_alternation", "odd epochs update X', even epochs update phi"},
        {"stage1_checkpoint", "lowest trailing average over the final 10% of epochs, window min(50, E/20)"},
        {"stage2_theta", "resampled once per round"},
        {"fedavg_weights", "client training-node counts"},
        {"evaluation", "test-count weighted mean over clients"},
        {"partition", "Louvain, exact-K merge/split"},
        {"split", "60/20/20 stratified per class within each client"}}},
  };
}

// Only the files this harness writes are removed on --force.
void clear_previous(const fs::path& out) {
  for (const char* f : {"manifest.json", "summary.json", "summary.csv"}) fs::remove(out / f);
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("seed_", 0) == 0) fs::remove_all(entry.path());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::vector<SeedOutcome> run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  validate(cfg);
  const fs::path out(cfg.output);
  if (fs::exists(out)) {
    if (!opt.force) throw ConfigError("output directory " + out.string() + " exists; pass --force to overwrite");
    if (!fs::is_directory(out)) throw ConfigError("output path " + out.string() + " is not a directory");
    clear_previous(out);
  }
  fs::create_directories(out);
  write_text(out / "manifest.json", manifest_json(cfg).dump(2) + "\n");

  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };

  const auto t0 = clock::now();
  const Graph g = [&] {
    try {
      return prepare_dataset(cfg);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw PhaseError("dataset", e.what());
    }
  }();
  const auto t1 = clock::now();
  const auto clients = [&] {
    try {
      return make_clients(g, cfg.clients, cfg.partition_seed);
    } catch (const std::exception& e) {
      throw PhaseError("partition", e.what());
    }
  }();
  const auto t2 = clock::now();
  if (opt.log) {
    *opt.log << "dataset " << cfg.dataset << ": N=" << g.num_nodes << " D=" << g.num_features() << " C=" << g.num_classes
             << " edges=" << g.edges.size() << ", " << cfg.clients << " clients\n";
  }

  std::vector<SeedOutcome> outcomes;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = out / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    std::ofstream csv(dir / "metrics.csv");
    std::ofstream timings(dir / "timings.csv");
    if (!csv || !timings) throw Error("cannot write into " + dir.string());
    csv << metrics_header() << "\n";
    timings << "phase,round,seconds\n";
    timings << "dataset,0," << format_double(seconds(t0, t1)) << "\n";
    timings << "partition,0," << format_double(seconds(t1, t2)) << "\n";

    auto mark = clock::now();
    std::pair<std::string, int> group{"", -1};
    const RowSink sink = [&](const MetricsRow& r) {
      csv << format_metrics_row(r) << "\n";
      csv.flush();
      if (std::pair{r.phase, r.round} != group) {
        group = {r.phase, r.round};
        const auto now = clock::now();
        timings << r.phase << "," << r.round << "," << format_double(seconds(mark, now)) << "\n";
        mark = now;
      }
    };
    const FedConfig fed = to_fed_config(cfg, seed, opt.workers);
    SeedOutcome o;
    o.seed = seed;
    o.result = run_method(cfg.method, clients, fed, sink);
    o.final_acc = o.result.final_eval.overall;
    check_accounting(cfg.method, o.result.log, cfg.clients, fed.rounds);
    if (opt.log) {
      *opt.log << cfg.method << " seed " << seed << ": final accuracy " << std::fixed << std::setprecision(4)
               << o.final_acc << std::defaultfloat << "\n";
      for (int id : o.result.final_eval.empty_clients) *opt.log << "  client " << id << " has no test nodes\n";
    }
    outcomes.push_back(std::move(o));
  }

  const Summary s = summarize(cfg.method, cfg.dataset, outcomes);
  write_text(out / "summary.json", summary_json(s).dump(2) + "\n");
  std::ostringstream csv;
  csv << "method,dataset,seed,final_acc\n";
  for (std::size_t i = 0; i < s.seeds.size(); ++i) {
    csv << s.method << "," << s.dataset << "," << s.seeds[i] << "," << format_double(s.finals[i]) << "\n";
  }
  csv << s.method << "," << s.dataset << ",mean," << format_double(s.mean) << "\n";
  csv << s.method << "," << s.dataset << ",std," << format_double(s.std) << "\n";
  write_text(out / "summary.csv", csv.str());
  return outcomes;
}

Summary read_summary(const fs::path& dir) {
  const fs::path file = dir / "summary.json";
  std::ifstream in(file);
  if (!in) throw Error("no summary.json in run directory " + dir.string());
  try {
    const json j = json::parse(in);
    Summary s;
    s.method = j.at("method").get<std::string>();
    s.dataset = j.at("dataset").get<std::string>();
    s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    s.finals = j.at("final_acc").get<std::vector<double>>();
    s.mean = j.at("mean").get<double>();
    s.std = j.at("std").get<double>();
    return s;
  } catch (const json::exception& e) {
    throw Error("malformed summary.json in " + dir.string() + ": " + e.what());
  }
}

std::vector<CompareRow> compare_runs(const std::vector<fs::path>& dirs) {
  if (dirs.size() < 2) throw ConfigError("compare needs at least two run directories");
  std::vector<CompareRow> rows;
  for (const auto& d : dirs) rows.push_back({d.string(), read_summary(d)});
  std::unordered_map<std::string, double> best;
  for (const auto& r : rows) {
    auto it = best.find(r.summary.dataset);
    if (it == best.end() || r.summary.mean > it->second) best[r.summary.dataset] = r.summary.mean;
  }
  for (auto& r : rows) {
    r.gap_to_best = r.summary.mean - best[r.summary.dataset];
    r.best = r.gap_to_best == 0.0;
  }
  std::stable_sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
    if (a.summary.dataset != b.summary.dataset) return a.summary.dataset < b.summary.dataset;
    return a.summary.mean > b.summary.mean;
  });
  return rows;
}

void write_compare_text(std::ostream& out, const std::vector<CompareRow>& rows) {
  std::vector<std::string> datasets;
  std::vector<std::string> labels;
  for (const auto& r : rows) {
    if (std::find(datasets.begin(), datasets.end(), r.summary.dataset) == datasets.end()) datasets.push_back(r.summary.dataset);
    const std::string label = r.summary.method + " (" + r.dir + ")";
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
  }
  auto cell = [](const CompareRow& r) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * r.summary.mean << " ± " << 100.0 * r.summary.std;
    if (r.best) s << " *";
    return s.str();
  };
  std::size_t w0 = 6;
  for (const auto& l : labels) w0 = std::max(w0, l.size());
  out << std::left << std::setw(static_cast<int>(w0)) << "method";
  for (const auto& d : datasets) out << "  " << std::setw(18) << d;
  out << "  gap\n";
  for (const auto& l : labels) {
    out << std::setw(static_cast<int>(w0)) << l;
    double gap = 0.0;
    for (const auto& d : datasets) {
      std::string text = "-";
      for (const auto& r : rows) {
        if (r.summary.dataset == d && r.summary.method + " (" + r.dir + ")" == l) {
          text = cell(r);
          gap = std::min(gap, r.gap_to_best);
        }
      }
      out << "  " << std::setw(18) << text;
    }
    out << "  " << std::fixed << std::setprecision(2) << 100.0 * gap << std::defaultfloat << "\n";
  }
  out << std::right << "(* best per dataset; accuracy in %, mean ± std over seeds; gap to best in points)\n";
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "run_dir,method,dataset,seeds,mean,std,gap_to_best,best\n";
  for (const auto& r : rows) {
    out << r.dir << "," << r.summary.method << "," << r.summary.dataset << "," << r.summary.seeds.size() << ","
        << format_double(r.summary.mean) << "," << format_double(r.summary.std) << "," << format_double(r.gap_to_best)
        << "," << (r.best ? 1 : 0) << "\n";
  }
}

ConvertStats convert_citation(const fs::path& raw_dir, const std::string& name, const fs::path& out_path,
                              std::uint64_t split_seed) {
  const fs::path content_path = raw_dir / (name + ".content");
  const fs::path cites_path = raw_dir / (name + ".cites");
  std::ifstream content(content_path);
  if (!content) throw Error("missing file " + content_path.string());
  std::ifstream cites(cites_path);
  if (!cites) throw Error("missing file " + cites_path.string());

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> label_names;
  int line_no = 0;
  int width = -1;
  for (std::string line; std::getline(content, line);) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 3) throw ParseError(content_path.string() + ": expected id, features and label", line_no);
    const int d = static_cast<int>(tok.size()) - 2;
    if (width >= 0 && d != width) {
      throw ParseError(content_path.string() + ": " + std::to_string(d) + " features, expected " + std::to_string(width),
                       line_no);
    }
    width = d;
    std::vector<double> row(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      double v = 0.0;
      const std::string& t = tok[static_cast<std::size_t>(j) + 1];
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ParseError(content_path.string() + ": bad feature value '" + t + "'", line_no);
      }
      row[static_cast<std::size_t>(j)] = v;
    }
    ids.push_back(tok.front());
    label_names.push_back(tok.back());
    rows.push_back(std::move(row));
  }
  if (ids.empty()) throw Error(content_path.string() + " holds no nodes");

  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!index.emplace(ids[i], static_cast<int>(i)).second) {
      throw Error(content_path.string() + ": duplicate paper id " + ids[i]);
    }
  }
  ConvertStats stats;
  stats.class_names = label_names;
  std::sort(stats.class_names.begin(), stats.class_names.end());
  stats.class_names.erase(std::unique(stats.class_names.begin(), stats.class_names.end()), stats.class_names.end());

  Graph g;
  g.num_nodes = static_cast<int>(ids.size());
  g.num_classes = static_cast<int>(stats.class_names.size());
  g.features.resize(g.num_nodes, width);
  for (int i = 0; i < g.num_nodes; ++i) {
    for (int j = 0; j < width; ++j) g.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    const auto it = std::lower_bound(stats.class_names.begin(), stats.class_names.end(), label_names[static_cast<std::size_t>(i)]);
    g.labels.push_back(static_cast<int>(it - stats.class_names.begin()));
  }

  std::vector<std::pair<int, int>> raw;
  for (std::string line; std::getline(cites, line);) {
    std::istringstream ss(line);
    std::string a, b;
    if (!(ss >> a >> b)) continue;
    const auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      ++stats.dropped_edges;
      continue;
    }
    raw.emplace_back(std::min(ia->second, ib->second), std::max(ia->second, ib->second));
  }
  g.edges = canonical_edges(std::move(raw));
  g.split.assign(static_cast<std::size_t>(g.num_nodes), Split::kNone);
  stratified_split(g, kTrainFraction, kValFraction, split_seed);
  g.validate();
  save_graph(out_path, g);

  stats.nodes = g.num_nodes;
  stats.features = width;
  stats.classes = g.num_classes;
  stats.edges = static_cast<int>(g.edges.size());
  return stats;
}

}  // namespace fedgm
