#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "enc/ablation.hpp"
#include "enc/dataset.hpp"
#include "enc/graph.hpp"
#include "enc/presets.hpp"
#include "enc/train.hpp"

namespace enc::cli {

namespace fs = std::filesystem;

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits = 4) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Flags shared by the commands that train models.
struct RunFlags {
  std::string data = "cora";
  std::string split = "public";
  std::string backbone = "gcn";
  int layers = 2;
  int channels = 64;
  double dropout = 0.5;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double lambda = 2.0;
  double sigma = 10.0;
  double lr_gnn = 0.01;
  double lr_oc = 0.01;
  double wd_gnn = 5e-4;
  double wd_oc = 5e-4;
  std::string seeds = "0";
  std::string preset = "none";
  std::string out = "runs";
  int jobs = 1;
  int max_epochs = 1500;
  int patience = 100;
  std::string partition = "random";
  std::string tv = "edge-aware";
  double preg_weight = 0.0;
  int heads = 1;

  std::map<std::string, CLI::Option*> options;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  auto& o = f.options;
  o["data"] = app->add_option("--data", f.data,
                              "Canonical dataset directory; a relative path not found as given is looked up under "
                              "$ENC_DATA_DIR");
  o["split"] = app->add_option("--split", f.split,
                               "Split name: public, random, full, geom (geom-<seed mod 10>), geom-<i> or any "
                               "split-<name>.tsv; a preset supplies its own default");
  o["backbone"] = app->add_option("--backbone", f.backbone, "GNN layer family")->check(CLI::IsMember({"gcn", "gat", "gcnii"}));
  o["layers"] = app->add_option("--layers", f.layers, "Number of GNN layers L")->check(CLI::PositiveNumber);
  o["channels"] = app->add_option("--channels", f.channels, "Hidden channels c")->check(CLI::PositiveNumber);
  o["dropout"] = app->add_option("--dropout", f.dropout, "Dropout probability p")->check(CLI::Range(0.0, 0.999999));
  o["alpha"] = app->add_option("--alpha", f.alpha, "Weight of the mutual-information loss");
  o["beta"] = app->add_option("--beta", f.beta, "Weight of the total-variation loss");
  o["gamma"] = app->add_option("--gamma", f.gamma, "Weight of the cross-validating-gradients loss");
  o["lambda"] = app->add_option("--lambda", f.lambda, "Class-balance factor inside the MI loss");
  o["sigma"] = app->add_option("--sigma", f.sigma, "Bandwidth of the edge-aware TV boundary factor");
  o["lr_gnn"] = app->add_option("--lr-gnn", f.lr_gnn, "Learning rate of the GNN layers");
  o["lr_oc"] = app->add_option("--lr-oc", f.lr_oc, "Learning rate of the opening/closing layers");
  o["wd_gnn"] = app->add_option("--wd-gnn", f.wd_gnn, "L2 weight decay of the GNN layers");
  o["wd_oc"] = app->add_option("--wd-oc", f.wd_oc, "L2 weight decay of the opening/closing layers");
  o["seeds"] = app->add_option("--seeds", f.seeds, "Seed list, e.g. 0,1,2 or 0-4");
  o["preset"] = app->add_option("--preset", f.preset,
                                "Published hyperparameter row (see `enc presets`); explicit flags override it");
  o["out"] = app->add_option("--out", f.out, "Output directory");
  o["jobs"] = app->add_option("--jobs", f.jobs, "Runs executed in parallel (seeds or grid points)")->check(CLI::PositiveNumber);
  o["max_epochs"] = app->add_option("--max-epochs", f.max_epochs, "Epoch limit")->check(CLI::PositiveNumber);
  o["patience"] = app->add_option("--patience", f.patience, "Early-stopping patience on val accuracy")->check(CLI::PositiveNumber);
  o["partition"] = app->add_option("--partition", f.partition, "CVG partition policy")->check(CLI::IsMember({"random", "fixed"}));
  o["tv"] = app->add_option("--tv", f.tv, "TV variant")->check(CLI::IsMember({"edge-aware", "basic"}));
  o["preg_weight"] = app->add_option("--preg-weight", f.preg_weight, "Weight of the P-reg smoothness term");
  o["heads"] = app->add_option("--heads", f.heads, "GAT attention heads")->check(CLI::PositiveNumber);
}

bool given(const RunFlags& f, const std::string& key) { return f.options.at(key)->count() > 0; }

struct Resolved {
  Hyperparams hp;
  std::string split;
  std::vector<std::uint64_t> seeds;
  fs::path data;
};

fs::path resolve_data_path(const std::string& data) {
  const fs::path p(data);
  if (fs::is_directory(p)) return p;
  if (p.is_relative()) {
    if (const char* root = std::getenv("ENC_DATA_DIR"); root != nullptr && *root) {
      const fs::path q = fs::path(root) / p;
      if (fs::is_directory(q)) return q;
    }
  }
  throw ConfigError("dataset directory not found: " + data +
                    (std::getenv("ENC_DATA_DIR") ? " (also looked under $ENC_DATA_DIR)" : " (ENC_DATA_DIR is not set)"));
}

Resolved resolve(const RunFlags& f) {
  Resolved r;
  const bool preset = f.preset != "none";
  if (preset) {
    const Preset& p = find_preset(f.preset);
    r.hp = p.hp;
    r.split = p.split;
  } else {
    r.split = f.split;
  }
  const auto apply = [&](const std::string& key) { return !preset || given(f, key); };
  if (apply("split")) r.split = f.split;
  if (apply("backbone")) r.hp.backbone = parse_backbone(f.backbone);
  if (apply("layers")) r.hp.layers = f.layers;
  if (apply("channels")) r.hp.channels = f.channels;
  if (apply("dropout")) r.hp.dropout = f.dropout;
  if (apply("alpha")) r.hp.alpha = f.alpha;
  if (apply("beta")) r.hp.beta = f.beta;
  if (apply("gamma")) r.hp.gamma = f.gamma;
  if (apply("lambda")) r.hp.lambda = f.lambda;
  if (apply("sigma")) r.hp.sigma = f.sigma;
  if (apply("lr_gnn")) r.hp.lr_gnn = f.lr_gnn;
  if (apply("lr_oc")) r.hp.lr_oc = f.lr_oc;
  if (apply("wd_gnn")) r.hp.wd_gnn = f.wd_gnn;
  if (apply("wd_oc")) r.hp.wd_oc = f.wd_oc;
  r.hp.max_epochs = f.max_epochs;
  r.hp.patience = f.patience;
  r.hp.partition = parse_partition_policy(f.partition);
  r.hp.tv_edge_aware = f.tv == "edge-aware";
  r.hp.preg_weight = f.preg_weight;
  r.hp.gat_heads = f.heads;
  r.hp.validate();
  r.seeds = parse_seed_list(f.seeds);
  r.data = resolve_data_path(f.data);
  return r;
}

Dataset load(const fs::path& dir, std::ostream& err) {
  LoadReport report;
  Dataset ds = load_canonical(dir, &report);
  for (const std::string& w : report.warnings) err << "warning: " << w << '\n';
  return ds;
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
}

/// Best-validation parameters of one run.
void write_checkpoint(const fs::path& file, const Dataset& ds, const Hyperparams& hp, const TrainResult& result) {
  Rng rng(0);
  Model model(hp.model_config(ds.num_features(), ds.num_classes), rng);
  model.parameters() = result.best_params;
  std::ofstream os(file);
  model.save(os);
  if (!os) throw ConfigError("cannot write " + file.string());
}

int cmd_train(const RunFlags& f, std::ostream& out, std::ostream& err) {
  const Resolved r = resolve(f);
  const Dataset ds = load(r.data, err);
  for (std::uint64_t s : r.seeds) split_for_seed(ds, r.split, s).validate(ds.num_nodes());

  const fs::path dir(f.out);
  prepare_out(dir);
  write_run_config(dir / "config.txt", r.hp, ds.name, r.split);
  const RepeatedResult res = run_repeated(ds, r.split, r.hp, r.seeds, f.jobs);
  SummaryWriter summary(dir / "summary.csv");
  for (const SeedRun& run : res.runs) {
    const std::string seed = std::to_string(run.seed);
    write_metrics_csv(dir / ("metrics-seed" + seed + ".csv"), run.result);
    write_checkpoint(dir / ("model-seed" + seed + ".ckpt"), ds, r.hp, run.result);
    summary.append(r.hp.config_hash(), run.seed, run.result);
  }
  out << ds.name << ' ' << to_string(r.hp.backbone) << ' ' << r.hp.layers << " test_acc=" << fixed(res.mean_test)
      << " ±" << fixed(res.std_test) << '\n';
  return kExitOk;
}

int cmd_ablate(const RunFlags& f, const std::string& study, std::ostream& out, std::ostream& err) {
  if (std::find(std::begin(kStudies), std::end(kStudies), study) == std::end(kStudies)) {
    throw ConfigError("unknown study '" + study + "' (expected loss-influence, fixed-vs-random, tv-vs-preg or depth-sweep)");
  }
  const Resolved r = resolve(f);
  const Dataset ds = load(r.data, err);
  const fs::path dir(f.out);
  prepare_out(dir);
  write_run_config(dir / ("ablate-" + study + "-config.txt"), r.hp, ds.name, r.split);
  const std::vector<AblationRow> rows = run_study(study, ds, r.split, r.hp, r.seeds, f.jobs);
  write_ablation_csv(dir / ("ablate-" + study + ".csv"), rows);
  out << "| setting | variant | seeds | test acc |\n|---|---|---|---|\n";
  for (const AblationRow& row : rows) {
    out << "| " << row.setting << " | " << row.variant << " | " << row.seeds.size() << " | "
        << fixed(100 * row.mean_test, 1) << " ± " << fixed(100 * row.std_test, 1) << " |\n";
  }
  return kExitOk;
}

std::vector<GridAxis> parse_axes(const std::vector<std::string>& specs) {
  std::vector<GridAxis> axes;
  for (const std::string& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) throw ConfigError("grid axis must be key=v1,v2,...: " + s);
    GridAxis a{s.substr(0, eq), {}};
    std::stringstream in(s.substr(eq + 1));
    std::string v;
    while (std::getline(in, v, ',')) {
      if (!v.empty()) a.values.push_back(v);
    }
    axes.push_back(std::move(a));
  }
  return axes;
}

int cmd_grid(const RunFlags& f, const std::vector<std::string>& axis_specs, std::ostream& out, std::ostream& err) {
  const std::vector<GridAxis> axes = parse_axes(axis_specs);
  if (axes.empty()) throw ConfigError("grid: at least one --axis is required");
  const Resolved r = resolve(f);
  const Dataset ds = load(r.data, err);
  const fs::path dir(f.out);
  prepare_out(dir);
  const GridResult grid = grid_search(ds, r.split, r.hp, axes, r.seeds, f.jobs);
  write_grid_ledger(dir / "grid.csv", grid);
  for (const GridEntry& e : grid.ledger) {
    if (!e.ok) err << "grid point " << e.hp.config_hash() << " failed: " << e.error << '\n';
  }
  out << "best val_acc=" << fixed(grid.best().val_acc) << " test_acc=" << fixed(grid.best().test_acc) << '\n'
      << grid.best().hp.to_kv();
  return kExitOk;
}

int cmd_timing(const RunFlags& f, int epochs, int warmup, std::ostream& out, std::ostream& err) {
  const Resolved r = resolve(f);
  const Dataset ds = load(r.data, err);
  const Split split = split_for_seed(ds, r.split, r.seeds.front());
  const std::string name(to_string(r.hp.backbone));
  Hyperparams base = ce_only(r.hp);
  base.seed = r.seeds.front();
  Hyperparams mitv = base;
  mitv.alpha = r.hp.alpha > 0 ? r.hp.alpha : 1.0;
  mitv.beta = r.hp.beta > 0 ? r.hp.beta : 1.0;
  Hyperparams full = mitv;
  full.gamma = r.hp.gamma > 0 ? r.hp.gamma : 1.0;
  const TimingConfig configs[] = {{name, base}, {name + "+mi+tv", mitv}, {"enc-" + name, full}};
  const std::vector<TimingRow> rows = timing_report(ds, split, configs, epochs, warmup);
  out << "| method | train ms | inference ms | test acc |\n|---|---|---|---|\n";
  for (const TimingRow& row : rows) {
    out << "| " << row.label << " | " << fixed(row.train_ms, 2) << " | " << fixed(row.infer_ms, 2) << " | "
        << fixed(100 * row.test_acc, 1) << " |\n";
  }
  return kExitOk;
}

struct SbmFlags {
  SbmConfig cfg;
  std::string out;
};

int cmd_gen_sbm(const SbmFlags& f, std::ostream& out) {
  const Dataset ds = generate_sbm(f.cfg);
  write_canonical(ds, f.out);
  out << "wrote " << f.out << ": n=" << ds.num_nodes() << " edges=" << ds.graph.num_edges() << " k=" << ds.num_classes
      << " homophily=" << fixed(homophily(ds.graph, ds.labels)) << " (expected " << fixed(sbm_expected_homophily(f.cfg))
      << ")\n";
  return kExitOk;
}

std::map<std::string, std::string> read_kv_file(const fs::path& file) {
  std::map<std::string, std::string> kv;
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_file, std::ostream& out) {
  struct Group {
    std::string dataset, backbone, layers, hash;
    std::vector<double> val, test;
  };
  std::vector<fs::path> files;
  for (const std::string& in : inputs) {
    const fs::path p(in);
    if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().filename() == "summary.csv") files.push_back(e.path());
      }
    } else {
      throw ConfigError("report: no such file or directory: " + in);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Group> groups;
  for (const fs::path& file : files) {
    const auto cfg = read_kv_file(file.parent_path() / "config.txt");
    const auto get = [&](const char* key) { return cfg.count(key) ? cfg.at(key) : std::string("?"); };
    std::ifstream in(file);
    if (!in) throw ConfigError("report: cannot read " + file.string());
    std::string line;
    std::getline(in, line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() != 5) throw ConfigError("report: " + file.string() + ":" + std::to_string(lineno) + ": expected 5 columns");
      auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
        return g.hash == cells[0] && g.dataset == get("dataset");
      });
      if (it == groups.end()) {
        groups.push_back({get("dataset"), get("backbone"), get("layers"), cells[0], {}, {}});
        it = std::prev(groups.end());
      }
      try {
        it->val.push_back(std::stod(cells[2]));
        it->test.push_back(std::stod(cells[3]));
      } catch (const std::exception&) {
        throw ConfigError("report: " + file.string() + ":" + std::to_string(lineno) + ": malformed number");
      }
    }
  }
  std::ostringstream table;
  table << "| dataset | backbone | L | config | seeds | val acc | test acc |\n|---|---|---|---|---|---|---|\n";
  for (const Group& g : groups) {
    const auto [vm, vs] = mean_std(g.val);
    const auto [tm, ts] = mean_std(g.test);
    table << "| " << g.dataset << " | " << g.backbone << " | " << g.layers << " | " << g.hash << " | " << g.test.size()
          << " | " << fixed(100 * vm, 1) << " ± " << fixed(100 * vs, 1) << " | " << fixed(100 * tm, 1) << " ± "
          << fixed(100 * ts, 1) << " |\n";
  }
  if (!out_file.empty()) {
    std::ofstream f(out_file);
    if (!f) throw ConfigError("report: cannot write " + out_file);
    f << table.str();
  }
  out << table.str();
  return kExitOk;
}

int cmd_presets(const std::string& name, bool dump_all, std::ostream& out) {
  if (name != "all") {
    out << dump_preset(find_preset(name));
    return kExitOk;
  }
  for (const Preset& p : presets()) {
    if (dump_all) out << dump_preset(p) << '\n';
    else out << p.name << '\n';
  }
  return kExitOk;
}

/// Command-line state; the App holds pointers into it.
struct Cli {
  CLI::App app{"Node classification with the ENC training objective", "enc"};
  RunFlags train, ablate, grid, timing;
  std::string study;
  std::vector<std::string> axes;
  int timing_epochs = 50;
  int timing_warmup = 5;
  SbmFlags sbm;
  std::vector<std::string> report_inputs{"."};
  std::string report_out;
  std::string preset_name = "all";
  bool preset_dump = false;

  CLI::App* train_cmd = nullptr;
  CLI::App* ablate_cmd = nullptr;
  CLI::App* grid_cmd = nullptr;
  CLI::App* timing_cmd = nullptr;
  CLI::App* sbm_cmd = nullptr;
  CLI::App* report_cmd = nullptr;
  CLI::App* presets_cmd = nullptr;

  Cli() {
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.footer("Exit codes: 0 success, 1 configuration or input error, 2 numerical failure (divergence).");

    train_cmd = app.add_subcommand("train", "Train on a dataset for each seed; writes config.txt, "
                                            "metrics-seed<N>.csv, model-seed<N>.ckpt and summary.csv under --out");
    add_run_flags(train_cmd, train);

    ablate_cmd = app.add_subcommand("ablate", "Run an ablation study and write ablate-<study>.csv under --out");
    ablate_cmd->add_option("--study", study, "loss-influence, fixed-vs-random, tv-vs-preg or depth-sweep")->required();
    add_run_flags(ablate_cmd, ablate);

    grid_cmd = app.add_subcommand("grid", "Exhaustive grid search by mean val accuracy; writes grid.csv under --out");
    grid_cmd->add_option("--axis", axes, "Grid axis key=v1,v2,... over config.txt keys (repeatable)")->required();
    add_run_flags(grid_cmd, grid);

    timing_cmd = app.add_subcommand("timing", "Median per-epoch train and inference time of the backbone, "
                                              "backbone+MI+TV and full ENC (zero weights become 1)");
    timing_cmd->add_option("--epochs", timing_epochs, "Timed epochs")->check(CLI::PositiveNumber);
    timing_cmd->add_option("--warmup", timing_warmup, "Untimed warm-up epochs")->check(CLI::NonNegativeNumber);
    add_run_flags(timing_cmd, timing);

    sbm_cmd = app.add_subcommand("gen-sbm", "Write a stochastic-block-model dataset in canonical format");
    sbm_cmd->add_option("--out", sbm.out, "Output dataset directory")->required();
    sbm_cmd->add_option("--n", sbm.cfg.n, "Number of nodes")->check(CLI::PositiveNumber);
    sbm_cmd->add_option("--k", sbm.cfg.k, "Number of blocks (classes)")->check(CLI::PositiveNumber);
    sbm_cmd->add_option("--p-in", sbm.cfg.p_in, "Edge probability inside a block")->check(CLI::Range(0.0, 1.0));
    sbm_cmd->add_option("--p-out", sbm.cfg.p_out, "Edge probability across blocks")->check(CLI::Range(0.0, 1.0));
    sbm_cmd->add_option("--feature-dim", sbm.cfg.feature_dim, "Feature dimension (>= k)")->check(CLI::PositiveNumber);
    sbm_cmd->add_option("--signal", sbm.cfg.signal_strength, "Class signal added to noise, per node");
    sbm_cmd->add_option("--seed", sbm.cfg.seed, "Generator seed");
    sbm_cmd->add_option("--train-per-class", sbm.cfg.train_per_class, "Public split: labelled nodes per class")
        ->check(CLI::PositiveNumber);
    sbm_cmd->add_option("--n-val", sbm.cfg.n_val, "Public split: validation nodes")->check(CLI::NonNegativeNumber);
    sbm_cmd->add_option("--n-test", sbm.cfg.n_test, "Public split: test nodes")->check(CLI::NonNegativeNumber);

    report_cmd = app.add_subcommand("report", "Aggregate summary.csv files into a markdown table (mean ± std)");
    report_cmd->add_option("inputs", report_inputs, "summary.csv files or directories searched recursively");
    report_cmd->add_option("--out", report_out, "Also write the table to this file (empty: stdout only)");

    presets_cmd = app.add_subcommand("presets", "List the published hyperparameter presets or print one row");
    presets_cmd->add_option("--name", preset_name, "Preset to print, or all to list names");
    presets_cmd->add_flag("--dump", preset_dump, "With --name all, print every row instead of names");
  }

  int dispatch(std::ostream& out, std::ostream& err) {
    if (train_cmd->parsed()) return cmd_train(train, out, err);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate, study, out, err);
    if (grid_cmd->parsed()) return cmd_grid(grid, axes, out, err);
    if (timing_cmd->parsed()) return cmd_timing(timing, timing_epochs, timing_warmup, out, err);
    if (sbm_cmd->parsed()) return cmd_gen_sbm(sbm, out);
    if (report_cmd->parsed()) return cmd_report(report_inputs, report_out, out);
    if (presets_cmd->parsed()) return cmd_presets(preset_name, preset_dump, out);
    return kExitConfig;
  }
};

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  const auto number = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("invalid seed list '" + text + "'");
    }
    return static_cast<std::uint64_t>(std::stoull(s));
  };
  while (std::getline(in, item, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(number(item));
      continue;
    }
    const std::uint64_t lo = number(item.substr(0, dash));
    const std::uint64_t hi = number(item.substr(dash + 1));
    if (hi < lo || hi - lo > 100000) throw ConfigError("invalid seed range '" + item + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto cli = std::make_unique<Cli>();
  try {
    cli->app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli->app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    return cli->dispatch(out, err);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

std::string help_text(const std::string& subcommand) {
  Cli cli;
  if (subcommand.empty()) return cli.app.help();
  return cli.app.get_subcommand(subcommand)->help(cli.app.get_name());
}

std::vector<std::string> subcommands() { return {"train", "ablate", "grid", "timing", "gen-sbm", "report", "presets"}; }

}  // namespace enc::cli
