#include "enc/train.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

namespace enc {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

template <typename T>
T parse_as(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::invalid_argument("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw std::invalid_argument("invalid value '" + std::string(value) + "' for " + std::string(key));
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// by index is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto workers = static_cast<std::size_t>(std::clamp<long long>(jobs, 1, static_cast<long long>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  return xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

}  // namespace

std::string_view to_string(PartitionPolicy p) { return p == PartitionPolicy::Random ? "random" : "fixed"; }

PartitionPolicy parse_partition_policy(std::string_view name) {
  if (name == "random") return PartitionPolicy::Random;
  if (name == "fixed") return PartitionPolicy::Fixed;
  throw std::invalid_argument("unknown partition policy '" + std::string(name) + "' (expected random or fixed)");
}

void Hyperparams::validate() const {
  if (!(lr_gnn > 0) || !(lr_oc > 0)) throw std::invalid_argument("learning rates must be positive");
  if (!(wd_gnn >= 0) || !(wd_oc >= 0)) throw std::invalid_argument("weight decays must be non-negative");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(preg_weight >= 0)) throw std::invalid_argument("preg_weight must be non-negative");
  loss_config().weights.validate();
  ModelConfig probe = model_config(1, 1);
  probe.validate();
}

ModelConfig Hyperparams::model_config(int in_channels, int classes) const {
  ModelConfig c;
  c.backbone = backbone;
  c.layers = layers;
  c.channels = channels;
  c.classes = classes;
  c.in_channels = in_channels;
  c.dropout = dropout;
  c.gat_heads = gat_heads;
  c.gcnii_alpha = gcnii_alpha;
  c.gcnii_theta = gcnii_theta;
  return c;
}

LossConfig Hyperparams::loss_config() const {
  LossConfig c;
  c.weights = {alpha, beta, gamma, lambda, sigma};
  c.tv_edge_aware = tv_edge_aware;
  c.preg_weight = preg_weight;
  return c;
}

std::string Hyperparams::to_kv() const {
  std::ostringstream out;
  out << "lr_gnn=" << fmt(lr_gnn) << '\n'
      << "lr_oc=" << fmt(lr_oc) << '\n'
      << "wd_gnn=" << fmt(wd_gnn) << '\n'
      << "wd_oc=" << fmt(wd_oc) << '\n'
      << "channels=" << channels << '\n'
      << "dropout=" << fmt(dropout) << '\n'
      << "alpha=" << fmt(alpha) << '\n'
      << "beta=" << fmt(beta) << '\n'
      << "gamma=" << fmt(gamma) << '\n'
      << "lambda=" << fmt(lambda) << '\n'
      << "sigma=" << fmt(sigma) << '\n'
      << "layers=" << layers << '\n'
      << "backbone=" << to_string(backbone) << '\n'
      << "max_epochs=" << max_epochs << '\n'
      << "patience=" << patience << '\n'
      << "seed=" << seed << '\n'
      << "tv_edge_aware=" << (tv_edge_aware ? 1 : 0) << '\n'
      << "preg_weight=" << fmt(preg_weight) << '\n'
      << "partition=" << to_string(partition) << '\n'
      << "stratify_partition=" << (stratify_partition ? 1 : 0) << '\n'
      << "gat_heads=" << gat_heads << '\n'
      << "gcnii_alpha=" << fmt(gcnii_alpha) << '\n'
      << "gcnii_theta=" << fmt(gcnii_theta) << '\n';
  return out.str();
}

std::string Hyperparams::config_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::istringstream in(to_kv());
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("seed=", 0) == 0) continue;
    for (unsigned char ch : line + '\n') {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void set_field(Hyperparams& hp, std::string_view key, std::string_view value) {
  if (key == "lr_gnn") hp.lr_gnn = parse_as<double>(key, value);
  else if (key == "lr_oc") hp.lr_oc = parse_as<double>(key, value);
  else if (key == "wd_gnn") hp.wd_gnn = parse_as<double>(key, value);
  else if (key == "wd_oc") hp.wd_oc = parse_as<double>(key, value);
  else if (key == "channels") hp.channels = parse_as<int>(key, value);
  else if (key == "dropout") hp.dropout = parse_as<double>(key, value);
  else if (key == "alpha") hp.alpha = parse_as<double>(key, value);
  else if (key == "beta") hp.beta = parse_as<double>(key, value);
  else if (key == "gamma") hp.gamma = parse_as<double>(key, value);
  else if (key == "lambda") hp.lambda = parse_as<double>(key, value);
  else if (key == "sigma") hp.sigma = parse_as<double>(key, value);
  else if (key == "layers") hp.layers = parse_as<int>(key, value);
  else if (key == "backbone") hp.backbone = parse_backbone(value);
  else if (key == "max_epochs") hp.max_epochs = parse_as<int>(key, value);
  else if (key == "patience") hp.patience = parse_as<int>(key, value);
  else if (key == "seed") hp.seed = parse_as<std::uint64_t>(key, value);
  else if (key == "tv_edge_aware") hp.tv_edge_aware = parse_bool(key, value);
  else if (key == "preg_weight") hp.preg_weight = parse_as<double>(key, value);
  else if (key == "partition") hp.partition = parse_partition_policy(value);
  else if (key == "stratify_partition") hp.stratify_partition = parse_bool(key, value);
  else if (key == "gat_heads") hp.gat_heads = parse_as<int>(key, value);
  else if (key == "gcnii_alpha") hp.gcnii_alpha = parse_as<double>(key, value);
  else if (key == "gcnii_theta") hp.gcnii_theta = parse_as<double>(key, value);
  else throw std::invalid_argument("unknown hyperparameter '" + std::string(key) + "'");
}

Hyperparams parse_kv(std::string_view text) {
  Hyperparams hp;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + line + "'");
    set_field(hp, std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
  }
  return hp;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void adam_update(Matrix& theta, const Matrix& grad, Matrix& m, Matrix& v, long long t, double lr,
                 double weight_decay, double beta1, double beta2, double eps) {
  if (t < 1) throw std::invalid_argument("adam_update: step count must be >= 1");
  if (grad.rows() != theta.rows() || grad.cols() != theta.cols()) throw ShapeError("adam_update: gradient shape mismatch");
  if (m.size() == 0) m = Matrix::Zero(theta.rows(), theta.cols());
  if (v.size() == 0) v = Matrix::Zero(theta.rows(), theta.cols());
  const Real b1 = static_cast<Real>(beta1);
  const Real b2 = static_cast<Real>(beta2);
  const Matrix g = weight_decay != 0 ? Matrix(grad + static_cast<Real>(weight_decay) * theta) : grad;
  m = b1 * m + (Real(1) - b1) * g;
  v = b2 * v + (Real(1) - b2) * g.cwiseProduct(g);
  const Real bc1 = Real(1) - static_cast<Real>(std::pow(beta1, static_cast<double>(t)));
  const Real bc2 = Real(1) - static_cast<Real>(std::pow(beta2, static_cast<double>(t)));
  const Real step = static_cast<Real>(lr) / bc1;
  const Real sqrt_bc2 = std::sqrt(bc2);
  theta.array() -= step * m.array() / (v.array().sqrt() / sqrt_bc2 + static_cast<Real>(eps));
}

void adam_step(std::vector<Parameter>& params, std::span<const Matrix> grads, AdamState& state,
               const AdamGroup& gnn, const AdamGroup& open_close) {
  if (grads.size() != params.size()) throw ShapeError("adam_step: gradient count mismatch");
  state.m.resize(params.size());
  state.v.resize(params.size());
  ++state.t;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const AdamGroup& g = params[i].group == ParamGroup::Gnn ? gnn : open_close;
    adam_update(params[i].value, grads[i], state.m[i], state.v[i], state.t, g.lr, g.weight_decay);
  }
}

DivergenceError::DivergenceError(int epoch, const std::string& what)
    : std::runtime_error("diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const NodeId> ids) {
  if (ids.empty()) return 0.0;
  std::size_t hits = 0;
  for (NodeId id : ids) {
    Eigen::Index best = 0;
    logits.row(id).maxCoeff(&best);
    hits += static_cast<int>(best) == labels[static_cast<std::size_t>(id)];
  }
  return static_cast<double>(hits) / static_cast<double>(ids.size());
}

double cross_entropy_value(const Matrix& logits, std::span<const int> labels, std::span<const NodeId> ids) {
  if (ids.empty()) return 0.0;
  double total = 0;
  for (NodeId id : ids) {
    const auto row = logits.row(id);
    const double mx = static_cast<double>(row.maxCoeff());
    const double lse = mx + std::log(static_cast<double>((row.array() - static_cast<Real>(mx)).exp().sum()));
    total += lse - static_cast<double>(row(labels[static_cast<std::size_t>(id)]));
  }
  return total / static_cast<double>(ids.size());
}

Trainer::Trainer(const Dataset& ds, Split split, const Hyperparams& hp)
    : ds_(ds),
      split_(std::move(split)),
      hp_(hp),
      ops_(GraphOperators::from_graph(ds.graph)),
      init_rng_(derive_seed(hp.seed, 0)),
      dropout_rng_(derive_seed(hp.seed, 1)),
      partition_rng_(derive_seed(hp.seed, 2)),
      model_((hp.validate(), hp.model_config(ds.num_features(), ds.num_classes)), init_rng_),
      loss_cfg_(hp.loss_config()) {
  split_.validate(ds.num_nodes());
  if (split_.val.empty()) throw std::invalid_argument("train: validation set is empty");
  if (hp_.beta > 0 && hp_.tv_edge_aware) boundary_ = edge_boundary_weights(ds.graph, ds.features, hp_.sigma);
  if (hp_.gamma > 0 && hp_.partition == PartitionPolicy::Fixed) {
    partition_ = sample_partition(split_.train, partition_rng_, hp_.stratify_partition ? std::span<const int>(ds.labels)
                                                                                        : std::span<const int>{});
  }
}

EpochRecord Trainer::step() {
  ++epoch_;
  EpochRecord rec;
  rec.epoch = epoch_;

  const auto t0 = Clock::now();
  {
    if (hp_.gamma > 0 && hp_.partition == PartitionPolicy::Random) {
      partition_ = sample_partition(split_.train, partition_rng_, hp_.stratify_partition ? std::span<const int>(ds_.labels)
                                                                                          : std::span<const int>{});
    }
    ad::Tape tape;
    const std::vector<ad::Var> params = model_.bind(tape);
    const ad::Var logits = model_.forward(ops_, tape.constant(ds_.features), params, Mode::Train, dropout_rng_);
    LossContext ctx{&ops_, ds_.labels, split_.train, boundary_.size() ? &boundary_ : nullptr};
    const TotalLoss loss =
        total_loss(logits, ctx, loss_cfg_, hp_.gamma > 0 ? &partition_ : nullptr, params);
    rec.loss = loss.breakdown;
    if (!std::isfinite(rec.loss.total)) {
      throw DivergenceError(epoch_, "loss is " + fmt(rec.loss.total, "%g") + " (ce=" + fmt(rec.loss.ce, "%g") +
                                        " mi=" + fmt(rec.loss.mi, "%g") + " tv=" + fmt(rec.loss.tv, "%g") +
                                        " cvg=" + fmt(rec.loss.cvg, "%g") + ")");
    }
    degenerate_ += rec.loss.cvg_degenerate;
    const std::vector<ad::Var> grads = tape.grad(loss.value, params);
    std::vector<Matrix> values;
    values.reserve(grads.size());
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (!grads[i].value().allFinite()) {
        throw DivergenceError(epoch_, "non-finite gradient for " + model_.parameters()[i].name);
      }
      values.push_back(grads[i].value());
    }
    adam_step(model_.parameters(), values, adam_, {hp_.lr_gnn, hp_.wd_gnn}, {hp_.lr_oc, hp_.wd_oc});
  }
  rec.train_ms = elapsed_ms(t0);

  const auto t1 = Clock::now();
  const Matrix logits = model_.logits(ops_, ds_.features);
  rec.eval_ms = elapsed_ms(t1);

  rec.train_acc = accuracy(logits, ds_.labels, split_.train);
  rec.val_acc = accuracy(logits, ds_.labels, split_.val);
  rec.test_acc = accuracy(logits, ds_.labels, split_.test);
  rec.val_loss = cross_entropy_value(logits, ds_.labels, split_.val);
  return rec;
}

TrainResult Trainer::run(const std::function<void(const EpochRecord&)>& on_epoch) {
  const auto start = Clock::now();
  TrainResult result;
  while (epoch_ < hp_.max_epochs) {
    EpochRecord rec = step();
    if (on_epoch) on_epoch(rec);
    const bool better = result.curve.empty() || rec.val_acc > result.best_val_acc ||
                        (rec.val_acc == result.best_val_acc && rec.val_loss < result.best_val_loss);
    result.curve.push_back(rec);
    if (better) {
      result.best_val_acc = rec.val_acc;
      result.best_val_loss = rec.val_loss;
      result.test_acc_at_best_val = rec.test_acc;
      result.best_epoch = rec.epoch;
      result.best_params = model_.parameters();
    } else if (rec.epoch - result.best_epoch >= hp_.patience) {
      break;
    }
  }
  result.epochs_run = epoch_;
  result.cvg_degenerate_steps = degenerate_;
  result.runtime_s = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

TrainResult train(const Dataset& ds, const Split& split, const Hyperparams& hp) {
  Trainer trainer(ds, split, hp);
  return trainer.run();
}

Split split_for_seed(const Dataset& ds, const std::string& split_name, std::uint64_t seed) {
  if (split_name == "geom") return resolve_split(ds, "geom-" + std::to_string(seed % 10), seed);
  return resolve_split(ds, split_name, seed);
}

std::pair<double, double> mean_std(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

RepeatedResult run_repeated(const Dataset& ds, const std::string& split_name, Hyperparams hp,
                            std::span<const std::uint64_t> seeds, int jobs) {
  return run_repeated(
      ds, [&](std::uint64_t seed) { return split_for_seed(ds, split_name, seed); }, std::move(hp), seeds, jobs);
}

RepeatedResult run_repeated(const Dataset& ds, const SplitFn& split_for, Hyperparams hp,
                            std::span<const std::uint64_t> seeds, int jobs) {
  if (seeds.empty()) throw std::invalid_argument("run_repeated: no seeds");
  hp.validate();
  std::vector<std::uint64_t> sorted(seeds.begin(), seeds.end());
  std::sort(sorted.begin(), sorted.end());
  RepeatedResult out;
  out.runs.resize(sorted.size());
  parallel_for(sorted.size(), jobs, [&](std::size_t i) {
    Hyperparams local = hp;
    local.seed = sorted[i];
    out.runs[i].seed = sorted[i];
    out.runs[i].result = train(ds, split_for(sorted[i]), local);
  });
  std::vector<double> test, val;
  for (const SeedRun& r : out.runs) {
    test.push_back(r.result.test_acc_at_best_val);
    val.push_back(r.result.best_val_acc);
  }
  std::tie(out.mean_test, out.std_test) = mean_std(test);
  out.mean_val = mean_std(val).first;
  return out;
}

GridResult grid_search(const Dataset& ds, const std::string& split_name, const Hyperparams& base,
                       std::span<const GridAxis> axes, std::span<const std::uint64_t> seeds, int jobs) {
  std::size_t points = 1;
  for (const GridAxis& a : axes) points *= a.values.size();
  if (axes.empty() || points == 0) throw std::invalid_argument("grid_search: empty grid");
  if (seeds.empty()) throw std::invalid_argument("grid_search: no seeds");

  GridResult grid;
  grid.ledger.resize(points);
  for (std::size_t p = 0; p < points; ++p) {
    Hyperparams hp = base;
    std::size_t rest = p;
    for (std::size_t a = axes.size(); a-- > 0;) {
      set_field(hp, axes[a].key, axes[a].values[rest % axes[a].values.size()]);
      rest /= axes[a].values.size();
    }
    hp.validate();
    grid.ledger[p].hp = hp;
  }

  parallel_for(points, jobs, [&](std::size_t p) {
    GridEntry& e = grid.ledger[p];
    try {
      const RepeatedResult r = run_repeated(ds, split_name, e.hp, seeds, 1);
      e.ok = true;
      e.val_acc = r.mean_val;
      e.test_acc = r.mean_test;
    } catch (const DivergenceError& err) {
      e.ok = false;
      e.error = err.what();
    }
  });

  bool found = false;
  for (std::size_t p = 0; p < points; ++p) {
    const GridEntry& e = grid.ledger[p];
    if (e.ok && (!found || e.val_acc > grid.ledger[grid.best_index].val_acc)) {
      grid.best_index = p;
      found = true;
    }
  }
  if (!found) throw std::runtime_error("grid_search: every grid point diverged");
  return grid;
}

void write_grid_ledger(const std::filesystem::path& file, const GridResult& grid) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "index,config_hash,ok,val_acc,test_acc,best,error,config\n";
  for (std::size_t p = 0; p < grid.ledger.size(); ++p) {
    const GridEntry& e = grid.ledger[p];
    std::string kv = e.hp.to_kv();
    std::replace(kv.begin(), kv.end(), '\n', ';');
    std::string err = e.error;
    std::replace(err.begin(), err.end(), ',', ';');
    out << p << ',' << e.hp.config_hash() << ',' << (e.ok ? 1 : 0) << ',' << fmt(e.val_acc, "%.6f") << ','
        << fmt(e.test_acc, "%.6f") << ',' << (p == grid.best_index ? 1 : 0) << ',' << err << ',' << kv << '\n';
  }
}

std::vector<TimingRow> timing_report(const Dataset& ds, const Split& split, std::span<const TimingConfig> configs,
                                     int epochs, int warmup) {
  if (epochs < 1 || warmup < 0) throw std::invalid_argument("timing_report: invalid epoch counts");
  std::vector<std::unique_ptr<Trainer>> trainers;
  for (const TimingConfig& c : configs) {
    Hyperparams hp = c.hp;
    hp.max_epochs = warmup + epochs;
    trainers.push_back(std::make_unique<Trainer>(ds, split, hp));
  }
  std::vector<std::vector<double>> train_ms(configs.size()), infer_ms(configs.size());
  std::vector<double> last_test(configs.size(), 0.0);
  for (int e = 0; e < warmup + epochs; ++e) {
    for (std::size_t i = 0; i < trainers.size(); ++i) {
      const EpochRecord rec = trainers[i]->step();
      if (e >= warmup) {
        train_ms[i].push_back(rec.train_ms);
        infer_ms[i].push_back(rec.eval_ms);
      }
      last_test[i] = rec.test_acc;
    }
  }
  std::vector<TimingRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    rows.push_back({configs[i].label, median(train_ms[i]), median(infer_ms[i]), last_test[i]});
  }
  return rows;
}

void write_metrics_csv(const std::filesystem::path& file, const TrainResult& result) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "epoch,l_total,l_ce,l_mi,l_tv,l_cvg,train_acc,val_acc,test_acc,epoch_ms\n";
  for (const EpochRecord& r : result.curve) {
    out << r.epoch << ',' << fmt(r.loss.total, "%.10g") << ',' << fmt(r.loss.ce, "%.10g") << ','
        << fmt(r.loss.mi, "%.10g") << ',' << fmt(r.loss.tv, "%.10g") << ',' << fmt(r.loss.cvg, "%.10g") << ','
        << fmt(r.train_acc, "%.6f") << ',' << fmt(r.val_acc, "%.6f") << ',' << fmt(r.test_acc, "%.6f") << ','
        << fmt(r.train_ms + r.eval_ms, "%.4f") << '\n';
  }
}

SummaryWriter::SummaryWriter(std::filesystem::path file) : file_(std::move(file)) {}

void SummaryWriter::append(const std::string& config_hash, std::uint64_t seed, const TrainResult& result) {
  std::lock_guard lock(mutex_);
  const bool fresh = !std::filesystem::exists(file_) || std::filesystem::file_size(file_) == 0;
  std::ofstream out(file_, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + file_.string());
  if (fresh) out << "config_hash,seed,best_val,test,runtime\n";
  out << config_hash << ',' << seed << ',' << fmt(result.best_val_acc, "%.6f") << ','
      << fmt(result.test_acc_at_best_val, "%.6f") << ',' << fmt(result.runtime_s, "%.3f") << '\n';
}

void write_run_config(const std::filesystem::path& file, const Hyperparams& hp, std::string_view dataset,
                      std::string_view split) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "dataset=" << dataset << '\n' << "split=" << split << '\n' << hp.to_kv();
}

}  // namespace enc
