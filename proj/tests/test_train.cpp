#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "enc/train.hpp"
#include "support/temp_dir.hpp"

using namespace enc;

namespace {

Dataset toy_sbm(NodeId n = 80, std::uint64_t seed = 0) {
  SbmConfig cfg;
  cfg.n = n;
  cfg.k = 4;
  cfg.p_in = 0.15;
  cfg.p_out = 0.02;
  cfg.feature_dim = 8;
  cfg.signal_strength = 2.0;
  cfg.seed = seed;
  cfg.train_per_class = 5;
  cfg.n_val = n / 4;
  cfg.n_test = n / 2;
  return generate_sbm(cfg);
}

Hyperparams small_hp() {
  Hyperparams hp;
  hp.channels = 8;
  hp.max_epochs = 30;
  hp.patience = 10;
  return hp;
}

// Reference scalar Adam with coupled L2, written out independently.
double adam_oracle(double theta, const std::vector<double>& grads, double lr, double wd) {
  double m = 0, v = 0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1] + wd * theta;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1 - std::pow(0.9, t));
    const double vhat = v / (1 - std::pow(0.999, t));
    theta -= lr * mhat / (std::sqrt(vhat) + 1e-8);
  }
  return theta;
}

void check_same_curves(const TrainResult& a, const TrainResult& b) {
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t e = 0; e < a.curve.size(); ++e) {
    CHECK(a.curve[e].loss.total == b.curve[e].loss.total);
    CHECK(a.curve[e].loss.cvg == b.curve[e].loss.cvg);
    CHECK(a.curve[e].val_acc == b.curve[e].val_acc);
    CHECK(a.curve[e].test_acc == b.curve[e].test_acc);
  }
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(a.test_acc_at_best_val == b.test_acc_at_best_val);
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("adam examples") {
    SUBCASE("first step moves by lr against the gradient sign") {
      for (double g : {3.0, -0.02}) {
        Matrix theta = Matrix::Constant(1, 1, 1.0), m = Matrix::Zero(1, 1), v = Matrix::Zero(1, 1);
        adam_update(theta, Matrix::Constant(1, 1, g), m, v, 1, 0.1, 0.0);
        CHECK(static_cast<double>(theta(0, 0)) == doctest::Approx(1.0 - 0.1 * (g > 0 ? 1 : -1)).epsilon(1e-6));
      }
    }
    SUBCASE("zero gradient, zero decay leaves theta unchanged") {
      Matrix theta = Matrix::Constant(2, 2, 0.7), m = Matrix::Zero(2, 2), v = Matrix::Zero(2, 2);
      adam_update(theta, Matrix::Zero(2, 2), m, v, 1, 0.1, 0.0);
      CHECK(theta == Matrix::Constant(2, 2, 0.7));
    }
    SUBCASE("f(theta) = theta^2 decreases and matches the oracle") {
      Matrix theta = Matrix::Constant(1, 1, 1.0), m = Matrix::Zero(1, 1), v = Matrix::Zero(1, 1);
      std::vector<double> seen;
      double prev = 1.0;
      for (int t = 1; t <= 2; ++t) {
        const double g = 2 * static_cast<double>(theta(0, 0));
        seen.push_back(g);
        adam_update(theta, Matrix::Constant(1, 1, g), m, v, t, 0.1, 0.0);
        CHECK(theta(0, 0) < prev);
        CHECK(theta(0, 0) > 0);
        prev = static_cast<double>(theta(0, 0));
      }
      CHECK(prev == doctest::Approx(adam_oracle(1.0, seen, 0.1, 0.0)).epsilon(1e-14));
    }
    SUBCASE("weight decay is added to the gradient") {
      Matrix theta = Matrix::Constant(1, 1, 2.0), m = Matrix::Zero(1, 1), v = Matrix::Zero(1, 1);
      adam_update(theta, Matrix::Constant(1, 1, -0.3), m, v, 1, 0.05, 0.5);
      CHECK(static_cast<double>(theta(0, 0)) == doctest::Approx(adam_oracle(2.0, {-0.3}, 0.05, 0.5)).epsilon(1e-14));
    }
  }

  TEST_CASE("adam parameter groups") {
    Rng rng(1);
    ModelConfig cfg;
    cfg.channels = 4;
    cfg.classes = 2;
    cfg.in_channels = 3;
    Model model(cfg, rng);
    auto& params = model.parameters();
    std::vector<Matrix> before, grads;
    for (const auto& p : params) {
      before.push_back(p.value);
      grads.push_back(Matrix::Ones(p.value.rows(), p.value.cols()));
    }
    AdamState state;
    adam_step(params, grads, state, {0.1, 0.0}, {0.01, 0.0});
    CHECK(state.t == 1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      CAPTURE(params[i].name);
      const double lr = params[i].group == ParamGroup::Gnn ? 0.1 : 0.01;
      CHECK(static_cast<double>((before[i] - params[i].value).maxCoeff()) == doctest::Approx(lr).epsilon(1e-6));
    }
  }

  TEST_CASE("hyperparameter text round trip and hash") {
    Hyperparams hp;
    hp.alpha = 0.6;
    hp.lr_gnn = 1e-3;
    hp.backbone = Backbone::Gcnii;
    hp.partition = PartitionPolicy::Fixed;
    hp.seed = 42;
    const Hyperparams back = parse_kv(hp.to_kv());
    CHECK(back.to_kv() == hp.to_kv());
    CHECK(back.seed == 42);
    CHECK(back.backbone == Backbone::Gcnii);

    Hyperparams other = hp;
    other.seed = 7;
    CHECK(other.config_hash() == hp.config_hash());
    CHECK(hp.config_hash().size() == 16);
    other.alpha = 0.7;
    CHECK(other.config_hash() != hp.config_hash());

    CHECK_THROWS_AS(set_field(hp, "nope", "1"), std::invalid_argument);
    CHECK_THROWS_AS(set_field(hp, "layers", "two"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kv("alpha=1\nwhat=2\n"), std::invalid_argument);
    set_field(hp, "beta", "2.5");
    CHECK(hp.beta == 2.5);
  }

  TEST_CASE("hyperparameter validation") {
    Hyperparams hp;
    CHECK_NOTHROW(hp.validate());
    hp.lr_gnn = 0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = Hyperparams{};
    hp.wd_oc = -1;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = Hyperparams{};
    hp.gamma = -0.1;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = Hyperparams{};
    hp.layers = 0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
  }

  TEST_CASE("seed streams are distinct") {
    CHECK(derive_seed(0, 0) != derive_seed(0, 1));
    CHECK(derive_seed(0, 1) != derive_seed(1, 0));
    CHECK(derive_seed(5, 2) == derive_seed(5, 2));
  }

  TEST_CASE("cross-entropy-only training equals a reference loop step for step") {
    const Dataset ds = toy_sbm();
    const Split split = ds.splits.at("public");
    Hyperparams hp = small_hp();
    hp.seed = 3;
    hp.wd_gnn = 1e-3;
    Trainer trainer(ds, split, hp);

    Rng init(derive_seed(hp.seed, 0));
    Rng drop(derive_seed(hp.seed, 1));
    Model ref(hp.model_config(ds.num_features(), ds.num_classes), init);
    const GraphOperators ops = GraphOperators::from_graph(ds.graph);
    AdamState state;
    for (int epoch = 0; epoch < 8; ++epoch) {
      ad::Tape tape;
      const auto params = ref.bind(tape);
      const ad::Var logits = ref.forward(ops, tape.constant(ds.features), params, Mode::Train, drop);
      const ad::Var ce = cross_entropy(logits, ds.labels, split.train);
      std::vector<Matrix> grads;
      for (const auto& g : tape.grad(ce, params)) grads.push_back(g.value());
      adam_step(ref.parameters(), grads, state, {hp.lr_gnn, hp.wd_gnn}, {hp.lr_oc, hp.wd_oc});

      const EpochRecord rec = trainer.step();
      CHECK(rec.loss.total == static_cast<double>(ce.item()));
      for (std::size_t i = 0; i < ref.parameters().size(); ++i)
        CHECK(trainer.model().parameters()[i].value == ref.parameters()[i].value);
    }
  }

  TEST_CASE("training is deterministic") {
    const Dataset ds = toy_sbm();
    Hyperparams hp = small_hp();
    hp.alpha = 0.5;
    hp.beta = 1.0;
    hp.gamma = 0.5;
    hp.max_epochs = 12;
    hp.seed = 11;
    const TrainResult a = train(ds, ds.splits.at("public"), hp);
    const TrainResult b = train(ds, ds.splits.at("public"), hp);
    check_same_curves(a, b);
    hp.seed = 12;
    const TrainResult c = train(ds, ds.splits.at("public"), hp);
    CHECK(c.curve.front().loss.total != a.curve.front().loss.total);
  }

  TEST_CASE("early stopping bookkeeping") {
    const Dataset ds = toy_sbm();
    Hyperparams hp = small_hp();
    hp.max_epochs = 300;
    hp.patience = 5;
    const TrainResult r = train(ds, ds.splits.at("public"), hp);
    REQUIRE_FALSE(r.curve.empty());
    CHECK(r.epochs_run == static_cast<int>(r.curve.size()));
    CHECK(r.curve.front().epoch == 1);
    double best = 0;
    int first_best = 0;
    for (const auto& rec : r.curve) {
      CHECK(rec.val_acc >= 0);
      CHECK(rec.val_acc <= 1);
      if (rec.val_acc > best) {
        best = rec.val_acc;
        first_best = rec.epoch;
      }
    }
    CHECK(r.best_val_acc == best);
    const EpochRecord& at = r.curve[static_cast<std::size_t>(r.best_epoch - 1)];
    CHECK(at.val_acc == best);
    CHECK(r.test_acc_at_best_val == at.test_acc);
    CHECK(r.best_epoch >= first_best);
    CHECK(r.epochs_run < hp.max_epochs);
    CHECK(r.epochs_run - r.best_epoch == hp.patience);
    CHECK(r.best_params.size() == 4);
  }

  TEST_CASE("separable SBM reaches 95% test accuracy within 200 epochs") {
    SbmConfig cfg;
    cfg.n = 100;
    cfg.k = 2;
    cfg.p_in = 0.1;
    cfg.p_out = 0.01;
    cfg.feature_dim = 4;
    cfg.signal_strength = 4.0;
    cfg.train_per_class = 10;
    cfg.n_val = 20;
    cfg.n_test = 60;
    const Dataset ds = generate_sbm(cfg);
    Hyperparams hp;
    hp.channels = 16;
    hp.max_epochs = 199;
    const TrainResult r = train(ds, ds.splits.at("public"), hp);
    CHECK(r.epochs_run < 200);
    CHECK(r.test_acc_at_best_val >= 0.95);
  }

  TEST_CASE("fixed and random partition policies") {
    const Dataset ds = toy_sbm();
    Hyperparams hp = small_hp();
    hp.gamma = 1;
    hp.partition = PartitionPolicy::Fixed;
    Trainer fixed(ds, ds.splits.at("public"), hp);
    const Partition p0 = fixed.last_partition();
    fixed.step();
    fixed.step();
    CHECK(fixed.last_partition().p1 == p0.p1);
    CHECK(p0.p1.size() + p0.p2.size() == ds.splits.at("public").train.size());

    hp.partition = PartitionPolicy::Random;
    Trainer random(ds, ds.splits.at("public"), hp);
    random.step();
    const Partition r1 = random.last_partition();
    bool changed = false;
    for (int i = 0; i < 3; ++i) {
      random.step();
      changed = changed || random.last_partition().p1 != r1.p1;
    }
    CHECK(changed);
  }

  TEST_CASE("divergence is reported") {
    const Dataset ds = toy_sbm();
    Hyperparams hp = small_hp();
    hp.lr_gnn = 1e200;
    hp.lr_oc = 1e200;
    hp.dropout = 0;
    CHECK_THROWS_AS(train(ds, ds.splits.at("public"), hp), DivergenceError);
  }

  TEST_CASE("empty validation set is rejected") {
    const Dataset ds = toy_sbm();
    Split s = ds.splits.at("public");
    s.val.clear();
    CHECK_THROWS_AS(Trainer(ds, s, small_hp()), std::invalid_argument);
  }

  TEST_CASE("repeated runs") {
    const Dataset ds = toy_sbm();
    Hyperparams hp = small_hp();
    hp.max_epochs = 15;
    const std::vector<std::uint64_t> one{4};
    const RepeatedResult r1 = run_repeated(ds, "public", hp, one);
    CHECK(r1.std_test == 0);
    CHECK(r1.mean_test == r1.runs[0].result.test_acc_at_best_val);

    const std::vector<std::uint64_t> fwd{0, 1, 2}, rev{2, 0, 1};
    const RepeatedResult a = run_repeated(ds, "public", hp, fwd);
    const RepeatedResult b = run_repeated(ds, "public", hp, rev, 2);
    CHECK(a.mean_test == b.mean_test);
    CHECK(a.std_test == b.std_test);
    REQUIRE(b.runs.size() == 3);
    CHECK(b.runs[0].seed == 0);
    CHECK(b.runs[2].seed == 2);

    const std::vector<double> xs{1, 2, 3, 4};
    const auto [mean, sd] = mean_std(xs);
    CHECK(mean == 2.5);
    CHECK(sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  }

  TEST_CASE("split for seed") {
    const Dataset ds = toy_sbm();
    CHECK(split_for_seed(ds, "geom", 13).train == fully_supervised_split(ds.labels, 4, 3).train);
    CHECK(split_for_seed(ds, "public", 9).train == ds.splits.at("public").train);
  }

  TEST_CASE("grid search") {
    const Dataset ds = toy_sbm();
    Hyperparams base = small_hp();
    base.max_epochs = 10;
    const std::vector<std::uint64_t> seeds{0};

    SUBCASE("singleton grid returns its point") {
      const std::vector<GridAxis> axes{{"alpha", {"0.5"}}};
      const GridResult g = grid_search(ds, "public", base, axes, seeds);
      REQUIRE(g.ledger.size() == 1);
      CHECK(g.best_index == 0);
      CHECK(g.best().hp.alpha == 0.5);
      CHECK(g.best().ok);
    }
    SUBCASE("cartesian order, last axis fastest") {
      const std::vector<GridAxis> axes{{"alpha", {"0", "1"}}, {"beta", {"0", "2", "3"}}};
      const GridResult g = grid_search(ds, "public", base, axes, seeds, 2);
      REQUIRE(g.ledger.size() == 6);
      CHECK(g.ledger[1].hp.alpha == 0);
      CHECK(g.ledger[1].hp.beta == 2);
      CHECK(g.ledger[3].hp.alpha == 1);
      CHECK(g.ledger[3].hp.beta == 0);
      for (const auto& e : g.ledger) CHECK(e.val_acc <= g.best().val_acc);
      for (std::size_t i = 0; i < g.best_index; ++i) CHECK(g.ledger[i].val_acc < g.best().val_acc);
    }
    SUBCASE("divergent point is logged and skipped") {
      base.dropout = 0;
      const std::vector<GridAxis> all_bad{{"lr_oc", {"1e200"}}, {"lr_gnn", {"1e200"}}};
      CHECK_THROWS_AS(grid_search(ds, "public", base, all_bad, seeds), std::runtime_error);
      const std::vector<GridAxis> both{{"lr_oc", {"1e200", "0.01"}}, {"lr_gnn", {"0.01"}}};
      const GridResult g = grid_search(ds, "public", base, both, seeds);
      REQUIRE(g.ledger.size() == 2);
      CHECK_FALSE(g.ledger[0].ok);
      CHECK_FALSE(g.ledger[0].error.empty());
      CHECK(g.ledger[1].ok);
      CHECK(g.best_index == 1);
      testing::TempDir tmp;
      write_grid_ledger(tmp / "grid.csv", g);
      const std::string text = testing::read_file(tmp / "grid.csv");
      CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    }
    SUBCASE("empty grid and bad keys") {
      CHECK_THROWS_AS(grid_search(ds, "public", base, std::span<const GridAxis>{}, seeds), std::invalid_argument);
      const std::vector<GridAxis> empty_axis{{"alpha", {}}};
      CHECK_THROWS_AS(grid_search(ds, "public", base, empty_axis, seeds), std::invalid_argument);
      const std::vector<GridAxis> bad{{"alpha", {"0", "x"}}};
      CHECK_THROWS_AS(grid_search(ds, "public", base, bad, seeds), std::invalid_argument);
    }
  }

  TEST_CASE("timing report") {
    const Dataset ds = toy_sbm();
    Hyperparams hp = small_hp();
    std::vector<TimingConfig> configs{{"gcn", hp}, {"gcn+mi+tv", hp}};
    configs[1].hp.alpha = 1;
    configs[1].hp.beta = 1;
    const auto rows = timing_report(ds, ds.splits.at("public"), configs, 4, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].label == "gcn+mi+tv");
    for (const auto& r : rows) {
      CHECK(r.train_ms > 0);
      CHECK(r.infer_ms > 0);
      CHECK(r.test_acc >= 0);
    }
  }

  TEST_CASE("output files") {
    const Dataset ds = toy_sbm();
    Hyperparams hp = small_hp();
    hp.max_epochs = 5;
    const TrainResult r = train(ds, ds.splits.at("public"), hp);
    testing::TempDir tmp;
    write_metrics_csv(tmp / "metrics.csv", r);
    std::istringstream metrics(testing::read_file(tmp / "metrics.csv"));
    std::string line;
    std::getline(metrics, line);
    CHECK(line == "epoch,l_total,l_ce,l_mi,l_tv,l_cvg,train_acc,val_acc,test_acc,epoch_ms");
    int rows = 0;
    while (std::getline(metrics, line)) {
      ++rows;
      CHECK(std::count(line.begin(), line.end(), ',') == 9);
    }
    CHECK(rows == 5);

    SummaryWriter summary(tmp / "summary.csv");
    summary.append(hp.config_hash(), 0, r);
    summary.append(hp.config_hash(), 1, r);
    SummaryWriter reopened(tmp / "summary.csv");
    reopened.append(hp.config_hash(), 2, r);
    const std::string text = testing::read_file(tmp / "summary.csv");
    CHECK(text.rfind("config_hash,seed,best_val,test,runtime\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);

    write_run_config(tmp / "config.txt", hp, "toy", "public");
    const std::string cfg = testing::read_file(tmp / "config.txt");
    CHECK(cfg.rfind("dataset=toy\nsplit=public\n", 0) == 0);
    CHECK(cfg.find(hp.to_kv()) != std::string::npos);
  }
}
