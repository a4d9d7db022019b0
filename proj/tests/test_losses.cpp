#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "enc/losses.hpp"
#include "support/finite_diff.hpp"
#include "support/graphs.hpp"

using namespace enc;
using testing::randn;

namespace {

double value_of(const ad::Var& v) { return static_cast<double>(v.item()); }

Matrix rows(std::initializer_list<std::initializer_list<double>> init) {
  Matrix m(static_cast<Eigen::Index>(init.size()), static_cast<Eigen::Index>(init.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : init) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = static_cast<Real>(v);
    ++r;
  }
  return m;
}

std::vector<NodeId> iota_ids(NodeId n) {
  std::vector<NodeId> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

Model one_layer_gcn(int in, int k, Rng& rng) {
  ModelConfig cfg;
  cfg.backbone = Backbone::Gcn;
  cfg.layers = 1;
  cfg.channels = 3;
  cfg.classes = k;
  cfg.in_channels = in;
  cfg.dropout = 0;
  return Model(cfg, rng);
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("cross entropy examples") {
    ad::Tape tape;
    const std::vector<int> y1{0};
    const std::vector<NodeId> m1{0};
    CHECK(value_of(cross_entropy(tape.constant(Matrix::Zero(1, 2)), y1, m1)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(value_of(cross_entropy(tape.constant(rows({{100, 0}})), y1, m1)) < 1e-40);

    const Matrix yhat = rows({{0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}, {0.25, 0.5, 0.25}});
    const std::vector<int> y3{0, 1, 2};
    const std::vector<NodeId> m3{0, 1, 2};
    const double expected = -(std::log(0.7) + std::log(0.8) + std::log(0.25)) / 3;
    const double ce = value_of(cross_entropy(tape.constant(yhat.array().log().matrix()), y3, m3));
    CHECK(ce == doctest::Approx(expected).epsilon(1e-14));
    CHECK(ce == doctest::Approx(0.655).epsilon(1e-3));

    CHECK_THROWS_AS(cross_entropy(tape.constant(yhat), y3, std::span<const NodeId>{}), std::invalid_argument);
  }

  TEST_CASE("mutual information examples") {
    ad::Tape tape;
    CHECK(value_of(mi_loss(tape.constant(Matrix::Constant(5, 7, Real(1) / 7)), 2)) ==
          doctest::Approx(-std::log(7.0)).epsilon(1e-14));
    CHECK(value_of(mi_loss(tape.constant(Matrix::Constant(4, 3, Real(1) / 3)), 0.5)) ==
          doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-14));

    Matrix split = Matrix::Zero(6, 3);
    for (int i = 0; i < 6; ++i) split(i, i % 3) = 1;
    CHECK(value_of(mi_loss(tape.constant(split), 2)) == doctest::Approx(-2 * std::log(3.0)).epsilon(1e-14));

    Matrix same = Matrix::Zero(4, 3);
    same.col(0).setOnes();
    CHECK(std::abs(value_of(mi_loss(tape.constant(same), 2))) < 1e-15);

    CHECK_THROWS_AS(mi_loss(tape.constant(Matrix::Constant(2, 2, 0.6)), 2), std::invalid_argument);
  }

  TEST_CASE("mutual information bounds") {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
      ad::Tape tape;
      const int k = 2 + t % 4;
      const Matrix yhat = predict(Real(3) * randn(8, k, rng));
      const double lambda = 0.5 + t % 3;
      const double v = value_of(mi_loss(tape.constant(yhat), lambda));
      CHECK(v >= -lambda * std::log(k) - 1e-12);
      CHECK(v <= std::log(k) + 1e-12);
    }
  }

  TEST_CASE("total variation examples") {
    const Graph path = testing::from_pairs(2, {{0, 1}});
    const GraphOperators ops = GraphOperators::from_graph(path);
    ad::Tape tape;
    const ad::Var yhat = tape.constant(rows({{1, 0}, {0, 1}}));
    const double basic = value_of(tv_loss(yhat, ops, Matrix{}));
    CHECK(basic == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    // ||w_0 x_0 - w_1 x_1||^2 = (a / sqrt 2)^2 = sigma when a = sqrt(2 sigma).
    const double sigma = 10;
    const Matrix x = rows({{std::sqrt(2 * sigma)}, {0}});
    const double aware = value_of(tv_loss(yhat, x, path, ops, sigma, true));
    CHECK(aware == doctest::Approx(std::sqrt(2.0) * std::exp(-1.0)).epsilon(1e-14));
    CHECK(aware == doctest::Approx(0.52026).epsilon(1e-5));
    CHECK(value_of(tv_loss(yhat, x, path, ops, sigma, false)) == basic);

    const Graph cycle = testing::from_pairs(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
    const GraphOperators cops = GraphOperators::from_graph(cycle);
    Matrix constant(5, 3);
    constant.rowwise() = rows({{0.2, 0.5, 0.3}}).row(0);
    CHECK(value_of(tv_loss(tape.constant(constant), cops, Matrix{})) == doctest::Approx(0.0));

    const GraphOperators empty = GraphOperators::from_graph(testing::from_pairs(3, {}));
    CHECK_THROWS_AS(tv_loss(tape.constant(Matrix::Ones(3, 2)), empty, Matrix{}), std::invalid_argument);
  }

  TEST_CASE("total variation properties") {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
      const Graph g = testing::nonempty_graph(7, 0.4, rng);
      const GraphOperators ops = GraphOperators::from_graph(g);
      const Matrix x = randn(7, 3, rng);
      ad::Tape tape;
      const ad::Var yhat = tape.constant(predict(randn(7, 3, rng)));
      const Matrix m = edge_boundary_weights(g, x, 10);
      CHECK(m.minCoeff() > 0);
      CHECK(m.maxCoeff() <= 1);
      const double basic = value_of(tv_loss(yhat, x, g, ops, 10, false));
      const double aware = value_of(tv_loss(yhat, x, g, ops, 10, true));
      CHECK(aware >= 0);
      CHECK(aware <= basic + 1e-15);
      const double limit = value_of(tv_loss(yhat, x, g, ops, 1e12, true));
      CHECK(std::abs(limit - basic) <= 1e-9 * basic);
    }
  }

  TEST_CASE("P-reg examples") {
    ad::Tape tape;
    const Graph path = testing::from_pairs(2, {{0, 1}});
    const GraphOperators ops = GraphOperators::from_graph(path);
    CHECK(value_of(preg_loss(tape.constant(rows({{1, 0}, {0, 1}})), ops)) == doctest::Approx(1.0).epsilon(1e-15));

    Rng rng(3);
    const Graph g = testing::erdos_renyi(6, 0.5, rng);
    const GraphOperators gops = GraphOperators::from_graph(g);
    Matrix constant(6, 3);
    constant.rowwise() = rows({{0.1, 0.6, 0.3}}).row(0);
    CHECK(value_of(preg_loss(tape.constant(constant), gops)) < 1e-28);

    // Node 2 is isolated: changing its row leaves the loss unchanged.
    const Graph h = testing::from_pairs(3, {{0, 1}});
    const GraphOperators hops = GraphOperators::from_graph(h);
    Matrix a = predict(randn(3, 2, rng));
    Matrix b = a;
    b.row(2) = rows({{0.9, 0.1}}).row(0);
    CHECK(value_of(preg_loss(tape.constant(a), hops)) == doctest::Approx(value_of(preg_loss(tape.constant(b), hops))).epsilon(1e-15));
  }

  TEST_CASE("partition sampling") {
    Rng rng(4);
    const std::vector<NodeId> four{3, 8, 1, 5};
    const Partition p4 = sample_partition(four, rng);
    CHECK(p4.p1.size() == 2);
    CHECK(p4.p2.size() == 2);
    std::set<NodeId> all(p4.p1.begin(), p4.p1.end());
    all.insert(p4.p2.begin(), p4.p2.end());
    CHECK(all == std::set<NodeId>(four.begin(), four.end()));

    const std::vector<NodeId> five{0, 1, 2, 3, 4};
    const Partition p5 = sample_partition(five, rng);
    CHECK(p5.p1.size() == 2);
    CHECK(p5.p2.size() == 3);

    Rng a(9), b(9);
    for (int t = 0; t < 5; ++t) {
      const Partition pa = sample_partition(five, a);
      const Partition pb = sample_partition(five, b);
      CHECK(pa.p1 == pb.p1);
      CHECK(pa.p2 == pb.p2);
    }

    const std::vector<int> labels{0, 0, 0, 0, 1, 1, 1, 1};
    const auto ids = iota_ids(8);
    const Partition strat = sample_partition(ids, rng, labels);
    CHECK(strat.p1.size() == 4);
    int class0 = 0;
    for (NodeId i : strat.p1) class0 += labels[static_cast<std::size_t>(i)] == 0;
    CHECK(class0 == 2);

    const std::vector<NodeId> one{7};
    CHECK_THROWS_AS(sample_partition(one, rng), std::invalid_argument);
  }

  TEST_CASE("gradient alignment examples") {
    ad::Tape tape;
    Rng rng(5);
    const Graph g = testing::nonempty_graph(5, 0.6, rng);
    const GraphOperators ops = GraphOperators::from_graph(g);
    Model m = one_layer_gcn(3, 2, rng);
    const auto params = m.bind(tape);
    const ad::Var logits = m.forward(ops, tape.constant(randn(5, 3, rng)), params, Mode::Eval, rng);
    const std::vector<int> y{0, 1, 0, 1, 1};
    const std::vector<NodeId> part{0, 1, 3};
    const CvgResult self = cvg_loss(logits, y, part, part, params);
    CHECK_FALSE(self.degenerate);
    CHECK(value_of(self.value) == doctest::Approx(-1.0).epsilon(1e-9));

    // Node 0's logits use only row 0 of W, node 1's only row 1.
    const ad::Var w = tape.variable(randn(2, 2, rng));
    const ad::Var toy = ad::matmul(tape.constant(Matrix::Identity(2, 2)), w);
    const std::vector<int> y2{0, 0};
    const std::vector<NodeId> a{0}, b{1};
    const CvgResult ortho = cvg_loss(toy, y2, a, b, std::span(&w, 1));
    CHECK_FALSE(ortho.degenerate);
    CHECK(std::abs(value_of(ortho.value)) < 1e-15);

    const ad::Var zero = tape.constant(Matrix::Zero(1, 2));
    const ad::Var one = tape.constant(rows({{1, 0}}));
    const CvgResult degenerate = gradient_alignment(std::span(&zero, 1), std::span(&one, 1));
    CHECK(degenerate.degenerate);
    CHECK(value_of(degenerate.value) == 0.0);
    CHECK_THROWS_AS(cvg_loss(logits, y, part, std::span<const NodeId>{}, params), std::invalid_argument);
  }

  TEST_CASE("gradient alignment is a cosine") {
    Rng rng(6);
    for (int t = 0; t < 20; ++t) {
      ad::Tape tape;
      const Graph g = testing::nonempty_graph(6, 0.5, rng);
      const GraphOperators ops = GraphOperators::from_graph(g);
      Model m = one_layer_gcn(3, 3, rng);
      const auto params = m.bind(tape);
      const ad::Var logits = m.forward(ops, tape.constant(randn(6, 3, rng)), params, Mode::Eval, rng);
      const auto y = testing::random_labels(6, 3, rng);
      const Partition part = sample_partition(iota_ids(6), rng);
      const CvgResult r = cvg_loss(logits, y, part, params);
      if (r.degenerate) continue;
      CHECK(value_of(r.value) >= -1 - 1e-12);
      CHECK(value_of(r.value) <= 1 + 1e-12);
    }
  }

  TEST_CASE("first-order gradient checks of the loss terms") {
    Rng rng(7);
    for (int t = 0; t < 5; ++t) {
      const NodeId n = 4 + t % 3;
      const int k = 2 + t % 2;
      const Graph g = testing::nonempty_graph(n, 0.5, rng);
      const GraphOperators ops = GraphOperators::from_graph(g);
      const Matrix x = randn(n, 2, rng);
      const Matrix boundary = edge_boundary_weights(g, x, 10);
      const auto y = testing::random_labels(n, k, rng);
      const std::vector<NodeId> mask{0, 1, 3};
      const testing::Params p{randn(n, k, rng)};
      using F = testing::TapedFn;
      const std::vector<std::pair<const char*, F>> cases = {
          {"ce", [&](ad::Tape&, auto v) { return cross_entropy(v[0], y, mask); }},
          {"mi", [&](ad::Tape&, auto v) { return mi_loss(ad::row_softmax(v[0]), 2); }},
          {"tv basic", [&](ad::Tape&, auto v) { return tv_loss(ad::row_softmax(v[0]), ops, Matrix{}); }},
          {"tv edge-aware", [&](ad::Tape&, auto v) { return tv_loss(ad::row_softmax(v[0]), ops, boundary); }},
          {"p-reg", [&](ad::Tape&, auto v) { return preg_loss(ad::row_softmax(v[0]), ops); }},
      };
      for (const auto& [name, f] : cases) {
        CAPTURE(name);
        CHECK(testing::gradient_check(f, p) < 1e-5);
      }
    }
  }

  TEST_CASE("second-order gradient check of the alignment loss") {
    Rng rng(8);
    int checked = 0;
    for (int t = 0; t < 6; ++t) {
      const NodeId n = t < 3 ? 4 : 6;
      const int k = 2 + t % 2;
      const Graph g = testing::nonempty_graph(n, 0.6, rng);
      const GraphOperators ops = GraphOperators::from_graph(g);
      const Matrix x = randn(n, 3, rng);
      const auto y = testing::random_labels(n, k, rng);
      const Model m = one_layer_gcn(3, k, rng);
      testing::Params p;
      for (const auto& prm : m.parameters()) p.push_back(randn(prm.value.rows(), prm.value.cols(), rng));
      const std::vector<NodeId> p1{0, 2}, p2{1, 3};
      bool degenerate = false;
      const testing::TapedFn f = [&](ad::Tape& tape, std::span<const ad::Var> vars) {
        Rng unused(0);
        const CvgResult r = cvg_loss(m.forward(ops, tape.constant(x), vars, Mode::Eval, unused), y, p1, p2, vars);
        degenerate = degenerate || r.degenerate;
        return r.value;
      };
      testing::evaluate(f, p);
      if (degenerate) continue;
      ++checked;
      CHECK(testing::gradient_check(f, p) < 1e-4);
    }
    CHECK(checked >= 4);
  }

  TEST_CASE("total loss") {
    Rng rng(10);
    const NodeId n = 6;
    const Graph g = testing::nonempty_graph(n, 0.5, rng);
    const GraphOperators ops = GraphOperators::from_graph(g);
    const Matrix x = randn(n, 3, rng);
    const Matrix boundary = edge_boundary_weights(g, x, 10);
    const auto y = testing::random_labels(n, 3, rng);
    const std::vector<NodeId> train{0, 1, 2, 4};
    const Partition part = sample_partition(train, rng);
    Model m = one_layer_gcn(3, 3, rng);
    for (auto& p : m.parameters()) p.value = randn(p.value.rows(), p.value.cols(), rng);

    LossContext ctx;
    ctx.ops = &ops;
    ctx.labels = y;
    ctx.train_ids = train;
    ctx.boundary = &boundary;

    SUBCASE("zero weights reduce to cross entropy") {
      ad::Tape tape;
      const auto params = m.bind(tape);
      const ad::Var logits = m.forward(ops, tape.constant(x), params, Mode::Eval, rng);
      const TotalLoss tl = total_loss(logits, ctx, LossConfig{}, nullptr, params);
      CHECK(value_of(tl.value) == value_of(cross_entropy(logits, y, train)));
      CHECK(tl.breakdown.mi == 0);
      CHECK(tl.breakdown.tv == 0);
      CHECK(tl.breakdown.cvg == 0);
    }
    SUBCASE("weighted sum of independently computed terms") {
      ad::Tape tape;
      const auto params = m.bind(tape);
      const ad::Var logits = m.forward(ops, tape.constant(x), params, Mode::Eval, rng);
      LossConfig cfg;
      cfg.weights.alpha = 1;
      cfg.weights.beta = 2;
      cfg.weights.gamma = 1;
      const TotalLoss tl = total_loss(logits, ctx, cfg, &part, params);
      REQUIRE_FALSE(tl.breakdown.cvg_degenerate);
      const Matrix yhat = predict(logits.value());
      ad::Tape oracle;
      const double ce = value_of(cross_entropy(oracle.constant(logits.value()), y, train));
      const double mi = value_of(mi_loss(oracle.constant(yhat), 2));
      const double tv = value_of(tv_loss(oracle.constant(yhat), x, g, ops, 10, true));
      const double cvg = value_of(cvg_loss(logits, y, part, params).value);
      CHECK(value_of(tl.value) == doctest::Approx(ce + mi + 2 * tv + cvg).epsilon(1e-12));
      const auto& b = tl.breakdown;
      CHECK(std::abs(b.total - (b.ce + 1 * b.mi + 2 * b.tv + 1 * b.cvg)) < 1e-10);
      CHECK(b.ce == doctest::Approx(ce).epsilon(1e-14));
      CHECK(b.tv == doctest::Approx(tv).epsilon(1e-14));
    }
    SUBCASE("preconditions") {
      ad::Tape tape;
      const auto params = m.bind(tape);
      const ad::Var logits = m.forward(ops, tape.constant(x), params, Mode::Eval, rng);
      LossConfig cfg;
      cfg.weights.gamma = 1;
      CHECK_THROWS_AS(total_loss(logits, ctx, cfg, nullptr, params), std::invalid_argument);
      cfg.weights.gamma = -1;
      CHECK_THROWS_AS(total_loss(logits, ctx, cfg, &part, params), std::invalid_argument);
    }
  }
}
