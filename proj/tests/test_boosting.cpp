#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "psmatch/boosting.hpp"
#include "psmatch/errors.hpp"

using namespace psmatch;

namespace {

Matrix make_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

// Structural equality between a trained tree and the enumeration oracle.
void check_trees_equal(const Tree& tree, int idx, const oracle::Node& node, double lambda,
                       double gamma) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(idx)];
  REQUIRE(n.is_leaf() == node.leaf);
  if (node.leaf) {
    CHECK(std::fabs(n.weight - node.weight) <= 1e-9);
    return;
  }
  CHECK(n.feature == node.feature);
  CHECK(n.threshold == node.threshold);
  CHECK(std::fabs(n.gain - node.gain) <= 1e-12);
  // Recorded gain must be reproducible from the children's stored sums.
  const TreeNode& left = tree.nodes[static_cast<std::size_t>(n.left)];
  const TreeNode& right = tree.nodes[static_cast<std::size_t>(n.right)];
  const double recomputed =
      split_gain(left.sum_g, left.sum_h, right.sum_g, right.sum_h, lambda, gamma);
  CHECK(std::fabs(n.gain - recomputed) <= 1e-12);
  check_trees_equal(tree, n.left, *node.left, lambda, gamma);
  check_trees_equal(tree, n.right, *node.right, lambda, gamma);
}

}  // namespace

TEST_CASE("logistic gradients at pinned points") {
  SUBCASE("label 1 at margin 0") {
    const GradPair g = logistic_grad(1, 0.0);
    CHECK(g.g == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(g.h == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("label 0 at margin 0") {
    const GradPair g = logistic_grad(0, 0.0);
    CHECK(g.g == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.h == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("label 1 at margin ln 3") {
    const GradPair g = logistic_grad(1, std::log(3.0));
    CHECK(g.g == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(g.h == doctest::Approx(0.1875).epsilon(1e-12));
  }
}

TEST_CASE("logistic gradients match finite differences of the log-loss") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> margin_dist(-4.0, 4.0);
  const double eps = 1e-5;
  for (int i = 0; i < 20; ++i) {
    const int label = static_cast<int>(rng() & 1u);
    const double m = margin_dist(rng);
    const GradPair g = logistic_grad(label, m);
    const double fd_g =
        (oracle::log_loss(label, m + eps) - oracle::log_loss(label, m - eps)) / (2.0 * eps);
    CHECK(std::fabs(g.g - fd_g) < 1e-6);
    const double fd_h =
        (logistic_grad(label, m + eps).g - logistic_grad(label, m - eps).g) / (2.0 * eps);
    CHECK(std::fabs(g.h - fd_h) < 1e-6);
  }
}

TEST_CASE("hessian is clamped away from zero") {
  CHECK(logistic_grad(1, 60.0).h == 1e-16);
}

TEST_CASE("leaf weight at pinned points") {
  CHECK(leaf_weight(0.0, 5.0, 1.0) == 0.0);
  CHECK(leaf_weight(-0.5, 0.25, 1.0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(leaf_weight(2.0, 4.0, 0.0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK_THROWS_AS(leaf_weight(1.0, 0.0, 0.0), ModelError);
}

TEST_CASE("split gain at pinned points") {
  CHECK(split_gain(-2, 1, 2, 1, 1, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(split_gain(0, 1, 0, 1, 1, 0.7) == doctest::Approx(-0.7).epsilon(1e-15));
  CHECK(split_gain(-2, 1, 2, 1, 1, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("find_best_split on the four-point ramp") {
  const Matrix x = make_matrix({{1}, {2}, {3}, {4}});
  const std::vector<GradPair> grads{{-1, 1}, {-1, 1}, {1, 1}, {1, 1}};
  const std::vector<int> rows{0, 1, 2, 3};
  BoostParams params;
  params.lambda = 1.0;
  params.gamma = 0.0;
  params.min_child_weight = 0.0;

  SUBCASE("gamma 0 picks the middle") {
    const auto split = find_best_split(x, rows, grads, params);
    REQUIRE(split.has_value());
    CHECK(split->feature == 0);
    CHECK(split->threshold == 2.5);
    CHECK(split->gain == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("gamma 2 kills every candidate") {
    params.gamma = 2.0;
    CHECK_FALSE(find_best_split(x, rows, grads, params).has_value());
  }
  SUBCASE("min_child_weight filters children") {
    params.min_child_weight = 2.5;
    CHECK_FALSE(find_best_split(x, rows, grads, params).has_value());
  }
}

TEST_CASE("find_best_split with constant features returns none") {
  const Matrix x = make_matrix({{2, 7}, {2, 7}, {2, 7}});
  const std::vector<GradPair> grads{{-1, 1}, {1, 1}, {1, 1}};
  const std::vector<int> rows{0, 1, 2};
  BoostParams params;
  params.min_child_weight = 0.0;
  CHECK_FALSE(find_best_split(x, rows, grads, params).has_value());
}

TEST_CASE("find_best_split breaks gain ties toward the lower feature index") {
  // Two identical features: identical best gains, feature 0 must win.
  const Matrix x = make_matrix({{1, 1}, {2, 2}, {3, 3}, {4, 4}});
  const std::vector<GradPair> grads{{-1, 1}, {-1, 1}, {1, 1}, {1, 1}};
  const std::vector<int> rows{0, 1, 2, 3};
  BoostParams params;
  params.min_child_weight = 0.0;
  const auto split = find_best_split(x, rows, grads, params);
  REQUIRE(split.has_value());
  CHECK(split->feature == 0);
}

TEST_CASE("train rejects single-class labels") {
  const Matrix x = make_matrix({{1}, {2}});
  const std::vector<int> ones{1, 1};
  CHECK_THROWS_AS(train(x, ones, BoostParams{}), ModelError);
}

TEST_CASE("a single Newton stump on the four-point ramp") {
  const Matrix x = make_matrix({{1}, {2}, {3}, {4}});
  const std::vector<int> y{0, 0, 1, 1};
  BoostParams params;
  params.n_trees = 1;
  params.max_depth = 1;
  params.shrinkage = 1.0;
  params.lambda = 1.0;
  params.base_score = 0.5;
  params.min_child_weight = 0.0;

  const Ensemble model = train(x, y, params);
  REQUIRE(model.trees.size() == 1);
  const Tree& tree = model.trees.front();
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold == 2.5);
  const double left = tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)].weight;
  const double right = tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)].weight;
  CHECK(left == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
  CHECK(right == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  const std::vector<double> probe{1.0};
  CHECK(predict_proba(model, probe) == doctest::Approx(0.33924).epsilon(1e-4));
}

TEST_CASE("an empty ensemble scores the base probability") {
  Ensemble model;
  model.base_margin = 0.0;  // base_score 0.5
  model.n_features = 3;
  const std::vector<double> x{4.0, 5.0, 6.0};
  CHECK(predict_proba(model, x) == 0.5);
  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS(predict_proba(model, bad), DataError);
}

TEST_CASE("predictions are monotone in the margin") {
  const Matrix x = make_matrix({{1}, {2}, {3}, {4}, {5}, {6}});
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  BoostParams params;
  params.n_trees = 20;
  params.min_child_weight = 0.0;
  const Ensemble model = train(x, y, params);
  double last = -1.0;
  for (double v : {0.5, 1.5, 3.0, 4.5, 6.5}) {
    const std::vector<double> probe{v};
    const double p = predict_proba(model, probe);
    CHECK(p >= last);
    last = p;
  }
}

TEST_CASE("training is deterministic, including under subsampling") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  Matrix x(40, 3);
  std::vector<int> y;
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = dist(rng);
    y.push_back(x(i, 0) + x(i, 1) > 10.0 ? 1 : 0);
  }
  y[0] = 0;
  y[1] = 1;

  BoostParams params;
  params.n_trees = 15;
  params.subsample = 0.7;
  params.seed = 77;
  const Ensemble a = train(x, y, params);
  const Ensemble b = train(x, y, params);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(predict_proba(a, x.row(i)) == predict_proba(b, x.row(i)));
  }

  params.seed = 78;
  const Ensemble c = train(x, y, params);
  bool any_diff = false;
  for (std::size_t i = 0; i < 40; ++i) {
    if (predict_proba(a, x.row(i)) != predict_proba(c, x.row(i))) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("thread count does not change trained models bitwise") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(0.0, 100.0);
  Matrix x(60, 4);
  std::vector<int> y;
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t j = 0; j < 4; ++j) x(i, j) = dist(rng);
    y.push_back((x(i, 0) > 50.0) == (x(i, 2) > 50.0) ? 1 : 0);
  }
  y[0] = 0;
  y[1] = 1;
  BoostParams params;
  params.n_trees = 10;
  const Ensemble single = train(x, y, params, 1);
  const Ensemble multi = train(x, y, params, 4);
  for (std::size_t i = 0; i < 60; ++i) {
    CHECK(predict_proba(single, x.row(i)) == predict_proba(multi, x.row(i)));
  }
}

TEST_CASE("first-order GBM preset drops the regularizers but keeps the procedure") {
  const Matrix x = make_matrix({{1}, {2}, {3}, {4}});
  const std::vector<int> y{0, 0, 1, 1};
  BoostParams params;
  params.n_trees = 1;
  params.max_depth = 1;
  params.shrinkage = 1.0;
  params.lambda = 1.0;  // ignored in GBM mode
  params.gamma = 0.5;   // ignored in GBM mode
  params.min_child_weight = 0.0;
  params.mode = BoostMode::FirstOrderGBM;
  const Ensemble model = train(x, y, params);
  const Tree& tree = model.trees.front();
  REQUIRE(tree.nodes.size() == 3);
  // lambda = 0: stump leaves are -sum_g / sum_h = +/-1/0.5.
  CHECK(tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)].weight ==
        doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)].weight ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("single trees match the exact-greedy enumeration oracle") {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<int> row_dist(2, 10);
  std::uniform_int_distribution<int> feat_dist(1, 3);
  std::uniform_int_distribution<int> depth_dist(1, 2);
  std::uniform_int_distribution<int> grid_dist(0, 4);
  std::uniform_real_distribution<double> real_dist(0.0, 10.0);

  for (int trial = 0; trial < 40; ++trial) {
    const int n = row_dist(rng);
    const int d = feat_dist(rng);
    const bool gridded = (trial % 2) == 0;  // exercise tied values half the time
    Matrix x(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        x(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
            gridded ? static_cast<double>(grid_dist(rng)) : real_dist(rng);
      }
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() & 1u);
    }
    y[0] = 0;
    if (n > 1) y[1] = 1;

    BoostParams params;
    params.n_trees = 1;
    params.max_depth = depth_dist(rng);
    params.lambda = (trial % 3 == 0) ? 0.0 : 1.0;
    params.gamma = (trial % 5 == 0) ? 0.3 : 0.0;
    params.min_child_weight = (trial % 4 == 0) ? 1.0 : 0.0;
    params.shrinkage = 1.0;

    const Ensemble model = train(x, y, params);

    std::vector<double> g(static_cast<std::size_t>(n)), h(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const GradPair gp = logistic_grad(y[static_cast<std::size_t>(i)], 0.0);
      g[static_cast<std::size_t>(i)] = gp.g;
      h[static_cast<std::size_t>(i)] = gp.h;
    }
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
    oracle::TreeParams tree_params{params.max_depth, params.lambda, params.gamma,
                                   params.min_child_weight};
    const auto reference = oracle::grow_tree(x, rows, g, h, tree_params, 0);
    check_trees_equal(model.trees.front(), 0, *reference, params.lambda, params.gamma);
  }
}

TEST_CASE("training log-loss never increases with full-batch updates") {
  std::mt19937_64 rng(500);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Matrix x(60, 3);
  std::vector<int> y;
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = dist(rng);
    const double p = 1.0 / (1.0 + std::exp(-(3.0 * x(i, 0) - 2.0 * x(i, 1))));
    y.push_back(dist(rng) < p ? 1 : 0);
  }
  y[0] = 0;
  y[1] = 1;

  for (double shrinkage : {0.1, 0.5, 1.0}) {
    BoostParams params;
    params.n_trees = 25;
    params.shrinkage = shrinkage;
    params.min_child_weight = 0.0;
    const Ensemble model = train(x, y, params);

    std::vector<double> margins(60, model.base_margin);
    auto total_loss = [&] {
      double loss = 0;
      for (std::size_t i = 0; i < 60; ++i) loss += oracle::log_loss(y[i], margins[i]);
      return loss;
    };
    double last = total_loss();
    for (const Tree& tree : model.trees) {
      for (std::size_t i = 0; i < 60; ++i) margins[i] += params.shrinkage * tree.predict(x.row(i));
      const double current = total_loss();
      CHECK(current <= last + 1e-9);
      last = current;
    }
  }
}

TEST_CASE("recorded gains stay consistent with children sums over a long run") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(0.0, 50.0);
  Matrix x(80, 3);
  std::vector<int> y;
  for (std::size_t i = 0; i < 80; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = dist(rng);
    y.push_back(x(i, 1) > 25.0 ? 1 : 0);
  }
  y[0] = 0;
  y[1] = 1;
  BoostParams params;
  params.n_trees = 8;
  params.gamma = 0.1;
  const Ensemble model = train(x, y, params);
  int internal_nodes = 0;
  for (const Tree& tree : model.trees) {
    for (const TreeNode& node : tree.nodes) {
      if (node.is_leaf()) continue;
      ++internal_nodes;
      const TreeNode& left = tree.nodes[static_cast<std::size_t>(node.left)];
      const TreeNode& right = tree.nodes[static_cast<std::size_t>(node.right)];
      const double recomputed =
          split_gain(left.sum_g, left.sum_h, right.sum_g, right.sum_h, params.lambda, params.gamma);
      CHECK(std::fabs(node.gain - recomputed) <= 1e-12);
    }
  }
  CHECK(internal_nodes > 0);
}

TEST_CASE("routing sends values equal to the threshold right") {
  Tree tree;
  tree.nodes.resize(3);
  tree.nodes[0].feature = 0;
  tree.nodes[0].threshold = 2.0;
  tree.nodes[0].left = 1;
  tree.nodes[0].right = 2;
  tree.nodes[1].weight = -1.0;
  tree.nodes[2].weight = 1.0;
  const std::vector<double> at{2.0}, below{1.999};
  CHECK(tree.predict(at) == 1.0);
  CHECK(tree.predict(below) == -1.0);
}

TEST_CASE("model dump lists every node") {
  const Matrix x = make_matrix({{1}, {2}, {3}, {4}});
  const std::vector<int> y{0, 0, 1, 1};
  BoostParams params;
  params.n_trees = 1;
  params.max_depth = 1;
  params.min_child_weight = 0.0;
  const Ensemble model = train(x, y, params);
  const std::string dump = dump_model(model);
  CHECK(dump.find("tree 0") != std::string::npos);
  CHECK(dump.find("threshold=2.5") != std::string::npos);
  CHECK(dump.find("leaf weight=") != std::string::npos);
}

TEST_CASE("parameter validation rejects out-of-range values") {
  BoostParams params;
  params.shrinkage = 0.0;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params = BoostParams{};
  params.base_score = 1.0;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params = BoostParams{};
  params.subsample = 1.5;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params = BoostParams{};
  params.n_trees = 0;
  CHECK_THROWS_AS(params.validate(), ConfigError);
}
