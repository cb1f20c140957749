#include "psmatch/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "psmatch/errors.hpp"
#include "psmatch/threading.hpp"

namespace psmatch {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct FeatureBest {
  bool found = false;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best candidate on a single feature: sort the node's rows by value, then
// scan prefix sums across the midpoints between consecutive distinct values.
FeatureBest best_split_on_feature(const Matrix& x, std::span<const int> rows,
                                  std::span<const GradPair> grads, int feature, double lambda,
                                  double gamma, double min_child_weight) {
  std::vector<std::pair<double, int>> order;
  order.reserve(rows.size());
  for (int r : rows) order.emplace_back(x(static_cast<std::size_t>(r), static_cast<std::size_t>(feature)), r);
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double total_g = 0.0, total_h = 0.0;
  for (int r : rows) {
    total_g += grads[static_cast<std::size_t>(r)].g;
    total_h += grads[static_cast<std::size_t>(r)].h;
  }

  FeatureBest best;
  double gl = 0.0, hl = 0.0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    gl += grads[static_cast<std::size_t>(order[i].second)].g;
    hl += grads[static_cast<std::size_t>(order[i].second)].h;
    const double lo = order[i].first;
    const double hi = order[i + 1].first;
    if (lo == hi) continue;
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo) || !(mid <= hi)) continue;  // midpoint collapsed onto a value
    const double gr = total_g - gl;
    const double hr = total_h - hl;
    if (hl < min_child_weight || hr < min_child_weight) continue;
    const double gain = split_gain(gl, hl, gr, hr, lambda, gamma);
    if (gain > 0.0 && (!best.found || gain > best.gain)) {
      best.found = true;
      best.threshold = mid;
      best.gain = gain;
    }
  }
  return best;
}

struct TreeBuilder {
  const Matrix& x;
  std::span<const GradPair> grads;
  const BoostParams& params;
  double lambda;
  double gamma;
  int n_threads;
  Tree tree;

  int build(std::vector<int>& rows, int depth) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double sum_g = 0.0, sum_h = 0.0;
    for (int r : rows) {
      sum_g += grads[static_cast<std::size_t>(r)].g;
      sum_h += grads[static_cast<std::size_t>(r)].h;
    }
    tree.nodes[static_cast<std::size_t>(idx)].sum_g = sum_g;
    tree.nodes[static_cast<std::size_t>(idx)].sum_h = sum_h;

    std::optional<SplitCandidate> split;
    if (depth < params.max_depth && rows.size() >= 2) {
      BoostParams effective = params;
      effective.lambda = lambda;
      effective.gamma = gamma;
      split = find_best_split(x, rows, grads, effective, n_threads);
    }
    if (!split) {
      tree.nodes[static_cast<std::size_t>(idx)].weight = leaf_weight(sum_g, sum_h, lambda);
      return idx;
    }

    std::vector<int> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (int r : rows) {
      const double v = x(static_cast<std::size_t>(r), static_cast<std::size_t>(split->feature));
      (v < split->threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    double gl = 0.0, hl = 0.0;
    for (int r : left_rows) {
      gl += grads[static_cast<std::size_t>(r)].g;
      hl += grads[static_cast<std::size_t>(r)].h;
    }
    const double gr = sum_g - gl;
    const double hr = sum_h - hl;

    const int left = build(left_rows, depth + 1);
    const int right = build(right_rows, depth + 1);

    TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    // Recorded gain is recomputed from the children's gradient sums so that
    // it is exactly reproducible from the stored tree.
    node.gain = split_gain(gl, hl, gr, hr, lambda, gamma);
    return idx;
  }
};

}  // namespace

void BoostParams::validate() const {
  if (n_trees < 1) throw ConfigError("boosting: n_trees must be >= 1");
  if (max_depth < 1) throw ConfigError("boosting: max_depth must be >= 1");
  if (lambda < 0.0) throw ConfigError("boosting: lambda must be >= 0");
  if (gamma < 0.0) throw ConfigError("boosting: gamma must be >= 0");
  if (!(shrinkage > 0.0) || shrinkage > 1.0) throw ConfigError("boosting: shrinkage must be in (0, 1]");
  if (min_child_weight < 0.0) throw ConfigError("boosting: min_child_weight must be >= 0");
  if (!(base_score > 0.0) || !(base_score < 1.0)) throw ConfigError("boosting: base_score must be in (0, 1)");
  if (!(subsample > 0.0) || subsample > 1.0) throw ConfigError("boosting: subsample must be in (0, 1]");
}

GradPair logistic_grad(int label, double margin) {
  const double p = sigmoid(margin);
  GradPair out;
  out.g = p - static_cast<double>(label);
  out.h = std::max(p * (1.0 - p), 1e-16);
  return out;
}

double leaf_weight(double sum_g, double sum_h, double lambda) {
  const double denom = sum_h + lambda;
  if (!(denom > 0.0)) throw ModelError("boosting: degenerate leaf, sum_h + lambda must be > 0");
  return -sum_g / denom;
}

double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                (gl + gr) * (gl + gr) / (hl + hr + lambda)) -
         gamma;
}

std::optional<SplitCandidate> find_best_split(const Matrix& x, std::span<const int> rows,
                                              std::span<const GradPair> grads,
                                              const BoostParams& params, int n_threads) {
  if (rows.size() < 2) return std::nullopt;
  const int n_features = static_cast<int>(x.cols());
  std::vector<FeatureBest> per_feature(static_cast<std::size_t>(n_features));
  parallel_for(n_features, n_threads, [&](int f) {
    per_feature[static_cast<std::size_t>(f)] = best_split_on_feature(
        x, rows, grads, f, params.lambda, params.gamma, params.min_child_weight);
  });

  // Reduce in feature order: strict improvement keeps the lowest feature
  // index (and per-feature scans already keep the lowest threshold on ties).
  std::optional<SplitCandidate> best;
  for (int f = 0; f < n_features; ++f) {
    const FeatureBest& fb = per_feature[static_cast<std::size_t>(f)];
    if (!fb.found) continue;
    if (!best || fb.gain > best->gain) {
      best = SplitCandidate{f, fb.threshold, fb.gain};
    }
  }
  return best;
}

Ensemble train(const Matrix& x, std::span<const int> y, const BoostParams& params, int n_threads) {
  params.validate();
  if (x.empty() || y.size() != x.rows()) throw DataError("boosting: X and y sizes do not match");
  const std::size_t n = x.rows();
  bool has_pos = false, has_neg = false;
  for (int label : y) {
    if (label == 1) has_pos = true;
    else if (label == 0) has_neg = true;
    else throw DataError("boosting: labels must be 0 or 1");
  }
  if (!has_pos || !has_neg) throw ModelError("boosting: degenerate training, both classes required");

  const double lambda = params.mode == BoostMode::FirstOrderGBM ? 0.0 : params.lambda;
  const double gamma = params.mode == BoostMode::FirstOrderGBM ? 0.0 : params.gamma;

  Ensemble model;
  model.base_margin = std::log(params.base_score / (1.0 - params.base_score));
  model.shrinkage = params.shrinkage;
  model.n_features = x.cols();
  model.trees.reserve(static_cast<std::size_t>(params.n_trees));

  std::vector<double> margins(n, model.base_margin);
  std::vector<GradPair> grads(n);
  std::vector<int> all_rows(n);
  for (std::size_t i = 0; i < n; ++i) all_rows[i] = static_cast<int>(i);

  std::mt19937_64 rng(params.seed);
  // Bounded draw via rejection; keeps subsampling identical across platforms.
  auto draw_below = [&rng](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
      v = rng();
    } while (v >= limit);
    return v % bound;
  };

  const std::size_t sample_size =
      params.subsample < 1.0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(params.subsample * static_cast<double>(n)))
          : n;

  for (int t = 0; t < params.n_trees; ++t) {
    std::vector<int> rows;
    if (sample_size == n) {
      rows = all_rows;
    } else {
      std::vector<int> pool = all_rows;
      for (std::size_t i = 0; i < sample_size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(draw_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
      }
      rows.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(sample_size));
      std::sort(rows.begin(), rows.end());
    }
    for (int r : rows) {
      grads[static_cast<std::size_t>(r)] =
          logistic_grad(y[static_cast<std::size_t>(r)], margins[static_cast<std::size_t>(r)]);
    }

    TreeBuilder builder{x, grads, params, lambda, gamma, n_threads, {}};
    builder.build(rows, 0);
    Tree tree = std::move(builder.tree);

    for (std::size_t i = 0; i < n; ++i) {
      margins[i] += params.shrinkage * tree.predict(x.row(i));
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

double Tree::predict(std::span<const double> x) const {
  int idx = 0;
  while (!nodes[static_cast<std::size_t>(idx)].is_leaf()) {
    const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
    idx = x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(idx)].weight;
}

double Ensemble::margin(std::span<const double> x) const {
  double sum = 0.0;
  for (const Tree& tree : trees) sum += tree.predict(x);
  return base_margin + shrinkage * sum;
}

double predict_proba(const Ensemble& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw DataError("boosting: input width " + std::to_string(x.size()) + " does not match model width " +
                    std::to_string(model.n_features));
  }
  const double p = sigmoid(model.margin(x));
  return std::clamp(p, 1e-9, 1.0 - 1e-9);
}

std::string dump_model(const Ensemble& model) {
  std::ostringstream out;
  out << "ensemble trees=" << model.trees.size() << " base_margin=" << model.base_margin
      << " shrinkage=" << model.shrinkage << "\n";
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    out << "tree " << t << "\n";
    const auto& nodes = model.trees[t].nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const TreeNode& n = nodes[i];
      if (n.is_leaf()) {
        out << "  node " << i << ": leaf weight=" << n.weight << "\n";
      } else {
        out << "  node " << i << ": feature=" << n.feature << " threshold=" << n.threshold
            << " gain=" << n.gain << " left=" << n.left << " right=" << n.right << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace psmatch
