#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psmatch/matrix.hpp"

namespace psmatch {

/// Second-order boosting (Newton leaf weights, regularized gain) or the
/// regularization-free first-order GBM preset used as a comparison baseline.
enum class BoostMode { SecondOrder, FirstOrderGBM };

struct BoostParams {
  int n_trees = 100;
  int max_depth = 3;
  double lambda = 1.0;            // leaf L2 penalty
  double gamma = 0.0;             // per-leaf split penalty
  double shrinkage = 0.1;
  double min_child_weight = 1.0;  // minimum hessian sum per child
  double base_score = 0.5;        // initial probability
  double subsample = 1.0;
  std::uint64_t seed = 0;
  BoostMode mode = BoostMode::SecondOrder;

  void validate() const;
};

/// First- and second-order gradient statistics of the loss at one instance.
struct GradPair {
  double g = 0.0;
  double h = 0.0;
};

/// Node of a binary axis-aligned regression tree. Routing is strict
/// less-than: x[feature] < threshold goes left. feature < 0 marks a leaf.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaf value
  double gain = 0.0;    // recorded split gain at internal nodes
  double sum_g = 0.0;   // gradient sums over the node's instance set
  double sum_h = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
};

/// Trained boosted-tree model: raw trees plus the initial margin; leaf
/// outputs are scaled by `shrinkage` at prediction time.
struct Ensemble {
  std::vector<Tree> trees;
  double base_margin = 0.0;
  double shrinkage = 0.1;
  std::size_t n_features = 0;

  double margin(std::span<const double> x) const;
};

/// Gradient statistics of the binary logistic loss at a raw margin.
/// With p = sigmoid(margin): g = p - label, h = p*(1-p) clamped below 1e-16.
GradPair logistic_grad(int label, double margin);

/// Newton-step leaf value -sum_g / (sum_h + lambda).
double leaf_weight(double sum_g, double sum_h, double lambda);

/// Loss reduction of a candidate split:
/// 0.5 * [gl^2/(hl+lambda) + gr^2/(hr+lambda) - (gl+gr)^2/(hl+hr+lambda)] - gamma.
double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma);

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Exact greedy split search over every feature and every midpoint between
/// consecutive distinct sorted values. Candidates must leave at least
/// min_child_weight of hessian mass on each side; returns nullopt when no
/// candidate has strictly positive gain. Ties break toward the lowest
/// feature index, then the lowest threshold. `grads` is indexed by row id.
/// The per-feature scan may run on up to n_threads workers; the reduction
/// is order-independent, so results do not depend on the thread count.
std::optional<SplitCandidate> find_best_split(const Matrix& x, std::span<const int> rows,
                                              std::span<const GradPair> grads,
                                              const BoostParams& params, int n_threads = 1);

/// Boosted training for binary labels. Throws ModelError when only one
/// class is present. Deterministic for fixed (x, y, params), independent of
/// n_threads.
Ensemble train(const Matrix& x, std::span<const int> y, const BoostParams& params,
               int n_threads = 1);

/// sigmoid(base_margin + shrinkage * sum of tree outputs), clamped to
/// [1e-9, 1 - 1e-9]. Throws DataError when x width differs from training.
double predict_proba(const Ensemble& model, std::span<const double> x);

/// Human-readable tree listing for debugging; not a stable format.
std::string dump_model(const Ensemble& model);

}  // namespace psmatch
