#include <algorithm>
#include <cmath>
#include <numeric>

#include "model_internal.hpp"
#include "strokeml/classifiers.hpp"
#include "strokeml/error.hpp"
#include "strokeml/random.hpp"

namespace strokeml {

double gini(std::size_t count0, std::size_t count1) {
  const double n = static_cast<double>(count0 + count1);
  if (n == 0.0) return 0.0;
  const double p0 = static_cast<double>(count0) / n;
  const double p1 = static_cast<double>(count1) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

namespace {

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  ///< weighted child impurity
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, const TreeParams& params, std::uint64_t seed)
      : x_(x), y_(y), params_(params), rng_(seed) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> rows, std::size_t depth) {
    TreeNode node;
    for (std::size_t r : rows) (y_[r] == 1 ? node.count1 : node.count0)++;
    node.prediction = node.count1 > node.count0 ? 1 : 0;
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(node);

    const bool pure = node.count0 == 0 || node.count1 == 0;
    if (pure || depth >= params_.max_depth || rows.size() < params_.min_samples_split) return index;

    const double parent = gini(node.count0, node.count1);
    const auto best = best_split(rows, node.count0, node.count1);
    if (!best || best->impurity >= parent - 1e-12) return index;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (x_(r, best->feature) <= best->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int l = grow(std::move(left), depth + 1);
    const int rr = grow(std::move(right), depth + 1);
    TreeNode& n = tree_.nodes[static_cast<std::size_t>(index)];
    n.feature = static_cast<int>(best->feature);
    n.threshold = best->threshold;
    n.left = l;
    n.right = rr;
    return index;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t p = x_.cols();
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), std::size_t{0});
    if (!params_.max_features || *params_.max_features >= p) return features;
    const std::size_t m = std::max<std::size_t>(1, *params_.max_features);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + rng_.uniform_index(p - i);
      std::swap(features[i], features[j]);
    }
    features.resize(m);
    std::sort(features.begin(), features.end());
    return features;
  }

  std::optional<Split> best_split(const std::vector<std::size_t>& rows, std::size_t total0, std::size_t total1) {
    std::optional<Split> best;
    const double n = static_cast<double>(rows.size());
    std::vector<std::size_t> sorted = rows;
    for (std::size_t f : candidate_features()) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        const double va = x_(a, f), vb = x_(b, f);
        return va != vb ? va < vb : a < b;
      });
      std::size_t left0 = 0, left1 = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        (y_[sorted[i]] == 1 ? left1 : left0)++;
        const double v = x_(sorted[i], f);
        const double next = x_(sorted[i + 1], f);
        if (v == next) continue;
        const std::size_t nl = i + 1;
        const double impurity = (static_cast<double>(nl) * gini(left0, left1) +
                                 static_cast<double>(rows.size() - nl) * gini(total0 - left0, total1 - left1)) /
                                n;
        if (!best || impurity < best->impurity) best = Split{f, 0.5 * (v + next), impurity};
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> y_;
  const TreeParams& params_;
  RandomSource rng_;
  DecisionTree tree_;
};

}  // namespace

DecisionTree grow_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                       const TreeParams& params, std::uint64_t seed) {
  return TreeBuilder(x, y, params, seed).build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

TrainedModel train_decision_tree(const EncodedMatrix& data, const ModelSpec& spec) {
  const auto& params = detail::params_as<TreeParams>(spec, "train_decision_tree");
  detail::require_rows(data, 2, "train_decision_tree");
  std::vector<std::size_t> rows(data.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  TrainedModel out{spec, data.feature_names, {}, {}, {}};
  out.params = TreeModel{grow_tree(data.features, data.labels, rows, params, spec.seed)};
  return out;
}

TrainedModel train_random_forest(const EncodedMatrix& data, const ModelSpec& spec) {
  const auto& params = detail::params_as<ForestParams>(spec, "train_random_forest");
  detail::require_rows(data, 2, "train_random_forest");
  if (params.n_trees == 0) throw Error(ErrorKind::InvalidArgument, "forest needs at least one tree");

  const std::size_t n = data.rows();
  const TreeParams tree_params{
      params.max_depth, params.min_samples_split,
      params.max_features ? params.max_features
                          : std::optional<std::size_t>(std::max<std::size_t>(
                                1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(data.cols()))))))};

  ForestModel forest;
  forest.trees.reserve(params.n_trees);
  std::vector<std::size_t> rows(n);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = mix_seeds(spec.seed, t);
    if (params.bootstrap) {
      RandomSource rng(mix_seeds(tree_seed, 0xB00751ULL));
      for (std::size_t i = 0; i < n; ++i) rows[i] = rng.uniform_index(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    forest.trees.push_back(grow_tree(data.features, data.labels, rows, tree_params, tree_seed));
  }
  TrainedModel out{spec, data.feature_names, {}, {}, {}};
  out.params = std::move(forest);
  return out;
}

}  // namespace strokeml
