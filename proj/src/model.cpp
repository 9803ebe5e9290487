#include <algorithm>
#include <cmath>

#include "model_internal.hpp"
#include "strokeml/classifiers.hpp"
#include "strokeml/error.hpp"
#include "strokeml/text_io.hpp"

namespace strokeml {

using nlohmann::json;

std::string_view to_string(Family family) {
  switch (family) {
    case Family::MLP: return "mlp";
    case Family::DecisionTree: return "dt";
    case Family::RandomForest: return "rf";
    case Family::LinearSVM: return "svm";
    case Family::Lasso: return "lasso";
    case Family::ElasticNet: return "elasticnet";
    case Family::CNN: return "cnn";
  }
  return "unknown";
}

Family parse_family(std::string_view text) {
  const std::string t = to_lower(text);
  for (Family f : kAllFamilies) {
    if (t == to_string(f)) return f;
  }
  if (t == "nn") return Family::MLP;
  if (t == "tree" || t == "cart") return Family::DecisionTree;
  if (t == "forest") return Family::RandomForest;
  if (t == "elastic-net" || t == "elastic_net") return Family::ElasticNet;
  throw Error(ErrorKind::InvalidArgument, "unknown model family '" + std::string(text) + "'");
}

ModelSpec ModelSpec::defaults(Family family, std::uint64_t seed) {
  switch (family) {
    case Family::MLP: return {family, MlpParams{}, seed};
    case Family::DecisionTree: return {family, TreeParams{}, seed};
    case Family::RandomForest: return {family, ForestParams{}, seed};
    case Family::LinearSVM: return {family, SvmParams{}, seed};
    case Family::Lasso: return {family, LogRegParams{}, seed};
    case Family::ElasticNet: return {family, LogRegParams{.alpha = 0.5}, seed};
    case Family::CNN: return {family, CnnParams{}, seed};
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model family");
}

namespace {

json optional_size(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::size_t> read_optional_size(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::size_t>();
}

Hyperparameters hyperparameters_from_json(Family family, const json& h) {
  switch (family) {
    case Family::MLP:
      return MlpParams{h.at("hidden"), h.at("learning_rate"), h.at("epochs"), h.at("init_range")};
    case Family::DecisionTree:
      return TreeParams{h.at("max_depth"), h.at("min_samples_split"), read_optional_size(h.at("max_features"))};
    case Family::RandomForest:
      return ForestParams{h.at("n_trees"), h.at("max_depth"), h.at("min_samples_split"),
                          read_optional_size(h.at("max_features")), h.at("bootstrap")};
    case Family::LinearSVM: return SvmParams{h.at("lambda"), h.at("epochs")};
    case Family::Lasso:
    case Family::ElasticNet:
      return LogRegParams{h.at("alpha"), h.at("lambda"), h.at("iterations"), h.at("tolerance")};
    case Family::CNN: return CnnParams{h.at("batch_size"), h.at("learning_rate"), h.at("epochs")};
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model family");
}

}  // namespace

json ModelSpec::hyperparameters_json() const {
  struct Visitor {
    json operator()(const MlpParams& p) const {
      return {{"hidden", p.hidden}, {"learning_rate", p.learning_rate}, {"epochs", p.epochs}, {"init_range", p.init_range}};
    }
    json operator()(const TreeParams& p) const {
      return {{"max_depth", p.max_depth}, {"min_samples_split", p.min_samples_split},
              {"max_features", optional_size(p.max_features)}};
    }
    json operator()(const ForestParams& p) const {
      return {{"n_trees", p.n_trees},
              {"max_depth", p.max_depth},
              {"min_samples_split", p.min_samples_split},
              {"max_features", optional_size(p.max_features)},
              {"bootstrap", p.bootstrap}};
    }
    json operator()(const SvmParams& p) const { return {{"lambda", p.lambda}, {"epochs", p.epochs}}; }
    json operator()(const LogRegParams& p) const {
      return {{"alpha", p.alpha}, {"lambda", p.lambda}, {"iterations", p.iterations}, {"tolerance", p.tolerance}};
    }
    json operator()(const CnnParams& p) const {
      return {{"batch_size", p.batch_size}, {"learning_rate", p.learning_rate}, {"epochs", p.epochs}};
    }
  };
  return std::visit(Visitor{}, params);
}

void ModelSpec::set_hyperparameter(std::string_view name, std::string_view value) {
  json h = hyperparameters_json();
  const std::string key(name);
  if (!h.contains(key)) {
    throw Error(ErrorKind::InvalidArgument,
                "no hyperparameter '" + key + "' for model " + std::string(to_string(family)));
  }
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    throw Error(ErrorKind::InvalidArgument, "bad value '" + std::string(value) + "' for " + key);
  }
  const json& current = h[key];
  const bool compatible = key == "max_features"
                              ? (parsed.is_null() || parsed.is_number_unsigned())
                              : ((current.is_boolean() && parsed.is_boolean()) ||
                                 (current.is_number() && parsed.is_number()));
  if (!compatible || (key != "max_features" && current.is_number_unsigned() && !parsed.is_number_unsigned())) {
    throw Error(ErrorKind::InvalidArgument, "bad value '" + std::string(value) + "' for " + key);
  }
  h[key] = parsed;
  try {
    params = hyperparameters_from_json(family, h);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "bad value for " + key + ": " + e.what());
  }
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s{std::vector<double>(x.cols(), 0.0), std::vector<double>(x.cols(), 1.0)};
  const std::size_t n = x.rows();
  if (n == 0) return s;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    s.means[j] = mean;
    s.sds[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - means[j]) / sds[j];
  return out;
}

TrainedModel train(const EncodedMatrix& data, const ModelSpec& spec) {
  switch (spec.family) {
    case Family::MLP: return train_mlp(data, spec);
    case Family::DecisionTree: return train_decision_tree(data, spec);
    case Family::RandomForest: return train_random_forest(data, spec);
    case Family::LinearSVM: return train_linear_svm(data, spec);
    case Family::Lasso:
    case Family::ElasticNet: return train_penalized_logreg(data, spec);
    case Family::CNN: return train_cnn(data, spec);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model family");
}

Prediction predict(const TrainedModel& model, const EncodedMatrix& data, double threshold) {
  if (data.feature_names != model.feature_names) {
    throw Error(ErrorKind::SchemaMismatch, "model was trained on a different set of columns");
  }
  Prediction out;
  const std::size_t n = data.rows();
  out.labels.reserve(n);
  const auto by_probability = [&](auto&& prob) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = prob(i);
      out.probabilities.push_back(p);
      out.labels.push_back(p > threshold ? 1 : 0);
    }
  };

  struct Visitor {
    const EncodedMatrix& data;
    Prediction& out;
    const decltype(by_probability)& emit;
    std::size_t n;

    void operator()(const MlpModel& m) const {
      const Matrix x = m.scaler.apply(data.features);
      emit([&](std::size_t i) { return m.net.probability(x.row(i)); });
    }
    void operator()(const CnnModel& m) const {
      const Matrix x = m.scaler.apply(data.features);
      emit([&](std::size_t i) { return m.net.probability(x.row(i)); });
    }
    void operator()(const LogRegModel& m) const {
      const Matrix x = m.scaler.apply(data.features);
      emit([&](std::size_t i) { return detail::sigmoid(dot(m.weights, x.row(i)) + m.intercept); });
    }
    void operator()(const SvmModel& m) const {
      const Matrix x = m.scaler.apply(data.features);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = m.decision(x.row(i));
        out.scores.push_back(d);
        out.labels.push_back(d > 0.0 ? 1 : 0);
      }
    }
    void operator()(const TreeModel& m) const {
      for (std::size_t i = 0; i < n; ++i) {
        const TreeNode& leaf = m.tree.nodes[m.tree.leaf_index(data.features.row(i))];
        const std::size_t total = leaf.count0 + leaf.count1;
        out.probabilities.push_back(total ? static_cast<double>(leaf.count1) / static_cast<double>(total) : 0.0);
        out.labels.push_back(leaf.prediction);
      }
    }
    void operator()(const ForestModel& m) const {
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t votes1 = 0;
        for (const auto& tree : m.trees) votes1 += tree.predict(data.features.row(i)) == 1 ? 1 : 0;
        const std::size_t votes0 = m.trees.size() - votes1;
        out.probabilities.push_back(static_cast<double>(votes1) / static_cast<double>(m.trees.size()));
        out.labels.push_back(votes1 > votes0 ? 1 : 0);
      }
    }
  };
  std::visit(Visitor{data, out, by_probability, n}, model.params);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json scaler_json(const Standardizer& s) { return {{"means", s.means}, {"sds", s.sds}}; }

Standardizer scaler_from(const json& j) {
  return {j.at("means").get<std::vector<double>>(), j.at("sds").get<std::vector<double>>()};
}

json tree_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.prediction, n.count0, n.count1});
  }
  return nodes;
}

DecisionTree tree_from(const json& j) {
  DecisionTree t;
  for (const auto& n : j) {
    t.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                       n.at(4).get<int>(), n.at(5).get<std::size_t>(), n.at(6).get<std::size_t>()});
  }
  return t;
}

}  // namespace

json TrainedModel::to_json() const {
  struct Visitor {
    json operator()(const MlpModel& m) const {
      return {{"scaler", scaler_json(m.scaler)}, {"inputs", m.net.inputs}, {"hidden", m.net.hidden},
              {"weights", m.net.parameters()}};
    }
    json operator()(const CnnModel& m) const {
      return {{"scaler", scaler_json(m.scaler)}, {"weights", m.net.parameters()}};
    }
    json operator()(const LogRegModel& m) const {
      return {{"scaler", scaler_json(m.scaler)}, {"weights", m.weights}, {"intercept", m.intercept}};
    }
    json operator()(const SvmModel& m) const {
      return {{"scaler", scaler_json(m.scaler)}, {"weights", m.weights}, {"bias", m.bias}};
    }
    json operator()(const TreeModel& m) const { return {{"tree", tree_json(m.tree)}}; }
    json operator()(const ForestModel& m) const {
      json trees = json::array();
      for (const auto& t : m.trees) trees.push_back(tree_json(t));
      return {{"trees", trees}};
    }
  };
  return {{"format_version", kModelFormatVersion},
          {"family", to_string(spec.family)},
          {"seed", spec.seed},
          {"hyperparameters", spec.hyperparameters_json()},
          {"features", feature_names},
          {"parameters", std::visit(Visitor{}, params)},
          {"loss_trace", loss_trace},
          {"warnings", warnings}};
}

TrainedModel TrainedModel::from_json(const json& j) {
  if (j.at("format_version").get<int>() != kModelFormatVersion) {
    throw Error(ErrorKind::InvalidArgument, "unsupported model format version");
  }
  TrainedModel m;
  m.spec.family = parse_family(j.at("family").get<std::string>());
  m.spec.seed = j.at("seed").get<std::uint64_t>();
  m.spec.params = hyperparameters_from_json(m.spec.family, j.at("hyperparameters"));
  m.feature_names = j.at("features").get<std::vector<std::string>>();
  m.loss_trace = j.at("loss_trace").get<std::vector<double>>();
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  const json& p = j.at("parameters");
  switch (m.spec.family) {
    case Family::MLP: {
      MlpModel mm{scaler_from(p.at("scaler")), MlpNetwork(p.at("inputs"), p.at("hidden"))};
      mm.net.set_parameters(p.at("weights").get<std::vector<double>>());
      m.params = std::move(mm);
      break;
    }
    case Family::CNN: {
      CnnModel cm{scaler_from(p.at("scaler")), CnnNetwork()};
      cm.net.set_parameters(p.at("weights").get<std::vector<double>>());
      m.params = std::move(cm);
      break;
    }
    case Family::Lasso:
    case Family::ElasticNet:
      m.params = LogRegModel{scaler_from(p.at("scaler")), p.at("weights").get<std::vector<double>>(),
                             p.at("intercept").get<double>()};
      break;
    case Family::LinearSVM:
      m.params = SvmModel{scaler_from(p.at("scaler")), p.at("weights").get<std::vector<double>>(),
                          p.at("bias").get<double>()};
      break;
    case Family::DecisionTree: m.params = TreeModel{tree_from(p.at("tree"))}; break;
    case Family::RandomForest: {
      ForestModel f;
      for (const auto& t : p.at("trees")) f.trees.push_back(tree_from(t));
      m.params = std::move(f);
      break;
    }
  }
  return m;
}

}  // namespace strokeml
