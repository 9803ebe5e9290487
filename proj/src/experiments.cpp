#include "strokeml/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "strokeml/error.hpp"
#include "strokeml/random.hpp"
#include "strokeml/sampling.hpp"
#include "strokeml/text_io.hpp"

namespace strokeml {

FeatureSet FeatureSet::of(std::vector<Feature> features) {
  if (features.empty()) throw Error(ErrorKind::InvalidArgument, "custom feature set is empty");
  for (std::size_t i = 0; i < features.size(); ++i)
    for (std::size_t j = i + 1; j < features.size(); ++j)
      if (features[i] == features[j]) {
        throw Error(ErrorKind::InvalidArgument, "duplicate feature " + std::string(name_of(features[i])));
      }
  return {Kind::Custom, std::move(features), 2, true};
}

FeatureSet FeatureSet::principal_components(std::size_t k, bool train_fold_only) {
  if (k < 1 || k > kFeatureCount) throw Error(ErrorKind::InvalidArgument, "component count must be in [1, 10]");
  return {Kind::PrincipalComponents, {}, k, train_fold_only};
}

FeatureSet FeatureSet::parse(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "all") return all();
  if (t == "top4" || t == "topfour") return top_four();
  if (t.starts_with("pc:")) {
    const std::string k = t.substr(3);
    if (k.empty() || !std::all_of(k.begin(), k.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw Error(ErrorKind::InvalidArgument, "bad component count in '" + std::string(text) + "'");
    }
    return principal_components(std::stoul(k));
  }
  if (t.starts_with("custom:")) {
    std::vector<Feature> features;
    for (const auto& item : split_csv_line(t.substr(7))) {
      auto f = parse_feature(item);
      if (!f) throw Error(ErrorKind::InvalidArgument, "unknown feature '" + item + "'");
      features.push_back(*f);
    }
    return of(std::move(features));
  }
  throw Error(ErrorKind::InvalidArgument, "unknown feature set '" + std::string(text) + "'");
}

std::string FeatureSet::label() const {
  switch (kind) {
    case Kind::All: return "all";
    case Kind::TopFour: return "top4";
    case Kind::PrincipalComponents: return "pc:" + std::to_string(components) + (pca_train_fold_only ? "" : ":global");
    case Kind::Custom: {
      std::string s = "custom:";
      for (std::size_t i = 0; i < custom.size(); ++i) s += (i ? "," : "") + std::string(symbol_of(custom[i]));
      return s;
    }
  }
  return "unknown";
}

std::vector<Feature> FeatureSet::features() const {
  switch (kind) {
    case Kind::All: return {kAllFeatures.begin(), kAllFeatures.end()};
    case Kind::TopFour: return kTopFourFeatures;
    case Kind::Custom: return custom;
    case Kind::PrincipalComponents: return {};
  }
  return {};
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"features", features.label()},
          {"model", {{"family", to_string(model.family)}, {"seed", model.seed}, {"hyperparameters", model.hyperparameters_json()}}},
          {"runs", runs},
          {"master_seed", master_seed},
          {"train_fraction", train_fraction},
          {"stratified", stratified},
          {"metrics_mode", to_string(metrics_mode)},
          {"balanced", balanced}};
}

std::string ExperimentConfig::digest() const { return hex64(fnv1a(to_json().dump())); }

std::string BenchmarkResult::runs_csv() const {
  std::string out = "run,seed,precision,recall,f_score,accuracy,miss_rate,fallout_rate,zero_denominator\n";
  for (const auto& r : runs) {
    out += std::to_string(r.index) + ',' + std::to_string(r.seed);
    for (std::string_view m : kMetricNames) out += ',' + format_double(metric_value(r.report, m));
    out += std::string(",") + (r.report.zero_denominator ? "1" : "0") + '\n';
  }
  return out;
}

nlohmann::json BenchmarkResult::to_json() const {
  nlohmann::json j = aggregate.to_json();
  std::vector<std::uint64_t> seeds;
  for (const auto& r : runs) seeds.push_back(r.seed);
  j["seeds"] = seeds;
  return j;
}

PreparedFeatures prepare_features(const FeatureSet& features, const EncodedMatrix& all_rows,
                                  const EncodedMatrix& train, const EncodedMatrix& test) {
  if (features.kind != FeatureSet::Kind::PrincipalComponents) {
    const auto cols = features.features();
    return {train.select_features(cols), test.select_features(cols), std::nullopt};
  }
  const auto base = FeatureSet::all().features();
  const EncodedMatrix fit_rows = features.pca_train_fold_only ? train.select_features(base)
                                                              : all_rows.select_features(base);
  PCAModel model = fit_pca(fit_rows);
  PreparedFeatures out{project(model, train.select_features(base), features.components),
                       project(model, test.select_features(base), features.components), std::nullopt};
  out.projection = std::move(model);
  return out;
}

RunResult run_single(const ExperimentConfig& config, const EncodedMatrix& data, std::uint64_t run_seed,
                     std::size_t index) {
  const EncodedMatrix pool = config.balanced ? balanced_downsample(data, run_seed) : data;
  const TrainTestSplit parts = split(pool, {config.train_fraction, config.stratified, mix_seeds(run_seed, 1)});
  const PreparedFeatures prepared = prepare_features(config.features, data, parts.train, parts.test);

  ModelSpec spec = config.model;
  spec.seed = mix_seeds(run_seed, config.model.seed);
  const TrainedModel model = train(prepared.train, spec);
  const Prediction prediction = predict(model, prepared.test);
  const ConfusionMatrix cm = confusion(prediction.labels, prepared.test.labels);

  return {index, run_seed, compute_metrics(cm, config.metrics_mode), model.input_count(), prepared.train.rows(),
          prepared.test.rows()};
}

BenchmarkResult run_benchmark(const ExperimentConfig& config, const EncodedMatrix& data) {
  if (config.runs == 0) throw Error(ErrorKind::InvalidArgument, "run count must be at least 1");
  const auto seeds = derive_run_seeds(config.master_seed, config.runs);
  BenchmarkResult result;
  result.runs.resize(seeds.size());

  const std::size_t workers = std::clamp<std::size_t>(config.threads, 1, seeds.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) result.runs[i] = run_single(config, data, seeds[i], i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
          try {
            result.runs[i] = run_single(config, data, seeds[i], i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<MetricsReport> reports;
  for (const auto& r : result.runs) reports.push_back(r.report);
  result.aggregate = aggregate(reports);
  return result;
}

namespace {

std::string stage_label(const std::vector<Feature>& features) {
  std::string s;
  for (std::size_t i = 0; i < features.size(); ++i) s += (i ? "+" : "") + std::string(symbol_of(features[i]));
  return s;
}

AblationStage run_stage(const ExperimentConfig& config, const EncodedMatrix& data, std::vector<Feature> features,
                        std::string label) {
  ExperimentConfig stage = config;
  stage.features = FeatureSet::of(features);
  return {std::move(label), std::move(features), run_benchmark(stage, data)};
}

}  // namespace

std::string AblationResult::to_csv() const {
  std::string out = "stage,label,run,seed,accuracy,miss_rate\n";
  for (std::size_t s = 0; s < stages.size(); ++s) {
    for (const auto& r : stages[s].result.runs) {
      out += std::to_string(s) + ',' + stages[s].label + ',' + std::to_string(r.index) + ',' + std::to_string(r.seed) +
             ',' + format_double(r.report.accuracy) + ',' + format_double(r.report.miss_rate) + '\n';
    }
  }
  return out;
}

nlohmann::json AblationResult::to_json() const {
  nlohmann::json stages_json = nlohmann::json::array();
  for (const auto& s : stages) {
    std::vector<std::string> names;
    for (Feature f : s.features) names.emplace_back(symbol_of(f));
    const auto& acc = s.result.aggregate["accuracy"];
    const auto& miss = s.result.aggregate["miss_rate"];
    stages_json.push_back({{"label", s.label},
                           {"features", names},
                           {"accuracy", {{"mean", acc.mean}, {"variance", acc.variance}}},
                           {"miss_rate", {{"mean", miss.mean}, {"variance", miss.variance}}}});
  }
  return {{"kind", kind}, {"stages", stages_json}};
}

AblationResult ablation_add(const ExperimentConfig& config, const EncodedMatrix& data, const std::vector<Feature>& base,
                            const std::vector<Feature>& order) {
  std::vector<Feature> current = FeatureSet::of(base).custom;
  for (Feature f : kAllFeatures) {
    const bool covered = std::find(current.begin(), current.end(), f) != current.end() ||
                         std::find(order.begin(), order.end(), f) != order.end();
    if (!covered) throw Error(ErrorKind::InvalidArgument, "addition order does not cover all features");
  }
  AblationResult result{"add", {}};
  result.stages.push_back(run_stage(config, data, current, stage_label(current)));
  for (Feature f : order) {
    if (std::find(current.begin(), current.end(), f) != current.end()) continue;
    current.push_back(f);
    result.stages.push_back(run_stage(config, data, current, "+" + std::string(symbol_of(f))));
  }
  return result;
}

AblationResult ablation_remove(const ExperimentConfig& config, const EncodedMatrix& data) {
  AblationResult result{"remove", {}};
  for (Feature removed : kAllFeatures) {
    std::vector<Feature> features;
    for (Feature f : kAllFeatures)
      if (f != removed) features.push_back(f);
    result.stages.push_back(run_stage(config, data, features, "-" + std::string(symbol_of(removed))));
  }
  return result;
}

}  // namespace strokeml
