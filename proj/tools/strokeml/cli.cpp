#include "strokeml/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "strokeml/classifiers.hpp"
#include "strokeml/data_ingest.hpp"
#include "strokeml/error.hpp"
#include "strokeml/experiments.hpp"
#include "strokeml/metrics.hpp"
#include "strokeml/pca.hpp"
#include "strokeml/random.hpp"
#include "strokeml/sampling.hpp"
#include "strokeml/stats.hpp"
#include "strokeml/text_io.hpp"

namespace strokeml::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Bad flag values discovered after parsing; reported like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr const char* kOutputDirEnv = "STROKEML_OUTPUT_DIR";

struct CommonOptions {
  std::string input;
  std::string output_dir = "strokeml-out";
  std::uint64_t seed = 42;
  std::string config;
  bool strict = false;
};

struct ExperimentOptions {
  std::string model = "mlp";
  std::string features = "all";
  std::size_t runs = 100;
  double train_fraction = 0.70;
  std::string metrics_mode = "positive";
  bool balanced = true;
  bool stratified = true;
  bool pca_global = false;
  std::size_t threads = 1;
  std::vector<std::string> params;
};

/// Collects artifacts for one invocation and writes the manifest last.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  void write(const std::string& name, std::string_view content) {
    write_text_file(root_ / name, content);
    artifacts_.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + '\n'); }

  void write_manifest(const std::string& subcommand, const json& config, std::uint64_t seed, const std::string& input,
                      std::chrono::steady_clock::time_point started) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    const json manifest = {{"tool", "strokeml"},
                           {"version", kVersion},
                           {"subcommand", subcommand},
                           {"input", input},
                           {"config", config},
                           {"config_digest", hex64(fnv1a(config.dump()))},
                           {"master_seed", seed},
                           {"artifacts", artifacts_},
                           {"finished_at", stamp},
                           {"wall_time_seconds", wall}};
    write_text_file(root_ / "manifest.json", manifest.dump(2) + '\n');
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::vector<std::string> artifacts_;
};

struct LoadedData {
  std::vector<EHRRecord> records;
  EncodingMap map;
  EncodedMatrix encoded;
  std::size_t rejected = 0;
};

LoadedData load(const CommonOptions& o, std::ostream& err) {
  const std::string& input = o.input;
  ParseResult parsed = parse_csv(input, default_schema(), o.strict);
  for (std::size_t i = 0; i < parsed.rejected.size() && i < 5; ++i) {
    const auto& r = parsed.rejected[i];
    err << "warning: skipped row " << r.row << " (" << r.column << ": " << r.reason << ")\n";
  }
  if (parsed.rejected.size() > 5) err << "warning: " << parsed.rejected.size() << " rows skipped in total\n";
  LoadedData d;
  d.rejected = parsed.rejected.size();
  d.records = std::move(parsed.records);
  d.map = fit_encoding(d.records);
  d.encoded = encode(d.records, d.map, input);
  return d;
}

// ---------------------------------------------------------------------------
// Config files: JSON objects or TOML, merged beneath command-line flags.

std::vector<std::string> config_values(const json& v) {
  if (v.is_string()) return {v.get<std::string>()};
  if (v.is_boolean()) return {v.get<bool>() ? "true" : "false"};
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const auto& e : v) {
      auto inner = config_values(e);
      out.insert(out.end(), inner.begin(), inner.end());
    }
    return out;
  }
  return {v.dump()};
}

std::vector<std::pair<std::string, std::vector<std::string>>> read_config(const std::string& path,
                                                                          const std::string& subcommand) {
  const std::string text = read_text_file(path);
  std::vector<std::pair<std::string, std::vector<std::string>>> items;
  if (trim(text).starts_with("{")) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        if (key != subcommand) continue;
        for (const auto& [k2, v2] : value.items()) items.emplace_back(k2, config_values(v2));
      } else {
        items.emplace_back(key, config_values(value));
      }
    }
  } else {
    std::istringstream in(text);
    for (const auto& item : CLI::ConfigTOML().from_config(in)) {
      const bool top = item.parents.empty() || (item.parents.size() == 1 && item.parents[0] == "default");
      const bool ours = item.parents.size() == 1 && item.parents[0] == subcommand;
      if ((top || ours) && item.name != "++" && item.name != "--") items.emplace_back(item.name, item.inputs);
    }
  }
  return items;
}

void merge_config(CLI::App* sub, const std::string& path) {
  for (auto& [name, values] : read_config(path, sub->get_name())) {
    std::string flag = name;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (flag == "config") continue;
    CLI::Option* opt = sub->get_option_no_throw("--" + flag);
    if (opt == nullptr) throw UsageError("config key '" + name + "' is not an option of '" + sub->get_name() + "'");
    if (opt->count() > 0) continue;
    for (const auto& v : values) opt->add_result(v);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("config key '" + name + "': " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Option registration

void add_common(CLI::App* sub, CommonOptions& o, bool reads_input = true) {
  sub->add_option("--input,-i", o.input, "EHR CSV file (required except for synth)");
  sub->add_option("--output-dir,-o", o.output_dir, "Directory for artifacts")
      ->envname(kOutputDirEnv)
      ->capture_default_str();
  sub->add_option("--seed", o.seed, "Master random seed")->capture_default_str();
  sub->add_option("--config", o.config, "JSON or TOML file with defaults for these flags");
  if (reads_input) sub->add_flag("--strict", o.strict, "Fail on the first malformed row instead of skipping it");
}

void add_experiment(CLI::App* sub, ExperimentOptions& e, bool with_runs) {
  sub->add_option("--model", e.model, "mlp, dt, rf, svm, lasso, elasticnet or cnn")->capture_default_str();
  sub->add_option("--features", e.features, "all, top4, custom:<A,HD,...> or pc:<k>")->capture_default_str();
  if (with_runs) {
    sub->add_option("--runs", e.runs, "Number of seeded runs")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--threads", e.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
  sub->add_option("--train-fraction", e.train_fraction, "Share of rows used for training")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--metrics-mode", e.metrics_mode, "positive or macro")
      ->check(CLI::IsMember({"positive", "macro"}))
      ->capture_default_str();
  sub->add_flag("--balanced,!--no-balanced", e.balanced, "Downsample negatives to the positive count (default: on)");
  sub->add_flag("--stratified,!--no-stratified", e.stratified, "Stratify the train/test split by class (default: on)");
  sub->add_flag("--pca-global", e.pca_global, "Fit principal components on all rows instead of the training fold");
  sub->add_option("--param", e.params, "Hyperparameter override name=value (repeatable)");
}

ExperimentConfig make_config(const ExperimentOptions& e, std::uint64_t seed) {
  ExperimentConfig c;
  try {
    c.features = FeatureSet::parse(e.features);
    if (c.features.kind == FeatureSet::Kind::PrincipalComponents) c.features.pca_train_fold_only = !e.pca_global;
    c.model = ModelSpec::defaults(parse_family(e.model));
    for (const auto& p : e.params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw UsageError("--param expects name=value, got '" + p + "'");
      c.model.set_hyperparameter(p.substr(0, eq), p.substr(eq + 1));
    }
    c.metrics_mode = parse_averaging_mode(e.metrics_mode);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::InvalidArgument) throw UsageError(err.what());
    throw;
  }
  if (!(e.train_fraction > 0.0 && e.train_fraction < 1.0)) throw UsageError("--train-fraction must be in (0, 1)");
  c.runs = e.runs;
  c.master_seed = seed;
  c.train_fraction = e.train_fraction;
  c.stratified = e.stratified;
  c.balanced = e.balanced;
  c.threads = e.threads;
  return c;
}

std::vector<Feature> ranking_order(const ImportanceRanking& ranking) {
  std::vector<Feature> order;
  for (const auto& e : ranking.entries) order.push_back(*parse_feature(e.feature));
  return order;
}

// ---------------------------------------------------------------------------
// Subcommands. Each returns the config JSON recorded in the manifest.

json cmd_inspect(const CommonOptions& o, OutputDir& out, std::ostream& log, std::ostream& err) {
  const LoadedData d = load(o, err);
  std::size_t missing_bmi = 0;
  std::size_t unknown_smoking = 0;
  for (const auto& r : d.records) {
    missing_bmi += r.bmi ? 0 : 1;
    unknown_smoking += r.smoking_status == kUnknownSmoking ? 1 : 0;
  }
  const json summary = {{"rows", d.records.size()},
                        {"rejected_rows", d.rejected},
                        {"stroke_positive", d.encoded.count_label(1)},
                        {"stroke_negative", d.encoded.count_label(0)},
                        {"missing_bmi", missing_bmi},
                        {"unknown_smoking_status", unknown_smoking},
                        {"encoding_digest", d.map.digest()}};
  out.write_json("summary.json", summary);
  out.write_json("encoding.json", d.map.to_json());
  out.write("encoded.csv", d.encoded.to_csv());
  log << "rows " << d.records.size() << " (stroke " << d.encoded.count_label(1) << "), rejected " << d.rejected
      << ", missing bmi " << missing_bmi << '\n';
  return json::object();
}

json cmd_correlate(const CommonOptions& o, OutputDir& out, std::ostream& log, std::ostream& err) {
  const LoadedData d = load(o, err);
  const CorrelationMatrix cm = correlation_matrix(d.encoded);
  out.write("correlation.csv", cm.to_csv());
  out.write_json("encoding.json", d.map.to_json());
  log << "corr(age, ever_married) = " << format_double(cm.at("age", "ever_married")) << '\n'
      << "corr(age, work_type) = " << format_double(cm.at("age", "work_type")) << '\n'
      << "corr(work_type, ever_married) = " << format_double(cm.at("work_type", "ever_married")) << '\n';
  return json::object();
}

json cmd_importance(const CommonOptions& o, OutputDir& out, std::ostream& log, std::ostream& err) {
  const LoadedData d = load(o, err);
  const ImportanceRanking ranking = auc_importance(d.encoded);
  out.write_json("importance.json", ranking.to_json());
  std::string csv = "rank,feature,score,auc\n";
  for (const auto& e : ranking.entries) {
    csv += std::to_string(e.rank) + ',' + e.feature + ',' + format_double(e.score) + ',' + format_double(e.auc) + '\n';
    log << e.rank << ". " << e.feature << " " << format_double(e.score) << '\n';
  }
  out.write("importance.csv", csv);
  return json::object();
}

json cmd_chads2(const CommonOptions& o, const Chads2Config& config, OutputDir& out, std::ostream& log,
                std::ostream& err) {
  const LoadedData d = load(o, err);
  const Chads2Result result = chads2_analysis(d.records, config);
  out.write_json("chads2.json", result.to_json());
  std::string csv = "score,count,stroke_count,stroke_proportion\n";
  for (const auto& [score, count] : result.histogram) {
    csv += std::to_string(score) + ',' + std::to_string(count) + ',' + std::to_string(result.positives.at(score)) +
           ',' + format_double(result.stroke_proportion.at(score)) + '\n';
    log << "score " << score << ": " << count << " records, stroke proportion "
        << format_double(result.stroke_proportion.at(score)) << '\n';
  }
  out.write("chads2_histogram.csv", csv);
  return {{"age_threshold", config.age_threshold}, {"diabetes_glucose_threshold", config.diabetes_glucose_threshold}};
}

json cmd_pca(const CommonOptions& o, bool balanced, double threshold, OutputDir& out, std::ostream& log,
             std::ostream& err) {
  const LoadedData d = load(o, err);
  const EncodedMatrix data = balanced ? balanced_downsample(d.encoded, o.seed) : d.encoded;
  const PCAModel model = fit_pca(data);
  out.write("scree.csv", scree_csv(model));
  out.write("loadings.csv", loadings_csv(loadings_report(model, threshold)));
  out.write("biplot.csv", biplot_csv(biplot_coords(model)));
  out.write("scores.csv", scores_csv(transform(model, data, 2), data.labels));
  out.write_json("pca_model.json", model.to_json());
  if (balanced) {
    // Same observations projected with the model fitted on every row.
    const PCAModel full = fit_pca(d.encoded);
    out.write("scores_full_fit.csv", scores_csv(transform(full, data, 2), data.labels));
  }
  log << "rows " << data.rows() << ", PC1+PC2 explain " << format_double(model.cumulative_ratio(2))
      << ", PC1..PC8 explain " << format_double(model.cumulative_ratio(8)) << '\n';
  return {{"balanced", balanced}, {"threshold", threshold}};
}

json cmd_train(const CommonOptions& o, const ExperimentOptions& e, OutputDir& out, std::ostream& log,
               std::ostream& err) {
  const ExperimentConfig config = make_config(e, o.seed);
  const LoadedData d = load(o, err);
  const EncodedMatrix pool = config.balanced ? balanced_downsample(d.encoded, o.seed) : d.encoded;
  const TrainTestSplit parts = split(pool, {config.train_fraction, config.stratified, mix_seeds(o.seed, 1)});
  const PreparedFeatures prepared = prepare_features(config.features, d.encoded, parts.train, parts.test);
  ModelSpec spec = config.model;
  spec.seed = mix_seeds(o.seed, config.model.seed);
  const TrainedModel model = train(prepared.train, spec);
  for (const auto& w : model.warnings) err << "warning: " << w << '\n';
  const Prediction prediction = predict(model, prepared.test);
  const ConfusionMatrix cm = confusion(prediction.labels, prepared.test.labels);
  const MetricsReport report = compute_metrics(cm, config.metrics_mode);

  out.write_json("model.json", model.to_json());
  if (prepared.projection) out.write_json("projection.json", prepared.projection->to_json());
  out.write_json("metrics.json", {{"metrics", report.to_json()},
                                  {"confusion", {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}}},
                                  {"train_rows", prepared.train.rows()},
                                  {"test_rows", prepared.test.rows()}});
  std::string csv = "row_id,stroke,predicted,probability\n";
  for (std::size_t i = 0; i < prepared.test.rows(); ++i) {
    csv += std::to_string(prepared.test.row_ids[i]) + ',' + std::to_string(prepared.test.labels[i]) + ',' +
           std::to_string(prediction.labels[i]) + ',' +
           (prediction.probabilities.empty() ? std::string() : format_double(prediction.probabilities[i])) + '\n';
  }
  out.write("predictions.csv", csv);
  log << to_string(config.model.family) << " on " << config.features.label() << ": accuracy "
      << format_double(report.accuracy) << ", miss rate " << format_double(report.miss_rate) << '\n';
  json c = config.to_json();
  c.erase("runs");
  return c;
}

json cmd_benchmark(const CommonOptions& o, const ExperimentOptions& e, double bin_width, OutputDir& out,
                   std::ostream& log, std::ostream& err) {
  const ExperimentConfig config = make_config(e, o.seed);
  if (!(bin_width > 0.0 && bin_width <= 1.0)) throw UsageError("--bin-width must be in (0, 1]");
  const LoadedData d = load(o, err);
  const BenchmarkResult result = run_benchmark(config, d.encoded);
  out.write("metrics.csv", result.runs_csv());
  json aggregate = result.to_json();
  aggregate["config"] = config.to_json();
  out.write_json("aggregate.json", aggregate);
  out.write("histogram.csv", histogram_csv(result.aggregate["accuracy"].values, bin_width));
  const auto& acc = result.aggregate["accuracy"];
  log << to_string(config.model.family) << " on " << config.features.label() << " over " << config.runs
      << " runs: accuracy " << format_double(acc.mean) << " (variance " << format_double(acc.variance)
      << "), miss rate " << format_double(result.aggregate["miss_rate"].mean) << '\n';
  json c = config.to_json();
  c["bin_width"] = bin_width;
  return c;
}

json cmd_ablate(const CommonOptions& o, const ExperimentOptions& e, const std::string& mode, OutputDir& out,
                std::ostream& log, std::ostream& err) {
  const ExperimentConfig config = make_config(e, o.seed);
  const LoadedData d = load(o, err);
  AblationResult result;
  json extra = json::object();
  if (mode == "add") {
    const ImportanceRanking ranking = auc_importance(d.encoded);
    const std::vector<Feature> base = {Feature::Age, Feature::HeartDisease, Feature::AvgGlucose};
    result = ablation_add(config, d.encoded, base, ranking_order(ranking));
    extra["importance_order"] = ranking.ordered_names();
  } else {
    result = ablation_remove(config, d.encoded);
  }
  out.write("ablation.csv", result.to_csv());
  json j = result.to_json();
  j.update(extra);
  out.write_json("ablation.json", j);
  for (const auto& s : result.stages) {
    log << s.label << ": accuracy " << format_double(s.result.aggregate["accuracy"].mean) << ", miss rate "
        << format_double(s.result.aggregate["miss_rate"].mean) << '\n';
  }
  json c = config.to_json();
  c.erase("features");
  c["mode"] = mode;
  return c;
}

json cmd_synth(const CommonOptions& o, std::size_t rows, double balance, OutputDir& out, std::ostream& log) {
  std::vector<EHRRecord> records;
  try {
    records = synthesize(rows, balance, o.seed);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  out.write("synthetic.csv", to_csv(records));
  log << "wrote " << records.size() << " synthetic records to " << (out.root() / "synthetic.csv").string() << '\n';
  return {{"rows", rows}, {"balance", balance}};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stroke EHR analytics workbench: correlation, importance, CHADS2, PCA and classifier benchmarks",
               "strokeml"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);

  CommonOptions common;
  ExperimentOptions experiment;
  Chads2Config chads2;
  bool pca_balanced = false;
  double loading_threshold = kStrongLoadingThreshold;
  double bin_width = 0.02;
  std::string ablate_mode = "remove";
  std::size_t synth_rows = 5110;
  double synth_balance = 0.0487;

  auto* inspect = app.add_subcommand("inspect", "Parse, validate and encode the input; write the encoding map");
  add_common(inspect, common);

  auto* correlate = app.add_subcommand("correlate", "Pearson correlation matrix of the ten encoded features");
  add_common(correlate, common);

  auto* importance = app.add_subcommand("importance", "Per-feature ROC-AUC importance ranking");
  add_common(importance, common);

  auto* chads = app.add_subcommand("chads2", "CHADS2 score distribution and stroke proportion per score");
  add_common(chads, common);
  chads->add_option("--age-threshold", chads2.age_threshold, "Age at which the A component fires")
      ->capture_default_str();
  chads->add_option("--diabetes-threshold", chads2.diabetes_glucose_threshold,
                    "Glucose (mg/dL) at which the D component fires")
      ->capture_default_str();

  auto* pca = app.add_subcommand("pca", "Principal component analysis: scree, loadings, biplot, scores");
  add_common(pca, common);
  pca->add_flag("--balanced,!--no-balanced", pca_balanced, "Fit on a class-balanced subsample (default: off)");
  pca->add_option("--threshold", loading_threshold, "Loading magnitude marked as a strong contribution")
      ->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train one model on a single split and evaluate it");
  add_common(train_cmd, common);
  add_experiment(train_cmd, experiment, false);

  auto* benchmark = app.add_subcommand("benchmark", "Repeated downsample/split/train/evaluate runs");
  add_common(benchmark, common);
  add_experiment(benchmark, experiment, true);
  benchmark->add_option("--bin-width", bin_width, "Accuracy histogram bin width")->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "Feature addition or removal study, one benchmark per stage");
  add_common(ablate, common);
  add_experiment(ablate, experiment, true);
  ablate->add_option("--mode", ablate_mode, "add or remove")
      ->check(CLI::IsMember({"add", "remove"}))
      ->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Write a synthetic cohort in the input CSV layout");
  add_common(synth, common, false);
  synth->add_option("--rows", synth_rows, "Number of records")->capture_default_str();
  synth->add_option("--balance", synth_balance, "Fraction of stroke-positive records")->capture_default_str();

  const auto started = std::chrono::steady_clock::now();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, eo;
    const int code = app.exit(e, o, eo);
    out << o.str();
    err << eo.str();
    return code == 0 ? 0 : 1;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (!common.config.empty()) merge_config(active, common.config);
    if (active == synth && !common.input.empty()) throw UsageError("synth does not read --input");
    if (active != synth && common.input.empty()) throw UsageError("--input is required");

    OutputDir dir(common.output_dir);
    json config;
    if (active == inspect) config = cmd_inspect(common, dir, out, err);
    else if (active == correlate) config = cmd_correlate(common, dir, out, err);
    else if (active == importance) config = cmd_importance(common, dir, out, err);
    else if (active == chads) config = cmd_chads2(common, chads2, dir, out, err);
    else if (active == pca) config = cmd_pca(common, pca_balanced, loading_threshold, dir, out, err);
    else if (active == train_cmd) config = cmd_train(common, experiment, dir, out, err);
    else if (active == benchmark) config = cmd_benchmark(common, experiment, bin_width, dir, out, err);
    else if (active == ablate) config = cmd_ablate(common, experiment, ablate_mode, dir, out, err);
    else config = cmd_synth(common, synth_rows, synth_balance, dir, out);

    dir.write_manifest(active->get_name(), config, common.seed, common.input, started);
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace strokeml::cli
