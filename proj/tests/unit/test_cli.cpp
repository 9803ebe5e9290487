#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "strokeml/classifiers.hpp"
#include "strokeml/cli.hpp"
#include "strokeml/text_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "strokeml");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = strokeml::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const fs::path& cohort_csv() {
  static const fs::path path = [] {
    const fs::path dir = testing::scratch_dir("cli_input");
    const Outcome o = invoke({"synth", "--rows", "1200", "--balance", "0.08", "--seed", "5", "-o", dir.string()});
    REQUIRE(o.code == 0);
    return dir / "synthetic.csv";
  }();
  return path;
}

std::vector<std::string> listing(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

void check_identical_artifacts(const fs::path& a, const fs::path& b) {
  const auto names = listing(a);
  CHECK(names == listing(b));
  for (const auto& name : names) {
    if (name == "manifest.json") continue;
    INFO(name);
    CHECK(strokeml::read_text_file(a / name) == strokeml::read_text_file(b / name));
  }
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes the input layout") {
  const auto parsed = strokeml::parse_csv(cohort_csv());
  CHECK(parsed.records.size() == 1200);
  CHECK(parsed.rejected.empty());
}

TEST_CASE("benchmark artifacts are byte-identical across invocations") {
  const fs::path a = testing::scratch_dir("bench_a");
  const fs::path b = testing::scratch_dir("bench_b");
  for (const auto& dir : {a, b}) {
    const Outcome o = invoke({"benchmark", "--input", cohort_csv().string(), "--model", "mlp", "--features", "top4",
                              "--runs", "3", "--seed", "42", "--param", "epochs=50", "-o", dir.string()});
    REQUIRE(o.code == 0);
  }
  CHECK(listing(a) == std::vector<std::string>{"aggregate.json", "histogram.csv", "manifest.json", "metrics.csv"});
  check_identical_artifacts(a, b);

  const auto manifest = nlohmann::json::parse(strokeml::read_text_file(a / "manifest.json"));
  for (const char* key : {"version", "config_digest", "master_seed", "wall_time_seconds", "artifacts", "config"})
    CHECK(manifest.contains(key));
  CHECK(manifest["master_seed"] == 42);
  CHECK(manifest["config"]["model"]["hyperparameters"]["epochs"] == 50);
}

TEST_CASE("threads do not change benchmark artifacts") {
  const fs::path a = testing::scratch_dir("threads_1");
  const fs::path b = testing::scratch_dir("threads_3");
  const std::vector<std::string> common = {"benchmark", "-i", cohort_csv().string(), "--model", "dt", "--runs", "5"};
  auto args = common;
  args.insert(args.end(), {"-o", a.string()});
  REQUIRE(invoke(args).code == 0);
  args = common;
  args.insert(args.end(), {"-o", b.string(), "--threads", "3"});
  REQUIRE(invoke(args).code == 0);
  check_identical_artifacts(a, b);
}

TEST_CASE("every analysis subcommand is deterministic") {
  const std::vector<std::vector<std::string>> commands = {
      {"inspect"}, {"correlate"}, {"importance"}, {"chads2"}, {"pca", "--balanced"},
      {"train", "--model", "rf", "--param", "n_trees=5"},
      {"ablate", "--mode", "remove", "--model", "lasso", "--runs", "2"}};
  for (const auto& command : commands) {
    INFO(command[0]);
    const fs::path a = testing::scratch_dir(command[0] + "_a");
    const fs::path b = testing::scratch_dir(command[0] + "_b");
    for (const auto& dir : {a, b}) {
      auto args = command;
      args.insert(args.end(), {"--input", cohort_csv().string(), "--output-dir", dir.string()});
      const Outcome o = invoke(args);
      INFO(o.err);
      REQUIRE(o.code == 0);
    }
    check_identical_artifacts(a, b);
  }
}

TEST_CASE("pca artifacts") {
  const fs::path dir = testing::scratch_dir("pca_files");
  REQUIRE(invoke({"pca", "-i", cohort_csv().string(), "--balanced", "-o", dir.string()}).code == 0);
  for (const char* f : {"scree.csv", "loadings.csv", "biplot.csv", "scores.csv", "scores_full_fit.csv"})
    CHECK(fs::exists(dir / f));
}

TEST_CASE("trained model file can be reloaded") {
  const fs::path dir = testing::scratch_dir("train_reload");
  REQUIRE(invoke({"train", "-i", cohort_csv().string(), "--model", "svm", "-o", dir.string()}).code == 0);
  const auto j = nlohmann::json::parse(strokeml::read_text_file(dir / "model.json"));
  const strokeml::TrainedModel model = strokeml::TrainedModel::from_json(j);
  CHECK(model.family() == strokeml::Family::LinearSVM);
  CHECK(model.input_count() == 10);
}

TEST_CASE("missing input exits 2 naming the path") {
  const fs::path dir = testing::scratch_dir("missing");
  const Outcome o = invoke({"correlate", "--input", "missing.csv", "-o", dir.string()});
  CHECK(o.code == 2);
  CHECK(o.err.find("missing.csv") != std::string::npos);
}

TEST_CASE("strict mode rejects a malformed row") {
  const fs::path dir = testing::scratch_dir("strict");
  std::string text = strokeml::read_text_file(cohort_csv());
  text += "99999,Female,old,0,0,Yes,Private,Urban,90.5,30.1,never smoked,0\n";
  const fs::path input = dir / "bad.csv";
  strokeml::write_text_file(input, text);
  const Outcome lenient = invoke({"inspect", "-i", input.string(), "-o", (dir / "a").string()});
  CHECK(lenient.code == 0);
  CHECK(lenient.err.find("skipped row") != std::string::npos);
  const Outcome strict = invoke({"inspect", "--strict", "-i", input.string(), "-o", (dir / "b").string()});
  CHECK(strict.code == 2);
  CHECK(strict.err.find("age") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  CHECK(invoke({}).code == 1);
  CHECK(invoke({"frobnicate"}).code == 1);
  CHECK(invoke({"correlate", "--nope"}).code == 1);
  CHECK(invoke({"correlate"}).code == 1);
  CHECK(invoke({"benchmark", "-i", cohort_csv().string(), "--features", "pc:0"}).code == 1);
  CHECK(invoke({"benchmark", "-i", cohort_csv().string(), "--model", "knn"}).code == 1);
  CHECK(invoke({"benchmark", "-i", cohort_csv().string(), "--metrics-mode", "micro"}).code == 1);
  CHECK(invoke({"benchmark", "-i", cohort_csv().string(), "--param", "epochs"}).code == 1);
  CHECK(invoke({"synth", "--balance", "1.5"}).code == 1);
  const Outcome o = invoke({"ablate", "--mode", "sideways", "-i", cohort_csv().string()});
  CHECK(o.code == 1);
  CHECK_FALSE(o.err.empty());
}

TEST_CASE("help lists flags and defaults") {
  for (const char* sub : {"inspect", "correlate", "importance", "chads2", "pca", "train", "benchmark", "ablate",
                          "synth"}) {
    INFO(sub);
    const Outcome o = invoke({sub, "--help"});
    CHECK(o.code == 0);
    CHECK(o.out.find("--output-dir") != std::string::npos);
    CHECK(o.out.find("--seed") != std::string::npos);
    CHECK(o.out.find("[42]") != std::string::npos);
  }
  const Outcome b = invoke({"benchmark", "--help"});
  for (const char* flag : {"--runs", "--train-fraction", "--model", "--features", "--metrics-mode", "--balanced",
                           "--pca-global", "--threads", "[100]", "[0.7]", "[mlp]"})
    CHECK(b.out.find(flag) != std::string::npos);
  CHECK(invoke({"--version"}).code == 0);
}

TEST_CASE("config files sit beneath flags") {
  const fs::path dir = testing::scratch_dir("config");
  strokeml::write_text_file(dir / "run.json",
                            R"({"runs": 2, "seed": 9, "benchmark": {"model": "dt", "features": "top4"}})");
  strokeml::write_text_file(dir / "run.toml", "runs = 2\nseed = 9\n[benchmark]\nmodel = \"dt\"\nfeatures = \"top4\"\n");

  auto run_with = [&](const std::string& config, std::vector<std::string> extra) {
    const fs::path out = dir / ("out_" + std::to_string(extra.size()) + "_" + fs::path(config).extension().string().substr(1));
    std::vector<std::string> args = {"benchmark", "-i", cohort_csv().string(), "--config", (dir / config).string(),
                                     "-o", out.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(invoke(args).code == 0);
    return nlohmann::json::parse(strokeml::read_text_file(out / "manifest.json"));
  };

  for (const char* config : {"run.json", "run.toml"}) {
    INFO(config);
    const auto m = run_with(config, {});
    CHECK(m["config"]["runs"] == 2);
    CHECK(m["master_seed"] == 9);
    CHECK(m["config"]["model"]["family"] == "dt");
    CHECK(m["config"]["features"] == "top4");
    const auto overridden = run_with(config, {"--runs", "3", "--model", "svm"});
    CHECK(overridden["config"]["runs"] == 3);
    CHECK(overridden["config"]["model"]["family"] == "svm");
    CHECK(overridden["master_seed"] == 9);
  }

  strokeml::write_text_file(dir / "bad.json", R"({"bogus_option": 1})");
  CHECK(invoke({"benchmark", "-i", cohort_csv().string(), "--config", (dir / "bad.json").string(), "-o",
                (dir / "bad").string()})
            .code == 1);
}

TEST_CASE("output directory from the environment") {
  const fs::path dir = testing::scratch_dir("env_out") / "nested";
  ::setenv("STROKEML_OUTPUT_DIR", dir.string().c_str(), 1);
  const Outcome o = invoke({"importance", "-i", cohort_csv().string()});
  ::unsetenv("STROKEML_OUTPUT_DIR");
  CHECK(o.code == 0);
  CHECK(fs::exists(dir / "importance.json"));
  CHECK(fs::exists(dir / "manifest.json"));
}

}
