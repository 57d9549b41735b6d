// sik: fit, score and evaluate Simplified Isolation Kernel detectors.
//
// Exit codes: 0 success, 2 argument error, 3 IO error, 4 domain error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sik/sik.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArgs = 2;
constexpr int kExitIo = 3;
constexpr int kExitDomain = 4;

// Bad combination of otherwise well-formed flags.
class ArgumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string input;
  std::string train;
  std::string model;
  std::string output = "-";
  std::string method = "sik";
  std::string norm = "l1";
  std::string kind = "psi";
  std::string format;
  std::size_t psi = 128;
  std::size_t t = 200;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool labeled = false;

  std::vector<std::uint64_t> seeds = sik::default_seeds();
  std::vector<std::size_t> psi_grid = {32, 64, 128, 256, 512};
  std::vector<std::size_t> t_grid = {100, 200, 300, 400, 500};
  std::vector<double> ratios = {0.01, 0.02, 0.03, 0.04, 0.05};
  std::vector<std::size_t> sizes = {1000, 2000, 4000};
  std::size_t dim = 128;

  std::size_t n_normal = 500;
  std::size_t n_anomaly = 25;
  double separation = 10.0;
};

void print_json(const nlohmann::ordered_json& j) { std::cout << j.dump() << std::endl; }

// Writes through `write(stream)` to a file, or stdout for "-".
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw sik::IoError("cannot open " + path + " for writing");
  write(out);
  if (!out) throw sik::IoError("failed writing " + path);
}

bool wants_jsonl(const RunConfig& c) {
  if (!c.format.empty()) return c.format == "jsonl";
  return sik::has_extension(c.output, ".jsonl") || sik::has_extension(c.output, ".json");
}

template <typename Record>
void emit_records(const RunConfig& c, const std::vector<Record>& records) {
  emit(c.output, [&](std::ostream& out) {
    if (wants_jsonl(c)) {
      sik::write_jsonl<Record>(out, records);
    } else {
      sik::write_csv<Record>(out, records);
    }
  });
}

// Test data from --input; training data from --train when given, otherwise
// the default split of --input.
sik::LabeledDataset load_eval_dataset(const RunConfig& c) {
  auto test = sik::load_dataset(c.input, c.labeled);
  if (c.train.empty()) return test;
  auto train = sik::load_dataset(c.train, c.labeled);
  if (train.embeddings.cols() != test.embeddings.cols()) {
    throw sik::ShapeError("--train has d=" + std::to_string(train.embeddings.cols()) +
                          " but --input has d=" + std::to_string(test.embeddings.cols()));
  }
  const std::size_t n_train = train.embeddings.rows();
  const std::size_t n_test = test.embeddings.rows();
  std::vector<double> values(train.embeddings.values().begin(), train.embeddings.values().end());
  values.insert(values.end(), test.embeddings.values().begin(), test.embeddings.values().end());

  sik::LabeledDataset merged;
  merged.embeddings =
      sik::EmbeddingMatrix(n_train + n_test, test.embeddings.cols(), std::move(values));
  if (test.labeled()) {
    merged.labels.assign(n_train, 0);
    if (train.labeled()) std::copy(train.labels.begin(), train.labels.end(), merged.labels.begin());
    merged.labels.insert(merged.labels.end(), test.labels.begin(), test.labels.end());
  }
  sik::Split split;
  for (std::size_t i = 0; i < n_train; ++i) split.train.push_back(i);
  for (std::size_t i = 0; i < n_test; ++i) split.test.push_back(n_train + i);
  merged.split = std::move(split);
  return merged;
}

int cmd_fit(const RunConfig& c) {
  const auto data = sik::load_dataset(c.input, c.labeled);
  const auto start = std::chrono::steady_clock::now();
  const auto ensemble = sik::fit_ensemble(data.embeddings, c.psi, c.t, c.seed, c.threads);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto bytes = sik::encode_model(ensemble);
  sik::detail::write_file(c.model, bytes);

  nlohmann::ordered_json j;
  j["fit_seconds"] = seconds;
  j["model_bytes"] = bytes.size();
  j["n"] = data.embeddings.rows();
  j["d"] = ensemble.dim();
  j["psi"] = ensemble.psi();
  j["t"] = ensemble.t();
  j["seed"] = ensemble.seed();
  print_json(j);
  return kExitOk;
}

int cmd_score(const RunConfig& c) {
  const auto method = sik::parse_method(c.method);
  if (method == sik::Method::kIdk && c.train.empty()) {
    throw ArgumentError("--method idk requires --train to build the kernel mean");
  }
  if (c.norm != "l0" && c.norm != "l1") throw ArgumentError("--norm must be l0 or l1");
  const auto ensemble = sik::load_model(c.model);
  const auto data = sik::load_dataset(c.input, c.labeled);

  const auto start = std::chrono::steady_clock::now();
  std::vector<double> scores;
  switch (method) {
    case sik::Method::kSik:
      scores = sik::sik_scores(
          sik::SikFeatureStore(sik::sik_map_batch(ensemble, data.embeddings, c.threads)));
      break;
    case sik::Method::kIk:
      scores = sik::ik_scores(sik::ik_map_batch(ensemble, data.embeddings, c.threads),
                              c.norm == "l0" ? sik::Norm::kL0 : sik::Norm::kL1);
      break;
    case sik::Method::kIdk: {
      const auto train = sik::load_dataset(c.train, c.labeled);
      const auto mean = sik::idk_fit(sik::ik_map_batch(ensemble, train.embeddings, c.threads));
      scores = sik::idk_scores(sik::ik_map_batch(ensemble, data.embeddings, c.threads), mean);
      break;
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit(c.output, [&](std::ostream& out) { sik::write_scores_csv(out, scores, data.labels); });

  nlohmann::ordered_json j;
  j["method"] = std::string(sik::to_string(method));
  j["n"] = scores.size();
  j["score_seconds"] = seconds;
  if (data.labeled() && c.output != "-") {
    try {
      j["auroc"] = sik::auroc(scores, data.labels);
    } catch (const sik::UndefinedMetric&) {
    }
  }
  if (c.output != "-") print_json(j);
  return kExitOk;
}

int cmd_map(const RunConfig& c) {
  const auto ensemble = sik::load_model(c.model);
  const auto data = sik::load_dataset(c.input, c.labeled);
  if (c.kind == "sik") {
    const auto features = sik::sik_map_batch(ensemble, data.embeddings, c.threads);
    emit(c.output, [&](std::ostream& out) {
      sik::write_features_csv(out, std::span<const sik::SikFeature>(features));
    });
  } else if (c.kind == "ik") {
    const auto features = sik::ik_map_batch(ensemble, data.embeddings, c.threads);
    emit(c.output, [&](std::ostream& out) {
      sik::write_features_csv(out, std::span<const sik::IkFeature>(features));
    });
  } else {
    throw ArgumentError("--kind must be sik or ik for map");
  }
  return kExitOk;
}

int cmd_eval(const RunConfig& c) {
  const auto data = load_eval_dataset(c);
  const auto report =
      sik::evaluate(data, sik::parse_method(c.method), c.psi, c.t, c.seeds, c.threads);
  if (c.output != "-") emit_records(c, std::vector<sik::ExperimentReport>{report});
  print_json(sik::to_json(report));
  return kExitOk;
}

int cmd_sweep(const RunConfig& c) {
  const auto data = load_eval_dataset(c);
  const auto method = sik::parse_method(c.method);
  std::vector<sik::ExperimentReport> reports;
  if (c.kind == "psi") {
    reports = sik::sensitivity_sweep(data, c.psi_grid, {}, c.psi, c.t, c.seeds, method, c.threads);
  } else if (c.kind == "t") {
    reports = sik::sensitivity_sweep(data, {}, c.t_grid, c.psi, c.t, c.seeds, method, c.threads);
  } else if (c.kind == "sensitivity") {
    reports =
        sik::sensitivity_sweep(data, c.psi_grid, c.t_grid, c.psi, c.t, c.seeds, method, c.threads);
  } else if (c.kind == "contamination") {
    reports = sik::contamination_sweep(data, c.ratios, method, c.psi, c.t, c.seeds, c.threads);
  } else {
    throw ArgumentError("--kind must be psi, t, sensitivity or contamination");
  }
  emit_records(c, reports);
  return kExitOk;
}

int cmd_bench(const RunConfig& c) {
  const auto rows = sik::bench_scaling(c.dim, c.sizes, c.psi, c.t, c.seed, c.threads);
  emit_records(c, rows);
  return kExitOk;
}

int cmd_gen(const RunConfig& c) {
  const auto data = sik::gen_blobs_with_outliers(c.n_normal, c.n_anomaly, c.dim, c.separation, c.seed);
  sik::save_dataset(data, c.output);
  nlohmann::ordered_json j;
  j["n"] = data.embeddings.rows();
  j["d"] = data.embeddings.cols();
  j["anomalies"] = data.anomaly_count();
  j["output"] = c.output;
  print_json(j);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig c;
  CLI::App app{"Simplified Isolation Kernel anomaly detection"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "Random seed")->envname("SIK_SEED");
    sub->add_option("--threads", c.threads, "Worker threads (0 = auto)")->envname("SIK_THREADS");
  };
  auto add_hyper = [&](CLI::App* sub) {
    sub->add_option("--psi", c.psi, "Hyperspheres per partitioning")->capture_default_str();
    sub->add_option("--t", c.t, "Number of partitionings")->capture_default_str();
  };
  auto add_labeled = [&](CLI::App* sub) {
    sub->add_flag("--labeled", c.labeled, "Treat the last CSV column as a 0/1 label");
  };

  auto* fit = app.add_subcommand("fit", "Fit a sphere ensemble and write a SIKM model");
  fit->add_option("--input", c.input, "Dataset (.csv or .sikd)")->required();
  fit->add_option("--model", c.model, "Output model path")->required();
  add_hyper(fit);
  add_common(fit);
  add_labeled(fit);

  auto* score = app.add_subcommand("score", "Score a dataset with a fitted model");
  score->add_option("--model", c.model, "SIKM model")->required();
  score->add_option("--input", c.input, "Dataset to score")->required();
  score->add_option("--method", c.method, "sik, ik or idk")->capture_default_str();
  score->add_option("--norm", c.norm, "Norm for ik scores: l0 or l1")->capture_default_str();
  score->add_option("--train", c.train, "Training data for the idk kernel mean");
  score->add_option("--output", c.output, "Score CSV path ('-' for stdout)")->capture_default_str();
  add_common(score);
  add_labeled(score);

  auto* map = app.add_subcommand("map", "Export SIK or IK features as CSV");
  map->add_option("--model", c.model, "SIKM model")->required();
  map->add_option("--input", c.input, "Dataset to map")->required();
  map->add_option("--kind", c.kind, "sik or ik")->required();
  map->add_option("--output", c.output, "Feature CSV path ('-' for stdout)")->capture_default_str();
  add_common(map);
  add_labeled(map);

  auto add_eval_inputs = [&](CLI::App* sub) {
    sub->add_option("--input", c.input, "Labeled dataset (test data when --train is given)")
        ->required();
    sub->add_option("--train", c.train, "Separate training data");
    sub->add_option("--method", c.method, "sik, ik or idk")->capture_default_str();
    sub->add_option("--seeds", c.seeds, "Repetition seeds")->delimiter(',');
    sub->add_option("--output", c.output, "Report path (.csv or .jsonl; '-' for stdout)");
    sub->add_option("--format", c.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    add_hyper(sub);
    add_labeled(sub);
    sub->add_option("--threads", c.threads, "Worker threads (0 = auto)")->envname("SIK_THREADS");
  };

  auto* eval = app.add_subcommand("eval", "AUROC of one detector, averaged over seeds");
  add_eval_inputs(eval);

  auto* sweep = app.add_subcommand("sweep", "Hyperparameter or contamination sweep");
  add_eval_inputs(sweep);
  sweep->add_option("--kind", c.kind, "psi, t, sensitivity or contamination")
      ->capture_default_str();
  sweep->add_option("--psi-grid", c.psi_grid, "psi values")->delimiter(',');
  sweep->add_option("--t-grid", c.t_grid, "t values")->delimiter(',');
  sweep->add_option("--ratios", c.ratios, "Training contamination ratios")->delimiter(',');

  auto* bench = app.add_subcommand("bench", "Time SIK and IDK against dataset size");
  bench->add_option("--dim", c.dim, "Dimensionality")->capture_default_str();
  bench->add_option("--sizes", c.sizes, "Dataset sizes, ascending")->delimiter(',');
  bench->add_option("--output", c.output, "Timing table path ('-' for stdout)");
  bench->add_option("--format", c.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  add_hyper(bench);
  add_common(bench);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled dataset");
  gen->add_option("--normal", c.n_normal, "Normal points")->capture_default_str();
  gen->add_option("--anomaly", c.n_anomaly, "Anomalies")->capture_default_str();
  gen->add_option("--dim", c.dim, "Dimensionality")->capture_default_str();
  gen->add_option("--sep", c.separation, "Anomaly separation")->capture_default_str();
  gen->add_option("--output", c.output, "Output path (.csv or .sikd)")->required();
  gen->add_option("--seed", c.seed, "Random seed")->envname("SIK_SEED");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitArgs;
  }

  // t-grids run at psi = 16 unless --psi is given.
  if (sweep->parsed() && (c.kind == "t" || c.kind == "sensitivity") &&
      sweep->count("--psi") == 0) {
    c.psi = 16;
  }

  try {
    if (fit->parsed()) return cmd_fit(c);
    if (score->parsed()) return cmd_score(c);
    if (map->parsed()) return cmd_map(c);
    if (eval->parsed()) return cmd_eval(c);
    if (sweep->parsed()) return cmd_sweep(c);
    if (bench->parsed()) return cmd_bench(c);
    if (gen->parsed()) return cmd_gen(c);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitArgs;
  } catch (const sik::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const sik::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitIo;
  } catch (const sik::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return kExitArgs;
}
