// crflearn: sparse pairwise CRF structure learning by mean-field contrastive
// divergence, with full-L1, grafting and contrastive (signal/error) feature
// induction, plus a synthetic-experiment harness.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crflearn/datagen.hpp"
#include "crflearn/evalx.hpp"
#include "crflearn/induction.hpp"
#include "crflearn/io.hpp"
#include "crflearn/mean_field.hpp"
#include "crflearn/oracle.hpp"
#include "crflearn/rng.hpp"
#include "crflearn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace crflearn;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every command writes a manifest listing its artifacts; measured timings go
// in only when include_timings is set, so default artifacts are byte-stable.
struct Manifest {
  json flags = json::object();
  std::vector<std::string> artifacts;
  json timings = json::object();
  bool include_timings = false;

  json render(const std::string& command) const {
    json j;
    j["command"] = command;
    j["version"] = CRFLEARN_VERSION;
    j["flags"] = flags;
    j["artifacts"] = artifacts;
    if (include_timings) j["timings"] = timings;
    return j;
  }

  void write(const std::string& command, const fs::path& out_dir) {
    const fs::path path = out_dir / "manifest.json";
    artifacts.push_back(path.string());
    std::ofstream out(path);
    out << render(command).dump(2) << "\n";
  }
};

fs::path require_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out);
  return dir;
}

CandidatePolicy parse_policy(const std::string& name) {
  if (name == "non-reference") return CandidatePolicy::NonReferenceStates;
  if (name == "all-value-pairs") return CandidatePolicy::AllValuePairs;
  throw UsageError("unknown candidate policy: " + name);
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  int nodes = 200;
  double degree = 5.0;
  int samples = 200;
  int burn_in = 10000;
  int thinning = 1000;
  double weight_lo = -5.0;
  double weight_hi = 5.0;
  std::uint64_t seed = 0;
  std::string out;
  bool timings = false;
};

int run_gen(const GenArgs& args) {
  const auto start = Clock::now();
  const fs::path out_dir = require_out_dir(args.out);

  SyntheticSpec spec;
  spec.nodes = args.nodes;
  spec.degree = args.degree;
  spec.samples = args.samples;
  spec.burn_in = args.burn_in;
  spec.thinning = args.thinning;
  spec.weight_lo = args.weight_lo;
  spec.weight_hi = args.weight_hi;
  spec.seed = args.seed;

  const auto t_structure = Clock::now();
  SyntheticSample sample = sample_structure(spec);
  const double structure_seconds = seconds_since(t_structure);

  const auto t_chain = Clock::now();
  Dataset data = gibbs_chain(sample.truth, spec);
  const double chain_seconds = seconds_since(t_chain);

  Manifest manifest;
  manifest.include_timings = args.timings;
  manifest.flags = {{"nodes", args.nodes},         {"degree", args.degree},
                    {"samples", args.samples},     {"burnin", args.burn_in},
                    {"thinning", args.thinning},   {"weight_lo", args.weight_lo},
                    {"weight_hi", args.weight_hi}, {"seed", args.seed},
                    {"out", args.out}};

  const fs::path model_path = out_dir / "truth_model.json";
  const fs::path data_path = out_dir / "data.jsonl";
  const fs::path edges_path = out_dir / "edges.csv";
  save_model(sample.truth, model_path);
  save_dataset(data, data_path);
  save_edges_csv(sample.edges, edges_path);
  manifest.artifacts = {model_path.string(), data_path.string(), edges_path.string()};
  manifest.timings = {{"structure_seconds", structure_seconds},
                      {"chain_seconds", chain_seconds},
                      {"total_seconds", seconds_since(start)}};
  manifest.write("gen", out_dir);

  json echo = manifest.render("gen");
  echo["edges"] = sample.edges.size();
  echo["instances"] = data.size();
  echo["timings"] = manifest.timings;  // stdout always reports timings
  std::cout << echo.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string mode = "cfi";
  double l1 = 2.0;
  double l2 = 1.0;
  int batch = 50;
  double t_err = 0.2;
  double t_sig = 0.2;
  std::uint64_t seed = 0;
  int max_iters = 500;
  double rel_tol = 1e-4;
  int patience = 3;
  int mf_sweeps = 100;
  double mf_tol = 1e-6;
  double gate = std::numeric_limits<double>::quiet_NaN();
  bool staged_unary = false;
  std::string policy = "non-reference";
  int threads = 0;
  std::string out;
  bool timings = false;
};

TrainConfig to_config(const TrainArgs& args) {
  TrainConfig config;
  config.mode = parse_train_mode(args.mode);
  config.lambda1 = args.l1;
  config.lambda2 = args.l2;
  config.batch = args.batch;
  config.thresholds = Thresholds{args.t_err, args.t_sig};
  config.seed = args.seed;
  config.max_iterations = args.max_iters;
  config.rel_tol = args.rel_tol;
  config.patience = args.patience;
  config.mf.max_sweeps = args.mf_sweeps;
  config.mf.tol = args.mf_tol;
  config.gate = args.gate;
  config.staged_unary = args.staged_unary;
  config.policy = parse_policy(args.policy);
  config.threads = args.threads;
  return config;
}

json trace_entry_json(const TraceEntry& e, bool timings) {
  json j = {{"iteration", e.iteration},
            {"objective", e.objective},
            {"l1_norm", e.l1_norm},
            {"introduced", e.introduced},
            {"active", e.active},
            {"score_accumulations", e.score_accumulations},
            {"mf_nonconverged", e.mf_nonconverged},
            {"optimizer_stalled", e.optimizer_stalled}};
  if (timings) {
    j["inference_seconds"] = e.inference_seconds;
    j["scoring_seconds"] = e.scoring_seconds;
    j["optimizer_seconds"] = e.optimizer_seconds;
  }
  return j;
}

void write_trace(const TrainTrace& trace, const fs::path& path, bool timings) {
  std::ofstream out(path);
  for (const TraceEntry& e : trace.entries) {
    out << trace_entry_json(e, timings).dump() << "\n";
  }
}

json train_summary(const TrainResult& result) {
  const TraceEntry& last = result.trace.entries.back();
  return json{{"iterations", result.trace.entries.size()},
              {"converged", result.trace.converged},
              {"termination", result.trace.termination},
              {"introduced", last.introduced},
              {"active", last.active},
              {"objective", last.objective},
              {"l1_norm", last.l1_norm},
              {"score_accumulations", result.trace.total_score_accumulations},
              {"seconds", result.trace.total_seconds}};
}

int run_train(const TrainArgs& args, bool batch_given, bool terr_given, bool tsig_given) {
  const fs::path out_dir = require_out_dir(args.out);
  TrainConfig config = to_config(args);
  if (config.mode == TrainMode::Full && (batch_given || terr_given || tsig_given)) {
    std::cerr << "warning: --batch/--t-err/--t-sig are ignored in full mode\n";
  }

  Dataset data = load_dataset(args.data);
  TrainResult result = train(data, config);

  Manifest manifest;
  manifest.include_timings = args.timings;
  manifest.flags = {{"data", args.data},       {"mode", args.mode},
                    {"l1", args.l1},           {"l2", args.l2},
                    {"batch", args.batch},     {"t_err", args.t_err},
                    {"t_sig", args.t_sig},     {"seed", args.seed},
                    {"max_iters", args.max_iters}, {"rel_tol", args.rel_tol},
                    {"patience", args.patience},   {"staged_unary", args.staged_unary},
                    {"policy", args.policy},   {"threads", args.threads},
                    {"out", args.out}};

  const fs::path model_path = out_dir / "model.json";
  const fs::path trace_path = out_dir / "trace.jsonl";
  save_model(result.model, model_path);
  write_trace(result.trace, trace_path, args.timings);
  manifest.artifacts = {model_path.string(), trace_path.string()};
  manifest.timings = {{"train_seconds", result.trace.total_seconds}};
  manifest.write("train", out_dir);

  json summary = train_summary(result);
  summary["mode"] = args.mode;
  summary["model"] = model_path.string();
  summary["trace"] = trace_path.string();
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string model;
  std::string data;
  int folds = 10;
  double fraction = 0.1;
  std::uint64_t seed = 0;
  int mf_sweeps = 100;
  double mf_tol = 1e-6;
  int threads = 0;
  std::string out;
  bool timings = false;
};

struct FoldStats {
  double mean = 0.0;
  double stddev = 0.0;
};

FoldStats fold_stats(const std::vector<double>& xs) {
  FoldStats s;
  for (double x : xs) s.mean += x;
  s.mean /= xs.size();
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / (xs.size() - 1));
  }
  return s;
}

json eval_folds(const Model& model, const Dataset& data, int folds, double fraction,
                std::uint64_t seed, const MfOptions& mf, int threads, bool timings) {
  auto splits = make_splits(data, folds, fraction, seed);
  json fold_rows = json::array();
  std::vector<double> clls, aucs, errs;
  for (const CvSplit& split : splits) {
    Dataset masked = apply_split(data, split);
    EvalReport report = evaluate(model, masked, mf, threads);
    json row = {{"fold", split.fold},
                {"cll", report.cll},
                {"auc", report.auc},
                {"error_rate", report.error_rate},
                {"hidden_slots", report.hidden_slots}};
    if (timings) row["wall_seconds"] = report.wall_seconds;
    fold_rows.push_back(row);
    clls.push_back(report.cll);
    aucs.push_back(report.auc);
    errs.push_back(report.error_rate);
  }
  const FoldStats cll = fold_stats(clls), auc = fold_stats(aucs), err = fold_stats(errs);
  return json{{"folds", fold_rows},
              {"mean", {{"cll", cll.mean}, {"auc", auc.mean}, {"error_rate", err.mean}}},
              {"std",
               {{"cll", cll.stddev}, {"auc", auc.stddev}, {"error_rate", err.stddev}}},
              {"introduced_features", model.feature_count()},
              {"active_features", model.active_count()}};
}

int run_eval(const EvalArgs& args) {
  Model model = load_model(args.model);
  Dataset data = load_dataset(args.data);
  if (!(model.schema() == data.schema())) {
    throw std::runtime_error("model and dataset schemas do not match");
  }
  MfOptions mf;
  mf.max_sweeps = args.mf_sweeps;
  mf.tol = args.mf_tol;
  json report = eval_folds(model, data, args.folds, args.fraction, args.seed, mf, args.threads,
                           args.timings);
  report["model"] = args.model;
  report["data"] = args.data;

  if (!args.out.empty()) {
    const fs::path out_dir = require_out_dir(args.out);
    Manifest manifest;
    manifest.include_timings = args.timings;
    manifest.flags = {{"model", args.model}, {"data", args.data},   {"folds", args.folds},
                      {"fraction", args.fraction}, {"seed", args.seed}, {"out", args.out}};
    const fs::path report_path = out_dir / "eval.json";
    std::ofstream(report_path) << report.dump(2) << "\n";
    manifest.artifacts = {report_path.string()};
    manifest.write("eval", out_dir);
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string nodes_list;
  std::string threshold_list;
  std::string methods = "full,grafting,cfi";
  std::string data;
  std::string truth;
  int nodes = 200;
  double degree = 5.0;
  int samples = 200;
  int burn_in = 10000;
  int thinning = 1000;
  int folds = 10;
  int bench_folds = 0;  // 0 = all folds
  double fraction = 0.1;
  double l1 = 2.0;
  double l2 = 1.0;
  int batch = 50;
  double t_err = 0.2;
  double t_sig = 0.2;
  int max_iters = 500;
  double rel_tol = 1e-4;
  int patience = 3;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
};

struct BenchRow {
  std::string method;
  std::string setting;
  int fold = 0;
  double time_s = 0.0;
  double cll = 0.0, auc = 0.0, err = 0.0;
  std::int64_t introduced = 0, active = 0;
  std::uint64_t score_ops = 0;
};

TrainConfig bench_config(const BenchArgs& args, const std::string& method, double threshold) {
  TrainConfig config;
  config.mode = (method == "truegraph") ? TrainMode::Full : parse_train_mode(method);
  config.lambda1 = args.l1;
  config.lambda2 = args.l2;
  config.batch = args.batch;
  config.thresholds = Thresholds{threshold, threshold};
  config.max_iterations = args.max_iters;
  config.rel_tol = args.rel_tol;
  config.patience = args.patience;
  config.threads = args.threads;
  config.seed = args.seed;
  return config;
}

BenchRow bench_one(const BenchArgs& args, const std::string& method, const std::string& setting,
                   double threshold, const Dataset& masked, const Model* truth, int fold) {
  TrainConfig config = bench_config(args, method, threshold);
  TrainResult result = [&] {
    if (method == "truegraph") {
      Model start = truth->with_weights(std::vector<double>(truth->feature_count(), 0.0));
      return train_fixed(masked, start, config);
    }
    return train(masked, config);
  }();
  EvalReport report = evaluate(result.model, masked, config.mf, config.threads);
  BenchRow row;
  row.method = method;
  row.setting = setting;
  row.fold = fold;
  row.time_s = result.trace.total_seconds;
  row.cll = report.cll;
  row.auc = report.auc;
  row.err = report.error_rate;
  row.introduced = report.introduced_features;
  row.active = report.active_features;
  row.score_ops = result.trace.total_score_accumulations;
  return row;
}

void write_bench_csv(const std::vector<BenchRow>& rows, const fs::path& path) {
  std::ofstream out(path);
  out << "method,setting,fold,time_s,cll,auc,err,introduced,active,score_ops\n";
  for (const BenchRow& r : rows) {
    out << r.method << "," << r.setting << "," << r.fold << "," << format_double(r.time_s)
        << "," << format_double(r.cll) << "," << format_double(r.auc) << ","
        << format_double(r.err) << "," << r.introduced << "," << r.active << ","
        << r.score_ops << "\n";
  }
}

int run_bench(const BenchArgs& args) {
  if (args.nodes_list.empty() == args.threshold_list.empty()) {
    throw UsageError("pass exactly one of --nodes-list or --threshold-list");
  }
  std::vector<std::string> methods = split_list(args.methods);
  if (methods.empty()) throw UsageError("--methods must name at least one method");
  for (const std::string& m : methods) {
    if (m != "full" && m != "grafting" && m != "cfi" && m != "truegraph") {
      throw UsageError("unknown method: " + m);
    }
  }
  const bool wants_truegraph =
      std::find(methods.begin(), methods.end(), "truegraph") != methods.end();
  const bool external_data = !args.data.empty();
  if (wants_truegraph && external_data && args.truth.empty()) {
    throw UsageError("--methods truegraph needs --truth when --data is supplied");
  }

  const fs::path out_dir = require_out_dir(args.out);
  std::vector<BenchRow> rows;

  auto run_setting = [&](const std::string& setting, double threshold, const Dataset& data,
                         const Model* truth) {
    auto splits = make_splits(data, args.folds, args.fraction, derive_seed(args.seed, 1000));
    const int use_folds = args.bench_folds > 0
                              ? std::min<int>(args.bench_folds, static_cast<int>(splits.size()))
                              : static_cast<int>(splits.size());
    for (int f = 0; f < use_folds; ++f) {
      Dataset masked = apply_split(data, splits[f]);
      for (const std::string& method : methods) {
        rows.push_back(bench_one(args, method, setting, threshold, masked, truth, f));
      }
    }
  };

  if (!args.nodes_list.empty()) {
    if (external_data) throw UsageError("--nodes-list generates data; do not pass --data");
    for (const std::string& item : split_list(args.nodes_list)) {
      const int n = std::stoi(item);
      SyntheticSpec spec;
      spec.nodes = n;
      spec.degree = args.degree;
      spec.samples = args.samples;
      spec.burn_in = args.burn_in;
      spec.thinning = args.thinning;
      spec.seed = derive_seed(args.seed, static_cast<std::uint64_t>(n));
      SyntheticSample sample = sample_structure(spec);
      Dataset data = gibbs_chain(sample.truth, spec);
      run_setting(item, args.t_err, data, &sample.truth);
    }
  } else {
    // threshold sweep on one dataset (generated unless --data is given)
    Dataset data = [&] {
      if (external_data) return load_dataset(args.data);
      SyntheticSpec spec;
      spec.nodes = args.nodes;
      spec.degree = args.degree;
      spec.samples = args.samples;
      spec.burn_in = args.burn_in;
      spec.thinning = args.thinning;
      spec.seed = derive_seed(args.seed, static_cast<std::uint64_t>(args.nodes));
      return gibbs_chain(sample_structure(spec).truth, spec);
    }();
    std::optional<Model> truth;
    if (!args.truth.empty()) {
      truth = load_model(args.truth);
    } else if (!external_data && wants_truegraph) {
      SyntheticSpec spec;
      spec.nodes = args.nodes;
      spec.degree = args.degree;
      spec.samples = args.samples;
      spec.burn_in = args.burn_in;
      spec.thinning = args.thinning;
      spec.seed = derive_seed(args.seed, static_cast<std::uint64_t>(args.nodes));
      truth = sample_structure(spec).truth;
    }
    for (const std::string& item : split_list(args.threshold_list)) {
      run_setting(item, std::stod(item), data, truth ? &*truth : nullptr);
    }
  }

  const fs::path csv_path = out_dir / "bench.csv";
  write_bench_csv(rows, csv_path);

  Manifest manifest;
  manifest.flags = {{"nodes_list", args.nodes_list},
                    {"threshold_list", args.threshold_list},
                    {"methods", args.methods},
                    {"folds", args.folds},
                    {"bench_folds", args.bench_folds},
                    {"l1", args.l1},
                    {"l2", args.l2},
                    {"batch", args.batch},
                    {"seed", args.seed},
                    {"out", args.out}};
  manifest.artifacts = {csv_path.string()};
  manifest.write("bench", out_dir);
  std::cout << manifest.render("bench").dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// hist

struct HistArgs {
  std::string model;
  std::string data;
  double bin_width = 0.05;
  int mf_sweeps = 100;
  double mf_tol = 1e-6;
  int threads = 0;
  std::string out;
};

void write_histogram_csv(const std::vector<HistogramBin>& bins, const fs::path& path) {
  std::ofstream out(path);
  out << "bin_lo,bin_hi,count\n";
  for (const HistogramBin& b : bins) {
    out << format_double(b.lo) << "," << format_double(b.hi) << "," << b.count << "\n";
  }
}

int run_hist(const HistArgs& args) {
  Model model = load_model(args.model);
  Dataset data = load_dataset(args.data);
  if (!(model.schema() == data.schema())) {
    throw std::runtime_error("model and dataset schemas do not match");
  }
  const fs::path out_dir = require_out_dir(args.out);

  MfOptions mf;
  mf.max_sweeps = args.mf_sweeps;
  mf.tol = args.mf_tol;
  std::vector<Marginals> q0s(data.size()), q1s(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    MfResult r = mf_converge(model, data.instance(i), mf);
    q1s[i] = cd_sweep(model, data.instance(i), r.beliefs);
    q0s[i] = std::move(r.beliefs);
  }
  SignalErrorTable table =
      build_signal_error_table(q0s, q1s, model.schema(), model.policy(), args.threads);

  std::vector<double> errors, signals;
  errors.reserve(static_cast<std::size_t>(table.instance_count()) * table.state_count());
  signals.reserve(errors.capacity());
  for (int i = 0; i < table.instance_count(); ++i) {
    for (int s = 0; s < table.state_count(); ++s) {
      errors.push_back(table.err(i, s));
      signals.push_back(table.avg_sig(i, s));
    }
  }
  const fs::path signals_path = out_dir / "signals.csv";
  const fs::path errors_path = out_dir / "errors.csv";
  write_histogram_csv(histogram(signals, args.bin_width, -1.0, 1.0), signals_path);
  write_histogram_csv(histogram(errors, args.bin_width, -1.0, 1.0), errors_path);

  Manifest manifest;
  manifest.flags = {{"model", args.model},
                    {"data", args.data},
                    {"bin_width", args.bin_width},
                    {"out", args.out}};
  manifest.artifacts = {signals_path.string(), errors_path.string()};
  manifest.write("hist", out_dir);
  std::cout << manifest.render("hist").dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleArgs {
  std::string model;
  std::string data;
  int instance = 0;
};

int run_oracle(const OracleArgs& args) {
  Model model = load_model(args.model);
  Dataset data = load_dataset(args.data);
  if (args.instance < 0 || args.instance >= static_cast<int>(data.size())) {
    throw std::runtime_error("instance index out of range");
  }
  JointTable table = exact_conditional(model, data.instance(args.instance));
  auto marginals = exact_marginals(table);
  json j;
  j["instance"] = args.instance;
  j["free_variables"] = table.free_variables;
  j["log_z"] = table.log_z;
  j["z"] = table.z;
  json m = json::array();
  for (const auto& dist : marginals) m.push_back(dist);
  j["marginals"] = m;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse pairwise CRF structure learning via mean-field contrastive divergence"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CRFLEARN_VERSION);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic network and dataset");
  gen_cmd->add_option("--nodes", gen.nodes, "number of binary variables");
  gen_cmd->add_option("--degree", gen.degree, "mean neighbors per node");
  gen_cmd->add_option("--samples", gen.samples, "instances to draw");
  gen_cmd->add_option("--burnin", gen.burn_in, "burn-in sweeps");
  gen_cmd->add_option("--thinning", gen.thinning, "sweeps between samples");
  gen_cmd->add_option("--weight-lo", gen.weight_lo, "edge weight lower bound");
  gen_cmd->add_option("--weight-hi", gen.weight_hi, "edge weight upper bound");
  gen_cmd->add_option("--seed", gen.seed, "random seed");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_flag("--timings", gen.timings, "include measured timings in artifacts");

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  train_cmd->add_option("--data", train_args.data, "dataset file")->required();
  train_cmd->add_option("--mode", train_args.mode, "full | grafting | cfi");
  train_cmd->add_option("--l1", train_args.l1, "L1 penalty");
  train_cmd->add_option("--l2", train_args.l2, "L2 penalty");
  train_cmd->add_option("--batch", train_args.batch, "features added per induction step");
  train_cmd->add_option("--t-err", train_args.t_err, "error gate threshold");
  train_cmd->add_option("--t-sig", train_args.t_sig, "signal gate threshold");
  train_cmd->add_option("--seed", train_args.seed, "random seed (echoed)");
  train_cmd->add_option("--max-iters", train_args.max_iters, "iteration cap");
  train_cmd->add_option("--rel-tol", train_args.rel_tol, "termination tolerance");
  train_cmd->add_option("--patience", train_args.patience, "stable iterations to stop");
  train_cmd->add_option("--mf-sweeps", train_args.mf_sweeps, "mean-field sweep cap");
  train_cmd->add_option("--mf-tol", train_args.mf_tol, "mean-field tolerance");
  train_cmd->add_option("--gate", train_args.gate, "selection gate (default: l1 penalty)");
  train_cmd->add_flag("--staged-unary", train_args.staged_unary,
                      "optimize unary weights to convergence first");
  train_cmd->add_option("--policy", train_args.policy, "non-reference | all-value-pairs");
  train_cmd->add_option("--threads", train_args.threads, "worker cap (0 = hardware)");
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_cmd->add_flag("--timings", train_args.timings, "include measured timings in artifacts");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "cross-validated hidden-label metrics");
  eval_cmd->add_option("--model", eval_args.model, "model file")->required();
  eval_cmd->add_option("--data", eval_args.data, "dataset file")->required();
  eval_cmd->add_option("--folds", eval_args.folds, "fold count");
  eval_cmd->add_option("--fraction", eval_args.fraction, "nominal hidden fraction");
  eval_cmd->add_option("--seed", eval_args.seed, "split seed");
  eval_cmd->add_option("--mf-sweeps", eval_args.mf_sweeps, "mean-field sweep cap");
  eval_cmd->add_option("--mf-tol", eval_args.mf_tol, "mean-field tolerance");
  eval_cmd->add_option("--threads", eval_args.threads, "worker cap");
  eval_cmd->add_option("--out", eval_args.out, "optional output directory");
  eval_cmd->add_flag("--timings", eval_args.timings, "include measured timings in artifacts");

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand("bench", "method comparison grid");
  bench_cmd->add_option("--nodes-list", bench_args.nodes_list, "network sizes, e.g. 50,100,200");
  bench_cmd->add_option("--threshold-list", bench_args.threshold_list,
                        "cfi thresholds, e.g. 0,0.2,0.4,0.6");
  bench_cmd->add_option("--methods", bench_args.methods,
                        "subset of full,grafting,cfi,truegraph");
  bench_cmd->add_option("--data", bench_args.data, "external dataset (threshold sweep)");
  bench_cmd->add_option("--truth", bench_args.truth, "truth model for truegraph");
  bench_cmd->add_option("--nodes", bench_args.nodes, "nodes for a generated threshold sweep");
  bench_cmd->add_option("--degree", bench_args.degree, "mean neighbors per node");
  bench_cmd->add_option("--samples", bench_args.samples, "instances per dataset");
  bench_cmd->add_option("--burnin", bench_args.burn_in, "burn-in sweeps");
  bench_cmd->add_option("--thinning", bench_args.thinning, "sweeps between samples");
  bench_cmd->add_option("--folds", bench_args.folds, "fold count for the splits");
  bench_cmd->add_option("--bench-folds", bench_args.bench_folds,
                        "folds actually run (0 = all)");
  bench_cmd->add_option("--fraction", bench_args.fraction, "nominal hidden fraction");
  bench_cmd->add_option("--l1", bench_args.l1, "L1 penalty");
  bench_cmd->add_option("--l2", bench_args.l2, "L2 penalty");
  bench_cmd->add_option("--batch", bench_args.batch, "induction batch size");
  bench_cmd->add_option("--t-err", bench_args.t_err, "error gate (nodes-list runs)");
  bench_cmd->add_option("--t-sig", bench_args.t_sig, "signal gate (nodes-list runs)");
  bench_cmd->add_option("--max-iters", bench_args.max_iters, "iteration cap");
  bench_cmd->add_option("--rel-tol", bench_args.rel_tol, "termination tolerance");
  bench_cmd->add_option("--patience", bench_args.patience, "stable iterations to stop");
  bench_cmd->add_option("--seed", bench_args.seed, "base seed");
  bench_cmd->add_option("--threads", bench_args.threads, "worker cap");
  bench_cmd->add_option("--out", bench_args.out, "output directory")->required();

  HistArgs hist_args;
  CLI::App* hist_cmd = app.add_subcommand("hist", "signal and error histograms");
  hist_cmd->add_option("--model", hist_args.model, "model file")->required();
  hist_cmd->add_option("--data", hist_args.data, "dataset file")->required();
  hist_cmd->add_option("--bin-width", hist_args.bin_width, "histogram bin width");
  hist_cmd->add_option("--mf-sweeps", hist_args.mf_sweeps, "mean-field sweep cap");
  hist_cmd->add_option("--mf-tol", hist_args.mf_tol, "mean-field tolerance");
  hist_cmd->add_option("--threads", hist_args.threads, "worker cap");
  hist_cmd->add_option("--out", hist_args.out, "output directory")->required();

  OracleArgs oracle_args;
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "exact enumeration of one instance");
  oracle_cmd->add_option("--model", oracle_args.model, "model file")->required();
  oracle_cmd->add_option("--data", oracle_args.data, "dataset file")->required();
  oracle_cmd->add_option("--instance", oracle_args.instance, "instance index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*train_cmd) {
      return run_train(train_args, train_cmd->count("--batch") > 0,
                       train_cmd->count("--t-err") > 0, train_cmd->count("--t-sig") > 0);
    }
    if (*eval_cmd) return run_eval(eval_args);
    if (*bench_cmd) return run_bench(bench_args);
    if (*hist_cmd) return run_hist(hist_args);
    if (*oracle_cmd) return run_oracle(oracle_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (...) {
    std::cerr << "error: unknown failure\n";
    return kExitInternal;
  }
  return kExitInternal;
}
