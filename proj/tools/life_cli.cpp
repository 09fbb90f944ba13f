// Command-line surface for the life library: dataset ingestion, missing-value
// injection, correlation extraction, training, evaluation, gradient checks,
// and the synthetic benchmark generator.
//
// Exit codes: 0 success, 1 input error, 2 numerical failure.
// Diagnostics go to standard error as JSON lines.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "life/life.hpp"

namespace {

using nlohmann::json;

void diag(const std::string& level, const std::string& message) {
  json j{{"level", level}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

/// Expand every `--config FILE` (or `--config=FILE`) into the file's
/// key=value pairs as `--key value` tokens, in place. Manifests replay
/// through the same option parsing as a hand-typed command line; later
/// command-line tokens override earlier config values.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> out;
  for (int i = 1; i < argc; ++i) {
    std::string path;
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      path = argv[++i];
    } else if (arg.rfind("--config=", 0) == 0) {
      path = arg.substr(9);
    } else {
      out.push_back(arg);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw life::InputError("cannot open config '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      std::size_t start = line.find_first_not_of(' ');
      if (start == std::string::npos) continue;
      line = line.substr(start);
      if (line[0] == '#') continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos || eq == 0)
        throw life::InputError("config '" + path + "': expected key=value, got '" + line + "'");
      out.push_back("--" + line.substr(0, eq));
      out.push_back(line.substr(eq + 1));
    }
  }
  return out;
}

/// Resolved key=value manifest beside an output file; feed it back with
/// --config to reproduce the run.
void write_manifest(const std::string& out_path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& kv) {
  const std::string path = out_path + ".manifest";
  std::ofstream out(path);
  if (!out) throw life::InputError("cannot open '" + path + "' for writing");
  out << "# life " << LIFE_VERSION << " manifest\n";
  out << "# command: " << command << "\n";
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

struct TrainFlags {
  life::TrainConfig config;
  std::string task_name = "classification";
  std::string source_name = "pdtw";
  std::string agg_name = "dense";
  std::size_t num_classes = 2;

  void attach(CLI::App* cmd, bool with_training) {
    cmd->add_option("--k", config.k, "Per-dimension feature width");
    cmd->add_option("--F", config.F, "Dense interpolation factors");
    cmd->add_option("--alpha", config.alpha, "Imputation loss weight");
    cmd->add_option("--p", config.p, "Missingness penalty coefficient");
    cmd->add_option("--beta", config.beta, "Transport time-distance weight");
    cmd->add_option("--epsilon", config.epsilon, "Transport entropy regularization");
    cmd->add_option("--seed", config.seed, "RNG seed");
    if (with_training) {
      cmd->add_option("--learning-rate", config.learning_rate, "Adam learning rate");
      cmd->add_option("--batch-size", config.batch_size, "Mini-batch size");
      cmd->add_option("--epochs", config.epochs, "Training epochs");
      cmd->add_option("--folds", config.folds, "Cross-validation folds");
      cmd->add_option("--source", source_name,
                      "Correlation source: pdtw|pot|pearson|ones|rand|diag|file");
      cmd->add_option("--correlation-file", config.correlation_file,
                      "Correlation CSV (source=file)");
      cmd->add_option("--task", task_name, "classification|regression");
      cmd->add_option("--num-classes", num_classes, "Classes for classification");
      cmd->add_option("--max-T", config.max_T, "Positional table length (0: longest series)");
      cmd->add_option("--aggregation", agg_name, "dense|mean|attention-pool");
      cmd->add_option("--head-hidden", config.head_hidden,
                      "Prediction head hidden width (0: feature width)");
      cmd->add_option("--lr-decay", config.lr_decay, "Per-epoch learning-rate multiplier");
      cmd->add_option("--early-stop-patience", config.early_stop_patience,
                      "Epochs without improvement before stopping (0: off)");
    }
  }

  life::TrainConfig resolve() {
    config.source = life::correlation_source_from_name(source_name);
    config.agg = life::aggregation_from_name(agg_name);
    if (task_name == "classification") {
      config.task = life::Task{life::Task::Kind::classification, num_classes};
    } else if (task_name == "regression") {
      config.task = life::Task{life::Task::Kind::regression, 0};
    } else {
      throw life::InputError("unknown task '" + task_name + "'");
    }
    return config;
  }

  std::vector<std::pair<std::string, std::string>> manifest_rows(bool with_training) const {
    std::vector<std::pair<std::string, std::string>> kv{
        {"k", std::to_string(config.k)},
        {"F", std::to_string(config.F)},
        {"alpha", fmt(config.alpha)},
        {"p", fmt(config.p)},
        {"beta", fmt(config.beta)},
        {"epsilon", fmt(config.epsilon)},
        {"seed", std::to_string(config.seed)}};
    if (with_training) {
      kv.emplace_back("learning-rate", fmt(config.learning_rate));
      kv.emplace_back("batch-size", std::to_string(config.batch_size));
      kv.emplace_back("epochs", std::to_string(config.epochs));
      kv.emplace_back("folds", std::to_string(config.folds));
      kv.emplace_back("source", source_name);
      if (!config.correlation_file.empty())
        kv.emplace_back("correlation-file", config.correlation_file);
      kv.emplace_back("task", task_name);
      kv.emplace_back("num-classes", std::to_string(num_classes));
      kv.emplace_back("max-T", std::to_string(config.max_T));
      kv.emplace_back("aggregation", agg_name);
      kv.emplace_back("head-hidden", std::to_string(config.head_hidden));
      kv.emplace_back("lr-decay", fmt(config.lr_decay));
      kv.emplace_back("early-stop-patience", std::to_string(config.early_stop_patience));
    }
    return kv;
  }
};

json eval_report_to_json(const life::EvalReport& rep, const life::Task& task) {
  json j{{"loss", rep.loss}, {"L_pred", rep.pred}, {"L_imp", rep.imp}, {"count", rep.count}};
  if (task.kind == life::Task::Kind::classification) {
    j["accuracy"] = rep.accuracy;
    if (!std::isnan(rep.auc)) j["auc"] = rep.auc;
  } else {
    j["mae"] = rep.mae;
  }
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"life: individual-feature learning for multivariate time series with missing values",
               "life"};
  app.require_subcommand(1);
  app.set_version_flag("--version", LIFE_VERSION);

  // convert ------------------------------------------------------------
  auto* convert = app.add_subcommand("convert", "Long-format CSV to JSON-lines dataset");
  std::string cv_input, cv_output;
  double cv_bucket = 0.0;
  convert->add_option("--input", cv_input, "CSV with rows sample_id,t,dim,value")->required();
  convert->add_option("--output", cv_output, "JSON-lines output path")->required();
  convert->add_option("--bucket-width", cv_bucket,
                      "Average observations into fixed-width time buckets (0: off)");
  convert->set_config("--config", "", "Replay a manifest or key=value config file");
  convert->callback([&] {
    const life::Dataset ds = life::read_dataset_csv_long(cv_input, cv_bucket);
    life::write_dataset_jsonl(cv_output, ds);
    write_manifest(cv_output, "convert",
                   {{"input", cv_input}, {"output", cv_output}, {"bucket-width", fmt(cv_bucket)}});
    diag("info", "converted " + std::to_string(ds.size()) + " samples");
  });

  // inject -------------------------------------------------------------
  auto* inject = app.add_subcommand("inject", "Damage random sensors by eliminating observations");
  std::string in_input, in_output;
  std::size_t in_n = 0;
  double in_rate = 0.9;
  std::uint64_t in_seed = 0;
  inject->add_option("--input", in_input, "JSON-lines dataset")->required();
  inject->add_option("--output", in_output, "JSON-lines output path")->required();
  inject->add_option("--n-damaged", in_n, "Number of damaged dimensions")->required();
  inject->add_option("--rate", in_rate, "Per-observation elimination probability");
  inject->add_option("--seed", in_seed, "RNG seed");
  inject->set_config("--config", "", "Replay a manifest or key=value config file");
  inject->callback([&] {
    life::Dataset ds = life::read_dataset_jsonl(in_input);
    if (ds.samples.empty()) throw life::InputError("inject: empty dataset");
    const std::size_t D = ds.dims();
    if (in_n > D) throw life::InputError("inject: n exceeds dimension count");
    std::vector<std::size_t> dims(D);
    std::iota(dims.begin(), dims.end(), 0);
    std::mt19937_64 rng(in_seed);
    std::shuffle(dims.begin(), dims.end(), rng);
    std::set<std::size_t> damaged(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(in_n));
    const double amr_before = life::missing_rate(ds);
    ds = life::inject_damaged_sensors(std::move(ds), damaged, in_rate,
                                      in_seed ^ 0xD1B54A32D192ED03ULL);
    const double amr_after = life::missing_rate(ds);
    life::write_dataset_jsonl(in_output, ds);
    json report{{"damaged_indices", std::vector<std::size_t>(damaged.begin(), damaged.end())},
                {"n", in_n},
                {"rate", in_rate},
                {"amr_before", amr_before},
                {"amr_after", amr_after}};
    std::ofstream rep_out(in_output + ".report.json");
    rep_out << report.dump(2) << '\n';
    std::cout << report.dump(2) << '\n';
    write_manifest(in_output, "inject",
                   {{"input", in_input},
                    {"output", in_output},
                    {"n-damaged", std::to_string(in_n)},
                    {"rate", fmt(in_rate)},
                    {"seed", std::to_string(in_seed)}});
  });

  // cme ----------------------------------------------------------------
  auto* cme = app.add_subcommand("cme", "Extract the dimension-correlation matrix");
  std::string cm_input, cm_output, cm_method = "pdtw";
  TrainFlags cm_flags;
  cme->add_option("--input", cm_input, "JSON-lines dataset")->required();
  cme->add_option("--output", cm_output, "Correlation CSV output path")->required();
  cme->add_option("--method", cm_method, "pdtw|dtw-impute|dtw-drop|pot|pearson");
  cm_flags.attach(cme, false);
  cme->set_config("--config", "", "Replay a manifest or key=value config file");
  cme->callback([&] {
    life::Dataset ds = life::read_dataset_jsonl(cm_input);
    ds = life::zscore_normalize(std::move(ds));  // matches the training pipeline
    life::CmeDiagnostics diagnostics;
    life::CorrelationMatrix corr;
    if (cm_method == "pearson") {
      corr = life::pearson_cme(ds, &diagnostics);
    } else {
      life::DistanceSpec spec;
      spec.p = cm_flags.config.p;
      spec.beta = cm_flags.config.beta;
      spec.sinkhorn.epsilon = cm_flags.config.epsilon;
      if (cm_method == "pdtw")
        spec.kind = life::DistanceSpec::Kind::pdtw;
      else if (cm_method == "dtw-impute")
        spec.kind = life::DistanceSpec::Kind::dtw_impute;
      else if (cm_method == "dtw-drop")
        spec.kind = life::DistanceSpec::Kind::dtw_drop;
      else if (cm_method == "pot")
        spec.kind = life::DistanceSpec::Kind::pot;
      else
        throw life::InputError("unknown cme method '" + cm_method + "'");
      corr = life::cme_pipeline(ds, spec, &diagnostics);
    }
    life::validate_correlation(corr);
    life::write_correlation_csv(cm_output, corr);
    json dj{{"zero_weight_pairs", json::array()},
            {"nonconverged_transport", diagnostics.nonconverged_transport}};
    for (const auto& [i, j] : diagnostics.zero_weight_pairs)
      dj["zero_weight_pairs"].push_back({i, j});
    std::ofstream dout(cm_output + ".diagnostics.json");
    dout << dj.dump(2) << '\n';
    if (!diagnostics.zero_weight_pairs.empty())
      diag("warning", std::to_string(diagnostics.zero_weight_pairs.size()) +
                          " dimension pairs had zero total weight");
    if (diagnostics.nonconverged_transport > 0)
      diag("warning", std::to_string(diagnostics.nonconverged_transport) +
                          " transport solves did not reach tolerance");
    auto kv = cm_flags.manifest_rows(false);
    kv.insert(kv.begin(), {{"input", cm_input}, {"output", cm_output}, {"method", cm_method}});
    write_manifest(cm_output, "cme", kv);
  });

  // train ---------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a model; writes checkpoint and log");
  std::string tr_input, tr_output, tr_log;
  bool tr_cv = false;
  TrainFlags tr_flags;
  train->add_option("--input", tr_input, "JSON-lines dataset")->required();
  train->add_option("--output", tr_output, "Checkpoint JSON output path")->required();
  train->add_option("--log", tr_log, "Training log CSV (default: <output>.log.csv)");
  train->add_flag("--cv", tr_cv, "Also run k-fold cross-validation and report fold metrics");
  tr_flags.attach(train, true);
  train->set_config("--config", "", "Replay a manifest or key=value config file");
  train->callback([&] {
    const life::Dataset ds = life::read_dataset_jsonl(tr_input);
    const life::TrainConfig config = tr_flags.resolve();
    const life::TrainResult result = life::train(ds, config);
    life::write_checkpoint(tr_output, result.model, result.correlation, result.norm);
    const std::string log_path = tr_log.empty() ? tr_output + ".log.csv" : tr_log;
    life::write_training_log(log_path, result.log);
    if (tr_cv) {
      const life::CrossValResult cv = life::cross_validate(ds, config);
      json folds = json::array();
      for (const auto& fr : cv.folds) folds.push_back(eval_report_to_json(fr.test, config.task));
      json cvj{{"folds", folds},
               {"mean_metric", cv.mean_metric},
               {"stddev_metric", cv.stddev_metric}};
      if (!std::isnan(cv.mean_auc)) cvj["mean_auc"] = cv.mean_auc;
      std::ofstream cvout(tr_output + ".cv.json");
      cvout << cvj.dump(2) << '\n';
      std::cout << cvj.dump(2) << '\n';
    }
    auto kv = tr_flags.manifest_rows(true);
    kv.insert(kv.begin(), {{"input", tr_input}, {"output", tr_output}, {"log", log_path}});
    if (tr_cv) kv.emplace_back("cv", "true");
    write_manifest(tr_output, "train", kv);
    diag("info", "final train loss " + fmt(result.log.back().loss));
  });

  // eval ----------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string ev_model, ev_input, ev_output;
  eval->add_option("--model", ev_model, "Checkpoint JSON")->required();
  eval->add_option("--input", ev_input, "JSON-lines dataset")->required();
  eval->add_option("--output", ev_output, "Metrics JSON output path (default: stdout only)");
  eval->set_config("--config", "", "Replay a manifest or key=value config file");
  eval->callback([&] {
    const life::Checkpoint ck = life::read_checkpoint(ev_model);
    life::Dataset ds = life::read_dataset_jsonl(ev_input);
    if (ds.samples.empty()) throw life::InputError("eval: empty dataset");
    if (ds.dims() != ck.model.D)
      throw life::InputError("eval: dataset has " + std::to_string(ds.dims()) +
                             " dimensions, checkpoint expects " + std::to_string(ck.model.D));
    ds.task = ck.model.task;
    ds = life::apply_normalization(std::move(ds), ck.norm);
    const life::ExpandedCorrelation cexp = life::expand_correlation(ck.correlation, ck.model.k);
    const life::EvalReport rep = life::evaluate(ck.model, cexp, ds);
    const json out = eval_report_to_json(rep, ck.model.task);
    std::cout << out.dump(2) << '\n';
    if (!ev_output.empty()) {
      std::ofstream fout(ev_output);
      if (!fout) throw life::InputError("cannot open '" + ev_output + "' for writing");
      fout << out.dump(2) << '\n';
      write_manifest(ev_output, "eval",
                     {{"model", ev_model}, {"input", ev_input}, {"output", ev_output}});
    }
  });

  // gradcheck -----------------------------------------------------------
  auto* gradcheck = app.add_subcommand("gradcheck", "Verify gradients against finite differences");
  std::size_t gc_T = 6, gc_D = 3, gc_k = 2, gc_min_params = 200;
  double gc_epsilon = 1e-5, gc_tolerance = 1e-4;
  std::uint64_t gc_seed = 0;
  std::string gc_task = "classification", gc_output;
  gradcheck->add_option("--T", gc_T, "Series length");
  gradcheck->add_option("--D", gc_D, "Dimensions");
  gradcheck->add_option("--k", gc_k, "Per-dimension feature width");
  gradcheck->add_option("--epsilon", gc_epsilon, "Finite-difference step");
  gradcheck->add_option("--tolerance", gc_tolerance, "Max relative error to pass");
  gradcheck->add_option("--min-params", gc_min_params, "Minimum scalars to probe");
  gradcheck->add_option("--seed", gc_seed, "RNG seed");
  gradcheck->add_option("--task", gc_task, "classification|regression");
  gradcheck->add_option("--output", gc_output, "Report JSON output path (default: stdout only)");
  gradcheck->set_config("--config", "", "Replay a manifest or key=value config file");
  gradcheck->callback([&] {
    life::Task task = gc_task == "regression"
                          ? life::Task{life::Task::Kind::regression, 0}
                          : life::Task{life::Task::Kind::classification, 2};
    const auto inst = life::make_gradcheck_instance(gc_T, gc_D, gc_k, task, gc_seed);
    const auto report = life::gradient_check(inst.model, inst.cexp, inst.samples, gc_epsilon,
                                             gc_min_params, gc_seed);
    json groups = json::object();
    for (const auto& [name, err] : report.per_group) groups[name] = err;
    json out{{"max_rel_error", report.max_rel_error},
             {"checked", report.checked},
             {"tolerance", gc_tolerance},
             {"per_group", groups},
             {"pass", report.max_rel_error < gc_tolerance}};
    std::cout << out.dump(2) << '\n';
    if (!gc_output.empty()) {
      std::ofstream fout(gc_output);
      fout << out.dump(2) << '\n';
      write_manifest(gc_output, "gradcheck",
                     {{"T", std::to_string(gc_T)},
                      {"D", std::to_string(gc_D)},
                      {"k", std::to_string(gc_k)},
                      {"epsilon", fmt(gc_epsilon)},
                      {"tolerance", fmt(gc_tolerance)},
                      {"min-params", std::to_string(gc_min_params)},
                      {"seed", std::to_string(gc_seed)},
                      {"task", gc_task},
                      {"output", gc_output}});
    }
    if (report.max_rel_error >= gc_tolerance)
      throw life::NumericalError("gradient check failed: max relative error " +
                                 fmt(report.max_rel_error));
  });

  // synth -----------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Emit the planted-correlation synthetic benchmark");
  std::string sy_preset = "stability", sy_output;
  std::size_t sy_N = 200, sy_T = 16;
  double sy_noise = 0.05, sy_spike = 0.08;
  std::uint64_t sy_seed = 0;
  synth->add_option("--preset", sy_preset, "stability|classification|damage-base");
  synth->add_option("--output", sy_output, "JSON-lines output path")->required();
  synth->add_option("--N", sy_N, "Sample count");
  synth->add_option("--T", sy_T, "Series length");
  synth->add_option("--noise", sy_noise, "Member noise standard deviation");
  synth->add_option("--spike-prob", sy_spike, "Spike probability for the spike channels");
  synth->add_option("--seed", sy_seed, "RNG seed");
  synth->set_config("--config", "", "Replay a manifest or key=value config file");
  synth->callback([&] {
    life::SyntheticConfig cfg = life::synthetic_preset(sy_preset);
    cfg.N = sy_N;
    cfg.T = sy_T;
    cfg.noise = sy_noise;
    cfg.spike_prob = sy_spike;
    cfg.seed = sy_seed;
    const life::Dataset ds = life::make_planted_dataset(cfg);
    life::write_dataset_jsonl(sy_output, ds);
    write_manifest(sy_output, "synth",
                   {{"preset", sy_preset},
                    {"output", sy_output},
                    {"N", std::to_string(sy_N)},
                    {"T", std::to_string(sy_T)},
                    {"noise", fmt(sy_noise)},
                    {"spike-prob", fmt(sy_spike)},
                    {"seed", std::to_string(sy_seed)}});
    diag("info", "wrote " + std::to_string(ds.size()) + " samples (missing rate " +
                     fmt(life::missing_rate(ds)) + ")");
  });

  try {
    std::vector<std::string> args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11's vector overload pops from the back
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help/usage text itself
    return code == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const life::NumericalError& e) {
    diag("error", e.what());
    return 2;
  } catch (const life::InputError& e) {
    diag("error", e.what());
    return 1;
  } catch (const std::exception& e) {
    diag("error", e.what());
    return 1;
  }
}
