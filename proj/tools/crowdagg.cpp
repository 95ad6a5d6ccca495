// crowdagg: label aggregation from redundant crowd labels.
//
//   crowdagg synth --workers 100 --items 1000 --pi 0.5 --seed 1 --out data/
//   crowdagg run --method opt-ds --k 2 --labels data/labels.csv --truth data/truth.csv --out result/
//   crowdagg sweep --variable em_rounds --values 1,2,3,5,10 --trials 10 --pi 0.2 --out sweep/
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "crowd/em.hpp"
#include "crowd/error.hpp"
#include "crowd/io.hpp"
#include "crowd/pipeline.hpp"
#include "crowd/synth.hpp"

namespace fs = std::filesystem;

namespace {

struct SynthFlags {
  int workers = 100;
  int items = 1000;
  int classes = 2;
  double pi = 1.0;
  std::string regime = "binary";
  double low = -1;
  double high = -1;
  std::uint64_t seed = 0;
};

void add_synth_flags(CLI::App* app, SynthFlags& f) {
  app->add_option("--workers,-m", f.workers, "number of workers")->capture_default_str();
  app->add_option("--items,-n", f.items, "number of items")->capture_default_str();
  app->add_option("--pi", f.pi, "probability a worker labels an item")->capture_default_str();
  app->add_option("--regime", f.regime, "binary or one-coin")
      ->check(CLI::IsMember({"binary", "one-coin"}))
      ->capture_default_str();
  app->add_option("--low", f.low, "lower end of the diagonal / accuracy range");
  app->add_option("--high", f.high, "upper end of the diagonal / accuracy range");
}

crowd::SynthConfig to_synth_config(const SynthFlags& f) {
  crowd::SynthConfig cfg;
  cfg.num_workers = f.workers;
  cfg.num_items = f.items;
  cfg.num_classes = f.classes;
  cfg.sparsity = f.pi;
  cfg.seed = f.seed;
  if (f.regime == "one-coin") {
    crowd::OneCoinRegime r;
    if (f.low >= 0) r.low = f.low;
    if (f.high >= 0) r.high = f.high;
    cfg.regime = r;
  } else {
    crowd::BinaryRegime r;
    if (f.low >= 0) r.low = f.low;
    if (f.high >= 0) r.high = f.high;
    cfg.regime = r;
  }
  return cfg;
}

struct RunFlags {
  std::string method = "opt-ds";
  int classes = 0;
  std::string em_rounds = "10";
  double threshold = 1e-6;
  std::string labels;
  std::string truth;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool one_hot_vote = false;
  std::string sign_reference = "first-partner";
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--method", f.method, "opt-ds, mv-ds, mv or onecoin")
      ->check(CLI::IsMember({"opt-ds", "mv-ds", "mv", "onecoin"}))
      ->capture_default_str();
  app->add_option("--em-rounds", f.em_rounds, "EM rounds, or 'converge'")->capture_default_str();
  app->add_option("--threshold", f.threshold, "entry floor for initial confusion matrices")->capture_default_str();
  app->add_flag("--one-hot-vote", f.one_hot_vote, "hard majority-vote posterior for MV-D&S initialization");
  app->add_option("--sign-reference", f.sign_reference, "one-coin sign reference: first-partner or own-partner")
      ->check(CLI::IsMember({"first-partner", "own-partner"}))
      ->capture_default_str();
}

crowd::RunConfig to_run_config(const RunFlags& f) {
  crowd::RunConfig cfg;
  cfg.method = crowd::parse_method(f.method);
  if (f.em_rounds == "converge") {
    cfg.em_rounds = crowd::kUntilConverged;
  } else {
    try {
      std::size_t used = 0;
      cfg.em_rounds = std::stoi(f.em_rounds, &used);
      if (used != f.em_rounds.size() || cfg.em_rounds < 1) throw std::invalid_argument("rounds");
    } catch (const std::exception&) {
      throw CLI::ValidationError("--em-rounds", "expected a positive integer or 'converge'");
    }
  }
  cfg.threshold = f.threshold;
  cfg.seed = f.seed;
  cfg.one_hot_vote = f.one_hot_vote;
  cfg.sign_reference = f.sign_reference == "own-partner" ? crowd::SignReference::OwnPartner
                                                         : crowd::SignReference::FirstWorkerPartner;
  return cfg;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--values", "not a number: '" + token + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError("--values", "need at least one value");
  return out;
}

std::string render(auto&& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

int cmd_synth(const SynthFlags& f, const std::string& out_dir) {
  const auto data = crowd::generate(to_synth_config(f));
  fs::create_directories(out_dir);
  const auto file = crowd::with_sequential_ids(data.labels);
  crowd::write_file_atomic(fs::path(out_dir) / "labels.csv",
                           render([&](std::ostream& o) { crowd::write_labels(o, file); }));
  crowd::write_file_atomic(fs::path(out_dir) / "truth.csv", render([&](std::ostream& o) {
                             crowd::write_item_labels(o, file.item_ids, data.truth.true_labels);
                           }));
  crowd::write_file_atomic(fs::path(out_dir) / "confusions.csv", render([&](std::ostream& o) {
                             crowd::write_confusions(o, file.worker_ids, data.truth.confusions);
                           }));
  std::cout << "wrote " << data.labels.size() << " labels to " << out_dir << '\n';
  return 0;
}

struct LoadedData {
  crowd::LabelFile file;
  crowd::Reference reference;
};

LoadedData load(const RunFlags& f) {
  LoadedData d;
  d.file = crowd::read_labels(fs::path(f.labels), f.classes);
  if (!f.truth.empty()) {
    d.reference.true_labels = crowd::align_truth(d.file, crowd::read_truth(fs::path(f.truth), d.file.labels.num_classes()));
  }
  return d;
}

int cmd_run(const RunFlags& f) {
  const auto data = load(f);
  const auto result = crowd::run(to_run_config(f), data.file.labels, data.reference);
  fs::create_directories(f.out);
  const fs::path dir(f.out);
  crowd::write_file_atomic(dir / "predictions.csv", render([&](std::ostream& o) {
                             crowd::write_item_labels(o, data.file.item_ids, result.posterior.predictions);
                           }));
  crowd::write_file_atomic(dir / "confusions.csv", render([&](std::ostream& o) {
                             crowd::write_confusions(o, data.file.worker_ids, result.confusions);
                           }));
  crowd::write_file_atomic(dir / "id_map.csv", render([&](std::ostream& o) {
                             o << "# kind,index,external_id\n";
                             for (std::size_t i = 0; i < data.file.worker_ids.size(); ++i)
                               o << "worker," << i + 1 << ',' << data.file.worker_ids[i] << '\n';
                             for (std::size_t j = 0; j < data.file.item_ids.size(); ++j)
                               o << "item," << j + 1 << ',' << data.file.item_ids[j] << '\n';
                           }));
  const auto report = render([&](std::ostream& o) { crowd::write_report(o, result.report); });
  crowd::write_file_atomic(dir / "report.txt", report);
  std::cout << report;
  return 0;
}

int cmd_sweep(const SynthFlags& sf, const RunFlags& rf, const std::string& variable, const std::string& values,
              int trials) {
  const auto var = crowd::parse_sweep_variable(variable);
  const auto vals = parse_values(values);
  const auto run_cfg = to_run_config(rf);
  crowd::SweepTable table;
  if (!rf.labels.empty()) {
    const auto data = load(rf);
    table = crowd::sweep(data.file.labels, data.reference, run_cfg, var, vals, trials);
  } else {
    table = crowd::sweep(to_synth_config(sf), run_cfg, var, vals, trials);
  }
  fs::create_directories(rf.out);
  const auto text = render([&](std::ostream& o) { crowd::write_sweep(o, table); });
  crowd::write_file_atomic(fs::path(rf.out) / "sweep.txt", text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crowd label aggregation: spectral-initialized Dawid-Skene EM and baselines"};
  app.require_subcommand(1);

  SynthFlags synth_flags;
  std::string synth_out = ".";
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_synth_flags(synth, synth_flags);
  synth->add_option("--k", synth_flags.classes, "number of classes (binary needs 2)")->capture_default_str();
  synth->add_option("--seed", synth_flags.seed, "random seed")->capture_default_str();
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "aggregate a label file");
  add_run_flags(run, run_flags);
  run->add_option("--k", run_flags.classes, "number of classes (0 infers from the data)")->capture_default_str();
  run->add_option("--labels", run_flags.labels, "worker_id,item_id,label file")->required()->check(CLI::ExistingFile);
  run->add_option("--truth", run_flags.truth, "item_id,label file")->check(CLI::ExistingFile);
  run->add_option("--out", run_flags.out, "output directory")->capture_default_str();
  run->add_option("--seed", run_flags.seed, "random seed")->capture_default_str();

  SynthFlags sweep_synth;
  RunFlags sweep_run;
  std::string variable;
  std::string values;
  int trials = 10;
  auto* sw = app.add_subcommand("sweep", "repeat runs over a range of one parameter");
  add_run_flags(sw, sweep_run);
  add_synth_flags(sw, sweep_synth);
  sw->add_option("--k", sweep_run.classes, "number of classes")->capture_default_str();
  sw->add_option("--labels", sweep_run.labels, "label file (default: synthetic data)")->check(CLI::ExistingFile);
  sw->add_option("--truth", sweep_run.truth, "item_id,label file")->check(CLI::ExistingFile);
  sw->add_option("--out", sweep_run.out, "output directory")->capture_default_str();
  sw->add_option("--seed", sweep_run.seed, "base seed for data and runs")->capture_default_str();
  sw->add_option("--variable", variable, "n, pi, threshold or em_rounds")
      ->required()
      ->check(CLI::IsMember({"n", "pi", "threshold", "em_rounds"}));
  sw->add_option("--values", values, "comma-separated values")->required();
  sw->add_option("--trials", trials, "trials per value")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) return cmd_synth(synth_flags, synth_out);
    if (*run) return cmd_run(run_flags);
    sweep_synth.seed = sweep_run.seed;
    sweep_synth.classes = sweep_run.classes > 0 ? sweep_run.classes : 2;
    return cmd_sweep(sweep_synth, sweep_run, variable, values, trials);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const crowd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return crowd::is_numerical(e.kind()) ? 3 : 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
