#include "crowd/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>

#include "crowd/baselines.hpp"
#include "crowd/em.hpp"

namespace crowd {

std::string to_string(Method method) {
  switch (method) {
    case Method::OptDs: return "opt-ds";
    case Method::MvDs: return "mv-ds";
    case Method::Mv: return "mv";
    case Method::OneCoin: return "onecoin";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::OptDs, Method::MvDs, Method::Mv, Method::OneCoin}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown method '" + name + "'");
}

std::string to_string(SweepVariable variable) {
  switch (variable) {
    case SweepVariable::Items: return "n";
    case SweepVariable::Sparsity: return "pi";
    case SweepVariable::Threshold: return "threshold";
    case SweepVariable::EmRounds: return "em_rounds";
  }
  return "unknown";
}

SweepVariable parse_sweep_variable(const std::string& name) {
  for (auto v : {SweepVariable::Items, SweepVariable::Sparsity, SweepVariable::Threshold, SweepVariable::EmRounds}) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown sweep variable '" + name + "'");
}

std::optional<double> prediction_error_percent(const std::vector<int>& predictions, const std::vector<int>& truth) {
  int evaluated = 0;
  int wrong = 0;
  for (std::size_t j = 0; j < truth.size() && j < predictions.size(); ++j) {
    if (truth[j] < 0) continue;
    ++evaluated;
    wrong += predictions[j] != truth[j];
  }
  if (evaluated == 0) return std::nullopt;
  return 100.0 * wrong / evaluated;
}

double confusion_squared_error(const ConfusionSet<double>& estimate, const ConfusionSet<double>& truth) {
  double total = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) total += (estimate[i] - truth[i]).squaredNorm();
  return total;
}

namespace {

bool spectral_inapplicable(const Error& e) {
  return e.kind() == ErrorKind::IllConditionedMoments || e.kind() == ErrorKind::NotPositiveDefinite;
}

bool onecoin_inapplicable(const Error& e) {
  return e.kind() == ErrorKind::NoOverlap || e.kind() == ErrorKind::DegeneratePair ||
         e.kind() == ErrorKind::TooFewWorkers;
}

/// Accuracy of each worker against the majority vote.
std::vector<double> vote_agreement(const ObservedLabels& labels, double floor) {
  const auto vote = majority_vote(labels);
  std::vector<double> hits(labels.num_workers(), 0.0);
  for (const auto& e : labels.entries()) hits[e.worker] += vote.predictions[e.item] == e.label;
  for (int i = 0; i < labels.num_workers(); ++i) {
    const double p = labels.worker_count(i) > 0 ? hits[i] / labels.worker_count(i) : 1.0 / labels.num_classes();
    hits[i] = std::clamp(p, floor, 1 - floor);
  }
  return hits;
}

int evaluable(const std::vector<int>& truth) {
  return static_cast<int>(std::count_if(truth.begin(), truth.end(), [](int y) { return y >= 0; }));
}

}  // namespace

RunResult run(const RunConfig& config, const ObservedLabels& labels, const Reference& reference) {
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  auto& report = out.report;
  report.method = config.method;
  report.num_workers = labels.num_workers();
  report.num_items = labels.num_items();
  report.num_classes = labels.num_classes();
  report.threshold = config.threshold;
  report.seed = config.seed;
  report.evaluated_items = evaluable(reference.true_labels);

  const bool has_truth = report.evaluated_items > 0;
  const bool has_confusions = reference.confusions != nullptr;

  auto observe = [&](const EmState<double>& state) {
    if (has_truth) {
      report.error_trace.push_back(*prediction_error_percent(state.posterior.predictions, reference.true_labels));
    }
    if (has_confusions) {
      report.confusion_sq_error_trace.push_back(confusion_squared_error(state.confusions, *reference.confusions));
    }
  };

  switch (config.method) {
    case Method::OptDs:
    case Method::MvDs: {
      ConfusionSet<double> init;
      if (config.method == Method::OptDs) {
        SpectralOptions opts;
        opts.seed = config.seed;
        opts.power = config.power;
        opts.threshold = config.threshold;
        try {
          auto spectral = spectral_init(labels, opts);
          report.spectral_converged = spectral.converged;
          init = std::move(spectral.confusions);
        } catch (const Error& e) {
          if (!spectral_inapplicable(e)) throw;
          report.fallback = std::string("mv-ds (") + e.what() + ")";
        }
      }
      if (init.empty()) init = majority_vote_init(labels, config.threshold, config.one_hot_vote);
      auto state = run_em(labels, std::move(init), config.em_rounds, EmObserver<double>(observe));
      report.em_rounds = state.iteration;
      report.log_likelihood_trace = state.trace;
      out.posterior = std::move(state.posterior);
      out.confusions = std::move(state.confusions);
      break;
    }
    case Method::Mv: {
      out.posterior = majority_vote(labels, config.one_hot_vote);
      out.confusions = majority_vote_init(labels, config.threshold, config.one_hot_vote);
      break;
    }
    case Method::OneCoin: {
      OneCoinOptions opts;
      opts.sign_reference = config.sign_reference;
      std::vector<double> init;
      try {
        init = init_accuracies(pairwise_stats(labels).agreement, labels.num_classes(), opts).accuracies;
      } catch (const Error& e) {
        if (!onecoin_inapplicable(e)) throw;
        report.fallback = std::string("majority-vote accuracies (") + e.what() + ")";
        init = vote_agreement(labels, opts.floor);
      }
      auto result = run_onecoin_em(labels, std::move(init), config.em_rounds, opts);
      report.em_rounds = result.iteration;
      report.log_likelihood_trace = result.trace;
      out.posterior = std::move(result.posterior);
      for (double p : result.accuracies) out.confusions.push_back(one_coin_confusion(p, labels.num_classes()));
      break;
    }
  }

  report.error_percent = prediction_error_percent(out.posterior.predictions, reference.true_labels);
  if (has_confusions) report.confusion_sq_error = confusion_squared_error(out.confusions, *reference.confusions);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

namespace {

void write_trace(std::ostream& out, const char* key, const std::vector<double>& trace) {
  out << key << '=';
  for (std::size_t r = 0; r < trace.size(); ++r) out << (r ? ";" : "") << trace[r];
  out << '\n';
}

}  // namespace

void write_report(std::ostream& out, const MetricsReport& report) {
  const auto old = out.precision(12);
  out << "method=" << to_string(report.method) << '\n'
      << "workers=" << report.num_workers << '\n'
      << "items=" << report.num_items << '\n'
      << "classes=" << report.num_classes << '\n'
      << "em_rounds=" << report.em_rounds << '\n'
      << "threshold=" << report.threshold << '\n'
      << "seed=" << report.seed << '\n'
      << "evaluated_items=" << report.evaluated_items << '\n';
  if (report.error_percent) out << "prediction_error_percent=" << *report.error_percent << '\n';
  if (report.confusion_sq_error) out << "confusion_sq_error=" << *report.confusion_sq_error << '\n';
  out << "log_likelihood_prior_constant=dropped\n";
  write_trace(out, "log_likelihood_trace", report.log_likelihood_trace);
  if (!report.error_trace.empty()) write_trace(out, "prediction_error_trace", report.error_trace);
  if (!report.confusion_sq_error_trace.empty()) {
    write_trace(out, "confusion_sq_error_trace", report.confusion_sq_error_trace);
  }
  out << "fallback=" << (report.fallback.empty() ? "none" : report.fallback) << '\n'
      << "spectral_converged=" << (report.spectral_converged ? "true" : "false") << '\n'
      << "wall_seconds=" << report.wall_seconds << '\n';
  out.precision(old);
}

namespace {

RunConfig apply_run_variable(RunConfig run, SweepVariable variable, double value) {
  if (variable == SweepVariable::Threshold) run.threshold = value;
  if (variable == SweepVariable::EmRounds) {
    const auto rounds = static_cast<int>(std::lround(value));
    if (rounds < 1 && rounds != kUntilConverged) throw Error(ErrorKind::InvalidConfig, "em_rounds must be >= 1");
    run.em_rounds = rounds;
  }
  return run;
}

void check_values(const std::vector<double>& values, int trials) {
  if (values.empty()) throw Error(ErrorKind::InvalidConfig, "sweep needs at least one value");
  if (trials < 1) throw Error(ErrorKind::InvalidConfig, "sweep needs at least one trial");
}

void add_means(SweepTable& table) {
  std::map<double, std::vector<const SweepRow*>> groups;
  std::vector<double> order;
  for (const auto& row : table.rows) {
    if (groups[row.value].empty()) order.push_back(row.value);
    groups[row.value].push_back(&row);
  }
  for (double v : order) {
    const auto& rows = groups[v];
    SweepMean mean;
    mean.value = v;
    bool have_sq = true;
    for (const auto* r : rows) {
      mean.error_percent += r->report.error_percent.value_or(std::numeric_limits<double>::quiet_NaN());
      have_sq = have_sq && r->report.confusion_sq_error.has_value();
      if (r->report.confusion_sq_error) mean.confusion_sq_error += *r->report.confusion_sq_error;
      mean.wall_seconds += r->report.wall_seconds;
    }
    const auto count = static_cast<double>(rows.size());
    mean.error_percent /= count;
    mean.confusion_sq_error = have_sq ? mean.confusion_sq_error / count : std::numeric_limits<double>::quiet_NaN();
    mean.wall_seconds /= count;
    table.means.push_back(mean);
  }
}

}  // namespace

SweepTable sweep(const SynthConfig& data, const RunConfig& run_config, SweepVariable variable,
                 const std::vector<double>& values, int trials) {
  check_values(values, trials);
  SweepTable table;
  table.variable = variable;
  for (double value : values) {
    for (int t = 0; t < trials; ++t) {
      SynthConfig cfg = data;
      cfg.seed = data.seed + static_cast<std::uint64_t>(t);
      if (variable == SweepVariable::Items) cfg.num_items = static_cast<int>(std::lround(value));
      if (variable == SweepVariable::Sparsity) cfg.sparsity = value;
      const auto generated = generate(cfg);
      RunConfig rc = apply_run_variable(run_config, variable, value);
      rc.seed = run_config.seed + static_cast<std::uint64_t>(t);
      Reference ref{generated.truth.true_labels, &generated.truth.confusions};
      table.rows.push_back({value, t, run(rc, generated.labels, ref).report});
    }
  }
  add_means(table);
  return table;
}

SweepTable sweep(const ObservedLabels& labels, const Reference& reference, const RunConfig& run_config,
                 SweepVariable variable, const std::vector<double>& values, int trials) {
  check_values(values, trials);
  if (variable == SweepVariable::Items || variable == SweepVariable::Sparsity) {
    throw Error(ErrorKind::InvalidConfig, "a fixed dataset can only sweep threshold or em_rounds");
  }
  SweepTable table;
  table.variable = variable;
  for (double value : values) {
    for (int t = 0; t < trials; ++t) {
      RunConfig rc = apply_run_variable(run_config, variable, value);
      rc.seed = run_config.seed + static_cast<std::uint64_t>(t);
      table.rows.push_back({value, t, run(rc, labels, reference).report});
    }
  }
  add_means(table);
  return table;
}

void write_sweep(std::ostream& out, const SweepTable& table) {
  const auto old = out.precision(10);
  out << to_string(table.variable) << " trial method error_percent confusion_sq_error final_log_likelihood fallback wall_seconds\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : table.rows) {
    const auto& r = row.report;
    out << row.value << ' ' << row.trial << ' ' << to_string(r.method) << ' ' << r.error_percent.value_or(nan) << ' '
        << r.confusion_sq_error.value_or(nan) << ' '
        << (r.log_likelihood_trace.empty() ? nan : r.log_likelihood_trace.back()) << ' '
        << (r.fallback.empty() ? 0 : 1) << ' ' << r.wall_seconds << '\n';
  }
  const std::string method = table.rows.empty() ? "-" : to_string(table.rows.front().report.method);
  for (const auto& m : table.means) {
    out << m.value << " mean " << method << ' ' << m.error_percent << ' ' << m.confusion_sq_error << ' ' << nan
        << " - " << m.wall_seconds << '\n';
  }
  out.precision(old);
}

}  // namespace crowd
