#pragma once

// Method drivers, evaluation metrics and parameter sweeps behind the CLI.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crowd/labels.hpp"
#include "crowd/model.hpp"
#include "crowd/onecoin.hpp"
#include "crowd/spectral.hpp"
#include "crowd/synth.hpp"

namespace crowd {

enum class Method { OptDs, MvDs, Mv, OneCoin };

std::string to_string(Method method);
/// Accepts "opt-ds", "mv-ds", "mv", "onecoin". Throws InvalidConfig.
Method parse_method(const std::string& name);

struct RunConfig {
  Method method = Method::OptDs;
  int em_rounds = 10;  // or kUntilConverged
  double threshold = 1e-6;
  std::uint64_t seed = 0;
  TensorPowerOptions power;
  bool one_hot_vote = false;
  SignReference sign_reference = SignReference::FirstWorkerPartner;
};

/// What the evaluation can compare against. Both parts are optional.
struct Reference {
  std::vector<int> true_labels;             // per item, -1 where unknown
  const ConfusionSet<double>* confusions = nullptr;
};

struct MetricsReport {
  Method method = Method::OptDs;
  int num_workers = 0;
  int num_items = 0;
  int num_classes = 0;
  int em_rounds = 0;  // rounds actually executed
  double threshold = 0;
  std::uint64_t seed = 0;
  int evaluated_items = 0;
  std::optional<double> error_percent;
  std::optional<double> confusion_sq_error;  // sum_i ||C_hat_i - C_i||_F^2
  std::vector<double> log_likelihood_trace;  // initialization first
  std::vector<double> error_trace;
  std::vector<double> confusion_sq_error_trace;
  std::string fallback;  // empty when the requested pipeline ran unchanged
  bool spectral_converged = true;
  double wall_seconds = 0;
};

struct RunResult {
  Posterior<double> posterior;
  ConfusionSet<double> confusions;
  MetricsReport report;
};

/// 100 * share of mispredicted items among those with a known label.
/// Returns nullopt when no item is evaluable.
std::optional<double> prediction_error_percent(const std::vector<int>& predictions, const std::vector<int>& truth);

double confusion_squared_error(const ConfusionSet<double>& estimate, const ConfusionSet<double>& truth);

/// Runs one method end to end. opt-ds falls back to the majority-vote
/// initialization when the moments are ill-conditioned; onecoin falls back
/// to accuracies measured against the majority vote when pairwise
/// statistics are missing or degenerate. Both record the fallback.
RunResult run(const RunConfig& config, const ObservedLabels& labels, const Reference& reference = {});

/// key=value lines; traces are ';'-separated.
void write_report(std::ostream& out, const MetricsReport& report);

enum class SweepVariable { Items, Sparsity, Threshold, EmRounds };

std::string to_string(SweepVariable variable);
SweepVariable parse_sweep_variable(const std::string& name);

struct SweepRow {
  double value = 0;
  int trial = 0;
  MetricsReport report;
};

struct SweepMean {
  double value = 0;
  double error_percent = 0;
  double confusion_sq_error = 0;  // NaN when unavailable
  double wall_seconds = 0;
};

struct SweepTable {
  SweepVariable variable = SweepVariable::EmRounds;
  std::vector<SweepRow> rows;
  std::vector<SweepMean> means;
};

/// Synthetic sweep: trial t uses data seed data.seed + t and run seed
/// run.seed + t, so every value sees the same datasets when the variable
/// does not change the data.
SweepTable sweep(const SynthConfig& data, const RunConfig& run, SweepVariable variable,
                 const std::vector<double>& values, int trials);

/// Sweep over a fixed dataset; only Threshold and EmRounds make sense.
SweepTable sweep(const ObservedLabels& labels, const Reference& reference, const RunConfig& run,
                 SweepVariable variable, const std::vector<double>& values, int trials);

/// Whitespace-separated columns with a header line; mean rows have trial "mean".
void write_sweep(std::ostream& out, const SweepTable& table);

}  // namespace crowd
