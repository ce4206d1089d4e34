#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "prefopt/training.hpp"
#include "prefopt/valuation.hpp"

namespace prefopt {

struct DetectionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double epsilon_true = 0.0;
  double epsilon_hat = 0.0;
  int n_flagged = 0;
};

struct CellMetrics {
  double recovery_error = 0.0;
  double avg_true_reward = 0.0;
  double epsilon_hat = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct SweepSpec {
  std::vector<LossSpec> variants;
  std::vector<double> eps_grid;
  std::vector<std::uint64_t> seeds;
  GeneratorSpec generator;
  TrainConfig train;
};

struct SweepResult {
  // keyed by (variant name, epsilon, seed); the grid is always complete
  std::map<std::tuple<std::string, double, std::uint64_t>, CellMetrics> cells;
};

/// Precision/recall of the flagged set against the truth_flipped flags.
/// An empty flagged set reports precision 0 with n_flagged = 0.
DetectionMetrics detection_metrics(const ValuationReport& report, const PreferenceDataset& data);

/// Mean over prompts of the true reward of the response the model ranks
/// highest.
double avg_true_reward(const PolicyModel& model, const PreferenceDataset& data,
                       const std::vector<double>& true_theta);

/// One cell: generate, contaminate, train a linear model, evaluate.
CellMetrics run_cell(const LossSpec& variant, double epsilon, std::uint64_t seed,
                     const GeneratorSpec& base, const TrainConfig& train);

struct FilteredFit {
  PolicyModel model;
  PreferenceDataset data;  // pairs that survived filtering
  int rounds = 0;          // detect/clean rounds actually performed
};

/// Alternate training and contamination filtering: fit the loss from a copy of
/// `init`, flag the estimated contaminated pairs, drop them, and refit, until
/// nothing is flagged or `max_rounds` cleaning rounds have run. The returned
/// model is trained on the surviving pairs.
FilteredFit fit_filtered(const PolicyModel& init, const PreferenceDataset& data,
                         const LossSpec& loss, const TrainConfig& train, int max_rounds = 5);

SweepResult run_sweep(const SweepSpec& spec, int jobs = 1);

double median(std::vector<double> values);

/// Long-form records plus one per-metric wide table (rows = epsilon,
/// columns = variants, cell = mean +- stddev over seeds).
void write_sweep(const SweepResult& result, const SweepSpec& spec, const std::string& dir);

}  // namespace prefopt
