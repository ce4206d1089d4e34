#pragma once

#include <string>
#include <variant>
#include <vector>

#include "prefopt/dataset.hpp"

namespace prefopt {

/// Softmax policy over a fixed response table, with a frozen reference
/// policy. The implicit reward is beta * (log pi_theta - log pi_ref).
struct TabularPolicy {
  std::vector<std::vector<double>> theta;       // [n_prompts][n_responses] logits
  std::vector<std::vector<double>> ref_logits;  // frozen, same shape
  double beta = 0.1;
};

/// Reward linear in the response features: r(x, y) = beta * w . phi(x, y).
struct LinearRewardModel {
  std::vector<double> weights;
  double beta = 0.1;
};

using PolicyModel = std::variant<TabularPolicy, LinearRewardModel>;

std::size_t param_count(const PolicyModel& model);
std::vector<double> get_params(const PolicyModel& model);
void set_params(PolicyModel& model, const std::vector<double>& params);

double beta_of(const PolicyModel& model);

/// Implicit reward of one response. The tabular backend ignores the
/// dataset features; the linear backend reads phi from it.
double implicit_reward(const PolicyModel& model, const PreferenceDataset& data,
                       int prompt_id, int response_id);

/// g(s) = r(win) - r(lose).
double margin(const PolicyModel& model, const PreferenceDataset& data, const PreferencePair& pair);

/// Exact gradient of the margin w.r.t. the flat parameter vector,
/// accumulated into `out` with multiplier `scale`.
void add_margin_gradient(const PolicyModel& model, const PreferenceDataset& data,
                         const PreferencePair& pair, double scale, std::vector<double>& out);

std::vector<double> margin_gradient(const PolicyModel& model, const PreferenceDataset& data,
                                    const PreferencePair& pair);

/// Winner-count MLE reference policy with add-one smoothing; theta is
/// initialised equal to ref_logits so every margin starts at zero.
TabularPolicy fit_reference(const PreferenceDataset& data, double beta = 0.1, double smoothing = 1.0);

// JSON checkpoint: backend tag, shapes, beta, then parameters.
// Round-trip is value-lossless.
void write_model(const PolicyModel& model, const std::string& path);
PolicyModel read_model(const std::string& path);

}  // namespace prefopt
