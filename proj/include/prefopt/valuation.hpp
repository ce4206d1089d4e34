#pragma once

#include <string>
#include <vector>

#include "prefopt/model.hpp"

namespace prefopt {

struct ValuationReport {
  double xi_hat = 1.0;       // estimated clean-data proportion, in (0, 1]
  double epsilon_hat = 0.0;  // clamp(1 - xi_hat, 0, 1)
  double gamma = 2.0;
  std::vector<double> likelihoods;   // sigma(g) per pair
  std::vector<std::size_t> ranking;  // indices ascending by likelihood
  std::vector<std::size_t> flagged;  // first floor(N * epsilon_hat) of ranking
};

/// Normalised clean-proportion estimate from per-pair likelihoods:
/// with sbar_i = s_i / sum_j s_j, returns
/// [(1/N) sum sbar_i^gamma] / [sum sbar_i^{1+gamma}].
double xi_hat(const std::vector<double>& likelihoods, double gamma);

/// Unnormalised variant, exposed for diagnostics only; exceeds 1 on
/// non-degenerate inputs.
double xi_hat_raw(const std::vector<double>& likelihoods, double gamma);

double epsilon_hat(double xi);

/// Extended-model scores at scale xi, under the empirical-measure
/// approximation. The DP score identifies xi; the PS score does not.
double extended_dp_score(const std::vector<double>& likelihoods, double gamma, double xi);
double extended_ps_score(const std::vector<double>& likelihoods, double gamma, double xi);

/// Scores every pair, estimates the contamination ratio, and flags the
/// floor(N * epsilon_hat) pairs with the lowest clean-data likelihood.
/// Sort is stable with original-index tie-breaking.
ValuationReport detect(const PolicyModel& model, const PreferenceDataset& data, double gamma);

/// Removes the flagged pairs, preserving order.
PreferenceDataset clean(const PreferenceDataset& data, const ValuationReport& report);

void write_report(const ValuationReport& report, const std::string& path);

}  // namespace prefopt
