#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "prefopt/model.hpp"

namespace prefopt {

enum class LossVariant { DPO, IPO, CDPO, RDPO, DRDPO, HOLDER };

enum class HolderPhi { DP, PS };

struct LossSpec {
  LossVariant variant = LossVariant::DPO;
  double c = 0.25;          // cDPO / R-DPO mixing weight, in [0, 0.5)
  double beta_prime = 1.0;  // Dr. DPO temperature
  double gamma = 2.0;       // Holder exponent
  HolderPhi phi = HolderPhi::DP;

  void validate() const {
    if (c < 0.0 || c >= 0.5) throw std::invalid_argument("c must lie in [0, 0.5)");
    if (beta_prime <= 0.0) throw std::invalid_argument("beta_prime must be positive");
    if (gamma <= 0.0) throw std::invalid_argument("gamma must be positive");
  }
};

LossVariant parse_variant(const std::string& name);
std::string variant_name(LossVariant variant);

struct BatchLoss {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<double> per_sample_likelihood;  // sigma(g) per pair
};

/// Raised when a loss or gradient goes non-finite; carries the sample
/// index when one is identifiable.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double sigmoid(double g);
double log_sigmoid(double g);  // -softplus(-g)
double sigmoid_pow(double g, double gamma);  // sigma(g)^gamma via exp(gamma * log sigma)

double likelihood(const PolicyModel& model, const PreferenceDataset& data, const PreferencePair& pair);

BatchLoss loss_and_grad(const PolicyModel& model, const PreferenceDataset& data, const LossSpec& spec);

/// Per-sample gradient of the first (order-gamma) term of the Holder/DP
/// objective and of the plain DPO loss, for weight-factorisation checks.
std::vector<double> holder_term1_gradient(const PolicyModel& model, const PreferenceDataset& data,
                                          const PreferencePair& pair, double gamma);
std::vector<double> dpo_sample_gradient(const PolicyModel& model, const PreferenceDataset& data,
                                        const PreferencePair& pair);

/// Max relative error of the analytic gradient against central finite
/// differences of the loss value.
double gradient_check(const PolicyModel& model, const PreferenceDataset& data,
                      const LossSpec& spec, double step);

}  // namespace prefopt
