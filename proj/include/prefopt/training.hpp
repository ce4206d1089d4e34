#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prefopt/objectives.hpp"

namespace prefopt {

struct TrainConfig {
  int max_epochs = 200;
  int batch_size = 0;  // 0 means full batch
  double learning_rate = 0.5;
  double momentum = 0.9;
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainTrace {
  std::vector<double> epoch_loss;  // full-batch loss after each epoch
  double final_grad_norm = 0.0;
  int epochs_run = 0;
  double wall_seconds = 0.0;
};

/// Momentum gradient descent. Minibatch order is reshuffled every epoch
/// from the seed; stops when the full-batch gradient norm drops below
/// grad_tol. Bit-reproducible for a fixed seed.
TrainTrace fit(PolicyModel& model, const PreferenceDataset& data, const LossSpec& spec,
               const TrainConfig& config);

/// Angular deviation 1 - cos(weights, true_theta); invariant to
/// positive rescaling of either vector.
double recovery_error(const PolicyModel& model, const std::vector<double>& true_theta);

void write_trace(const TrainTrace& trace, const std::string& path);

}  // namespace prefopt
