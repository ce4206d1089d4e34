#include "prefopt/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "prefopt/rng.hpp"

namespace prefopt {

void TrainConfig::validate() const {
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be positive");
  if (batch_size < 0) throw std::invalid_argument("batch_size must be non-negative");
  if (learning_rate < 0.0) throw std::invalid_argument("learning_rate must be non-negative");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (grad_tol <= 0.0) throw std::invalid_argument("grad_tol must be positive");
}

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TrainTrace fit(PolicyModel& model, const PreferenceDataset& data, const LossSpec& spec,
               const TrainConfig& config) {
  config.validate();
  data.validate();
  auto t0 = std::chrono::steady_clock::now();

  const std::size_t n = data.pairs.size();
  const std::size_t batch = config.batch_size == 0 ? n : std::min<std::size_t>(config.batch_size, n);

  std::vector<double> params = get_params(model);
  std::vector<double> velocity(params.size(), 0.0);
  TrainTrace trace;

  PreferenceDataset scratch;  // minibatch view sharing the feature tables
  scratch.features = data.features;
  scratch.meta = data.meta;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    SplitRng shuffle_rng(config.seed ^ static_cast<std::uint64_t>(epoch), "epoch_shuffle");
    auto order = shuffle_rng.permutation(n);

    for (std::size_t start = 0; start < n; start += batch) {
      scratch.pairs.clear();
      for (std::size_t i = start; i < std::min(start + batch, n); ++i)
        scratch.pairs.push_back(data.pairs[order[i]]);

      BatchLoss batch_loss;
      try {
        batch_loss = loss_and_grad(model, scratch, spec);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch at " + std::to_string(start) +
                           ", variant " + variant_name(spec.variant) + ": " + e.what());
      }
      for (std::size_t k = 0; k < params.size(); ++k) {
        velocity[k] = config.momentum * velocity[k] - config.learning_rate * batch_loss.gradient[k];
        params[k] += velocity[k];
      }
      set_params(model, params);
    }

    BatchLoss full = loss_and_grad(model, data, spec);
    // Full-batch plain descent on the convex-in-g losses must not go
    // uphill; an increase means the learning rate is too large.
    bool convex = spec.variant == LossVariant::DPO || spec.variant == LossVariant::IPO;
    if (convex && batch == n && config.momentum == 0.0 && !trace.epoch_loss.empty() &&
        full.value > trace.epoch_loss.back() + 1e-10 * std::max(1.0, std::abs(trace.epoch_loss.back())))
      throw NumericError("loss increased at epoch " + std::to_string(epoch) +
                         " for variant " + variant_name(spec.variant) +
                         "; reduce the learning rate");
    trace.epoch_loss.push_back(full.value);
    trace.final_grad_norm = norm2(full.gradient);
    trace.epochs_run = epoch + 1;
    if (trace.final_grad_norm < config.grad_tol) break;
  }

  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

double recovery_error(const PolicyModel& model, const std::vector<double>& true_theta) {
  const auto* lin = std::get_if<LinearRewardModel>(&model);
  if (!lin) throw std::invalid_argument("recovery_error needs the linear backend");
  if (lin->weights.size() != true_theta.size()) throw std::invalid_argument("dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < true_theta.size(); ++i) {
    dot += lin->weights[i] * true_theta[i];
    na += lin->weights[i] * lin->weights[i];
    nb += true_theta[i] * true_theta[i];
  }
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("zero vector in recovery_error");
  return 1.0 - dot / std::sqrt(na * nb);
}

void write_trace(const TrainTrace& trace, const std::string& path) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << "# epoch loss\n";
    char buf[64];
    for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) {
      std::snprintf(buf, sizeof buf, "%zu %.17g\n", e, trace.epoch_loss[e]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "# final_grad_norm %.17g\n", trace.final_grad_norm);
    out << buf;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

}  // namespace prefopt
