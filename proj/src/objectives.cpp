#include "prefopt/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prefopt {

double sigmoid(double g) {
  if (g >= 0.0) return 1.0 / (1.0 + std::exp(-g));
  double e = std::exp(g);
  return e / (1.0 + e);
}

double log_sigmoid(double g) {
  // -softplus(-g), stable over the whole double range.
  if (g >= 0.0) return -std::log1p(std::exp(-g));
  return g - std::log1p(std::exp(g));
}

double sigmoid_pow(double g, double gamma) { return std::exp(gamma * log_sigmoid(g)); }

LossVariant parse_variant(const std::string& name) {
  if (name == "dpo") return LossVariant::DPO;
  if (name == "ipo") return LossVariant::IPO;
  if (name == "cdpo") return LossVariant::CDPO;
  if (name == "rdpo") return LossVariant::RDPO;
  if (name == "drdpo") return LossVariant::DRDPO;
  if (name == "holder") return LossVariant::HOLDER;
  throw std::invalid_argument("unknown loss variant: " + name);
}

std::string variant_name(LossVariant variant) {
  switch (variant) {
    case LossVariant::DPO: return "dpo";
    case LossVariant::IPO: return "ipo";
    case LossVariant::CDPO: return "cdpo";
    case LossVariant::RDPO: return "rdpo";
    case LossVariant::DRDPO: return "drdpo";
    case LossVariant::HOLDER: return "holder";
  }
  return "?";
}

double likelihood(const PolicyModel& model, const PreferenceDataset& data, const PreferencePair& pair) {
  return sigmoid(margin(model, data, pair));
}

BatchLoss loss_and_grad(const PolicyModel& model, const PreferenceDataset& data, const LossSpec& spec) {
  spec.validate();
  if (data.pairs.empty()) throw std::invalid_argument("loss on empty batch");

  const std::size_t n = data.pairs.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double beta = beta_of(model);

  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = margin(model, data, data.pairs[i]);
    if (!std::isfinite(g[i]))
      throw NumericError("non-finite margin at sample " + std::to_string(i));
  }

  double value = 0.0;
  std::vector<double> coeff(n, 0.0);  // dL/dg per sample

  switch (spec.variant) {
    case LossVariant::DPO: {
      for (std::size_t i = 0; i < n; ++i) {
        value += -log_sigmoid(g[i]) * inv_n;
        coeff[i] = -sigmoid(-g[i]) * inv_n;
      }
      break;
    }
    case LossVariant::IPO: {
      for (std::size_t i = 0; i < n; ++i) {
        double resid = g[i] / beta - 0.5 / beta;
        value += resid * resid * inv_n;
        coeff[i] = 2.0 * resid / beta * inv_n;
      }
      break;
    }
    case LossVariant::CDPO:
    case LossVariant::RDPO: {
      double scale = spec.variant == LossVariant::RDPO ? 1.0 / (1.0 - 2.0 * spec.c) : 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        value += scale * ((1.0 - spec.c) * -log_sigmoid(g[i]) - spec.c * -log_sigmoid(-g[i])) * inv_n;
        coeff[i] = scale * (-(1.0 - spec.c) * sigmoid(-g[i]) - spec.c * sigmoid(g[i])) * inv_n;
      }
      break;
    }
    case LossVariant::DRDPO: {
      // -beta' log mean exp(log sigma(g)/beta'), max-shifted.
      std::vector<double> ell(n);
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        ell[i] = log_sigmoid(g[i]) / spec.beta_prime;
        m = std::max(m, ell[i]);
      }
      double z = 0.0;
      for (std::size_t i = 0; i < n; ++i) z += std::exp(ell[i] - m);
      value = -spec.beta_prime * (m + std::log(z * inv_n));
      for (std::size_t i = 0; i < n; ++i) {
        double w = std::exp(ell[i] - m) / z;  // softmax batch weight, sums to 1
        coeff[i] = -w * sigmoid(-g[i]);
      }
      break;
    }
    case LossVariant::HOLDER: {
      if (spec.phi == HolderPhi::DP) {
        for (std::size_t i = 0; i < n; ++i) {
          double sg = sigmoid_pow(g[i], spec.gamma);
          double sg1 = sigmoid_pow(g[i], 1.0 + spec.gamma);
          value += (-(1.0 + spec.gamma) * sg + spec.gamma * sg1) * inv_n;
          double s_neg = sigmoid(-g[i]);
          coeff[i] = spec.gamma * (1.0 + spec.gamma) * sg * s_neg * (sigmoid(g[i]) - 1.0) * inv_n;
        }
      } else {
        // PS score under the same empirical-measure approximation:
        // -(mean sigma^gamma) / (mean sigma^{1+gamma})^{gamma/(1+gamma)}.
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          num += sigmoid_pow(g[i], spec.gamma) * inv_n;
          den += sigmoid_pow(g[i], 1.0 + spec.gamma) * inv_n;
        }
        double p = spec.gamma / (1.0 + spec.gamma);
        double den_p = std::pow(den, p);
        value = -num / den_p;
        for (std::size_t i = 0; i < n; ++i) {
          double s_neg = sigmoid(-g[i]);
          double d_num = spec.gamma * sigmoid_pow(g[i], spec.gamma) * s_neg * inv_n;
          double d_den = (1.0 + spec.gamma) * sigmoid_pow(g[i], 1.0 + spec.gamma) * s_neg * inv_n;
          coeff[i] = -d_num / den_p + num * p * d_den * std::pow(den, -p - 1.0);
        }
      }
      break;
    }
  }

  if (!std::isfinite(value)) throw NumericError("non-finite loss value");

  BatchLoss out;
  out.value = value;
  out.gradient.assign(param_count(model), 0.0);
  out.per_sample_likelihood.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.per_sample_likelihood[i] = sigmoid(g[i]);
    add_margin_gradient(model, data, data.pairs[i], coeff[i], out.gradient);
  }
  for (std::size_t k = 0; k < out.gradient.size(); ++k)
    if (!std::isfinite(out.gradient[k])) throw NumericError("non-finite gradient entry");
  return out;
}

std::vector<double> holder_term1_gradient(const PolicyModel& model, const PreferenceDataset& data,
                                          const PreferencePair& pair, double gamma) {
  // d/dtheta of -(1+gamma) sigma(g)^gamma.
  double g = margin(model, data, pair);
  double coeff = -(1.0 + gamma) * gamma * sigmoid_pow(g, gamma) * sigmoid(-g);
  std::vector<double> grad(param_count(model), 0.0);
  add_margin_gradient(model, data, pair, coeff, grad);
  return grad;
}

std::vector<double> dpo_sample_gradient(const PolicyModel& model, const PreferenceDataset& data,
                                        const PreferencePair& pair) {
  double g = margin(model, data, pair);
  std::vector<double> grad(param_count(model), 0.0);
  add_margin_gradient(model, data, pair, -sigmoid(-g), grad);
  return grad;
}

double gradient_check(const PolicyModel& model, const PreferenceDataset& data,
                      const LossSpec& spec, double step) {
  if (step <= 0.0) throw std::invalid_argument("step must be positive");
  BatchLoss analytic = loss_and_grad(model, data, spec);
  std::vector<double> params = get_params(model);
  PolicyModel probe = model;

  double grad_scale = 0.0;
  for (double gk : analytic.gradient) grad_scale = std::max(grad_scale, std::abs(gk));

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    double saved = params[k];
    params[k] = saved + step;
    set_params(probe, params);
    double up = loss_and_grad(probe, data, spec).value;
    params[k] = saved - step;
    set_params(probe, params);
    double down = loss_and_grad(probe, data, spec).value;
    params[k] = saved;

    double numeric = (up - down) / (2.0 * step);
    double denom = std::max({std::abs(numeric), std::abs(analytic.gradient[k]), grad_scale, 1e-8});
    worst = std::max(worst, std::abs(numeric - analytic.gradient[k]) / denom);
  }
  set_params(probe, params);
  return worst;
}

}  // namespace prefopt
