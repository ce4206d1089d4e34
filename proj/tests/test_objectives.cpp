#include <doctest.h>

#include <cmath>

#include "prefopt/objectives.hpp"
#include "prefopt/rng.hpp"

using namespace prefopt;

namespace {

PreferenceDataset small_dataset(std::uint64_t seed, int prompts = 6) {
  GeneratorSpec spec;
  spec.n_prompts = prompts;
  spec.n_responses_per_prompt = 3;
  spec.feature_dim = 4;
  spec.seed = seed;
  return generate_clean(spec);
}

PolicyModel random_linear(std::uint64_t seed, double scale = 1.0) {
  SplitRng rng(seed, "model");
  std::vector<double> w(4);
  for (int d = 0; d < 4; ++d) w[d] = scale * rng.normal(d);
  return LinearRewardModel{w, 0.1};
}

// Single-pair dataset whose margin under a unit-weight model is exactly g.
std::pair<PolicyModel, PreferenceDataset> pinned_margin(double g) {
  PreferenceDataset data;
  data.features = {{{g}, {0.0}}};
  data.pairs.push_back({0, 0, 1, false});
  data.meta.true_theta = {1.0};
  PolicyModel model = LinearRewardModel{{1.0}, 1.0};
  return {model, data};
}

LossSpec spec_of(LossVariant variant) {
  LossSpec spec;
  spec.variant = variant;
  return spec;
}

}  // namespace

TEST_CASE("stable sigmoid identities") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-20.0) == doctest::Approx(2.061e-9).epsilon(1e-3));
  for (double g : {-700.0, -30.0, -1.0, 0.0, 2.5, 30.0, 700.0}) {
    CHECK(std::isfinite(sigmoid(g)));
    CHECK(sigmoid(g) + sigmoid(-g) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(log_sigmoid(g) == doctest::Approx(std::log(sigmoid(std::min(g, 700.0)))).epsilon(1e-12));
  }
  CHECK(std::isfinite(log_sigmoid(-700.0)));
}

TEST_CASE("likelihood complements sum to one") {
  auto data = small_dataset(1);
  auto model = random_linear(2);
  for (const auto& pair : data.pairs) {
    double p = likelihood(model, data, pair);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    CHECK(p + likelihood(model, data, flipped(pair)) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("DPO single pair at zero margin") {
  auto [model, data] = pinned_margin(0.0);
  auto loss = loss_and_grad(model, data, spec_of(LossVariant::DPO));
  CHECK(loss.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss.per_sample_likelihood[0] == doctest::Approx(0.5));
}

TEST_CASE("Holder/DP pinned values") {
  LossSpec spec = spec_of(LossVariant::HOLDER);
  spec.gamma = 2.0;

  // sigma(g) -> 1: value tends to phi(1) = -1
  auto [m_sat, d_sat] = pinned_margin(40.0);
  CHECK(loss_and_grad(m_sat, d_sat, spec).value == doctest::Approx(-1.0).epsilon(1e-12));

  // g = 0: -3 * 0.25 + 2 * 0.125 = -0.5
  auto [m_zero, d_zero] = pinned_margin(0.0);
  CHECK(loss_and_grad(m_zero, d_zero, spec).value == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("IPO zero residual at g = 1/2") {
  auto [model, data] = pinned_margin(0.5);
  std::get<LinearRewardModel>(model).beta = 1.0;
  auto loss = loss_and_grad(model, data, spec_of(LossVariant::IPO));
  CHECK(loss.value == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("R-DPO equals cDPO divided by (1 - 2c)") {
  auto data = small_dataset(3);
  auto model = random_linear(4);
  for (double c : {0.0, 0.1, 0.25, 0.4}) {
    LossSpec cdpo = spec_of(LossVariant::CDPO);
    cdpo.c = c;
    LossSpec rdpo = spec_of(LossVariant::RDPO);
    rdpo.c = c;
    auto lc = loss_and_grad(model, data, cdpo);
    auto lr = loss_and_grad(model, data, rdpo);
    CHECK(lr.value == doctest::Approx(lc.value / (1.0 - 2.0 * c)).epsilon(1e-14));
  }
}

TEST_CASE("cDPO with c = 0 reduces to DPO") {
  auto data = small_dataset(5);
  auto model = random_linear(6);
  LossSpec cdpo = spec_of(LossVariant::CDPO);
  cdpo.c = 0.0;
  CHECK(loss_and_grad(model, data, cdpo).value ==
        doctest::Approx(loss_and_grad(model, data, spec_of(LossVariant::DPO)).value).epsilon(1e-14));
}

TEST_CASE("Dr. DPO with equal margins and beta' = 1 matches DPO") {
  // all pairs share the same margin magnitude via a single feature geometry
  PreferenceDataset data;
  data.features.assign(4, {{1.3}, {0.0}});
  for (int p = 0; p < 4; ++p) data.pairs.push_back({p, 0, 1, false});
  data.meta.true_theta = {1.0};
  PolicyModel model = LinearRewardModel{{1.0}, 1.0};

  LossSpec drdpo = spec_of(LossVariant::DRDPO);
  drdpo.beta_prime = 1.0;
  auto dr = loss_and_grad(model, data, drdpo);
  auto dpo = loss_and_grad(model, data, spec_of(LossVariant::DPO));
  CHECK(dr.value == doctest::Approx(dpo.value).epsilon(1e-12));
  CHECK(dr.value == doctest::Approx(-log_sigmoid(1.3)).epsilon(1e-12));
}

TEST_CASE("Holder term-1 gradient factors through the DPO gradient") {
  auto data = small_dataset(7, 10);
  SplitRng rng(8, "factor");
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto model = random_linear(100 + trial, 1.5);
    for (const auto& pair : data.pairs) {
      double g = margin(model, data, pair);
      double gamma = 2.0;
      auto h1 = holder_term1_gradient(model, data, pair, gamma);
      auto dpo = dpo_sample_gradient(model, data, pair);
      double factor = gamma * (1.0 + gamma) * sigmoid_pow(g, gamma);
      for (std::size_t k = 0; k < h1.size(); ++k) {
        double expected = factor * dpo[k];
        CHECK(std::abs(h1[k] - expected) <= 1e-10 * std::max(1.0, std::abs(expected)));
      }
      ++checked;
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("all variants pass the finite-difference gradient check") {
  const LossVariant variants[] = {LossVariant::DPO,   LossVariant::IPO,   LossVariant::CDPO,
                                  LossVariant::RDPO,  LossVariant::DRDPO, LossVariant::HOLDER};
  for (LossVariant variant : variants) {
    for (int trial = 0; trial < 5; ++trial) {
      auto data = small_dataset(20 + trial);
      LossSpec spec = spec_of(variant);
      CAPTURE(variant_name(variant));

      auto linear = random_linear(40 + trial);
      CHECK(gradient_check(linear, data, spec, 1e-5) < 1e-5);

      PolicyModel tabular = fit_reference(data, 0.1);
      auto params = get_params(tabular);
      SplitRng rng(60 + trial, "perturb");
      for (std::size_t k = 0; k < params.size(); ++k) params[k] += 0.4 * rng.normal(k);
      set_params(tabular, params);
      CHECK(gradient_check(tabular, data, spec, 1e-5) < 1e-5);
    }
  }
}

TEST_CASE("PS variant also passes the gradient check") {
  LossSpec spec = spec_of(LossVariant::HOLDER);
  spec.phi = HolderPhi::PS;
  auto data = small_dataset(31);
  auto model = random_linear(32);
  CHECK(gradient_check(model, data, spec, 1e-5) < 1e-5);
}

TEST_CASE("empty batch and bad hyperparameters are rejected") {
  auto model = random_linear(1);
  PreferenceDataset empty;
  CHECK_THROWS_AS(loss_and_grad(model, empty, spec_of(LossVariant::DPO)), std::invalid_argument);

  LossSpec bad = spec_of(LossVariant::CDPO);
  bad.c = 0.5;
  auto data = small_dataset(2);
  CHECK_THROWS_AS(loss_and_grad(model, data, bad), std::invalid_argument);
  bad = spec_of(LossVariant::HOLDER);
  bad.gamma = 0.0;
  CHECK_THROWS_AS(loss_and_grad(model, data, bad), std::invalid_argument);
}
