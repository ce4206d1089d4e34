#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "prefopt/evalkit.hpp"

using namespace prefopt;

namespace {

GeneratorSpec sweep_generator() {
  GeneratorSpec gen;
  gen.n_prompts = 40;
  gen.n_responses_per_prompt = 4;
  gen.feature_dim = 6;
  gen.theta_scale = 4.0;
  gen.margin_floor = 3.0;
  return gen;
}

TrainConfig sweep_train() {
  TrainConfig cfg;
  cfg.max_epochs = 80;
  cfg.learning_rate = 0.5;
  return cfg;
}

ValuationReport report_with(const std::vector<double>& liks, std::vector<std::size_t> flagged) {
  ValuationReport report;
  report.likelihoods = liks;
  report.ranking.resize(liks.size());
  for (std::size_t i = 0; i < liks.size(); ++i) report.ranking[i] = i;
  report.flagged = std::move(flagged);
  report.epsilon_hat = static_cast<double>(report.flagged.size()) / liks.size();
  return report;
}

PreferenceDataset truth_dataset(const std::vector<bool>& flips) {
  PreferenceDataset data;
  data.features = {{{1.0}, {0.0}}};
  data.meta.true_theta = {1.0};
  for (bool flip : flips) data.pairs.push_back({0, flip ? 1 : 0, flip ? 0 : 1, flip});
  return data;
}

}  // namespace

TEST_CASE("detection metrics counting") {
  auto data = truth_dataset({true, true, true, true, false, false, false, false, false, false});
  auto report = report_with(std::vector<double>(10, 0.5), {0, 1});
  auto m = detection_metrics(report, data);
  CHECK(m.precision == doctest::Approx(1.0));
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(m.epsilon_true == doctest::Approx(0.4));
  CHECK(m.n_flagged == 2);
}

TEST_CASE("flagged set equal to the truth set gives perfect scores") {
  auto data = truth_dataset({true, false, true, false});
  auto report = report_with(std::vector<double>(4, 0.5), {0, 2});
  auto m = detection_metrics(report, data);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
}

TEST_CASE("empty flagged set reports zero precision with the sentinel") {
  auto data = truth_dataset({true, false});
  auto report = report_with(std::vector<double>(2, 0.5), {});
  auto m = detection_metrics(report, data);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.n_flagged == 0);
}

TEST_CASE("avg_true_reward brackets between argmin and argmax models") {
  GeneratorSpec gen = sweep_generator();
  gen.seed = 8;
  auto data = generate_clean(gen);
  const auto& truth = data.meta.true_theta;

  PolicyModel best = LinearRewardModel{truth, 0.1};
  PolicyModel worst = LinearRewardModel{truth, 0.1};
  for (double& w : std::get<LinearRewardModel>(worst).weights) w = -w;

  double hi = avg_true_reward(best, data, truth);
  double lo = avg_true_reward(worst, data, truth);
  CHECK(hi > lo);

  // exhaustive per-prompt check of the argmax convention
  double expect_hi = 0.0;
  for (std::size_t p = 0; p < data.n_prompts(); ++p) {
    double m = -1e300;
    for (std::size_t r = 0; r < data.n_responses(p); ++r)
      m = std::max(m, true_reward(data, truth, p, r));
    expect_hi += m;
  }
  CHECK(hi == doctest::Approx(expect_hi / data.n_prompts()).epsilon(1e-12));

  PolicyModel random_model = LinearRewardModel{{1.0, -1.0, 0.5, 0.0, 2.0, -0.3}, 0.1};
  double mid = avg_true_reward(random_model, data, truth);
  CHECK(mid <= hi + 1e-12);
  CHECK(mid >= lo - 1e-12);
}

TEST_CASE("single cell equals the composition of module calls") {
  LossSpec holder;
  holder.variant = LossVariant::HOLDER;
  auto cell = run_cell(holder, 0.2, 7, sweep_generator(), sweep_train());

  GeneratorSpec gen = sweep_generator();
  gen.seed = 7;
  auto data = contaminate(generate_clean(gen), ContaminationSpec{0.2, 7});
  PolicyModel model = LinearRewardModel{std::vector<double>(6, 0.0), 0.1};
  TrainConfig cfg = sweep_train();
  cfg.seed = 7;
  fit(model, data, holder, cfg);
  auto report = detect(model, data, holder.gamma);

  CHECK(cell.recovery_error == doctest::Approx(recovery_error(model, data.meta.true_theta)).epsilon(1e-15));
  CHECK(cell.epsilon_hat == doctest::Approx(report.epsilon_hat).epsilon(1e-15));
  CHECK(cell.avg_true_reward ==
        doctest::Approx(avg_true_reward(model, data, data.meta.true_theta)).epsilon(1e-15));
}

TEST_CASE("sweep cells are deterministic and complete") {
  SweepSpec spec;
  LossSpec dpo;
  LossSpec holder;
  holder.variant = LossVariant::HOLDER;
  spec.variants = {dpo, holder};
  spec.eps_grid = {0.0, 0.3};
  spec.seeds = {1, 2};
  spec.generator = sweep_generator();
  spec.train = sweep_train();

  auto a = run_sweep(spec, 1);
  auto b = run_sweep(spec, 2);
  CHECK(a.cells.size() == 8);
  REQUIRE(b.cells.size() == 8);
  for (const auto& [key, cell] : a.cells) {
    const auto& other = b.cells.at(key);
    CHECK(cell.recovery_error == other.recovery_error);
    CHECK(cell.epsilon_hat == other.epsilon_hat);
  }

  std::string dir = "sweep_out";
  write_sweep(a, spec, dir);
  CHECK(std::filesystem::exists(dir + "/sweep_long.txt"));
  CHECK(std::filesystem::exists(dir + "/sweep_recovery_error.txt"));
  std::ifstream in(dir + "/sweep_long.txt");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++rows;
  CHECK(rows == 8);
  std::filesystem::remove_all(dir);
}

TEST_CASE("filtered refitting strips contamination and helps recovery") {
  GeneratorSpec gen = sweep_generator();
  gen.seed = 21;
  auto data = contaminate(generate_clean(gen), ContaminationSpec{0.4, 21});
  LossSpec holder;
  holder.variant = LossVariant::HOLDER;
  TrainConfig cfg = sweep_train();
  cfg.max_epochs = 200;
  PolicyModel init = LinearRewardModel{std::vector<double>(6, 0.0), 0.1};

  auto filtered = fit_filtered(init, data, holder, cfg);
  CHECK(filtered.rounds >= 1);
  CHECK(filtered.data.pairs.size() < data.pairs.size());

  // most surviving pairs should be genuinely clean
  std::size_t surviving_flips = 0;
  for (const auto& pair : filtered.data.pairs)
    if (pair.truth_flipped) ++surviving_flips;
  CHECK(surviving_flips < data.pairs.size() / 10);

  PolicyModel direct = init;
  fit(direct, data, holder, cfg);
  CHECK(recovery_error(filtered.model, data.meta.true_theta) <
        recovery_error(direct, data.meta.true_theta));
}

TEST_CASE("filtered refitting with zero rounds equals a plain fit") {
  GeneratorSpec gen = sweep_generator();
  gen.seed = 22;
  auto data = contaminate(generate_clean(gen), ContaminationSpec{0.2, 22});
  LossSpec holder;
  holder.variant = LossVariant::HOLDER;
  TrainConfig cfg = sweep_train();
  PolicyModel init = LinearRewardModel{std::vector<double>(6, 0.0), 0.1};

  auto untouched = fit_filtered(init, data, holder, cfg, 0);
  CHECK(untouched.rounds == 0);
  CHECK(untouched.data.pairs.size() == data.pairs.size());
  PolicyModel direct = init;
  fit(direct, data, holder, cfg);
  CHECK(get_params(untouched.model) == get_params(direct));

  CHECK_THROWS_AS(fit_filtered(init, data, holder, cfg, -1), std::invalid_argument);
}

TEST_CASE("median helper") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5));
  CHECK_THROWS_AS(median({}), std::invalid_argument);
}

TEST_CASE("dataset without ground truth is rejected") {
  auto data = truth_dataset({true});
  data.meta.true_theta.clear();
  auto report = report_with({0.5}, {});
  CHECK_THROWS_AS(detection_metrics(report, data), std::invalid_argument);
}
