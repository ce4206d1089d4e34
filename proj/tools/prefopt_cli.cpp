// prefopt command-line front end.
//
// Subcommands: gen, train, ifcurve, estimate, detect, clean, sweep,
// gradcheck. All randomness flows from --seed; identical inputs give
// byte-identical outputs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "prefopt/evalkit.hpp"
#include "prefopt/influence.hpp"
#include "prefopt/rng.hpp"
#include "prefopt/training.hpp"
#include "prefopt/valuation.hpp"

namespace {

using namespace prefopt;

constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitNumeric = 3;

struct LossOptions {
  std::string variant = "dpo";
  double c = 0.25;
  double beta_prime = 1.0;
  double gamma = 2.0;
  std::string phi = "dp";

  LossSpec to_spec() const {
    LossSpec spec;
    spec.variant = parse_variant(variant);
    spec.c = c;
    spec.beta_prime = beta_prime;
    spec.gamma = gamma;
    if (phi == "dp") spec.phi = HolderPhi::DP;
    else if (phi == "ps") spec.phi = HolderPhi::PS;
    else throw std::invalid_argument("phi must be dp or ps");
    return spec;
  }
};

void add_loss_flags(CLI::App* cmd, LossOptions& loss) {
  cmd->add_option("--variant", loss.variant, "loss variant: dpo|ipo|cdpo|rdpo|drdpo|holder");
  cmd->add_option("--c", loss.c, "cDPO/R-DPO mixing weight");
  cmd->add_option("--beta-prime", loss.beta_prime, "Dr. DPO temperature");
  cmd->add_option("--gamma", loss.gamma, "Holder exponent");
  cmd->add_option("--phi", loss.phi, "Holder phi: dp|ps (ps is diagnostic only)");
}

// Flat key=value config file with dotted section prefixes. Unknown keys
// are a hard error.
std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      auto end = s.find_last_not_of(" \t\r");
      s.erase(end == std::string::npos ? 0 : end + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_config(const std::map<std::string, std::string>& kv, GeneratorSpec& gen,
                  ContaminationSpec& contam, LossOptions& loss, TrainConfig& train,
                  std::string& backend) {
  for (const auto& [key, value] : kv) {
    if (key == "generator.prompts") gen.n_prompts = std::stoi(value);
    else if (key == "generator.responses") gen.n_responses_per_prompt = std::stoi(value);
    else if (key == "generator.feature_dim") gen.feature_dim = std::stoi(value);
    else if (key == "generator.theta_scale") gen.theta_scale = std::stod(value);
    else if (key == "generator.margin_floor") gen.margin_floor = std::stod(value);
    else if (key == "generator.seed") gen.seed = std::stoull(value);
    else if (key == "contamination.epsilon") contam.epsilon = std::stod(value);
    else if (key == "contamination.seed") contam.seed = std::stoull(value);
    else if (key == "model.backend") backend = value;
    else if (key == "loss.variant") loss.variant = value;
    else if (key == "loss.c") loss.c = std::stod(value);
    else if (key == "loss.beta_prime") loss.beta_prime = std::stod(value);
    else if (key == "loss.gamma") loss.gamma = std::stod(value);
    else if (key == "loss.phi") loss.phi = value;
    else if (key == "train.max_epochs") train.max_epochs = std::stoi(value);
    else if (key == "train.batch_size") train.batch_size = std::stoi(value);
    else if (key == "train.learning_rate") train.learning_rate = std::stod(value);
    else if (key == "train.momentum") train.momentum = std::stod(value);
    else if (key == "train.grad_tol") train.grad_tol = std::stod(value);
    else if (key == "train.seed") train.seed = std::stoull(value);
    else throw std::runtime_error("unknown config key: " + key);
  }
}

PolicyModel make_model(const std::string& backend, const PreferenceDataset& data, double beta) {
  if (backend == "linear") {
    std::size_t dim = data.features.at(0).at(0).size();
    return LinearRewardModel{std::vector<double>(dim, 0.0), beta};
  }
  if (backend == "tabular") return fit_reference(data, beta);
  throw std::invalid_argument("backend must be linear or tabular");
}

int run(int argc, char** argv) {
  CLI::App app{"Robust preference optimization toolkit"};
  app.require_subcommand(1);

  GeneratorSpec gen;
  ContaminationSpec contam;
  LossOptions loss;
  TrainConfig train_cfg;
  std::string backend = "linear";
  std::string config_path, data_path, model_path, out_path;
  double beta = 0.1;
  std::uint64_t seed = 0;

  // gen
  auto* cmd_gen = app.add_subcommand("gen", "generate a (possibly contaminated) synthetic dataset");
  cmd_gen->add_option("--config", config_path, "run-config file");
  cmd_gen->add_option("--prompts", gen.n_prompts, "number of prompts");
  cmd_gen->add_option("--responses", gen.n_responses_per_prompt, "responses per prompt");
  cmd_gen->add_option("--dim", gen.feature_dim, "feature dimension");
  cmd_gen->add_option("--theta-scale", gen.theta_scale, "scale of the sampled true reward vector");
  cmd_gen->add_option("--margin-floor", gen.margin_floor, "minimum true reward gap");
  cmd_gen->add_option("--eps", contam.epsilon, "contamination ratio");
  cmd_gen->add_option("--seed", seed, "master seed");
  cmd_gen->add_option("--out", out_path, "output dataset path")->required();

  // train
  auto* cmd_train = app.add_subcommand("train", "train a model on a dataset file");
  cmd_train->add_option("--config", config_path, "run-config file");
  cmd_train->add_option("--data", data_path, "input dataset")->required();
  cmd_train->add_option("--backend", backend, "model backend: linear|tabular");
  cmd_train->add_option("--beta", beta, "alignment strength");
  add_loss_flags(cmd_train, loss);
  cmd_train->add_option("--epochs", train_cfg.max_epochs, "max epochs");
  cmd_train->add_option("--batch", train_cfg.batch_size, "batch size (0 = full batch)");
  cmd_train->add_option("--lr", train_cfg.learning_rate, "learning rate");
  cmd_train->add_option("--momentum", train_cfg.momentum, "momentum");
  cmd_train->add_option("--grad-tol", train_cfg.grad_tol, "stopping gradient norm");
  cmd_train->add_option("--seed", seed, "master seed");
  cmd_train->add_option("--out", model_path, "output checkpoint")->required();
  std::string trace_path;
  cmd_train->add_option("--trace", trace_path, "optional per-epoch trace output");

  // ifcurve
  auto* cmd_curve = app.add_subcommand("ifcurve", "export influence weights over a margin grid");
  add_loss_flags(cmd_curve, loss);
  double g_min = -30.0, g_max = 30.0;
  int n_points = 601;
  cmd_curve->add_option("--gmin", g_min, "grid start");
  cmd_curve->add_option("--gmax", g_max, "grid end");
  cmd_curve->add_option("--points", n_points, "grid points");
  cmd_curve->add_option("--beta", beta, "beta used by the IPO weight");
  cmd_curve->add_option("--out", out_path, "output curve path")->required();

  // estimate
  auto* cmd_estimate = app.add_subcommand("estimate", "print the contamination ratio estimate");
  cmd_estimate->add_option("--data", data_path, "input dataset")->required();
  cmd_estimate->add_option("--model", model_path, "trained checkpoint")->required();
  cmd_estimate->add_option("--gamma", loss.gamma, "Holder exponent");
  bool raw_xi = false;
  cmd_estimate->add_flag("--raw-xi", raw_xi, "also print the unnormalised diagnostic estimate");

  // detect
  auto* cmd_detect = app.add_subcommand("detect", "score pairs and flag suspected mislabels");
  cmd_detect->add_option("--data", data_path, "input dataset")->required();
  cmd_detect->add_option("--model", model_path, "trained checkpoint")->required();
  cmd_detect->add_option("--gamma", loss.gamma, "Holder exponent");
  cmd_detect->add_option("--out", out_path, "output report path")->required();

  // clean
  auto* cmd_clean = app.add_subcommand("clean", "drop flagged pairs from a dataset");
  cmd_clean->add_option("--data", data_path, "input dataset")->required();
  cmd_clean->add_option("--model", model_path, "trained checkpoint")->required();
  cmd_clean->add_option("--gamma", loss.gamma, "Holder exponent");
  cmd_clean->add_option("--out", out_path, "output dataset path")->required();

  // sweep
  auto* cmd_sweep = app.add_subcommand("sweep", "run a (variant, epsilon, seed) evaluation grid");
  cmd_sweep->add_option("--config", config_path, "run-config file");
  std::vector<std::string> sweep_variants{"dpo", "holder"};
  std::vector<double> sweep_eps{0.0, 0.2, 0.4};
  std::vector<std::uint64_t> sweep_seeds;
  int n_seeds = 10;
  int jobs = 1;
  cmd_sweep->add_option("--variants", sweep_variants, "loss variants");
  cmd_sweep->add_option("--eps-grid", sweep_eps, "contamination ratios");
  cmd_sweep->add_option("--seeds", sweep_seeds, "explicit seed list");
  cmd_sweep->add_option("--n-seeds", n_seeds, "number of seeds (0..n-1) when --seeds is absent");
  cmd_sweep->add_option("--jobs", jobs, "parallel workers");
  cmd_sweep->add_option("--gamma", loss.gamma, "Holder exponent");
  cmd_sweep->add_option("--prompts", gen.n_prompts, "number of prompts");
  cmd_sweep->add_option("--responses", gen.n_responses_per_prompt, "responses per prompt");
  cmd_sweep->add_option("--dim", gen.feature_dim, "feature dimension");
  cmd_sweep->add_option("--theta-scale", gen.theta_scale, "scale of the true reward vector");
  cmd_sweep->add_option("--margin-floor", gen.margin_floor, "minimum true reward gap");
  cmd_sweep->add_option("--epochs", train_cfg.max_epochs, "max epochs per cell");
  cmd_sweep->add_option("--lr", train_cfg.learning_rate, "learning rate");
  cmd_sweep->add_option("--out", out_path, "output directory")->required();

  // gradcheck
  auto* cmd_gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradient");
  cmd_gradcheck->add_option("--data", data_path, "input dataset")->required();
  cmd_gradcheck->add_option("--backend", backend, "model backend: linear|tabular");
  cmd_gradcheck->add_option("--beta", beta, "alignment strength");
  add_loss_flags(cmd_gradcheck, loss);
  double fd_step = 1e-5;
  cmd_gradcheck->add_option("--step", fd_step, "finite-difference step");
  cmd_gradcheck->add_option("--seed", seed, "seed for the random probe model");

  try {
    app.parse(argc, argv);
    if (!config_path.empty()) {
      apply_config(load_config(config_path), gen, contam, loss, train_cfg, backend);
      // Re-parse so explicit flags override config values.
      app.clear();
      app.parse(argc, argv);
    }
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (cmd_gen->parsed()) {
    gen.seed = seed;
    contam.seed = seed;
    PreferenceDataset data = generate_clean(gen);
    if (contam.epsilon > 0.0) data = contaminate(data, contam);
    write_dataset(data, out_path);
    std::printf("wrote %zu pairs to %s\n", data.pairs.size(), out_path.c_str());
    return 0;
  }

  if (cmd_train->parsed()) {
    PreferenceDataset data = read_dataset(data_path);
    PolicyModel model = make_model(backend, data, beta);
    train_cfg.seed = seed;
    TrainTrace trace = fit(model, data, loss.to_spec(), train_cfg);
    write_model(model, model_path);
    if (!trace_path.empty()) write_trace(trace, trace_path);
    std::printf("trained %s for %d epochs, final loss %.6g, grad norm %.3g\n",
                loss.variant.c_str(), trace.epochs_run, trace.epoch_loss.back(),
                trace.final_grad_norm);
    return 0;
  }

  if (cmd_curve->parsed()) {
    IFCurve curve = if_curve(loss.to_spec(), g_min, g_max, n_points, beta);
    write_curve(curve, out_path);
    std::printf("wrote %d curve points to %s\n", n_points, out_path.c_str());
    return 0;
  }

  if (cmd_estimate->parsed() || cmd_detect->parsed() || cmd_clean->parsed()) {
    PreferenceDataset data = read_dataset(data_path);
    PolicyModel model = read_model(model_path);
    ValuationReport report = detect(model, data, loss.gamma);
    if (cmd_estimate->parsed()) {
      std::printf("xi_hat %.6f\nepsilon_hat %.6f\n", report.xi_hat, report.epsilon_hat);
      if (raw_xi)
        std::printf("xi_hat_raw %.6f\n", xi_hat_raw(report.likelihoods, loss.gamma));
    } else if (cmd_detect->parsed()) {
      write_report(report, out_path);
      std::printf("epsilon_hat %.6f, flagged %zu of %zu pairs -> %s\n", report.epsilon_hat,
                  report.flagged.size(), data.pairs.size(), out_path.c_str());
    } else {
      PreferenceDataset cleaned = clean(data, report);
      write_dataset(cleaned, out_path);
      std::printf("kept %zu of %zu pairs -> %s\n", cleaned.pairs.size(), data.pairs.size(),
                  out_path.c_str());
    }
    return 0;
  }

  if (cmd_sweep->parsed()) {
    SweepSpec sweep;
    for (const auto& name : sweep_variants) {
      LossOptions opt = loss;
      opt.variant = name;
      sweep.variants.push_back(opt.to_spec());
    }
    sweep.eps_grid = sweep_eps;
    sweep.seeds = sweep_seeds;
    if (sweep.seeds.empty())
      for (int s = 0; s < n_seeds; ++s) sweep.seeds.push_back(static_cast<std::uint64_t>(s));
    sweep.generator = gen;
    sweep.train = train_cfg;
    SweepResult result = run_sweep(sweep, jobs);
    write_sweep(result, sweep, out_path);
    std::printf("wrote %zu cells to %s\n", result.cells.size(), out_path.c_str());
    return 0;
  }

  if (cmd_gradcheck->parsed()) {
    PreferenceDataset data = read_dataset(data_path);
    PolicyModel model = make_model(backend, data, beta);
    // Random probe point so the check is not at a symmetric origin.
    SplitRng rng(seed, "gradcheck");
    std::vector<double> params = get_params(model);
    for (std::size_t k = 0; k < params.size(); ++k) params[k] += 0.3 * rng.normal(k);
    set_params(model, params);
    double err = gradient_check(model, data, loss.to_spec(), fd_step);
    std::printf("max relative gradient error %.3g\n", err);
    return 0;
  }

  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const prefopt::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}
