#include "prefopt/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <stdexcept>

namespace prefopt {

DetectionMetrics detection_metrics(const ValuationReport& report, const PreferenceDataset& data) {
  if (report.likelihoods.size() != data.pairs.size())
    throw std::invalid_argument("report does not match dataset size");
  if (data.meta.true_theta.empty())
    throw std::invalid_argument("dataset carries no ground truth");

  std::size_t n_truth = 0;
  for (const auto& pair : data.pairs)
    if (pair.truth_flipped) ++n_truth;

  std::size_t hits = 0;
  for (std::size_t idx : report.flagged)
    if (data.pairs[idx].truth_flipped) ++hits;

  DetectionMetrics m;
  m.n_flagged = static_cast<int>(report.flagged.size());
  m.precision = report.flagged.empty() ? 0.0 : static_cast<double>(hits) / report.flagged.size();
  m.recall = n_truth == 0 ? 0.0 : static_cast<double>(hits) / n_truth;
  m.epsilon_true = static_cast<double>(n_truth) / data.pairs.size();
  m.epsilon_hat = report.epsilon_hat;
  return m;
}

double avg_true_reward(const PolicyModel& model, const PreferenceDataset& data,
                       const std::vector<double>& true_theta) {
  if (true_theta.empty()) throw std::invalid_argument("missing true_theta");
  double total = 0.0;
  for (std::size_t p = 0; p < data.n_prompts(); ++p) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < data.n_responses(p); ++r) {
      double score = implicit_reward(model, data, static_cast<int>(p), static_cast<int>(r));
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(r);
      }
    }
    total += true_reward(data, true_theta, static_cast<int>(p), best);
  }
  return total / static_cast<double>(data.n_prompts());
}

CellMetrics run_cell(const LossSpec& variant, double epsilon, std::uint64_t seed,
                     const GeneratorSpec& base, const TrainConfig& train_config) {
  GeneratorSpec gen = base;
  gen.seed = seed;
  PreferenceDataset clean_data = generate_clean(gen);
  PreferenceDataset data = contaminate(clean_data, ContaminationSpec{epsilon, seed});

  PolicyModel model = LinearRewardModel{std::vector<double>(gen.feature_dim, 0.0), 0.1};
  TrainConfig cfg = train_config;
  cfg.seed = seed;
  fit(model, data, variant, cfg);

  ValuationReport report = detect(model, data, variant.gamma);
  DetectionMetrics det = detection_metrics(report, data);

  CellMetrics cell;
  cell.recovery_error = recovery_error(model, data.meta.true_theta);
  cell.avg_true_reward = avg_true_reward(model, data, data.meta.true_theta);
  cell.epsilon_hat = report.epsilon_hat;
  cell.precision = det.precision;
  cell.recall = det.recall;
  return cell;
}

FilteredFit fit_filtered(const PolicyModel& init, const PreferenceDataset& data,
                         const LossSpec& loss, const TrainConfig& train, int max_rounds) {
  if (max_rounds < 0) throw std::invalid_argument("max_rounds must be non-negative");
  FilteredFit out;
  out.data = data;
  for (;;) {
    out.model = init;
    fit(out.model, out.data, loss, train);
    if (out.rounds >= max_rounds) break;
    ValuationReport report = detect(out.model, out.data, loss.gamma);
    if (report.flagged.empty()) break;
    out.data = clean(out.data, report);
    ++out.rounds;
  }
  return out;
}

SweepResult run_sweep(const SweepSpec& spec, int jobs) {
  if (spec.variants.empty() || spec.eps_grid.empty() || spec.seeds.empty())
    throw std::invalid_argument("sweep grids must be non-empty");

  struct Job {
    std::string name;
    LossSpec variant;
    double eps;
    std::uint64_t seed;
  };
  std::vector<Job> todo;
  for (const auto& variant : spec.variants)
    for (double eps : spec.eps_grid)
      for (std::uint64_t seed : spec.seeds)
        todo.push_back({variant_name(variant.variant), variant, eps, seed});

  SweepResult result;
  std::size_t stride = jobs < 1 ? 1 : static_cast<std::size_t>(jobs);
  for (std::size_t base = 0; base < todo.size(); base += stride) {
    std::vector<std::future<CellMetrics>> futures;
    std::size_t end = std::min(base + stride, todo.size());
    for (std::size_t i = base; i < end; ++i) {
      const Job& job = todo[i];
      futures.push_back(std::async(std::launch::async, [&spec, job] {
        try {
          return run_cell(job.variant, job.eps, job.seed, spec.generator, spec.train);
        } catch (const std::exception& e) {
          throw std::runtime_error("sweep cell (" + job.name + ", eps=" + std::to_string(job.eps) +
                                   ", seed=" + std::to_string(job.seed) + "): " + e.what());
        }
      }));
    }
    for (std::size_t i = base; i < end; ++i)
      result.cells[{todo[i].name, todo[i].eps, todo[i].seed}] = futures[i - base].get();
  }
  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(const std::vector<double>& values) {
  Moments m;
  for (double v : values) m.mean += v;
  m.mean /= values.size();
  for (double v : values) m.stddev += (v - m.mean) * (v - m.mean);
  m.stddev = values.size() > 1 ? std::sqrt(m.stddev / (values.size() - 1)) : 0.0;
  return m;
}

}  // namespace

void write_sweep(const SweepResult& result, const SweepSpec& spec, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  auto atomic_write = [](const std::string& path, const std::string& body) {
    std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
      out << body;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
      throw std::runtime_error("cannot rename " + tmp + " to " + path);
  };

  char buf[256];
  std::string long_form = "# variant epsilon seed recovery_error avg_true_reward epsilon_hat precision recall\n";
  for (const auto& [key, cell] : result.cells) {
    const auto& [name, eps, seed] = key;
    std::snprintf(buf, sizeof buf, "%s %.17g %llu %.17g %.17g %.17g %.17g %.17g\n", name.c_str(), eps,
                  static_cast<unsigned long long>(seed), cell.recovery_error, cell.avg_true_reward,
                  cell.epsilon_hat, cell.precision, cell.recall);
    long_form += buf;
  }
  atomic_write(dir + "/sweep_long.txt", long_form);

  struct MetricDef {
    const char* name;
    double CellMetrics::* field;
  };
  const MetricDef metrics[] = {
      {"recovery_error", &CellMetrics::recovery_error},
      {"avg_true_reward", &CellMetrics::avg_true_reward},
      {"epsilon_hat", &CellMetrics::epsilon_hat},
      {"precision", &CellMetrics::precision},
      {"recall", &CellMetrics::recall},
  };
  for (const auto& metric : metrics) {
    std::string table = "# epsilon";
    for (const auto& variant : spec.variants) table += " " + variant_name(variant.variant);
    table += "\n";
    for (double eps : spec.eps_grid) {
      std::snprintf(buf, sizeof buf, "%.17g", eps);
      table += buf;
      for (const auto& variant : spec.variants) {
        std::vector<double> values;
        for (std::uint64_t seed : spec.seeds)
          values.push_back(result.cells.at({variant_name(variant.variant), eps, seed}).*metric.field);
        Moments m = moments(values);
        std::snprintf(buf, sizeof buf, " %.6g+-%.6g", m.mean, m.stddev);
        table += buf;
      }
      table += "\n";
    }
    atomic_write(dir + "/sweep_" + metric.name + ".txt", table);
  }
}

}  // namespace prefopt
