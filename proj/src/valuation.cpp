#include "prefopt/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "prefopt/objectives.hpp"

namespace prefopt {

namespace {

void check_likelihoods(const std::vector<double>& s, double gamma) {
  if (s.empty()) throw std::invalid_argument("no likelihoods");
  if (gamma <= 0.0) throw std::invalid_argument("gamma must be positive");
  for (double v : s)
    if (!(v > 0.0 && v < 1.0)) throw std::domain_error("likelihood outside (0, 1)");
}

}  // namespace

double xi_hat(const std::vector<double>& likelihoods, double gamma) {
  check_likelihoods(likelihoods, gamma);
  const double n = static_cast<double>(likelihoods.size());
  double total = std::accumulate(likelihoods.begin(), likelihoods.end(), 0.0);
  double num = 0.0, den = 0.0;
  for (double s : likelihoods) {
    double sbar = s / total;
    num += std::pow(sbar, gamma) / n;
    den += std::pow(sbar, 1.0 + gamma);
  }
  return num / den;
}

double xi_hat_raw(const std::vector<double>& likelihoods, double gamma) {
  check_likelihoods(likelihoods, gamma);
  double num = 0.0, den = 0.0;
  for (double s : likelihoods) {
    num += std::pow(s, gamma);
    den += std::pow(s, 1.0 + gamma);
  }
  return num / den;
}

double epsilon_hat(double xi) { return std::clamp(1.0 - xi, 0.0, 1.0 - 1e-15); }

double extended_dp_score(const std::vector<double>& likelihoods, double gamma, double xi) {
  check_likelihoods(likelihoods, gamma);
  const double n = static_cast<double>(likelihoods.size());
  // Model m = v * xi * sigma with v^{-1} = mean sigma, matching the
  // normalisation behind xi_hat.
  double mean = std::accumulate(likelihoods.begin(), likelihoods.end(), 0.0) / n;
  double a = 0.0, b = 0.0;  // mean sigma^{1+gamma}, mean sigma^gamma
  for (double s : likelihoods) {
    a += std::pow(s, 1.0 + gamma) / n;
    b += std::pow(s, gamma) / n;
  }
  double scale = xi / mean;
  return gamma * std::pow(scale, 1.0 + gamma) * a - (1.0 + gamma) * std::pow(scale, gamma) * b;
}

double extended_ps_score(const std::vector<double>& likelihoods, double gamma, double xi) {
  check_likelihoods(likelihoods, gamma);
  if (xi <= 0.0) throw std::domain_error("xi must be positive");
  const double n = static_cast<double>(likelihoods.size());
  double mean = std::accumulate(likelihoods.begin(), likelihoods.end(), 0.0) / n;
  double a = 0.0, b = 0.0;
  for (double s : likelihoods) {
    a += std::pow(s, 1.0 + gamma) / n;
    b += std::pow(s, gamma) / n;
  }
  double scale = xi / mean;
  return -std::pow(scale, gamma) * b / std::pow(std::pow(scale, 1.0 + gamma) * a, gamma / (1.0 + gamma));
}

ValuationReport detect(const PolicyModel& model, const PreferenceDataset& data, double gamma) {
  data.validate();
  ValuationReport report;
  report.gamma = gamma;
  report.likelihoods.reserve(data.pairs.size());
  for (const auto& pair : data.pairs)
    report.likelihoods.push_back(likelihood(model, data, pair));

  report.xi_hat = xi_hat(report.likelihoods, gamma);
  report.epsilon_hat = epsilon_hat(report.xi_hat);

  report.ranking.resize(report.likelihoods.size());
  std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [&](std::size_t i, std::size_t j) { return report.likelihoods[i] < report.likelihoods[j]; });

  std::size_t n_flag = static_cast<std::size_t>(
      std::floor(static_cast<double>(report.likelihoods.size()) * report.epsilon_hat));
  report.flagged.assign(report.ranking.begin(), report.ranking.begin() + n_flag);
  return report;
}

PreferenceDataset clean(const PreferenceDataset& data, const ValuationReport& report) {
  if (report.likelihoods.size() != data.pairs.size())
    throw std::invalid_argument("report does not match dataset size");
  std::vector<bool> drop(data.pairs.size(), false);
  for (std::size_t idx : report.flagged) {
    if (idx >= data.pairs.size()) throw std::invalid_argument("flagged index out of range");
    drop[idx] = true;
  }
  PreferenceDataset out;
  out.features = data.features;
  out.meta = data.meta;
  for (std::size_t i = 0; i < data.pairs.size(); ++i)
    if (!drop[i]) out.pairs.push_back(data.pairs[i]);
  if (out.pairs.empty()) throw std::runtime_error("cleaning removed every pair");
  return out;
}

void write_report(const ValuationReport& report, const std::string& path) {
  std::vector<std::size_t> rank_of(report.likelihoods.size());
  for (std::size_t r = 0; r < report.ranking.size(); ++r) rank_of[report.ranking[r]] = r;
  std::vector<bool> is_flagged(report.likelihoods.size(), false);
  for (std::size_t idx : report.flagged) is_flagged[idx] = true;

  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    char buf[128];
    std::snprintf(buf, sizeof buf, "# xi_hat=%.17g epsilon_hat=%.17g gamma=%g N=%zu\n",
                  report.xi_hat, report.epsilon_hat, report.gamma, report.likelihoods.size());
    out << buf << "# index likelihood rank flagged\n";
    for (std::size_t i = 0; i < report.likelihoods.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu %.17g %zu %d\n", i, report.likelihoods[i], rank_of[i],
                    is_flagged[i] ? 1 : 0);
      out << buf;
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

}  // namespace prefopt
