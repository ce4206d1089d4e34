#include "prefopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace prefopt {

namespace {

// log softmax(row)[id], computed with a max shift.
double log_softmax_at(const std::vector<double>& row, int id) {
  double m = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (double v : row) z += std::exp(v - m);
  return row[id] - m - std::log(z);
}

void check_index(const std::vector<std::vector<double>>& table, int prompt_id, int response_id) {
  if (prompt_id < 0 || static_cast<std::size_t>(prompt_id) >= table.size())
    throw std::out_of_range("prompt index " + std::to_string(prompt_id));
  if (response_id < 0 || static_cast<std::size_t>(response_id) >= table[prompt_id].size())
    throw std::out_of_range("response index " + std::to_string(response_id));
}

}  // namespace

std::size_t param_count(const PolicyModel& model) {
  if (const auto* tab = std::get_if<TabularPolicy>(&model)) {
    std::size_t n = 0;
    for (const auto& row : tab->theta) n += row.size();
    return n;
  }
  return std::get<LinearRewardModel>(model).weights.size();
}

std::vector<double> get_params(const PolicyModel& model) {
  if (const auto* tab = std::get_if<TabularPolicy>(&model)) {
    std::vector<double> out;
    out.reserve(param_count(model));
    for (const auto& row : tab->theta) out.insert(out.end(), row.begin(), row.end());
    return out;
  }
  return std::get<LinearRewardModel>(model).weights;
}

void set_params(PolicyModel& model, const std::vector<double>& params) {
  if (params.size() != param_count(model)) throw std::invalid_argument("parameter length mismatch");
  if (auto* tab = std::get_if<TabularPolicy>(&model)) {
    std::size_t k = 0;
    for (auto& row : tab->theta)
      for (double& v : row) v = params[k++];
  } else {
    std::get<LinearRewardModel>(model).weights = params;
  }
}

double beta_of(const PolicyModel& model) {
  return std::visit([](const auto& m) { return m.beta; }, model);
}

double implicit_reward(const PolicyModel& model, const PreferenceDataset& data,
                       int prompt_id, int response_id) {
  if (const auto* tab = std::get_if<TabularPolicy>(&model)) {
    check_index(tab->theta, prompt_id, response_id);
    return tab->beta * (log_softmax_at(tab->theta[prompt_id], response_id) -
                        log_softmax_at(tab->ref_logits[prompt_id], response_id));
  }
  const auto& lin = std::get<LinearRewardModel>(model);
  double s = 0.0;
  const auto& phi = data.features.at(prompt_id).at(response_id);
  if (phi.size() != lin.weights.size()) throw std::invalid_argument("feature_dim mismatch");
  for (std::size_t d = 0; d < phi.size(); ++d) s += lin.weights[d] * phi[d];
  return lin.beta * s;
}

double margin(const PolicyModel& model, const PreferenceDataset& data, const PreferencePair& pair) {
  return implicit_reward(model, data, pair.prompt_id, pair.win_id) -
         implicit_reward(model, data, pair.prompt_id, pair.lose_id);
}

void add_margin_gradient(const PolicyModel& model, const PreferenceDataset& data,
                         const PreferencePair& pair, double scale, std::vector<double>& out) {
  if (const auto* tab = std::get_if<TabularPolicy>(&model)) {
    // The softmax rows cancel between winner and loser, leaving
    // beta * (e_win - e_lose) in the prompt's row block.
    check_index(tab->theta, pair.prompt_id, pair.win_id);
    check_index(tab->theta, pair.prompt_id, pair.lose_id);
    std::size_t offset = 0;
    for (int p = 0; p < pair.prompt_id; ++p) offset += tab->theta[p].size();
    out[offset + pair.win_id] += scale * tab->beta;
    out[offset + pair.lose_id] -= scale * tab->beta;
    return;
  }
  const auto& lin = std::get<LinearRewardModel>(model);
  const auto& phi_w = data.features.at(pair.prompt_id).at(pair.win_id);
  const auto& phi_l = data.features.at(pair.prompt_id).at(pair.lose_id);
  for (std::size_t d = 0; d < lin.weights.size(); ++d)
    out[d] += scale * lin.beta * (phi_w[d] - phi_l[d]);
}

std::vector<double> margin_gradient(const PolicyModel& model, const PreferenceDataset& data,
                                    const PreferencePair& pair) {
  std::vector<double> grad(param_count(model), 0.0);
  add_margin_gradient(model, data, pair, 1.0, grad);
  return grad;
}

TabularPolicy fit_reference(const PreferenceDataset& data, double beta, double smoothing) {
  data.validate();
  TabularPolicy policy;
  policy.beta = beta;
  policy.ref_logits.resize(data.n_prompts());
  for (std::size_t p = 0; p < data.n_prompts(); ++p)
    policy.ref_logits[p].assign(data.n_responses(p), 0.0);

  std::vector<std::vector<double>> counts = policy.ref_logits;
  for (const auto& pair : data.pairs) counts[pair.prompt_id][pair.win_id] += 1.0;

  for (std::size_t p = 0; p < data.n_prompts(); ++p) {
    double total = 0.0;
    for (double c : counts[p]) total += c + smoothing;
    for (std::size_t r = 0; r < counts[p].size(); ++r)
      policy.ref_logits[p][r] = std::log((counts[p][r] + smoothing) / total);
  }
  policy.theta = policy.ref_logits;
  return policy;
}

void write_model(const PolicyModel& model, const std::string& path) {
  nlohmann::json doc;
  if (const auto* tab = std::get_if<TabularPolicy>(&model)) {
    doc["backend"] = "tabular";
    doc["beta"] = tab->beta;
    doc["theta"] = tab->theta;
    doc["ref_logits"] = tab->ref_logits;
  } else {
    const auto& lin = std::get<LinearRewardModel>(model);
    doc["backend"] = "linear";
    doc["beta"] = lin.beta;
    doc["weights"] = lin.weights;
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << doc.dump() << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

PolicyModel read_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json doc;
  in >> doc;
  std::string backend = doc.at("backend").get<std::string>();
  if (backend == "tabular") {
    TabularPolicy tab;
    tab.beta = doc.at("beta").get<double>();
    tab.theta = doc.at("theta").get<std::vector<std::vector<double>>>();
    tab.ref_logits = doc.at("ref_logits").get<std::vector<std::vector<double>>>();
    if (tab.theta.size() != tab.ref_logits.size())
      throw std::runtime_error("checkpoint shape mismatch");
    return tab;
  }
  if (backend == "linear") {
    LinearRewardModel lin;
    lin.beta = doc.at("beta").get<double>();
    lin.weights = doc.at("weights").get<std::vector<double>>();
    return lin;
  }
  throw std::runtime_error("unknown backend tag: " + backend);
}

}  // namespace prefopt
