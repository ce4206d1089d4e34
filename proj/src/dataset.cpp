#include "prefopt/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "prefopt/rng.hpp"

namespace prefopt {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void PreferenceDataset::validate() const {
  if (pairs.empty()) throw std::invalid_argument("dataset has no pairs");
  for (const auto& pair : pairs) {
    if (pair.prompt_id < 0 || static_cast<std::size_t>(pair.prompt_id) >= features.size())
      throw std::invalid_argument("pair references missing prompt " + std::to_string(pair.prompt_id));
    const auto& row = features[pair.prompt_id];
    auto check = [&](int id) {
      if (id < 0 || static_cast<std::size_t>(id) >= row.size())
        throw std::invalid_argument("pair references missing response " + std::to_string(id));
    };
    check(pair.win_id);
    check(pair.lose_id);
    if (pair.win_id == pair.lose_id) throw std::invalid_argument("pair has win_id == lose_id");
  }
}

PreferencePair flipped(const PreferencePair& pair) {
  PreferencePair out = pair;
  std::swap(out.win_id, out.lose_id);
  out.truth_flipped = !out.truth_flipped;
  return out;
}

double true_reward(const PreferenceDataset& data, const std::vector<double>& theta,
                   int prompt_id, int response_id) {
  return dot(theta, data.features[prompt_id][response_id]);
}

PreferenceDataset generate_clean(const GeneratorSpec& spec) {
  if (spec.n_prompts < 1 || spec.n_responses_per_prompt < 2 || spec.feature_dim < 1)
    throw std::invalid_argument("generator spec out of range");
  if (spec.margin_floor < 0.0) throw std::invalid_argument("margin_floor must be non-negative");

  const int P = spec.n_prompts;
  const int R = spec.n_responses_per_prompt;
  const int D = spec.feature_dim;

  std::vector<double> theta;
  if (spec.true_theta) {
    theta = *spec.true_theta;
    if (static_cast<int>(theta.size()) != D)
      throw std::invalid_argument("true_theta length does not match feature_dim");
  } else {
    SplitRng rng(spec.seed, "true_theta");
    theta.resize(D);
    for (int d = 0; d < D; ++d) theta[d] = spec.theta_scale * rng.normal(d);
  }

  PreferenceDataset data;
  data.meta.seed = spec.seed;
  data.meta.true_theta = theta;
  data.features.assign(P, std::vector<std::vector<double>>(R, std::vector<double>(D)));
  SplitRng feat_rng(spec.seed, "features");
  for (int p = 0; p < P; ++p)
    for (int r = 0; r < R; ++r)
      for (int d = 0; d < D; ++d)
        data.features[p][r][d] = feat_rng.normal(static_cast<std::uint64_t>((p * R + r)) * D + d);

  // All unordered response pairs per prompt; winner sampled from the
  // BT probability of the true reward gap.
  SplitRng label_rng(spec.seed, "labels");
  const int pairs_per_prompt = R * (R - 1) / 2;
  std::uint64_t counter = 0;
  for (int p = 0; p < P; ++p) {
    int k = 0;
    for (int a = 0; a < R; ++a) {
      for (int b = a + 1; b < R; ++b, ++k) {
        counter = static_cast<std::uint64_t>(p) * pairs_per_prompt + k;
        double gap = true_reward(data, theta, p, a) - true_reward(data, theta, p, b);
        if (std::abs(gap) < spec.margin_floor) continue;
        bool a_wins = label_rng.uniform(counter) < sigmoid(gap);
        PreferencePair pair;
        pair.prompt_id = p;
        pair.win_id = a_wins ? a : b;
        pair.lose_id = a_wins ? b : a;
        data.pairs.push_back(pair);
      }
    }
  }
  if (data.pairs.empty())
    throw std::runtime_error("no pairs survive margin_floor = " + std::to_string(spec.margin_floor));
  return data;
}

PreferenceDataset contaminate(const PreferenceDataset& data, const ContaminationSpec& spec) {
  if (data.pairs.empty()) throw std::invalid_argument("cannot contaminate an empty dataset");
  if (spec.epsilon < 0.0 || spec.epsilon >= 0.5)
    throw std::invalid_argument("epsilon must lie in [0, 0.5)");

  const std::size_t n = data.pairs.size();
  const std::size_t n_flip = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.epsilon));
  PreferenceDataset out = data;
  SplitRng rng(spec.seed, "contaminate");
  auto order = rng.permutation(n);
  for (std::size_t i = 0; i < n_flip; ++i) out.pairs[order[i]] = flipped(out.pairs[order[i]]);
  return out;
}

void write_dataset(const PreferenceDataset& data, const std::string& path) {
  nlohmann::json header;
  header["record"] = "header";
  header["seed"] = data.meta.seed;
  header["true_theta"] = data.meta.true_theta;
  header["features"] = data.features;

  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << header.dump() << "\n";
    for (const auto& pair : data.pairs) {
      nlohmann::json rec;
      rec["prompt_id"] = pair.prompt_id;
      rec["win_id"] = pair.win_id;
      rec["lose_id"] = pair.lose_id;
      rec["truth_flipped"] = pair.truth_flipped;
      out << rec.dump() << "\n";
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

PreferenceDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file " + path);

  PreferenceDataset data;
  auto header = nlohmann::json::parse(line);
  data.meta.seed = header.at("seed").get<std::uint64_t>();
  data.meta.true_theta = header.at("true_theta").get<std::vector<double>>();
  data.features = header.at("features").get<std::vector<std::vector<std::vector<double>>>>();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto rec = nlohmann::json::parse(line);
    PreferencePair pair;
    pair.prompt_id = rec.at("prompt_id").get<int>();
    pair.win_id = rec.at("win_id").get<int>();
    pair.lose_id = rec.at("lose_id").get<int>();
    pair.truth_flipped = rec.value("truth_flipped", false);
    data.pairs.push_back(pair);
  }
  data.validate();
  return data;
}

}  // namespace prefopt
