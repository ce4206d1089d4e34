#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace prefopt {

/// One pairwise comparison. `truth_flipped` is ground truth carried by
/// synthetic data only; training never reads it.
struct PreferencePair {
  int prompt_id = 0;
  int win_id = 0;
  int lose_id = 0;
  bool truth_flipped = false;
};

struct DatasetMeta {
  std::uint64_t seed = 0;
  std::vector<double> true_theta;  // empty when unknown
};

/// Preference dataset with per-(prompt, response) feature vectors.
/// features[p][r] is the feature vector of response r to prompt p.
struct PreferenceDataset {
  std::vector<std::vector<std::vector<double>>> features;
  std::vector<PreferencePair> pairs;
  DatasetMeta meta;

  std::size_t n_prompts() const { return features.size(); }
  std::size_t n_responses(std::size_t prompt) const { return features[prompt].size(); }
  std::size_t size() const { return pairs.size(); }

  /// Throws std::invalid_argument if any pair references a missing
  /// prompt/response or has win_id == lose_id.
  void validate() const;
};

struct GeneratorSpec {
  int n_prompts = 100;
  int n_responses_per_prompt = 4;
  int feature_dim = 8;
  std::optional<std::vector<double>> true_theta;  // sampled if absent
  double theta_scale = 1.0;                       // scale of sampled true_theta entries
  double margin_floor = 0.0;                      // min |true reward gap| for retained pairs
  std::uint64_t seed = 0;
};

struct ContaminationSpec {
  double epsilon = 0.0;  // in [0, 0.5)
  std::uint64_t seed = 0;
};

/// Samples a clean Bradley-Terry dataset: features are iid standard
/// normal, winners are drawn with probability sigmoid of the true
/// reward gap, and candidate pairs whose absolute gap falls below
/// margin_floor are discarded.
PreferenceDataset generate_clean(const GeneratorSpec& spec);

/// Flips exactly floor(N * epsilon) pairs, chosen uniformly without
/// replacement from the given seed. Pair order is preserved.
PreferenceDataset contaminate(const PreferenceDataset& data, const ContaminationSpec& spec);

PreferencePair flipped(const PreferencePair& pair);

double true_reward(const PreferenceDataset& data, const std::vector<double>& theta,
                   int prompt_id, int response_id);

// Line-delimited dataset file: one JSON header record followed by one
// JSON record per pair. Round-trip is byte-lossless.
void write_dataset(const PreferenceDataset& data, const std::string& path);
PreferenceDataset read_dataset(const std::string& path);

}  // namespace prefopt
