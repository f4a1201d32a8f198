#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mlbalance/aemlo.hpp"
#include "mlbalance/dataset.hpp"
#include "mlbalance/imbalance.hpp"

namespace mlbalance {

struct SamplingConfig {
  double p = 0.3;  // sampling rate; num = round(p * n)
  double imr_threshold = kDefaultImrThreshold;
  long long max_attempts = 0;  // 0 means 100 * num
  std::uint64_t seed = 0;

  long long num_to_generate(Index n) const;
  long long attempt_budget(Index n) const;
  void validate() const;
};

/// A generated instance in the original feature scale, tagged with the row it was decoded from.
struct SyntheticInstance {
  Vector x;
  LabelVector y;
  std::size_t seed_index = 0;
};

struct GenerationResult {
  std::vector<SyntheticInstance> instances;
  long long requested = 0;
  long long attempts = 0;
  long long rejected_all_zero = 0;
  std::vector<std::size_t> minority_labels;
  std::vector<std::size_t> minority_instances;
};

/// Decodes round(p * n) synthetic instances from uniformly drawn minority seeds of
/// `train_set` (original feature scale). Candidates whose thresholded label vector is all
/// zero are rejected and redrawn.
///
/// Throws NothingToSampleError when no minority label qualifies and
/// GenerationStarvationError when the attempt budget runs out.
GenerationResult generate(const AemloModel& model, const MultiLabelDataset& train_set,
                          const SamplingConfig& config);

/// Appends synthetic rows after the existing ones.
MultiLabelDataset augment(const MultiLabelDataset& dataset,
                          const std::vector<SyntheticInstance>& synthetic);

/// Row indices an oversampler appended or an undersampler removed.
struct ResampleResult {
  MultiLabelDataset dataset;
  std::vector<std::size_t> source_rows;  // mlros: copied rows; mlrus: removed rows
  std::vector<std::size_t> minority_labels;
};

/// Random oversampling: round(p * n) copies drawn with replacement from the minority instances.
ResampleResult mlros(const MultiLabelDataset& dataset, double p, double imr_threshold,
                     std::uint64_t seed);

/// Random undersampling of instances outside the minority set that carry a majority label
/// (irlbl < mean_ir). Minority instances are never removed.
ResampleResult mlrus(const MultiLabelDataset& dataset, double p, double imr_threshold,
                     std::uint64_t seed);

struct SmoteResult {
  MultiLabelDataset dataset;
  std::vector<SyntheticInstance> instances;
  std::vector<std::vector<std::size_t>> neighbors;  // per synthetic instance, nearest first
  std::vector<std::size_t> minority_labels;
};

/// k nearest rows (Euclidean on features) among `candidates`, excluding `seed_row`.
/// Distance ties resolve toward the lower row index.
std::vector<std::size_t> nearest_neighbors(const Matrix& features, std::size_t seed_row,
                                           const std::vector<std::size_t>& candidates,
                                           std::size_t k);

/// Ranking label aggregation: a label is kept when more than half of {seed} + neighbors
/// carry it.
LabelVector ranking_label_vote(const LabelMatrix& labels, std::size_t seed_row,
                               const std::vector<std::size_t>& neighbors);

/// MLSMOTE with Ranking label generation. One synthetic instance per positive instance of
/// each minority label, interpolated toward a random one of its k nearest same-label
/// neighbors.
SmoteResult mlsmote(const MultiLabelDataset& dataset, std::size_t k, double imr_threshold,
                    std::uint64_t seed);

}  // namespace mlbalance
