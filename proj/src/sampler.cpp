#include "mlbalance/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlbalance/error.hpp"
#include "mlbalance/log.hpp"
#include "mlbalance/random.hpp"

namespace mlbalance {
namespace {

void check_rate(double p, bool allow_one) {
  if (!(p > 0.0) || !(allow_one ? p <= 1.0 : p < 1.0)) {
    throw ConfigError(allow_one ? "sampling rate p must lie in (0, 1]"
                                : "sampling rate p must lie in (0, 1)");
  }
}

long long rounded_count(double p, Index n) {
  return std::llround(p * static_cast<double>(n));
}

MultiLabelDataset append_rows(const MultiLabelDataset& dataset, const Matrix& extra_x,
                              const LabelMatrix& extra_y) {
  const Index n = dataset.num_instances();
  Matrix x(n + extra_x.rows(), dataset.num_features());
  LabelMatrix y(n + extra_y.rows(), dataset.num_labels());
  x.topRows(n) = dataset.features();
  y.topRows(n) = dataset.labels();
  x.bottomRows(extra_x.rows()) = extra_x;
  y.bottomRows(extra_y.rows()) = extra_y;
  return MultiLabelDataset(std::move(x), std::move(y), dataset.feature_names(),
                           dataset.label_names());
}

}  // namespace

long long SamplingConfig::num_to_generate(Index n) const { return rounded_count(p, n); }

long long SamplingConfig::attempt_budget(Index n) const {
  return max_attempts > 0 ? max_attempts : 100 * num_to_generate(n);
}

void SamplingConfig::validate() const {
  check_rate(p, true);
  if (max_attempts < 0) throw ConfigError("max attempts must be non-negative");
}

GenerationResult generate(const AemloModel& model, const MultiLabelDataset& train_set,
                          const SamplingConfig& config) {
  config.validate();
  if (train_set.feature_names() != model.feature_names ||
      train_set.label_names() != model.label_names) {
    throw SchemaError("dataset schema does not match the model");
  }
  const Index n = train_set.num_instances();
  if (config.max_attempts > 0 && config.max_attempts < config.num_to_generate(n)) {
    throw ConfigError("max attempts must be at least the number of instances to generate");
  }

  GenerationResult result;
  const ImbalanceProfile profile = compute_profile(train_set);
  result.minority_labels = minority_labels(profile, config.imr_threshold);
  if (result.minority_labels.empty()) {
    throw NothingToSampleError(
        "no minority label satisfies ImR > " + std::to_string(config.imr_threshold) +
        " and IRlbl > MeanIR; the dataset needs no oversampling");
  }
  result.minority_instances = minority_instances(train_set, result.minority_labels);
  result.requested = config.num_to_generate(n);
  if (result.requested == 0) return result;

  const long long budget = config.attempt_budget(n);
  const Matrix normalized = model.scaler.transform(train_set.features());
  Rng rng(config.seed);
  const auto& pool = result.minority_instances;
  while (static_cast<long long>(result.instances.size()) < result.requested) {
    if (result.attempts >= budget) {
      throw GenerationStarvationError(static_cast<long long>(result.instances.size()),
                                      result.attempts);
    }
    const std::size_t seed_row = pool[rng.uniform_index(pool.size())];
    ++result.attempts;
    const Matrix row = normalized.row(static_cast<Index>(seed_row));
    const Eigen::VectorXd scores = cross_modal_scores(model, row).row(0).transpose();
    LabelVector y = binarize(scores, model.thresholds);
    if (y.sum() == 0) {
      ++result.rejected_all_zero;
      continue;
    }
    const Eigen::VectorXd x_scaled = reconstruct_features(model, row).row(0).transpose();
    result.instances.push_back({model.scaler.inverse_transform_row(x_scaled), std::move(y),
                                seed_row});
  }
  return result;
}

MultiLabelDataset augment(const MultiLabelDataset& dataset,
                          const std::vector<SyntheticInstance>& synthetic) {
  const auto extra = static_cast<Index>(synthetic.size());
  Matrix x(extra, dataset.num_features());
  LabelMatrix y(extra, dataset.num_labels());
  for (Index r = 0; r < extra; ++r) {
    const auto& s = synthetic[static_cast<std::size_t>(r)];
    if (s.x.size() != dataset.num_features() || s.y.size() != dataset.num_labels()) {
      throw DimensionError("synthetic instance " + std::to_string(r) +
                           " does not match the dataset schema");
    }
    x.row(r) = s.x.transpose();
    y.row(r) = s.y.transpose();
  }
  return append_rows(dataset, x, y);
}

ResampleResult mlros(const MultiLabelDataset& dataset, double p, double imr_threshold,
                     std::uint64_t seed) {
  check_rate(p, true);
  const ImbalanceProfile profile = compute_profile(dataset);
  const auto labels = minority_labels(profile, imr_threshold);
  const auto pool = minority_instances(dataset, labels);
  if (pool.empty()) {
    warn("MLROS: no minority instances; dataset returned unchanged");
    return {dataset, {}, labels};
  }
  const long long quota = rounded_count(p, dataset.num_instances());
  Rng rng(seed);
  std::vector<std::size_t> drawn;
  drawn.reserve(static_cast<std::size_t>(quota));
  for (long long t = 0; t < quota; ++t) drawn.push_back(pool[rng.uniform_index(pool.size())]);
  const MultiLabelDataset copies = dataset.select_rows(drawn);
  if (drawn.empty()) return {dataset, {}, labels};
  return {append_rows(dataset, copies.features(), copies.labels()), std::move(drawn), labels};
}

ResampleResult mlrus(const MultiLabelDataset& dataset, double p, double imr_threshold,
                     std::uint64_t seed) {
  check_rate(p, false);
  const ImbalanceProfile profile = compute_profile(dataset);
  const auto labels = minority_labels(profile, imr_threshold);
  const auto protected_rows = minority_instances(dataset, labels);
  const auto majority = majority_labels(profile);
  const LabelMatrix& y = dataset.labels();
  const auto n = static_cast<std::size_t>(dataset.num_instances());

  std::vector<bool> is_protected(n, false);
  for (std::size_t i : protected_rows) is_protected[i] = true;
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_protected[i]) continue;
    for (std::size_t j : majority) {
      if (y(static_cast<Index>(i), static_cast<Index>(j)) == 1) {
        eligible.push_back(i);
        break;
      }
    }
  }

  auto quota = static_cast<std::size_t>(rounded_count(p, dataset.num_instances()));
  if (eligible.empty()) {
    warn("MLRUS: no instance is eligible for removal; dataset returned unchanged");
    return {dataset, {}, labels};
  }
  if (eligible.size() < quota) {
    warn("MLRUS: only " + std::to_string(eligible.size()) + " eligible instances for a quota of " +
         std::to_string(quota) + "; removing all of them");
    quota = eligible.size();
  }
  if (quota >= n) throw ConfigError("MLRUS would remove every instance");

  Rng rng(seed);
  for (std::size_t t = 0; t < quota; ++t) {
    const std::size_t j = t + rng.uniform_index(eligible.size() - t);
    std::swap(eligible[t], eligible[j]);
  }
  std::vector<std::size_t> removed(eligible.begin(),
                                   eligible.begin() + static_cast<std::ptrdiff_t>(quota));
  std::sort(removed.begin(), removed.end());

  std::vector<bool> drop(n, false);
  for (std::size_t i : removed) drop[i] = true;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (!drop[i]) kept.push_back(i);
  }
  return {dataset.select_rows(kept), std::move(removed), labels};
}

std::vector<std::size_t> nearest_neighbors(const Matrix& features, std::size_t seed_row,
                                           const std::vector<std::size_t>& candidates,
                                           std::size_t k) {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(candidates.size());
  const auto seed = features.row(static_cast<Index>(seed_row));
  for (std::size_t c : candidates) {
    if (c == seed_row) continue;
    scored.emplace_back((features.row(static_cast<Index>(c)) - seed).squaredNorm(), c);
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end());
  std::vector<std::size_t> out;
  out.reserve(take);
  for (std::size_t t = 0; t < take; ++t) out.push_back(scored[t].second);
  return out;
}

LabelVector ranking_label_vote(const LabelMatrix& labels, std::size_t seed_row,
                               const std::vector<std::size_t>& neighbors) {
  const long long voters = static_cast<long long>(neighbors.size()) + 1;
  LabelVector out(labels.cols());
  for (Index j = 0; j < labels.cols(); ++j) {
    long long count = labels(static_cast<Index>(seed_row), j);
    for (std::size_t r : neighbors) count += labels(static_cast<Index>(r), j);
    out[j] = 2 * count > voters ? 1 : 0;
  }
  return out;
}

SmoteResult mlsmote(const MultiLabelDataset& dataset, std::size_t k, double imr_threshold,
                    std::uint64_t seed) {
  if (k < 1) throw ConfigError("MLSMOTE needs k >= 1");
  const ImbalanceProfile profile = compute_profile(dataset);
  const auto labels = minority_labels(profile, imr_threshold);
  const Matrix& x = dataset.features();
  const LabelMatrix& y = dataset.labels();

  Rng rng(seed);
  std::vector<SyntheticInstance> synthetic;
  std::vector<std::vector<std::size_t>> neighbor_lists;
  for (std::size_t label : labels) {
    const auto positives = minority_instances(dataset, {label});
    if (positives.size() < 2) {
      warn("MLSMOTE: label '" + dataset.label_names()[label] +
           "' has fewer than two positive instances; skipped");
      continue;
    }
    for (std::size_t s : positives) {
      auto neighbors = nearest_neighbors(x, s, positives, k);
      const std::size_t r = neighbors[rng.uniform_index(neighbors.size())];
      const double u = rng.uniform01();
      const auto xs = x.row(static_cast<Index>(s)).transpose();
      const auto xr = x.row(static_cast<Index>(r)).transpose();
      Vector point = xs + u * (xr - xs);
      synthetic.push_back({std::move(point), ranking_label_vote(y, s, neighbors), s});
      neighbor_lists.push_back(std::move(neighbors));
    }
  }
  MultiLabelDataset out = augment(dataset, synthetic);
  return {std::move(out), std::move(synthetic), std::move(neighbor_lists), labels};
}

}  // namespace mlbalance
