#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "mlbalance/dataset.hpp"

namespace mlbalance {

/// Per-label and dataset-level imbalance statistics.
///
/// Labels with no positive instance carry `irlbl = +inf` and are left out of `mean_ir`,
/// `cvir` and every minority-label query.
struct ImbalanceProfile {
  std::vector<long long> n1;  // positives per label
  std::vector<long long> n0;  // negatives per label
  std::vector<double> irlbl;  // max_k n1[k] / n1[j]
  std::vector<double> imr;    // max(n1, n0) / min(n1, n0)
  double mean_ir = 0.0;
  double cvir = 0.0;          // sample std of finite irlbl over mean_ir
  double card = 0.0;          // mean positives per instance
  double den = 0.0;           // card / q
  long long num_instances = 0;

  std::size_t num_labels() const { return n1.size(); }
};

/// Throws DegenerateProfileError when Y has no positive entry. Warns about zero-support labels.
ImbalanceProfile compute_profile(const MultiLabelDataset& dataset);

inline constexpr double kDefaultImrThreshold = 10.0;

/// Labels with imr > threshold and irlbl > mean_ir (both strict), ascending.
std::vector<std::size_t> minority_labels(const ImbalanceProfile& profile,
                                         double imr_threshold = kDefaultImrThreshold);

/// Instances positive for at least one label in `labels`, ascending.
std::vector<std::size_t> minority_instances(const MultiLabelDataset& dataset,
                                            const std::vector<std::size_t>& labels);

/// Labels with 0 < irlbl < mean_ir, ascending.
std::vector<std::size_t> majority_labels(const ImbalanceProfile& profile);

}  // namespace mlbalance
