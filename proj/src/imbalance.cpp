#include "mlbalance/imbalance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlbalance/error.hpp"
#include "mlbalance/log.hpp"

namespace mlbalance {

ImbalanceProfile compute_profile(const MultiLabelDataset& dataset) {
  const LabelMatrix& y = dataset.labels();
  const auto n = static_cast<long long>(y.rows());
  const auto q = static_cast<std::size_t>(y.cols());

  ImbalanceProfile p;
  p.num_instances = n;
  p.n1.resize(q);
  p.n0.resize(q);
  long long total_positive = 0;
  for (std::size_t j = 0; j < q; ++j) {
    p.n1[j] = y.col(static_cast<Index>(j)).sum();
    p.n0[j] = n - p.n1[j];
    total_positive += p.n1[j];
  }
  if (total_positive == 0) {
    throw DegenerateProfileError("label matrix has no positive entry; imbalance is undefined");
  }

  const long long n1_max = *std::max_element(p.n1.begin(), p.n1.end());
  const double inf = std::numeric_limits<double>::infinity();
  p.irlbl.resize(q);
  p.imr.resize(q);
  std::vector<double> finite;
  for (std::size_t j = 0; j < q; ++j) {
    if (p.n1[j] == 0) {
      p.irlbl[j] = inf;
      warn("label '" + dataset.label_names()[j] +
           "' has no positive instance; excluded from MeanIR, CVIR and minority selection");
    } else {
      p.irlbl[j] = static_cast<double>(n1_max) / static_cast<double>(p.n1[j]);
      finite.push_back(p.irlbl[j]);
    }
    const long long lo = std::min(p.n1[j], p.n0[j]);
    const long long hi = std::max(p.n1[j], p.n0[j]);
    p.imr[j] = lo == 0 ? inf : static_cast<double>(hi) / static_cast<double>(lo);
  }

  double sum = 0.0;
  for (double v : finite) sum += v;
  p.mean_ir = sum / static_cast<double>(finite.size());
  if (finite.size() > 1) {
    double ss = 0.0;
    for (double v : finite) ss += (v - p.mean_ir) * (v - p.mean_ir);
    p.cvir = std::sqrt(ss / static_cast<double>(finite.size() - 1)) / p.mean_ir;
  }
  p.card = static_cast<double>(total_positive) / static_cast<double>(n);
  p.den = p.card / static_cast<double>(q);
  return p;
}

std::vector<std::size_t> minority_labels(const ImbalanceProfile& profile, double imr_threshold) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < profile.num_labels(); ++j) {
    if (profile.n1[j] == 0) continue;
    if (profile.imr[j] > imr_threshold && profile.irlbl[j] > profile.mean_ir) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> minority_instances(const MultiLabelDataset& dataset,
                                            const std::vector<std::size_t>& labels) {
  const LabelMatrix& y = dataset.labels();
  for (std::size_t j : labels) {
    if (j >= static_cast<std::size_t>(y.cols())) throw DimensionError("label index out of range");
  }
  std::vector<std::size_t> out;
  for (Index i = 0; i < y.rows(); ++i) {
    for (std::size_t j : labels) {
      if (y(i, static_cast<Index>(j)) == 1) {
        out.push_back(static_cast<std::size_t>(i));
        break;
      }
    }
  }
  return out;
}

std::vector<std::size_t> majority_labels(const ImbalanceProfile& profile) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < profile.num_labels(); ++j) {
    if (profile.n1[j] > 0 && profile.irlbl[j] < profile.mean_ir) out.push_back(j);
  }
  return out;
}

}  // namespace mlbalance
