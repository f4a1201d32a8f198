#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "mlbalance/dataset.hpp"

namespace mlbalance {

struct Prediction {
  Matrix scores;       // n x q
  LabelMatrix labels;  // n x q
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual Index num_features() const = 0;
  virtual Index num_labels() const = 0;
  /// `features` is n x d, one row per instance.
  virtual Prediction predict(const Matrix& features) const = 0;
};

struct BinaryRelevanceConfig {
  double reg_strength = 1e-3;
  int epochs = 1000;
  std::uint64_t seed = 0;
};

/// One L2-regularized logistic regression per label, fitted by full-batch gradient descent.
/// Labels that are constant in training predict that constant with score 0 or 1.
class BinaryRelevance : public Classifier {
 public:
  static BinaryRelevance train(const MultiLabelDataset& train_set,
                               const BinaryRelevanceConfig& config = {});

  Index num_features() const override { return weights_.rows(); }
  Index num_labels() const override { return weights_.cols(); }
  Prediction predict(const Matrix& features) const override;

  const Matrix& weights() const { return weights_; }  // d x q
  const Vector& bias() const { return bias_; }
  /// -1 for a fitted label, otherwise the constant 0 or 1.
  const LabelVector& constant() const { return constant_; }

 private:
  Matrix weights_;
  Vector bias_;
  LabelVector constant_;
};

/// Multi-label k-nearest neighbours with Laplace smoothing.
class MLkNN : public Classifier {
 public:
  static MLkNN train(const MultiLabelDataset& train_set, std::size_t k = 10,
                     double smoothing = 1.0);

  Index num_features() const override { return features_.cols(); }
  Index num_labels() const override { return labels_.cols(); }
  Prediction predict(const Matrix& features) const override;

  std::size_t k() const { return k_; }
  /// P(label j relevant), length q.
  const Vector& prior() const { return prior_; }
  /// q x (k+1): P(m of the k neighbours carry j | j relevant) and the same given irrelevant.
  const Matrix& likelihood_positive() const { return likelihood_positive_; }
  const Matrix& likelihood_negative() const { return likelihood_negative_; }

  /// Training rows nearest to `point` by Euclidean distance, lower index first on ties.
  std::vector<std::size_t> neighbors(const Vector& point, std::size_t count,
                                     std::size_t exclude) const;

 private:
  Matrix features_;
  LabelMatrix labels_;
  std::size_t k_ = 10;
  Vector prior_;
  Matrix likelihood_positive_;
  Matrix likelihood_negative_;
};

/// 2TP / (2TP + FP + FN) per label, 0 when the denominator is 0.
Vector per_label_f1(const LabelMatrix& predicted, const LabelMatrix& truth);
double macro_f(const LabelMatrix& predicted, const LabelMatrix& truth);

struct AucResult {
  Vector per_label;                  // NaN for skipped labels
  std::vector<std::size_t> skipped;  // labels lacking positives or negatives
  double macro = 0.0;
};

/// Mann-Whitney AUC per label with ties counted as half. Throws UndefinedMetricError when
/// every label is skipped.
AucResult label_auc(const Matrix& scores, const LabelMatrix& truth);
double macro_auc(const Matrix& scores, const LabelMatrix& truth);

/// Ranking loss over instances (rows), ties counted as discordant.
double ranking_loss_metric(const Matrix& scores, const LabelMatrix& truth);

struct EvalReport {
  double macro_f = 0.0;
  double macro_auc = 0.0;
  double ranking_loss = 0.0;
  Vector per_label_f;
  Vector per_label_auc;
  std::vector<std::size_t> skipped_labels;

  nlohmann::json to_json(const std::vector<std::string>& label_names = {}) const;
};

EvalReport evaluate(const Classifier& classifier, const MultiLabelDataset& test_set);

}  // namespace mlbalance
