#include "mlbalance/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mlbalance/aemlo.hpp"
#include "mlbalance/error.hpp"
#include "mlbalance/neural.hpp"
#include "mlbalance/random.hpp"

namespace mlbalance {
namespace {

void check_shapes(Index rows_a, Index cols_a, Index rows_b, Index cols_b, const char* what) {
  if (rows_a != rows_b || cols_a != cols_b) {
    throw DimensionError(std::string(what) + ": shape " + std::to_string(rows_a) + "x" +
                         std::to_string(cols_a) + " does not match " + std::to_string(rows_b) +
                         "x" + std::to_string(cols_b));
  }
}

void check_features(const Classifier& c, const Matrix& features) {
  if (features.cols() != c.num_features()) {
    throw DimensionError("classifier expects " + std::to_string(c.num_features()) +
                         " features, got " + std::to_string(features.cols()));
  }
}

double log1p_exp(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// Largest eigenvalue of A^T A by power iteration.
double largest_gram_eigenvalue(const Matrix& a, Rng& rng) {
  Vector v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector w = a.transpose() * (a * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - lambda) <= 1e-10 * std::max(1.0, next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

}  // namespace

BinaryRelevance BinaryRelevance::train(const MultiLabelDataset& train_set,
                                       const BinaryRelevanceConfig& config) {
  if (!(config.reg_strength >= 0.0)) throw ConfigError("regularization must be non-negative");
  if (config.epochs < 1) throw ConfigError("epochs must be positive");

  const Index n = train_set.num_instances();
  const Index d = train_set.num_features();
  const Index q = train_set.num_labels();
  const LabelMatrix& y = train_set.labels();

  BinaryRelevance model;
  model.weights_ = Matrix::Zero(d, q);
  model.bias_ = Vector::Zero(q);
  model.constant_ = LabelVector::Constant(q, -1);
  std::vector<Index> fitted;
  for (Index j = 0; j < q; ++j) {
    const long long positives = y.col(j).sum();
    if (positives == 0) {
      model.constant_[j] = 0;
    } else if (positives == n) {
      model.constant_[j] = 1;
    } else {
      fitted.push_back(j);
    }
  }
  if (fitted.empty()) return model;

  Matrix design(n, d + 1);
  design.leftCols(d) = train_set.features();
  design.col(d).setOnes();
  Matrix targets(n, static_cast<Index>(fitted.size()));
  for (std::size_t t = 0; t < fitted.size(); ++t) {
    targets.col(static_cast<Index>(t)) = y.col(fitted[t]).cast<double>();
  }

  Rng rng(config.seed);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lipschitz =
      1.01 * largest_gram_eigenvalue(design, rng) * inv_n / 4.0 + config.reg_strength;
  const double step = 1.0 / lipschitz;

  Matrix coef = Matrix::Zero(d + 1, targets.cols());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Matrix z = design * coef;
    double loss = 0.0;
    Matrix residual(z.rows(), z.cols());
    for (Index c = 0; c < z.cols(); ++c) {
      for (Index r = 0; r < z.rows(); ++r) {
        loss += log1p_exp(z(r, c)) - targets(r, c) * z(r, c);
        residual(r, c) = sigmoid(z(r, c)) - targets(r, c);
      }
    }
    loss = loss * inv_n + 0.5 * config.reg_strength * coef.topRows(d).squaredNorm();
    if (!std::isfinite(loss)) {
      throw NumericError("binary relevance training diverged at epoch " +
                         std::to_string(epoch + 1));
    }
    Matrix grad = design.transpose() * residual * inv_n;
    grad.topRows(d) += config.reg_strength * coef.topRows(d);
    coef -= step * grad;
  }
  for (std::size_t t = 0; t < fitted.size(); ++t) {
    model.weights_.col(fitted[t]) = coef.col(static_cast<Index>(t)).head(d);
    model.bias_[fitted[t]] = coef(d, static_cast<Index>(t));
  }
  return model;
}

Prediction BinaryRelevance::predict(const Matrix& features) const {
  check_features(*this, features);
  Prediction out;
  out.scores = features * weights_;
  out.scores.rowwise() += bias_.transpose();
  out.labels.resize(features.rows(), num_labels());
  for (Index j = 0; j < num_labels(); ++j) {
    for (Index i = 0; i < features.rows(); ++i) {
      const double s = constant_[j] >= 0 ? constant_[j] : sigmoid(out.scores(i, j));
      out.scores(i, j) = s;
      out.labels(i, j) = s >= 0.5 ? 1 : 0;
    }
  }
  return out;
}

MLkNN MLkNN::train(const MultiLabelDataset& train_set, std::size_t k, double smoothing) {
  const auto n = static_cast<std::size_t>(train_set.num_instances());
  if (k < 1) throw ConfigError("MLkNN needs k >= 1");
  if (k >= n) {
    throw ConfigError("MLkNN needs more training instances than k (k=" + std::to_string(k) +
                      ", n=" + std::to_string(n) + ")");
  }
  if (!(smoothing > 0.0)) throw ConfigError("MLkNN smoothing must be positive");

  MLkNN model;
  model.features_ = train_set.features();
  model.labels_ = train_set.labels();
  model.k_ = k;
  const Index q = train_set.num_labels();
  const auto kk = static_cast<Index>(k);
  const double s = smoothing;

  model.prior_.resize(q);
  for (Index j = 0; j < q; ++j) {
    model.prior_[j] =
        (s + model.labels_.col(j).sum()) / (2.0 * s + static_cast<double>(n));
  }

  Matrix count_pos = Matrix::Zero(q, kk + 1);
  Matrix count_neg = Matrix::Zero(q, kk + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto near = model.neighbors(model.features_.row(static_cast<Index>(i)).transpose(), k, i);
    for (Index j = 0; j < q; ++j) {
      Index m = 0;
      for (std::size_t r : near) m += model.labels_(static_cast<Index>(r), j);
      if (model.labels_(static_cast<Index>(i), j) == 1) {
        count_pos(j, m) += 1.0;
      } else {
        count_neg(j, m) += 1.0;
      }
    }
  }
  model.likelihood_positive_.resize(q, kk + 1);
  model.likelihood_negative_.resize(q, kk + 1);
  for (Index j = 0; j < q; ++j) {
    const double total_pos = count_pos.row(j).sum();
    const double total_neg = count_neg.row(j).sum();
    for (Index m = 0; m <= kk; ++m) {
      model.likelihood_positive_(j, m) =
          (s + count_pos(j, m)) / (s * static_cast<double>(kk + 1) + total_pos);
      model.likelihood_negative_(j, m) =
          (s + count_neg(j, m)) / (s * static_cast<double>(kk + 1) + total_neg);
    }
  }
  return model;
}

std::vector<std::size_t> MLkNN::neighbors(const Vector& point, std::size_t count,
                                          std::size_t exclude) const {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(static_cast<std::size_t>(features_.rows()));
  for (Index r = 0; r < features_.rows(); ++r) {
    if (static_cast<std::size_t>(r) == exclude) continue;
    scored.emplace_back((features_.row(r).transpose() - point).squaredNorm(),
                        static_cast<std::size_t>(r));
  }
  const std::size_t take = std::min(count, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end());
  std::vector<std::size_t> out(take);
  for (std::size_t t = 0; t < take; ++t) out[t] = scored[t].second;
  return out;
}

Prediction MLkNN::predict(const Matrix& features) const {
  check_features(*this, features);
  const Index q = num_labels();
  Prediction out{Matrix(features.rows(), q), LabelMatrix(features.rows(), q)};
  for (Index i = 0; i < features.rows(); ++i) {
    const auto near =
        neighbors(features.row(i).transpose(), k_, std::numeric_limits<std::size_t>::max());
    for (Index j = 0; j < q; ++j) {
      Index m = 0;
      for (std::size_t r : near) m += labels_(static_cast<Index>(r), j);
      const double pos = prior_[j] * likelihood_positive_(j, m);
      const double neg = (1.0 - prior_[j]) * likelihood_negative_(j, m);
      out.scores(i, j) = pos / (pos + neg);
      out.labels(i, j) = pos > neg ? 1 : 0;
    }
  }
  return out;
}

Vector per_label_f1(const LabelMatrix& predicted, const LabelMatrix& truth) {
  check_shapes(predicted.rows(), predicted.cols(), truth.rows(), truth.cols(), "macro_f");
  Vector f(truth.cols());
  for (Index j = 0; j < truth.cols(); ++j) {
    long long tp = 0, fp = 0, fn = 0;
    for (Index i = 0; i < truth.rows(); ++i) {
      const bool p = predicted(i, j) == 1;
      const bool t = truth(i, j) == 1;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const long long denom = 2 * tp + fp + fn;
    f[j] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return f;
}

double macro_f(const LabelMatrix& predicted, const LabelMatrix& truth) {
  return per_label_f1(predicted, truth).mean();
}

AucResult label_auc(const Matrix& scores, const LabelMatrix& truth) {
  check_shapes(scores.rows(), scores.cols(), truth.rows(), truth.cols(), "macro_auc");
  const Index n = scores.rows();
  AucResult out;
  out.per_label = Vector::Constant(truth.cols(), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  int defined = 0;
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index j = 0; j < truth.cols(); ++j) {
    const long long positives = truth.col(j).sum();
    const long long negatives = n - positives;
    if (positives == 0 || negatives == 0) {
      out.skipped.push_back(static_cast<std::size_t>(j));
      continue;
    }
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(),
              [&](Index a, Index b) { return scores(a, j) < scores(b, j); });
    // Sum of midranks of the positives; tied groups share their average rank.
    double positive_rank_sum = 0.0;
    std::size_t start = 0;
    while (start < order.size()) {
      std::size_t end = start + 1;
      while (end < order.size() && scores(order[end], j) == scores(order[start], j)) ++end;
      const double midrank = 0.5 * static_cast<double>(start + 1 + end);
      for (std::size_t t = start; t < end; ++t) {
        if (truth(order[t], j) == 1) positive_rank_sum += midrank;
      }
      start = end;
    }
    const double p = static_cast<double>(positives);
    const double auc = (positive_rank_sum - p * (p + 1.0) / 2.0) /
                       (p * static_cast<double>(negatives));
    out.per_label[j] = auc;
    sum += auc;
    ++defined;
  }
  if (defined == 0) {
    throw UndefinedMetricError("macro AUC undefined: every label lacks positives or negatives");
  }
  out.macro = sum / defined;
  return out;
}

double macro_auc(const Matrix& scores, const LabelMatrix& truth) {
  return label_auc(scores, truth).macro;
}

double ranking_loss_metric(const Matrix& scores, const LabelMatrix& truth) {
  check_shapes(scores.rows(), scores.cols(), truth.rows(), truth.cols(), "ranking_loss");
  return ranking_loss_exact(scores.transpose(), truth.transpose().cast<double>());
}

nlohmann::json EvalReport::to_json(const std::vector<std::string>& label_names) const {
  nlohmann::json per_f = nlohmann::json::array();
  nlohmann::json per_auc = nlohmann::json::array();
  for (Index j = 0; j < per_label_f.size(); ++j) {
    per_f.push_back(per_label_f[j]);
    if (std::isnan(per_label_auc[j])) {
      per_auc.push_back(nullptr);
    } else {
      per_auc.push_back(per_label_auc[j]);
    }
  }
  nlohmann::json j = {{"macro_f", macro_f},
                      {"macro_auc", macro_auc},
                      {"ranking_loss", ranking_loss},
                      {"per_label_f", per_f},
                      {"per_label_auc", per_auc},
                      {"skipped_labels", skipped_labels}};
  if (!label_names.empty()) j["labels"] = label_names;
  return j;
}

EvalReport evaluate(const Classifier& classifier, const MultiLabelDataset& test_set) {
  if (classifier.num_labels() != test_set.num_labels()) {
    throw SchemaError("classifier predicts " + std::to_string(classifier.num_labels()) +
                      " labels, test set has " + std::to_string(test_set.num_labels()));
  }
  const Prediction pred = classifier.predict(test_set.features());
  check_shapes(pred.scores.rows(), pred.scores.cols(), test_set.num_instances(),
               test_set.num_labels(), "prediction");
  EvalReport report;
  report.per_label_f = per_label_f1(pred.labels, test_set.labels());
  report.macro_f = report.per_label_f.mean();
  AucResult auc = label_auc(pred.scores, test_set.labels());
  report.per_label_auc = std::move(auc.per_label);
  report.macro_auc = auc.macro;
  report.skipped_labels = std::move(auc.skipped);
  report.ranking_loss = ranking_loss_metric(pred.scores, test_set.labels());
  return report;
}

}  // namespace mlbalance
