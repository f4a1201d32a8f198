#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "mlbalance/error.hpp"
#include "mlbalance/evaluation.hpp"
#include "mlbalance/random.hpp"

using namespace mlbalance;

namespace {

// Returns a fixed prediction regardless of the input.
class Fixed : public Classifier {
 public:
  Fixed(Matrix scores, LabelMatrix labels) : p_{std::move(scores), std::move(labels)} {}
  Index num_features() const override { return 1; }
  Index num_labels() const override { return p_.labels.cols(); }
  Prediction predict(const Matrix&) const override { return p_; }

 private:
  Prediction p_;
};

double accuracy(const LabelMatrix& a, const LabelMatrix& b) {
  return (a.array() == b.array()).cast<double>().mean();
}

}  // namespace

TEST_CASE("binary relevance on separable, constant and xor labels") {
  Matrix x(8, 1);
  x << -4, -3, -2, -1, 1, 2, 3, 4;
  LabelMatrix y(8, 2);
  y.col(0) << 0, 0, 0, 0, 1, 1, 1, 1;
  y.col(1).setZero();
  const MultiLabelDataset ds(x, y);
  const BinaryRelevance br = BinaryRelevance::train(ds);
  const Prediction p = br.predict(x);
  CHECK(accuracy(p.labels.col(0), y.col(0)) == 1.0);
  CHECK(p.scores(7, 0) - p.scores(0, 0) > 0.5);
  CHECK(br.constant()(1) == 0);
  CHECK(p.labels.col(1).isZero());
  CHECK(br.predict(Matrix::Constant(3, 1, 100.0)).labels.col(1).isZero());

  Matrix xor_x(4, 2);
  xor_x << 0, 0, 0, 1, 1, 0, 1, 1;
  const MultiLabelDataset xor_ds(xor_x, (LabelMatrix(4, 1) << 0, 1, 1, 0).finished());
  const BinaryRelevance xor_br = BinaryRelevance::train(xor_ds);
  CHECK(accuracy(xor_br.predict(xor_x).labels, xor_ds.labels()) <= 0.75);

  BinaryRelevanceConfig cfg;
  cfg.seed = 9;
  const auto big = fixtures::imbalanced_dataset();
  CHECK(BinaryRelevance::train(big, cfg).weights() == BinaryRelevance::train(big, cfg).weights());
}

TEST_CASE("mlknn") {
  Matrix x(5, 1);
  x << 0, 1, 2, 10, 11;
  LabelMatrix y(5, 2);
  y << 1, 0, 1, 0, 1, 1, 0, 1, 0, 1;
  const MLkNN knn = MLkNN::train({x, y}, 1);
  CHECK(knn.predict(x.row(0)).labels == y.row(0));
  CHECK(knn.predict(x.row(3)).labels == y.row(3));

  LabelMatrix uniform = LabelMatrix::Zero(5, 2);
  uniform.col(1).setOnes();
  uniform(0, 0) = 1;
  const MLkNN sat = MLkNN::train({x, uniform}, 2);
  const Prediction anywhere = sat.predict((Matrix(3, 1) << -50, 5, 70).finished());
  CHECK(anywhere.labels.col(1).minCoeff() == 1);
  CHECK((anywhere.scores.array() >= 0).all());
  CHECK((anywhere.scores.array() <= 1).all());

  CHECK_THROWS_AS(MLkNN::train({x, y}, 5), ConfigError);
  CHECK(knn.neighbors(Vector::Constant(1, 0.5), 2, 99) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("macro f") {
  LabelMatrix truth(4, 2);
  truth << 1, 1, 0, 0, 1, 1, 0, 0;
  CHECK(macro_f(truth, truth) == 1.0);
  LabelMatrix half = truth;
  half.col(1) = 1 - truth.col(1).array();
  CHECK(macro_f(half, truth) == 0.5);
  const LabelMatrix empty = LabelMatrix::Zero(4, 1);
  CHECK(per_label_f1(empty, empty)(0) == 0.0);
}

TEST_CASE("macro auc") {
  CHECK(macro_auc((Matrix(2, 1) << 0.9, 0.1).finished(), (LabelMatrix(2, 1) << 1, 0).finished()) == 1.0);
  CHECK(macro_auc((Matrix(2, 1) << 0.4, 0.4).finished(), (LabelMatrix(2, 1) << 1, 0).finished()) == 0.5);
  CHECK(macro_auc((Matrix(4, 1) << 0.8, 0.4, 0.6, 0.2).finished(),
                  (LabelMatrix(4, 1) << 1, 1, 0, 0).finished()) == 0.75);

  Matrix scores(4, 2);
  scores << 0.8, 0.1, 0.4, 0.2, 0.6, 0.3, 0.2, 0.4;
  LabelMatrix truth(4, 2);
  truth << 1, 1, 1, 1, 0, 1, 0, 1;
  const AucResult r = label_auc(scores, truth);
  CHECK(r.skipped == std::vector<std::size_t>{1});
  CHECK(std::isnan(r.per_label(1)));
  CHECK(r.macro == 0.75);
  CHECK_THROWS_AS(macro_auc(scores.col(1), truth.col(1)), UndefinedMetricError);

  Rng rng(3);
  Matrix s(12, 3);
  LabelMatrix t(12, 3);
  for (Index i = 0; i < 12; ++i) {
    for (Index j = 0; j < 3; ++j) {
      s(i, j) = rng.uniform01();
      t(i, j) = i % (j + 2) == 0 ? 1 : 0;
    }
  }
  const AucResult forward = label_auc(s, t);
  const AucResult flipped = label_auc(-s, t);
  for (Index j = 0; j < 3; ++j) {
    CHECK(flipped.per_label(j) == doctest::Approx(1.0 - forward.per_label(j)).epsilon(1e-12));
  }
}

TEST_CASE("ranking loss metric") {
  LabelMatrix truth(1, 3);
  truth << 1, 0, 0;
  CHECK(ranking_loss_metric((Matrix(1, 3) << 0.9, 0.5, 0.95).finished(), truth) == 0.5);
  CHECK(ranking_loss_metric((Matrix(1, 3) << 0.9, 0.5, 0.1).finished(), truth) == 0.0);
  CHECK(ranking_loss_metric(Matrix::Constant(1, 3, 0.3), truth) == 1.0);


  // Brute-force pair count with ties as half.
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 16;
    Matrix s(n, 1);
    LabelMatrix t(n, 1);
    for (Index i = 0; i < n; ++i) {
      s(i, 0) = std::round(rng.uniform01() * 8) / 8;
      t(i, 0) = i % 3 == 0 ? 1 : 0;
    }
    double wins = 0, pairs = 0;
    for (Index i = 0; i < n; ++i) {
      for (Index k = 0; k < n; ++k) {
        if (t(i, 0) == 1 && t(k, 0) == 0) {
          pairs += 1;
          wins += s(i, 0) > s(k, 0) ? 1.0 : s(i, 0) == s(k, 0) ? 0.5 : 0.0;
        }
      }
    }
    CHECK(macro_auc(s, t) == doctest::Approx(wins / pairs).epsilon(1e-12));
  }
}

TEST_CASE("evaluate oracle and anti-oracle") {
  LabelMatrix truth(4, 3);
  truth << 1, 0, 1, 0, 1, 1, 1, 1, 1, 0, 0, 1;
  const MultiLabelDataset test(Matrix::Zero(4, 1), truth);

  const Fixed oracle_model(truth.cast<double>(), truth);
  const EvalReport good = evaluate(oracle_model, test);
  CHECK(good.macro_f == 1.0);
  CHECK(good.macro_auc == 1.0);
  CHECK(good.ranking_loss == 0.0);
  CHECK(good.skipped_labels == std::vector<std::size_t>{2});

  const LabelMatrix inverted = 1 - truth.array();
  const Fixed anti(inverted.cast<double>(), inverted);
  const EvalReport bad = evaluate(anti, test);
  CHECK(bad.macro_f == 0.0);
  CHECK(bad.ranking_loss == 1.0);

  CHECK(std::abs(good.macro_f - good.per_label_f.mean()) <= 1e-12);
  const auto j = good.to_json({"a", "b", "c"});
  CHECK(j.at("per_label_auc").at(2).is_null());
}
