#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "mlbalance/aemlo.hpp"
#include "mlbalance/error.hpp"
#include "oracles.hpp"

using namespace mlbalance;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Index rows, Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.latent_dim = 2;
  cfg.hidden_units = 32;
  cfg.epochs = 5;
  cfg.batch_size = 16;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("embedding loss") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  CHECK(loss_embedding(eye, eye, 1.0) == 0.0);

  const Eigen::MatrixXd zx = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd zy(2, 2);
  zy << 0, 1, 1, 0;
  CHECK(loss_embedding(zx, zy, 1.0) == doctest::Approx(4.0).epsilon(1e-12));

  Rng rng(2);
  const Eigen::MatrixXd z = random_matrix(rng, 2, 5);
  const Eigen::MatrixXd gram = z * z.transpose() - Eigen::MatrixXd::Identity(2, 2);
  CHECK(loss_embedding(z, z, 0.7) == doctest::Approx(2 * 0.7 * (gram * gram).trace()));
}

TEST_CASE("feature loss") {
  Eigen::MatrixXd x(1, 2), xrec(1, 2);
  x << 0, 2;
  xrec << 0, 1;
  CHECK(loss_reconstruction(x, xrec) == 1.0);
  CHECK(loss_similarity(x, xrec) == 9.0);
  CHECK(loss_feature(x, xrec, 0.5) == doctest::Approx(1 + 9 * 0.5));

  Rng rng(5);
  const Eigen::MatrixXd xb = random_matrix(rng, 4, 6);
  CHECK(loss_feature(xb, xb, 1.0) == 0.0);
  const Eigen::VectorXd shift = random_matrix(rng, 4, 1);
  const Eigen::MatrixXd moved = xb.colwise() + shift;
  CHECK(loss_reconstruction(xb, moved) == doctest::Approx(6 * shift.squaredNorm()));
  CHECK(loss_similarity(xb, moved) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(loss_similarity(xb.leftCols(1), moved.leftCols(1)) == 0.0);
}

TEST_CASE("label surrogate and exact ranking loss") {
  Eigen::MatrixXd scores(3, 1), y(3, 1);
  scores << 1.0, 0.0, 2.0;
  y << 1, 0, 0;
  CHECK(loss_label_surrogate(scores, y) ==
        doctest::Approx((std::exp(-1.0) + std::exp(1.0)) / 2).epsilon(1e-12));

  Eigen::MatrixXd even(2, 1), one(2, 1);
  even << 0.3, 0.3;
  one << 1, 0;
  CHECK(loss_label_surrogate(even, one) == 1.0);
  Eigen::MatrixXd apart(2, 1);
  apart << 20.0, 0.0;
  CHECK(loss_label_surrogate(apart, one) < 1e-8);

  Eigen::MatrixXd probs(3, 1);
  probs << 0.9, 0.5, 0.95;
  CHECK(ranking_loss_exact(probs, y) == 0.5);
  CHECK(ranking_loss_exact(Eigen::MatrixXd::Constant(3, 1, 0.2), y) == 1.0);
  CHECK_THROWS_AS(ranking_loss_exact(probs, Eigen::MatrixXd::Ones(3, 1)), UndefinedMetricError);

  // A surrogate below e^-10 per pair forces every positive above every negative.
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd s = 8.0 * random_matrix(rng, 4, 3);
    Eigen::MatrixXd yb(4, 3);
    yb << 1, 0, 1, 0, 1, 1, 1, 0, 0, 0, 1, 0;
    double pairs = 0;
    for (Index i = 0; i < 3; ++i) {
      const double pos = yb.col(i).sum();
      pairs += pos * (4 - pos);
    }
    if (loss_label_surrogate(s, yb) < std::exp(-10.0) * pairs) {
      CHECK(ranking_loss_exact(s, yb) == 0.0);
    }
    if (ranking_loss_exact(s, yb) == 0.0) {
      for (Index i = 0; i < 3; ++i) {
        for (Index j = 0; j < 4; ++j) {
          for (Index k = 0; k < 4; ++k) {
            if (yb(j, i) == 1 && yb(k, i) == 0) CHECK(s(j, i) > s(k, i));
          }
        }
      }
    }
  }
}

TEST_CASE("total loss is the weighted sum of independent term values") {
  Rng rng(12);
  TrainConfig cfg;
  cfg.latent_dim = 4;
  cfg.hidden_units = 64;
  cfg.alpha = 0.5;
  cfg.beta = 3.0;
  cfg.lambda_ortho = 1.3;
  cfg.lambda_sim = 0.8;
  cfg.seed = 12;
  const AemloModel model = AemloModel::initialize(10, 5, cfg);
  const Eigen::MatrixXd xb = random_matrix(rng, 10, 8);
  Eigen::MatrixXd yb = Eigen::MatrixXd::Zero(5, 8);
  for (Index c = 0; c < 8; ++c) {
    yb(c % 5, c) = 1;
    yb((c + 2) % 5, c) = 1;
  }
  const ForwardOutputs f = forward(model, xb, yb);
  CHECK((f.yscores.array() > 0).all());
  CHECK((f.yscores.array() < 1).all());
  CHECK(f.zx.rows() == 4);
  CHECK(f.zx.cols() == 8);

  const double expected =
      oracle::embedding(f.zx, f.zy, 1.3) +
      0.5 * (oracle::reconstruction(xb, f.xrec) + 0.8 * oracle::similarity(xb, f.xrec)) +
      3.0 * oracle::surrogate(f.ylogits, yb);
  const LossBreakdown loss = total_loss(model, xb, yb, cfg);
  CHECK(std::abs(loss.total - expected) <= 1e-12 * std::abs(expected));

  TrainConfig doubled = cfg;
  doubled.alpha = 1.0;
  CHECK(total_loss(model, xb, yb, doubled).total - loss.total ==
        doctest::Approx(0.5 * loss.feature(0.8)));
  TrainConfig zero = cfg;
  zero.alpha = zero.beta = 0.0;
  CHECK(total_loss(model, xb, yb, zero).total == doctest::Approx(loss.embedding));

  CHECK(loss_gradients(model, xb, yb, LossWeights::from_config(cfg)).loss.total ==
        doctest::Approx(loss.total).epsilon(1e-12));
}

TEST_CASE("threshold selection") {
  Eigen::MatrixXd scores(3, 1);
  scores << 0.2, 0.6, 0.8;
  LabelMatrix truth(3, 1);
  truth << 0, 1, 1;
  CHECK(select_thresholds(scores, truth)(0) == 0.5);

  const LabelMatrix none = LabelMatrix::Zero(3, 1);
  CHECK(select_thresholds(scores, none)(0) == 0.5);

  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::MatrixXd s(25, 1);
    LabelMatrix t(25, 1);
    std::vector<double> sv;
    std::vector<int> tv;
    for (Index i = 0; i < 25; ++i) {
      s(i, 0) = std::round(rng.uniform01() * 20) / 20;
      t(i, 0) = rng.uniform01() < 0.3 ? 1 : 0;
      sv.push_back(s(i, 0));
      tv.push_back(t(i, 0));
    }
    const double chosen = select_thresholds(s, t)(0);
    CHECK(f1_score(s.col(0), t, 0, chosen) == doctest::Approx(oracle::best_f1(sv, tv)));
    CHECK(f1_score(s.col(0), t, 0, chosen) >= f1_score(s.col(0), t, 0, 0.5));
  }
}

TEST_CASE("binarize") {
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(2, 0.5);
  CHECK(binarize((Eigen::VectorXd(2) << 0.7, 0.3).finished(), half) ==
        (LabelVector(2) << 1, 0).finished());
  CHECK(binarize(half, half) == LabelVector::Ones(2));
  const Eigen::VectorXd high = Eigen::VectorXd::Constant(2, 1.0 - 1e-9);
  CHECK(binarize((Eigen::VectorXd(2) << 0.9, 0.99).finished(), high).isZero());
}

TEST_CASE("training is deterministic and serializes losslessly") {
  const auto [ds, scaler] = normalize_features(fixtures::toy_dataset());
  const auto s = split(ds, 0.25, 0.0, 1);
  const TrainConfig cfg = small_config(4).resolved(s.train.num_instances(), ds.num_labels());
  const TrainResult a = train(s.train, s.validation, cfg, scaler);
  const TrainResult b = train(s.train, s.validation, cfg, scaler);
  CHECK(save_model(a.model) == save_model(b.model));
  CHECK(a.history.size() == 5);
  CHECK(save_model(load_model(save_model(a.model))) == save_model(a.model));

  const std::string csv = loss_log_csv(a.history);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);

  TrainConfig other = cfg;
  other.seed = 5;
  CHECK(save_model(train(s.train, s.validation, other, scaler).model) != save_model(a.model));
}

TEST_CASE("config invariants") {
  TrainConfig cfg = small_config(1);
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.resolved(64, 4).validate(), ConfigError);
  TrainConfig wide = small_config(1);
  wide.latent_dim = 40;
  CHECK_THROWS_AS(wide.resolved(16, 4).validate(), ConfigError);
  const TrainConfig automatic = TrainConfig{}.resolved(20, 6);
  CHECK(automatic.batch_size == 20);
  CHECK(automatic.latent_dim == 6);
  CHECK(TrainConfig::from_json(automatic.to_json()).to_json() == automatic.to_json());
}
