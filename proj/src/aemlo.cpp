#include "mlbalance/aemlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mlbalance/error.hpp"
#include "mlbalance/random.hpp"

namespace mlbalance {

TrainConfig TrainConfig::resolved(Index num_train, Index num_labels) const {
  TrainConfig out = *this;
  if (num_train > 0 && out.batch_size > num_train) out.batch_size = static_cast<int>(num_train);
  if (out.latent_dim == 0) {
    out.latent_dim =
        static_cast<int>(std::min<Index>({Index{32}, num_labels, Index{out.batch_size}}));
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("alpha and beta must be positive");
  if (!(lambda_ortho >= 0.0) || !(lambda_sim >= 0.0)) {
    throw ConfigError("lambda values must be non-negative");
  }
  if (latent_dim < 1) throw ConfigError("latent dimension must be at least 1");
  if (hidden_units < 1) throw ConfigError("hidden units must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (latent_dim > batch_size) {
    throw ConfigError("latent dimension " + std::to_string(latent_dim) + " exceeds batch size " +
                      std::to_string(batch_size));
  }
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(leaky_slope >= 0.0)) throw ConfigError("leaky slope must be non-negative");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"alpha", alpha},           {"beta", beta},
          {"lambda_ortho", lambda_ortho}, {"lambda_sim", lambda_sim},
          {"latent_dim", latent_dim}, {"hidden_units", hidden_units},
          {"epochs", epochs},         {"batch_size", batch_size},
          {"lr", lr},                 {"leaky_slope", leaky_slope},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.lambda_ortho = j.value("lambda_ortho", c.lambda_ortho);
  c.lambda_sim = j.value("lambda_sim", c.lambda_sim);
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.seed = j.value("seed", c.seed);
  return c;
}

AemloModel AemloModel::initialize(Index num_features, Index num_labels,
                                  const TrainConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, "init"));
  const Index hidden = config.hidden_units;
  const Index latent = config.latent_dim;
  AemloModel m;
  m.feature_encoder[0] = init_params(num_features, hidden, rng);
  m.feature_encoder[1] = init_params(hidden, latent, rng);
  m.label_encoder[0] = init_params(num_labels, hidden, rng);
  m.label_encoder[1] = init_params(hidden, latent, rng);
  m.feature_decoder = init_params(latent, num_features, rng);
  m.label_decoder = init_params(latent, num_labels, rng);
  m.thresholds = Eigen::VectorXd::Constant(num_labels, 0.5);
  m.scaler = FeatureScaler::identity(num_features);
  m.config = config;
  return m;
}

ParamRefs AemloModel::parameters() {
  ParamRefs refs;
  auto add = [&refs](DenseLayer& layer) {
    refs.emplace_back(layer.weights.data(), static_cast<std::size_t>(layer.weights.size()));
    refs.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  };
  add(feature_encoder[0]);
  add(feature_encoder[1]);
  add(label_encoder[0]);
  add(label_encoder[1]);
  add(feature_decoder);
  add(label_decoder);
  return refs;
}

void AemloModel::validate() const {
  const Index d = feature_encoder[0].in();
  const Index q = label_encoder[0].in();
  const Index l = feature_encoder[1].out();
  auto consistent = [](const DenseLayer& layer) { return layer.bias.size() == layer.out(); };
  const bool ok = consistent(feature_encoder[0]) && consistent(feature_encoder[1]) &&
                  consistent(label_encoder[0]) && consistent(label_encoder[1]) &&
                  consistent(feature_decoder) && consistent(label_decoder) &&
                  feature_encoder[1].in() == feature_encoder[0].out() &&
                  label_encoder[1].in() == label_encoder[0].out() &&
                  label_encoder[1].out() == l && feature_decoder.in() == l &&
                  feature_decoder.out() == d && label_decoder.in() == l &&
                  label_decoder.out() == q && thresholds.size() == q && scaler.size() == d;
  if (!ok) throw SchemaError("model layer shapes are inconsistent");
  for (Index j = 0; j < thresholds.size(); ++j) {
    if (!(thresholds[j] > 0.0 && thresholds[j] < 1.0)) {
      throw ValidationError("threshold for label " + std::to_string(j) + " is outside (0, 1)");
    }
  }
  if (static_cast<Index>(feature_names.size()) != d ||
      static_cast<Index>(label_names.size()) != q) {
    throw SchemaError("model name lists do not match its dimensions");
  }
}

namespace {

struct EncoderCache {
  Eigen::MatrixXd pre0;  // first layer pre-activation
  Eigen::MatrixXd act0;
  Eigen::MatrixXd pre1;
  Eigen::MatrixXd out;
};

EncoderCache encode(const DenseLayer (&layers)[2], const Eigen::MatrixXd& input, double slope) {
  EncoderCache c;
  c.pre0 = dense_forward(layers[0], input);
  c.act0 = leaky_relu(c.pre0, slope);
  c.pre1 = dense_forward(layers[1], c.act0);
  c.out = leaky_relu(c.pre1, slope);
  return c;
}

void encode_backward(const DenseLayer (&layers)[2], const Eigen::MatrixXd& input,
                     const EncoderCache& c, const Eigen::MatrixXd& grad_out, double slope,
                     DenseGradient (&grads)[2]) {
  const Eigen::MatrixXd d_pre1 =
      grad_out.cwiseProduct(leaky_relu_derivative(c.pre1, slope));
  const Eigen::MatrixXd d_act0 = dense_backward(layers[1], c.act0, d_pre1, grads[1]);
  const Eigen::MatrixXd d_pre0 = d_act0.cwiseProduct(leaky_relu_derivative(c.pre0, slope));
  dense_backward(layers[0], input, d_pre0, grads[0]);
}

void check_batch(const AemloModel& model, const Eigen::MatrixXd& xb, const Eigen::MatrixXd& yb) {
  if (xb.cols() < 1 || xb.cols() != yb.cols()) {
    throw DimensionError("feature and label batches need the same positive column count");
  }
  if (xb.rows() != model.num_features() || yb.rows() != model.num_labels()) {
    throw DimensionError("batch row counts do not match the model (d=" +
                         std::to_string(model.num_features()) +
                         ", q=" + std::to_string(model.num_labels()) + ")");
  }
}

// Squared Euclidean distances between columns; exact zeros on the diagonal.
Eigen::MatrixXd pairwise_sq_distances(const Eigen::MatrixXd& x) {
  const Index b = x.cols();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(b, b);
  for (Index i = 0; i < b; ++i) {
    for (Index j = i + 1; j < b; ++j) {
      const double v = (x.col(i) - x.col(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": operands have different shapes");
  }
}

template <typename Fn>
void for_each_ranked_instance(const Eigen::MatrixXd& yb, Fn&& fn) {
  std::vector<Index> pos;
  std::vector<Index> neg;
  for (Index i = 0; i < yb.cols(); ++i) {
    pos.clear();
    neg.clear();
    for (Index j = 0; j < yb.rows(); ++j) (yb(j, i) > 0.5 ? pos : neg).push_back(j);
    if (!pos.empty() && !neg.empty()) fn(i, pos, neg);
  }
}

}  // namespace

ForwardOutputs forward(const AemloModel& model, const Eigen::MatrixXd& xb,
                       const Eigen::MatrixXd& yb) {
  check_batch(model, xb, yb);
  const double slope = model.config.leaky_slope;
  ForwardOutputs out;
  out.zx = encode(model.feature_encoder, xb, slope).out;
  out.zy = encode(model.label_encoder, yb, slope).out;
  out.xrec = dense_forward(model.feature_decoder, out.zx);
  out.ylogits = dense_forward(model.label_decoder, out.zy);
  out.yscores = sigmoid(out.ylogits);
  return out;
}

double loss_embedding(const Eigen::MatrixXd& zx, const Eigen::MatrixXd& zy, double lambda_ortho) {
  check_same_shape(zx, zy, "loss_embedding");
  const Index l = zx.rows();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(l, l);
  const double c1 = (zx - zy).squaredNorm();
  const double c2 = (zx * zx.transpose() - identity).squaredNorm();
  const double c3 = (zy * zy.transpose() - identity).squaredNorm();
  return c1 + lambda_ortho * (c2 + c3);
}

double loss_reconstruction(const Eigen::MatrixXd& xb, const Eigen::MatrixXd& xrec) {
  check_same_shape(xb, xrec, "loss_reconstruction");
  return (xrec - xb).squaredNorm();
}

double loss_similarity(const Eigen::MatrixXd& xb, const Eigen::MatrixXd& xrec) {
  check_same_shape(xb, xrec, "loss_similarity");
  const Index b = xb.cols();
  if (b < 2) return 0.0;
  const Eigen::MatrixXd gap = pairwise_sq_distances(xb) - pairwise_sq_distances(xrec);
  return gap.squaredNorm() / static_cast<double>(b * (b - 1));
}

double loss_feature(const Eigen::MatrixXd& xb, const Eigen::MatrixXd& xrec, double lambda_sim) {
  return loss_reconstruction(xb, xrec) + lambda_sim * loss_similarity(xb, xrec);
}

double loss_label_surrogate(const Eigen::MatrixXd& ylogits, const Eigen::MatrixXd& yb) {
  check_same_shape(ylogits, yb, "loss_label_surrogate");
  double total = 0.0;
  for_each_ranked_instance(yb, [&](Index i, const std::vector<Index>& pos,
                                   const std::vector<Index>& neg) {
    double sum = 0.0;
    for (Index j : pos) {
      for (Index k : neg) sum += std::exp(ylogits(k, i) - ylogits(j, i));
    }
    total += sum / static_cast<double>(pos.size() * neg.size());
  });
  return total;
}

double ranking_loss_exact(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& yb) {
  check_same_shape(scores, yb, "ranking_loss_exact");
  double total = 0.0;
  long long counted = 0;
  for_each_ranked_instance(yb, [&](Index i, const std::vector<Index>& pos,
                                   const std::vector<Index>& neg) {
    long long discordant = 0;
    for (Index j : pos) {
      for (Index k : neg) {
        if (scores(j, i) <= scores(k, i)) ++discordant;
      }
    }
    total += static_cast<double>(discordant) / static_cast<double>(pos.size() * neg.size());
    ++counted;
  });
  if (counted == 0) {
    throw UndefinedMetricError("ranking loss undefined: no instance has both positive and "
                               "negative labels");
  }
  return total / static_cast<double>(counted);
}

LossWeights LossWeights::from_config(const TrainConfig& config) {
  return {1.0, config.alpha, config.alpha * config.lambda_sim, config.beta, config.lambda_ortho};
}

LossBreakdown total_loss(const AemloModel& model, const Eigen::MatrixXd& xb,
                         const Eigen::MatrixXd& yb, const TrainConfig& config) {
  const ForwardOutputs f = forward(model, xb, yb);
  LossBreakdown out;
  out.embedding = loss_embedding(f.zx, f.zy, config.lambda_ortho);
  out.reconstruction = loss_reconstruction(xb, f.xrec);
  out.similarity = loss_similarity(xb, f.xrec);
  out.label = loss_label_surrogate(f.ylogits, yb);
  out.total = out.embedding + config.alpha * out.feature(config.lambda_sim) +
              config.beta * out.label;
  return out;
}

double weighted_loss(const AemloModel& model, const Eigen::MatrixXd& xb,
                     const Eigen::MatrixXd& yb, const LossWeights& w) {
  const ForwardOutputs f = forward(model, xb, yb);
  double total = 0.0;
  if (w.embedding != 0.0) total += w.embedding * loss_embedding(f.zx, f.zy, w.lambda_ortho);
  if (w.reconstruction != 0.0) total += w.reconstruction * loss_reconstruction(xb, f.xrec);
  if (w.similarity != 0.0) total += w.similarity * loss_similarity(xb, f.xrec);
  if (w.label != 0.0) total += w.label * loss_label_surrogate(f.ylogits, yb);
  return total;
}

LossAndGradients loss_gradients(const AemloModel& model, const Eigen::MatrixXd& xb,
                                const Eigen::MatrixXd& yb, const LossWeights& w) {
  check_batch(model, xb, yb);
  const double slope = model.config.leaky_slope;
  const Index b = xb.cols();
  const Index l = model.latent_dim();

  const EncoderCache ex = encode(model.feature_encoder, xb, slope);
  const EncoderCache ey = encode(model.label_encoder, yb, slope);
  const Eigen::MatrixXd& zx = ex.out;
  const Eigen::MatrixXd& zy = ey.out;
  const Eigen::MatrixXd xrec = dense_forward(model.feature_decoder, zx);
  const Eigen::MatrixXd ylogits = dense_forward(model.label_decoder, zy);

  LossAndGradients result;
  LossBreakdown& loss = result.loss;

  // Embedding term.
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(l, l);
  const Eigen::MatrixXd c1 = zx - zy;
  const Eigen::MatrixXd c2 = zx * zx.transpose() - identity;
  const Eigen::MatrixXd c3 = zy * zy.transpose() - identity;
  loss.embedding = c1.squaredNorm() + w.lambda_ortho * (c2.squaredNorm() + c3.squaredNorm());
  Eigen::MatrixXd d_zx = w.embedding * (2.0 * c1 + 4.0 * w.lambda_ortho * c2 * zx);
  Eigen::MatrixXd d_zy = w.embedding * (-2.0 * c1 + 4.0 * w.lambda_ortho * c3 * zy);

  // Feature terms.
  loss.reconstruction = (xrec - xb).squaredNorm();
  Eigen::MatrixXd d_xrec = w.reconstruction * 2.0 * (xrec - xb);
  if (b >= 2) {
    const Eigen::MatrixXd gap = pairwise_sq_distances(xb) - pairwise_sq_distances(xrec);
    const double scale = 1.0 / static_cast<double>(b * (b - 1));
    loss.similarity = gap.squaredNorm() * scale;
    if (w.similarity != 0.0) {
      // dS/dx'_m = -8 scale sum_j gap_mj (x'_m - x'_j)
      const Eigen::VectorXd row_sums = gap.rowwise().sum();
      d_xrec += w.similarity * (-8.0 * scale) *
                (xrec * row_sums.asDiagonal() - xrec * gap);
    }
  }

  // Label ranking surrogate.
  Eigen::MatrixXd d_logits = Eigen::MatrixXd::Zero(ylogits.rows(), b);
  for_each_ranked_instance(yb, [&](Index i, const std::vector<Index>& pos,
                                   const std::vector<Index>& neg) {
    const double norm = static_cast<double>(pos.size() * neg.size());
    double sum = 0.0;
    for (Index j : pos) {
      for (Index k : neg) {
        const double e = std::exp(ylogits(k, i) - ylogits(j, i));
        sum += e;
        d_logits(k, i) += w.label * e / norm;
        d_logits(j, i) -= w.label * e / norm;
      }
    }
    loss.label += sum / norm;
  });

  loss.total = w.embedding * loss.embedding + w.reconstruction * loss.reconstruction +
               w.similarity * loss.similarity + w.label * loss.label;

  DenseGradient g_fex[2] = {DenseGradient::zeros_like(model.feature_encoder[0]),
                            DenseGradient::zeros_like(model.feature_encoder[1])};
  DenseGradient g_fey[2] = {DenseGradient::zeros_like(model.label_encoder[0]),
                            DenseGradient::zeros_like(model.label_encoder[1])};
  DenseGradient g_fdx = DenseGradient::zeros_like(model.feature_decoder);
  DenseGradient g_fdy = DenseGradient::zeros_like(model.label_decoder);

  d_zx += dense_backward(model.feature_decoder, zx, d_xrec, g_fdx);
  d_zy += dense_backward(model.label_decoder, zy, d_logits, g_fdy);
  encode_backward(model.feature_encoder, xb, ex, d_zx, slope, g_fex);
  encode_backward(model.label_encoder, yb, ey, d_zy, slope, g_fey);

  auto flat = [](const Eigen::MatrixXd& m) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
  };
  for (const DenseGradient* g : {&g_fex[0], &g_fex[1], &g_fey[0], &g_fey[1], &g_fdx, &g_fdy}) {
    result.gradients.arrays.push_back(flat(g->weights));
    result.gradients.arrays.push_back(g->bias);
  }
  return result;
}

namespace {

Eigen::MatrixXd label_batch(const LabelMatrix& labels, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(labels.cols(), static_cast<Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    out.col(static_cast<Index>(c)) =
        labels.row(static_cast<Index>(rows[c])).transpose().cast<double>();
  }
  return out;
}

Eigen::MatrixXd feature_batch(const Matrix& features, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(features.cols(), static_cast<Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    out.col(static_cast<Index>(c)) = features.row(static_cast<Index>(rows[c])).transpose();
  }
  return out;
}

double mean_f1(const Eigen::MatrixXd& scores, const LabelMatrix& truth,
               const Eigen::VectorXd& thresholds) {
  double sum = 0.0;
  for (Index j = 0; j < truth.cols(); ++j) {
    sum += f1_score(scores.col(j), truth, j, thresholds[j]);
  }
  return sum / static_cast<double>(truth.cols());
}

}  // namespace

TrainResult train(const MultiLabelDataset& train_set, const MultiLabelDataset& validation_set,
                  const TrainConfig& config, const FeatureScaler& scaler) {
  if (!train_set.same_schema(validation_set)) {
    throw SchemaError("training and validation sets have different schemas");
  }
  if (scaler.size() != train_set.num_features()) {
    throw DimensionError("scaler width does not match the feature count");
  }
  const Index n = train_set.num_instances();
  const TrainConfig cfg = config.resolved(n, train_set.num_labels());
  cfg.validate();

  TrainResult result{AemloModel::initialize(train_set.num_features(), train_set.num_labels(), cfg),
                     {}};
  AemloModel& model = result.model;
  model.scaler = scaler;
  model.feature_names = train_set.feature_names();
  model.label_names = train_set.label_names();

  const LossWeights weights = LossWeights::from_config(cfg);
  std::vector<Index> sizes;
  for (const auto& p : model.parameters()) sizes.push_back(static_cast<Index>(p.size()));
  AdamState adam(AdamOptions{cfg.lr, 0.9, 0.999, 1e-8}, sizes);

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const Matrix val_features = validation_set.features();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    EpochLog log;
    log.epoch = epoch;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      if (static_cast<int>(end - start) < cfg.latent_dim) break;
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      const Eigen::MatrixXd xb = feature_batch(train_set.features(), rows);
      const Eigen::MatrixXd yb = label_batch(train_set.labels(), rows);
      LossAndGradients lg = loss_gradients(model, xb, yb, weights);
      if (!std::isfinite(lg.loss.total) || !lg.gradients.all_finite()) {
        throw DivergedTrainingError(epoch, batches + 1);
      }
      adam = adam_step(std::move(adam), model.parameters(), lg.gradients);
      log.embedding += lg.loss.embedding;
      log.feature += lg.loss.feature(cfg.lambda_sim);
      log.label += lg.loss.label;
      log.total += lg.loss.total;
      ++batches;
    }
    if (batches > 0) {
      log.embedding /= batches;
      log.feature /= batches;
      log.label /= batches;
      log.total /= batches;
    }
    const Eigen::MatrixXd val_scores = cross_modal_scores(model, val_features);
    model.thresholds = select_thresholds(val_scores, validation_set.labels());
    log.mean_val_f1 = mean_f1(val_scores, validation_set.labels(), model.thresholds);
    result.history.push_back(log);
  }
  return result;
}

TrainResult train(const MultiLabelDataset& train_set, const MultiLabelDataset& validation_set,
                  const TrainConfig& config) {
  return train(train_set, validation_set, config,
               FeatureScaler::identity(train_set.num_features()));
}

Eigen::MatrixXd cross_modal_scores(const AemloModel& model, const Matrix& features) {
  if (features.cols() != model.num_features()) {
    throw DimensionError("feature width does not match the model");
  }
  const Eigen::MatrixXd x = features.transpose();
  const Eigen::MatrixXd z = encode(model.feature_encoder, x, model.config.leaky_slope).out;
  return sigmoid(dense_forward(model.label_decoder, z)).transpose();
}

Eigen::MatrixXd reconstruct_features(const AemloModel& model, const Matrix& features) {
  if (features.cols() != model.num_features()) {
    throw DimensionError("feature width does not match the model");
  }
  const Eigen::MatrixXd x = features.transpose();
  const Eigen::MatrixXd z = encode(model.feature_encoder, x, model.config.leaky_slope).out;
  return dense_forward(model.feature_decoder, z).transpose();
}

double f1_score(const Eigen::VectorXd& scores, const LabelMatrix& truth, Index label,
                double threshold) {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  for (Index i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = truth(i, label) == 1;
    tp += predicted && actual;
    fp += predicted && !actual;
    fn += !predicted && actual;
  }
  const long long denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

Eigen::VectorXd select_thresholds(const Eigen::MatrixXd& scores, const LabelMatrix& truth) {
  if (scores.rows() != truth.rows() || scores.cols() != truth.cols()) {
    throw DimensionError("score and truth matrices differ in shape");
  }
  const Index n = scores.rows();
  const Index q = scores.cols();
  Eigen::VectorXd thresholds = Eigen::VectorXd::Constant(q, 0.5);
  std::vector<std::pair<double, int>> sorted(static_cast<std::size_t>(n));
  for (Index j = 0; j < q; ++j) {
    long long positives = 0;
    for (Index i = 0; i < n; ++i) {
      sorted[static_cast<std::size_t>(i)] = {scores(i, j), truth(i, j)};
      positives += truth(i, j);
    }
    if (positives == 0) continue;
    std::sort(sorted.begin(), sorted.end());

    // Distinct values ascending, with counts of (predicted, true) positives at score >= value.
    std::vector<double> values;
    std::vector<long long> at_or_above;
    std::vector<long long> tp_at_or_above;
    long long predicted = 0;
    long long tp = 0;
    for (std::size_t k = sorted.size(); k-- > 0;) {
      predicted += 1;
      tp += sorted[k].second;
      if (k == 0 || sorted[k - 1].first != sorted[k].first) {
        values.push_back(sorted[k].first);
        at_or_above.push_back(predicted);
        tp_at_or_above.push_back(tp);
      }
    }
    std::reverse(values.begin(), values.end());
    std::reverse(at_or_above.begin(), at_or_above.end());
    std::reverse(tp_at_or_above.begin(), tp_at_or_above.end());

    auto f1_of = [&](long long tp_count, long long predicted_count) {
      const long long denom = predicted_count + positives;
      return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp_count) / static_cast<double>(denom);
    };
    double best_t = 0.5;
    double best_f1 = -1.0;
    auto consider = [&](double t, double f1) {
      if (!(t > 0.0 && t < 1.0)) return;
      const bool better =
          f1 > best_f1 ||
          (f1 == best_f1 && (std::abs(t - 0.5) < std::abs(best_t - 0.5) ||
                             (std::abs(t - 0.5) == std::abs(best_t - 0.5) && t < best_t)));
      if (better) {
        best_t = t;
        best_f1 = f1;
      }
    };
    {
      auto it = std::lower_bound(values.begin(), values.end(), 0.5);
      const auto idx = static_cast<std::size_t>(it - values.begin());
      if (idx < values.size()) {
        consider(0.5, f1_of(tp_at_or_above[idx], at_or_above[idx]));
      } else {
        consider(0.5, f1_of(0, 0));
      }
    }
    for (std::size_t k = 1; k < values.size(); ++k) {
      consider(0.5 * (values[k - 1] + values[k]), f1_of(tp_at_or_above[k], at_or_above[k]));
    }
    thresholds[j] = best_t;
  }
  return thresholds;
}

Eigen::VectorXd calibrate_thresholds(const AemloModel& model,
                                     const MultiLabelDataset& validation_set) {
  return select_thresholds(cross_modal_scores(model, validation_set.features()),
                           validation_set.labels());
}

LabelVector binarize(const Eigen::VectorXd& scores, const Eigen::VectorXd& thresholds) {
  if (scores.size() != thresholds.size()) {
    throw DimensionError("score and threshold vectors differ in length");
  }
  LabelVector y(scores.size());
  for (Index j = 0; j < scores.size(); ++j) y[j] = scores[j] >= thresholds[j] ? 1 : 0;
  return y;
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

constexpr const char* kLayerNames[] = {"feature_encoder.0", "feature_encoder.1",
                                       "label_encoder.0",   "label_encoder.1",
                                       "feature_decoder",   "label_decoder"};

}  // namespace

nlohmann::json model_to_json(const AemloModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  const DenseLayer* all[] = {&model.feature_encoder[0], &model.feature_encoder[1],
                             &model.label_encoder[0],   &model.label_encoder[1],
                             &model.feature_decoder,    &model.label_decoder};
  for (std::size_t k = 0; k < 6; ++k) layers.push_back(layer_to_json(*all[k], kLayerNames[k]));
  return {{"format", "mlbalance.aemlo"},
          {"version", 1},
          {"config", model.config.to_json()},
          {"feature_names", model.feature_names},
          {"label_names", model.label_names},
          {"layers", std::move(layers)},
          {"thresholds", to_std(model.thresholds)},
          {"scaler", {{"min", to_std(model.scaler.min())}, {"max", to_std(model.scaler.max())}}}};
}

AemloModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "mlbalance.aemlo") {
    throw SchemaError("not an AEMLO model document");
  }
  if (j.value("version", 0) != 1) throw SchemaError("unsupported model version");
  AemloModel m;
  m.config = TrainConfig::from_json(j.at("config"));
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.label_names = j.at("label_names").get<std::vector<std::string>>();
  const auto& layers = j.at("layers");
  if (!layers.is_array() || layers.size() != 6) throw SchemaError("model needs six layers");
  DenseLayer* all[] = {&m.feature_encoder[0], &m.feature_encoder[1], &m.label_encoder[0],
                       &m.label_encoder[1],   &m.feature_decoder,    &m.label_decoder};
  for (std::size_t k = 0; k < 6; ++k) {
    if (layers[k].value("name", std::string()) != kLayerNames[k]) {
      throw SchemaError(std::string("expected layer '") + kLayerNames[k] + "'");
    }
    *all[k] = layer_from_json(layers[k]);
  }
  m.thresholds = from_std(j.at("thresholds").get<std::vector<double>>());
  m.scaler = FeatureScaler(from_std(j.at("scaler").at("min").get<std::vector<double>>()),
                           from_std(j.at("scaler").at("max").get<std::vector<double>>()));
  m.validate();
  return m;
}

std::string save_model(const AemloModel& model) { return model_to_json(model).dump(1) + "\n"; }

AemloModel load_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model JSON: ") + e.what(), 0);
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model JSON: ") + e.what());
  }
}

std::string loss_log_csv(const std::vector<EpochLog>& history) {
  std::string out = "epoch,phi,psi,gamma,total,mean_val_f1\n";
  char buf[256];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.embedding,
                  e.feature, e.label, e.total, e.mean_val_f1);
    out += buf;
  }
  return out;
}

}  // namespace mlbalance
