#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlbalance/dataset.hpp"
#include "mlbalance/neural.hpp"

namespace mlbalance {

/// Hyperparameters of the encoder/decoder oversampler.
///
/// `latent_dim == 0` means "choose automatically": min(32, q, batch_size).
struct TrainConfig {
  double alpha = 1.0;         // weight of the feature reconstruction term
  double beta = 1.0;          // weight of the label ranking term
  double lambda_ortho = 1.0;  // orthonormality penalty inside the embedding term
  double lambda_sim = 1.0;    // pairwise-distance term inside the feature term
  int latent_dim = 0;
  int hidden_units = 512;
  int epochs = 100;
  int batch_size = 64;
  double lr = 1e-3;
  double leaky_slope = 0.01;
  std::uint64_t seed = 0;

  /// Caps the batch at the training size and fills in the latent dimension.
  TrainConfig resolved(Index num_train, Index num_labels) const;

  /// Throws ConfigError on violated invariants. Expects a resolved config.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// The four learned maps plus per-label bipartition thresholds.
///
/// feature_encoder: d -> hidden -> l, leaky ReLU after both layers
/// label_encoder:   q -> hidden -> l, leaky ReLU after both layers
/// feature_decoder: l -> d, linear
/// label_decoder:   l -> q, logits (sigmoid applied by callers that need probabilities)
struct AemloModel {
  DenseLayer feature_encoder[2];
  DenseLayer label_encoder[2];
  DenseLayer feature_decoder;
  DenseLayer label_decoder;
  Eigen::VectorXd thresholds;
  FeatureScaler scaler;
  TrainConfig config;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;

  /// Fresh model with Glorot-initialized layers and thresholds at 0.5. `config` must be
  /// resolved; initialization draws from the "init" sub-stream of config.seed.
  static AemloModel initialize(Index num_features, Index num_labels, const TrainConfig& config);

  Index num_features() const { return feature_decoder.out(); }
  Index num_labels() const { return label_decoder.out(); }
  Index latent_dim() const { return feature_decoder.in(); }

  /// Views of every weight and bias array in a fixed order (encoders, then decoders).
  ParamRefs parameters();

  /// Throws when layer shapes are inconsistent or a threshold is outside (0, 1).
  void validate() const;
};

/// Batch tensors are column-per-instance: X is d x b, Y is q x b.
struct ForwardOutputs {
  Eigen::MatrixXd zx;       // l x b, feature embedding
  Eigen::MatrixXd zy;       // l x b, label embedding
  Eigen::MatrixXd xrec;     // d x b, reconstructed features
  Eigen::MatrixXd ylogits;  // q x b, label decoder pre-activation
  Eigen::MatrixXd yscores;  // q x b, sigmoid(ylogits)
};

ForwardOutputs forward(const AemloModel& model, const Eigen::MatrixXd& xb,
                       const Eigen::MatrixXd& yb);

/// ||zx - zy||_F^2 + lambda (||zx zx^T - I||_F^2 + ||zy zy^T - I||_F^2).
double loss_embedding(const Eigen::MatrixXd& zx, const Eigen::MatrixXd& zy, double lambda_ortho);

/// Sum of squared reconstruction errors over the batch.
double loss_reconstruction(const Eigen::MatrixXd& xb, const Eigen::MatrixXd& xrec);

/// Mean over ordered pairs i != j of (|x_i - x_j|^2 - |x'_i - x'_j|^2)^2; 0 when b < 2.
double loss_similarity(const Eigen::MatrixXd& xb, const Eigen::MatrixXd& xrec);

/// loss_reconstruction + lambda_sim * loss_similarity.
double loss_feature(const Eigen::MatrixXd& xb, const Eigen::MatrixXd& xrec, double lambda_sim);

/// Smooth pairwise ranking loss on label logits:
///   sum_i 1/(|Y_i| |notY_i|) sum_{j in Y_i, k in notY_i} exp(s_ik - s_ij).
/// Instances without both a positive and a negative label contribute 0.
double loss_label_surrogate(const Eigen::MatrixXd& ylogits, const Eigen::MatrixXd& yb);

/// Mean fraction of (positive, negative) label pairs with score_pos <= score_neg. Instances
/// missing positives or negatives are skipped; throws UndefinedMetricError if all are.
double ranking_loss_exact(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& yb);

/// Multipliers of each raw term inside the total objective.
struct LossWeights {
  double embedding = 1.0;
  double reconstruction = 1.0;
  double similarity = 1.0;
  double label = 1.0;
  double lambda_ortho = 1.0;

  /// Phi + alpha (M + lambda_sim S) + beta Gamma.
  static LossWeights from_config(const TrainConfig& config);
};

struct LossBreakdown {
  double embedding = 0.0;       // Phi
  double reconstruction = 0.0;  // M
  double similarity = 0.0;      // S
  double label = 0.0;           // Gamma surrogate
  double total = 0.0;           // weighted sum

  /// Psi = M + lambda_sim S.
  double feature(double lambda_sim) const { return reconstruction + lambda_sim * similarity; }
};

LossBreakdown total_loss(const AemloModel& model, const Eigen::MatrixXd& xb,
                         const Eigen::MatrixXd& yb, const TrainConfig& config);

/// Weighted objective value under arbitrary term weights.
double weighted_loss(const AemloModel& model, const Eigen::MatrixXd& xb,
                     const Eigen::MatrixXd& yb, const LossWeights& weights);

struct LossAndGradients {
  LossBreakdown loss;
  ParamGradients gradients;  // same order as AemloModel::parameters()
};

/// Objective value and its exact gradient by reverse accumulation through the layers.
LossAndGradients loss_gradients(const AemloModel& model, const Eigen::MatrixXd& xb,
                                const Eigen::MatrixXd& yb, const LossWeights& weights);

struct EpochLog {
  int epoch = 0;
  double embedding = 0.0;
  double feature = 0.0;
  double label = 0.0;
  double total = 0.0;
  double mean_val_f1 = 0.0;
};

struct TrainResult {
  AemloModel model;
  std::vector<EpochLog> history;
};

/// Mini-batch Adam training on already-normalized data. Thresholds are recalibrated on the
/// validation set after every epoch. `scaler` is stored in the model so generation can map
/// instances back to the original feature scale.
TrainResult train(const MultiLabelDataset& train_set, const MultiLabelDataset& validation_set,
                  const TrainConfig& config, const FeatureScaler& scaler);

TrainResult train(const MultiLabelDataset& train_set, const MultiLabelDataset& validation_set,
                  const TrainConfig& config);

/// Cross-modal label probabilities sigmoid(label_decoder(feature_encoder(x))) for normalized
/// rows of `features` (n x d). Returns n x q.
Eigen::MatrixXd cross_modal_scores(const AemloModel& model, const Matrix& features);

/// feature_decoder(feature_encoder(x)) for normalized rows of `features`. Returns n x d.
Eigen::MatrixXd reconstruct_features(const AemloModel& model, const Matrix& features);

/// Per-label threshold maximizing F1 on the given scores (n x q) against truth. Candidates are
/// midpoints between consecutive distinct scores plus 0.5; ties prefer the candidate closest
/// to 0.5, then the smaller one. Labels without positives keep 0.5.
Eigen::VectorXd select_thresholds(const Eigen::MatrixXd& scores, const LabelMatrix& truth);

/// select_thresholds on the model's cross-modal scores for a normalized validation set.
Eigen::VectorXd calibrate_thresholds(const AemloModel& model,
                                     const MultiLabelDataset& validation_set);

/// 1 where score >= threshold.
LabelVector binarize(const Eigen::VectorXd& scores, const Eigen::VectorXd& thresholds);

/// Per-label F1 = 2TP / (2TP + FP + FN), 0 when the denominator is 0.
double f1_score(const Eigen::VectorXd& scores, const LabelMatrix& truth, Index label,
                double threshold);

nlohmann::json model_to_json(const AemloModel& model);
AemloModel model_from_json(const nlohmann::json& j);
std::string save_model(const AemloModel& model);
AemloModel load_model(const std::string& text);

/// "epoch,phi,psi,gamma,total,mean_val_f1" rows.
std::string loss_log_csv(const std::vector<EpochLog>& history);

}  // namespace mlbalance
