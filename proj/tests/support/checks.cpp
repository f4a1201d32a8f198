#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mlbalance/aemlo.hpp"
#include "mlbalance/random.hpp"

namespace checks {

using namespace mlbalance;

namespace {

using Real = long double;
using MatrixL = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using VectorL = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

MatrixL affine(const DenseLayer& layer, const MatrixL& input) {
  MatrixL out = layer.weights.cast<Real>() * input;
  out.colwise() += layer.bias.cast<Real>();
  return out;
}

MatrixL leaky(const MatrixL& x, Real slope) {
  return x.unaryExpr([slope](Real v) { return v >= 0 ? v : slope * v; });
}

// Smallest |pre-activation| over both hidden layers of an encoder.
Real kink_margin(const DenseLayer (&layers)[2], const MatrixL& input, Real slope) {
  const MatrixL pre0 = affine(layers[0], input);
  const MatrixL pre1 = affine(layers[1], leaky(pre0, slope));
  return std::min(pre0.cwiseAbs().minCoeff(), pre1.cwiseAbs().minCoeff());
}

// Every loss term from the encodings and decoder outputs, in extended precision.
VectorL terms_extended(const MatrixL& x, const MatrixL& y, const MatrixL& zx, const MatrixL& zy,
                       const MatrixL& xrec, const MatrixL& logits, const TrainConfig& cfg) {
  const Index l = zx.rows(), b = x.cols();
  const MatrixL eye = MatrixL::Identity(l, l);
  const Real phi = (zx - zy).squaredNorm() +
                   Real(cfg.lambda_ortho) * ((zx * zx.transpose() - eye).squaredNorm() +
                                             (zy * zy.transpose() - eye).squaredNorm());
  const Real recon = (xrec - x).squaredNorm();
  Real sim = 0;
  for (Index i = 0; i < b; ++i) {
    for (Index j = 0; j < b; ++j) {
      if (i == j) continue;
      const Real gap = (x.col(i) - x.col(j)).squaredNorm() - (xrec.col(i) - xrec.col(j)).squaredNorm();
      sim += gap * gap;
    }
  }
  sim /= Real(b * (b - 1));
  Real label = 0;
  for (Index i = 0; i < b; ++i) {
    Real sum = 0, pairs = 0;
    for (Index j = 0; j < y.rows(); ++j) {
      for (Index k = 0; k < y.rows(); ++k) {
        if (y(j, i) == 1 && y(k, i) == 0) {
          sum += std::exp(logits(k, i) - logits(j, i));
          pairs += 1;
        }
      }
    }
    if (pairs > 0) label += sum / pairs;
  }
  VectorL out(5);
  out << phi, recon, sim, label,
      phi + Real(cfg.alpha) * (recon + Real(cfg.lambda_sim) * sim) + Real(cfg.beta) * label;
  return out;
}

// One encoder evaluated at the base parameters. A single perturbed entry is propagated as a
// row update instead of a full forward pass.
struct Branch {
  const DenseLayer* layers;
  MatrixL input, pre0, act0, pre1, w1;
  Real slope;

  Branch(const DenseLayer (&l)[2], const MatrixL& in, Real s)
      : layers(l), input(in), pre0(affine(l[0], in)), act0(leaky(pre0, s)),
        pre1(affine(l[1], act0)), w1(l[1].weights.cast<Real>()), slope(s) {}

  MatrixL encoding() const { return leaky(pre1, slope); }

  // array: 0 first weights, 1 first bias, 2 second weights, 3 second bias.
  MatrixL encoding(int array, Index entry, Real delta) const {
    MatrixL pre = pre1;
    if (array <= 1) {
      const Index h = array == 0 ? entry % pre0.rows() : entry;
      VectorL row = pre0.row(h).transpose();
      if (array == 0) {
        row += delta * input.row(entry / pre0.rows()).transpose();
      } else {
        row.array() += delta;
      }
      const VectorL change = leaky(row, slope) - act0.row(h).transpose();
      pre += w1.col(h) * change.transpose();
    } else if (array == 2) {
      pre.row(entry % pre1.rows()) += delta * act0.row(entry / pre1.rows());
    } else {
      pre.row(entry).array() += delta;
    }
    return leaky(pre, slope);
  }
};

// Loss terms for a model that differs from a saved copy in at most one parameter entry.
class PerturbedLoss {
 public:
  PerturbedLoss(AemloModel& model, const MatrixL& x, const MatrixL& y, const TrainConfig& cfg)
      : model_(model), params_(model.parameters()), x_(x), y_(y), cfg_(cfg),
        feature_(model.feature_encoder, x, cfg.leaky_slope),
        label_(model.label_encoder, y, cfg.leaky_slope) {
    for (const auto& p : params_) saved_.emplace_back(p.begin(), p.end());
    base_ = evaluate();
  }

  // Offsets from the unperturbed loss, so that narrowing to double keeps the digits a central
  // difference needs.
  Eigen::VectorXd operator()() const {
    const VectorL shifted = evaluate() - base_;
    return shifted.cast<double>();
  }

 private:
  VectorL evaluate() const {
    std::size_t array = params_.size();
    Index entry = 0;
    // The checker walks the entries in order, so the previous hit or its successor is tried
    // before a full scan.
    for (std::size_t step = 0; step < 2 && array == params_.size(); ++step) {
      std::size_t k = hint_array_, i = hint_entry_ + step;
      if (k < params_.size() && i >= params_[k].size()) {
        ++k;
        i = 0;
      }
      if (k < params_.size() && params_[k][i] != saved_[k][i]) {
        array = k;
        entry = static_cast<Index>(i);
      }
    }
    if (array == params_.size()) {
      for (std::size_t k = 0; k < params_.size(); ++k) {
        for (std::size_t i = 0; i < params_[k].size(); ++i) {
          if (params_[k][i] == saved_[k][i]) continue;
          if (array != params_.size()) throw std::logic_error("more than one parameter changed");
          array = k;
          entry = static_cast<Index>(i);
        }
      }
    }
    if (array != params_.size()) {
      hint_array_ = array;
      hint_entry_ = static_cast<std::size_t>(entry);
    }
    const Real delta =
        array == params_.size()
            ? Real(0)
            : Real(params_[array][static_cast<std::size_t>(entry)]) -
                  Real(saved_[array][static_cast<std::size_t>(entry)]);
    // parameters(): feature encoder (0..3), label encoder (4..7), decoders (8..11).
    const auto a = static_cast<int>(array);
    const MatrixL zx = a < 4 ? feature_.encoding(a, entry, delta) : feature_.encoding();
    const MatrixL zy = a >= 4 && a < 8 ? label_.encoding(a - 4, entry, delta) : label_.encoding();
    const MatrixL xrec = affine(model_.feature_decoder, zx);
    const MatrixL logits = affine(model_.label_decoder, zy);
    return terms_extended(x_, y_, zx, zy, xrec, logits, cfg_);
  }

  AemloModel& model_;
  ParamRefs params_;
  std::vector<std::vector<double>> saved_;
  MatrixL x_, y_;
  TrainConfig cfg_;
  Branch feature_, label_;
  VectorL base_;
  mutable std::size_t hint_array_ = 0, hint_entry_ = 0;
};

}  // namespace

Eigen::VectorXd gradient_errors(std::uint64_t seed, double epsilon) {
  const Index b = 8, d = 10, q = 5;
  Rng rng(seed);
  TrainConfig cfg;
  cfg.latent_dim = 4;
  cfg.batch_size = static_cast<int>(b);
  cfg.seed = seed;
  cfg.alpha = std::exp2(rng.uniform(-4.0, 4.0));
  cfg.beta = std::exp2(rng.uniform(-4.0, 4.0));
  cfg.lambda_ortho = rng.uniform(0.5, 2.0);
  cfg.lambda_sim = rng.uniform(0.5, 2.0);
  // Features in [0, 1], as after normalization.
  Eigen::MatrixXd xb(d, b);
  for (Index c = 0; c < b; ++c) {
    for (Index r = 0; r < d; ++r) xb(r, c) = rng.uniform01();
  }
  // Every instance gets at least one positive and one negative label.
  Eigen::MatrixXd yb = Eigen::MatrixXd::Zero(q, b);
  for (Index c = 0; c < b; ++c) {
    const auto pos = static_cast<Index>(rng.uniform_index(q));
    auto neg = static_cast<Index>(rng.uniform_index(q - 1));
    if (neg >= pos) ++neg;
    yb(pos, c) = 1.0;
    for (Index r = 0; r < q; ++r) {
      if (r != pos && r != neg && rng.uniform01() < 0.4) yb(r, c) = 1.0;
    }
  }

  const MatrixL x = xb.cast<Real>();
  const MatrixL y = yb.cast<Real>();

  // Leaky ReLU has no derivative at zero. Initializations that put any pre-activation within
  // reach of a finite-difference step are redrawn.
  const Real margin = 4 * Real(epsilon);
  AemloModel model;
  for (;;) {
    cfg.seed = rng.next();
    model = AemloModel::initialize(d, q, cfg);
    if (kink_margin(model.feature_encoder, x, cfg.leaky_slope) > margin &&
        kink_margin(model.label_encoder, y, cfg.leaky_slope) > margin) {
      break;
    }
  }

  const LossWeights total = LossWeights::from_config(cfg);
  const LossWeights terms[5] = {
      {1.0, 0.0, 0.0, 0.0, cfg.lambda_ortho},
      {0.0, 1.0, 0.0, 0.0, cfg.lambda_ortho},
      {0.0, 0.0, 1.0, 0.0, cfg.lambda_ortho},
      {0.0, 0.0, 0.0, 1.0, cfg.lambda_ortho},
      total,
  };
  std::vector<ParamGradients> analytic;
  for (const auto& w : terms) analytic.push_back(loss_gradients(model, xb, yb, w).gradients);

  const PerturbedLoss losses(model, x, y, cfg);
  return grad_check_many(std::cref(losses), model.parameters(), analytic, epsilon);
}

}  // namespace checks
