#include "mlbalance/neural.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mlbalance/error.hpp"

namespace mlbalance {

DenseGradient DenseGradient::zeros_like(const DenseLayer& layer) {
  return {Eigen::MatrixXd::Zero(layer.out(), layer.in()), Eigen::VectorXd::Zero(layer.out())};
}

Eigen::MatrixXd dense_forward(const DenseLayer& layer, const Eigen::MatrixXd& input) {
  if (input.rows() != layer.in()) {
    throw DimensionError("dense layer expects " + std::to_string(layer.in()) +
                         " input rows, got " + std::to_string(input.rows()));
  }
  Eigen::MatrixXd out = layer.weights * input;
  out.colwise() += layer.bias;
  return out;
}

Eigen::MatrixXd dense_backward(const DenseLayer& layer, const Eigen::MatrixXd& input,
                               const Eigen::MatrixXd& grad_output, DenseGradient& grad) {
  if (grad_output.rows() != layer.out() || grad_output.cols() != input.cols() ||
      input.rows() != layer.in()) {
    throw DimensionError("dense backward shape mismatch");
  }
  grad.weights.noalias() += grad_output * input.transpose();
  grad.bias += grad_output.rowwise().sum();
  return layer.weights.transpose() * grad_output;
}

DenseLayer init_params(Eigen::Index in, Eigen::Index out, Rng& rng) {
  if (in < 1 || out < 1) throw DimensionError("layer dimensions must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
  // Row-major fill order keeps the draw sequence independent of Eigen's storage order.
  for (Eigen::Index r = 0; r < out; ++r) {
    for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-bound, bound);
  }
  return layer;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::MatrixXd leaky_relu(const Eigen::MatrixXd& x, double slope) {
  return x.unaryExpr([slope](double v) { return leaky_relu(v, slope); });
}

Eigen::MatrixXd leaky_relu_derivative(const Eigen::MatrixXd& x, double slope) {
  return x.unaryExpr([slope](double v) { return leaky_relu_derivative(v, slope); });
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

bool ParamGradients::all_finite() const {
  return std::all_of(arrays.begin(), arrays.end(),
                     [](const Eigen::VectorXd& a) { return a.allFinite(); });
}

AdamState::AdamState(AdamOptions options, const std::vector<Eigen::Index>& sizes)
    : options_(options) {
  if (!(options_.beta1 >= 0.0 && options_.beta1 < 1.0) ||
      !(options_.beta2 >= 0.0 && options_.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(options_.lr > 0.0) || !(options_.eps > 0.0)) {
    throw ConfigError("Adam learning rate and epsilon must be positive");
  }
  for (Eigen::Index size : sizes) {
    m_.push_back(Eigen::VectorXd::Zero(size));
    v_.push_back(Eigen::VectorXd::Zero(size));
  }
}

AdamState::AdamState(AdamState&& other) noexcept
    : options_(other.options_),
      m_(std::move(other.m_)),
      v_(std::move(other.v_)),
      t_(other.t_),
      consumed_(other.consumed_) {
  other.consumed_ = true;
}

AdamState& AdamState::operator=(AdamState&& other) noexcept {
  if (this != &other) {
    options_ = other.options_;
    m_ = std::move(other.m_);
    v_ = std::move(other.v_);
    t_ = other.t_;
    consumed_ = other.consumed_;
    other.consumed_ = true;
  }
  return *this;
}

AdamState adam_step(AdamState&& state, const ParamRefs& params, const ParamGradients& grads) {
  if (state.consumed_) throw std::logic_error("Adam state was already consumed by a step");
  if (params.size() != state.m_.size() || grads.arrays.size() != state.m_.size()) {
    throw DimensionError("Adam parameter/gradient array count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto size = static_cast<Eigen::Index>(params[k].size());
    if (size != state.m_[k].size() || size != grads.arrays[k].size()) {
      throw DimensionError("Adam parameter/gradient shape mismatch in array " +
                           std::to_string(k));
    }
  }

  AdamState next(std::move(state));
  const AdamOptions& o = next.options_;
  next.t_ += 1;
  const double t = static_cast<double>(next.t_);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Eigen::VectorXd& g = grads.arrays[k];
    Eigen::VectorXd& m = next.m_[k];
    Eigen::VectorXd& v = next.v_[k];
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
    double* p = params[k].data();
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
  return next;
}

Eigen::VectorXd grad_check_many(const std::function<Eigen::VectorXd()>& losses,
                                const ParamRefs& params,
                                std::span<const ParamGradients> analytic, double epsilon) {
  const std::size_t terms = analytic.size();
  for (const auto& g : analytic) {
    if (g.arrays.size() != params.size()) throw DimensionError("gradient array count mismatch");
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (static_cast<std::size_t>(g.arrays[k].size()) != params[k].size()) {
        throw DimensionError("gradient array shape mismatch");
      }
    }
  }
  auto evaluate = [&] {
    Eigen::VectorXd v = losses();
    if (static_cast<std::size_t>(v.size()) != terms) {
      throw DimensionError("loss function returned the wrong number of values");
    }
    if (!v.allFinite()) throw NumericError("non-finite loss during gradient check");
    return v;
  };
  evaluate();

  Eigen::VectorXd worst = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(terms));
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      double& p = params[k][i];
      const double saved = p;
      p = saved + epsilon;
      const Eigen::VectorXd plus = evaluate();
      p = saved - epsilon;
      const Eigen::VectorXd minus = evaluate();
      p = saved;
      for (std::size_t t = 0; t < terms; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        const double numeric = (plus[ti] - minus[ti]) / (2.0 * epsilon);
        const double ana = analytic[t].arrays[k][static_cast<Eigen::Index>(i)];
        const double rel =
            std::abs(numeric - ana) / std::max(1e-8, std::abs(numeric) + std::abs(ana));
        worst[ti] = std::max(worst[ti], rel);
      }
    }
  }
  return worst;
}

double grad_check(const std::function<double()>& loss, const ParamRefs& params,
                  const ParamGradients& analytic, double epsilon) {
  auto wrapped = [&] {
    Eigen::VectorXd v(1);
    v[0] = loss();
    return v;
  };
  return grad_check_many(wrapped, params, std::span<const ParamGradients>(&analytic, 1),
                         epsilon)[0];
}

nlohmann::json layer_to_json(const DenseLayer& layer, const std::string& name) {
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(layer.weights.size()));
  for (Eigen::Index r = 0; r < layer.out(); ++r) {
    for (Eigen::Index c = 0; c < layer.in(); ++c) weights.push_back(layer.weights(r, c));
  }
  return {{"name", name},
          {"in", layer.in()},
          {"out", layer.out()},
          {"weights", std::move(weights)},
          {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}};
}

DenseLayer layer_from_json(const nlohmann::json& j) {
  const auto in = j.at("in").get<Eigen::Index>();
  const auto out = j.at("out").get<Eigen::Index>();
  const auto weights = j.at("weights").get<std::vector<double>>();
  const auto bias = j.at("bias").get<std::vector<double>>();
  if (in < 1 || out < 1 || static_cast<Eigen::Index>(weights.size()) != in * out ||
      static_cast<Eigen::Index>(bias.size()) != out) {
    throw SchemaError("layer '" + j.value("name", std::string("?")) + "' has inconsistent shape");
  }
  DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
  for (Eigen::Index r = 0; r < out; ++r) {
    for (Eigen::Index c = 0; c < in; ++c) {
      layer.weights(r, c) = weights[static_cast<std::size_t>(r * in + c)];
    }
    layer.bias[r] = bias[static_cast<std::size_t>(r)];
  }
  if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
    throw ValidationError("layer parameters must be finite");
  }
  return layer;
}

}  // namespace mlbalance
