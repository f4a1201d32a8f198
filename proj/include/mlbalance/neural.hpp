#pragma once

#include <Eigen/Dense>
#include "json.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mlbalance/random.hpp"

namespace mlbalance {

/// Fully connected layer: output = W * input + b, columns are batch members.
struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out

  Eigen::Index in() const { return weights.cols(); }
  Eigen::Index out() const { return weights.rows(); }
};

struct DenseGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  static DenseGradient zeros_like(const DenseLayer& layer);
};

Eigen::MatrixXd dense_forward(const DenseLayer& layer, const Eigen::MatrixXd& input);

/// Accumulates dL/dW and dL/db into `grad` and returns dL/dinput.
Eigen::MatrixXd dense_backward(const DenseLayer& layer, const Eigen::MatrixXd& input,
                               const Eigen::MatrixXd& grad_output, DenseGradient& grad);

/// Glorot-uniform weights in [-sqrt(6/(in+out)), sqrt(6/(in+out))], zero bias.
DenseLayer init_params(Eigen::Index in, Eigen::Index out, Rng& rng);

inline double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }
// The derivative at exactly 0 is taken as 1.
inline double leaky_relu_derivative(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }
double sigmoid(double x);
inline double sigmoid_derivative(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

Eigen::MatrixXd leaky_relu(const Eigen::MatrixXd& x, double slope);
Eigen::MatrixXd leaky_relu_derivative(const Eigen::MatrixXd& x, double slope);
Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x);

/// Mutable views over every parameter array of a model, in a fixed order.
using ParamRefs = std::vector<std::span<double>>;

/// One flat gradient array per parameter array, same order and storage layout as ParamRefs.
struct ParamGradients {
  std::vector<Eigen::VectorXd> arrays;

  bool all_finite() const;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment accumulators for Adam.
///
/// A state is consumed by `adam_step`: the moved-from object refuses further steps, so each
/// state value drives exactly one update.
class AdamState {
 public:
  AdamState(AdamOptions options, const std::vector<Eigen::Index>& sizes);

  AdamState(AdamState&& other) noexcept;
  AdamState& operator=(AdamState&& other) noexcept;
  AdamState(const AdamState&) = default;
  AdamState& operator=(const AdamState&) = default;

  const AdamOptions& options() const { return options_; }
  std::int64_t step_count() const { return t_; }
  bool consumed() const { return consumed_; }
  const std::vector<Eigen::VectorXd>& first_moments() const { return m_; }
  const std::vector<Eigen::VectorXd>& second_moments() const { return v_; }

 private:
  friend AdamState adam_step(AdamState&& state, const ParamRefs& params,
                             const ParamGradients& grads);

  AdamOptions options_;
  std::vector<Eigen::VectorXd> m_;
  std::vector<Eigen::VectorXd> v_;
  std::int64_t t_ = 0;
  bool consumed_ = false;
};

/// Bias-corrected Adam update of `params` in place; returns the advanced state.
AdamState adam_step(AdamState&& state, const ParamRefs& params, const ParamGradients& grads);

/// Central-difference gradient check of several loss values sharing one parameter set.
///
/// `losses` evaluates all loss values at the current parameter values. For each parameter
/// entry and each loss k, compares (L_k(p+eps) - L_k(p-eps)) / (2 eps) with `analytic[k]`
/// and returns, per loss, the maximum of |num - ana| / max(1e-8, |num| + |ana|).
/// Parameters are restored before returning.
Eigen::VectorXd grad_check_many(const std::function<Eigen::VectorXd()>& losses,
                                const ParamRefs& params,
                                std::span<const ParamGradients> analytic, double epsilon);

double grad_check(const std::function<double()>& loss, const ParamRefs& params,
                  const ParamGradients& analytic, double epsilon);

nlohmann::json layer_to_json(const DenseLayer& layer, const std::string& name);
DenseLayer layer_from_json(const nlohmann::json& j);

}  // namespace mlbalance
