#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "cdelay/rng.hpp"

namespace cdelay {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Fully connected network with tanh hidden layers and a linear output.
///
/// Inputs are batched column-wise (one sample per column). All parameters
/// live in one flat vector: for each layer the weight matrix (column-major,
/// out x in) followed by its bias.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> acts;  // acts[0] = input, acts[l] = output of layer l
  };

  Mlp() = default;
  /// `dims` = {in, hidden..., out}.
  explicit Mlp(std::vector<int> dims);

  /// PyTorch-style default: every weight and bias ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  void init_uniform(Rng& rng);

  int in_dim() const { return dims_.front(); }
  int out_dim() const { return dims_.back(); }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  const std::vector<int>& dims() const { return dims_; }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;
  Eigen::Map<Matrix> weight(int layer);
  Eigen::Map<Vector> bias(int layer);

  /// Throws std::invalid_argument on an input row count other than in_dim().
  Matrix forward(const Matrix& x) const;
  const Matrix& forward(const Matrix& x, Cache& cache) const;
  Vector forward_one(std::span<const double> x) const;

  /// Backpropagates dL/d(output): adds dL/d(params) into `grad` and returns
  /// dL/d(input).
  Matrix backward(const Cache& cache, const Matrix& d_out, Vector& grad) const;

  bool all_finite() const { return params_.allFinite(); }

 private:
  std::vector<int> dims_;
  std::vector<Eigen::Index> w_off_;
  std::vector<Eigen::Index> b_off_;
  Vector params_;
};

/// Scalar loss of a network output batch together with dL/d(output).
using OutputLoss = std::function<std::pair<double, Matrix>(const Matrix& out)>;

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

/// Loss value and exact parameter gradient for one batch.
LossGrad mlp_grad(const Mlp& net, const OutputLoss& loss_fn, const Matrix& batch);

/// Adaptive moment estimation.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(Vector& params, const Vector& grad);

  double lr() const { return lr_; }
  long steps() const { return t_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }

 private:
  double lr_ = 3e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  Vector m_;
  Vector v_;
};

}  // namespace cdelay
