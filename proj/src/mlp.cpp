#include "cdelay/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace cdelay {

namespace {

// Eigen vectorizes exp but not tanh for doubles; absolute error stays near 1 ulp.
void tanh_in_place(Matrix& z) {
  z = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
}

}  // namespace

Mlp::Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int d : dims_)
    if (d < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");
  Eigen::Index off = 0;
  for (int l = 0; l < num_layers(); ++l) {
    w_off_.push_back(off);
    off += static_cast<Eigen::Index>(dims_[l + 1]) * dims_[l];
    b_off_.push_back(off);
    off += dims_[l + 1];
  }
  params_ = Vector::Zero(off);
}

void Mlp::init_uniform(Rng& rng) {
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    auto w = weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = (2.0 * uniform01(rng) - 1.0) * bound;
    auto b = bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = (2.0 * uniform01(rng) - 1.0) * bound;
  }
}

Eigen::Map<const Matrix> Mlp::weight(int l) const {
  return {params_.data() + w_off_[l], dims_[l + 1], dims_[l]};
}
Eigen::Map<const Vector> Mlp::bias(int l) const { return {params_.data() + b_off_[l], dims_[l + 1]}; }
Eigen::Map<Matrix> Mlp::weight(int l) { return {params_.data() + w_off_[l], dims_[l + 1], dims_[l]}; }
Eigen::Map<Vector> Mlp::bias(int l) { return {params_.data() + b_off_[l], dims_[l + 1]}; }

const Matrix& Mlp::forward(const Matrix& x, Cache& cache) const {
  if (x.rows() != in_dim()) throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  cache.acts.resize(num_layers() + 1);
  cache.acts[0] = x;
  for (int l = 0; l < num_layers(); ++l) {
    Matrix& z = cache.acts[l + 1];
    z.noalias() = weight(l) * cache.acts[l];
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) tanh_in_place(z);
  }
  return cache.acts.back();
}

Matrix Mlp::forward(const Matrix& x) const {
  Cache cache;
  return forward(x, cache);
}

Vector Mlp::forward_one(std::span<const double> x) const {
  Matrix in = Eigen::Map<const Matrix>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  return forward(in).col(0);
}

Matrix Mlp::backward(const Cache& cache, const Matrix& d_out, Vector& grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("Mlp::backward: gradient size mismatch");
  Matrix delta = d_out;
  for (int l = num_layers() - 1; l >= 0; --l) {
    if (l + 1 < num_layers()) delta.array() *= 1.0 - cache.acts[l + 1].array().square();
    Eigen::Map<Matrix> gw(grad.data() + w_off_[l], dims_[l + 1], dims_[l]);
    Eigen::Map<Vector> gb(grad.data() + b_off_[l], dims_[l + 1]);
    gw.noalias() += delta * cache.acts[l].transpose();
    gb += delta.rowwise().sum();
    Matrix prev = weight(l).transpose() * delta;
    delta.swap(prev);
  }
  return delta;
}

LossGrad mlp_grad(const Mlp& net, const OutputLoss& loss_fn, const Matrix& batch) {
  Mlp::Cache cache;
  const Matrix& out = net.forward(batch, cache);
  auto [loss, d_out] = loss_fn(out);
  LossGrad g{loss, Vector::Zero(net.num_params())};
  net.backward(cache, d_out, g.grad);
  return g;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

void Adam::step(Vector& params, const Vector& grad) {
  if (grad.size() != m_.size() || params.size() != m_.size())
    throw std::invalid_argument("Adam::step: size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace cdelay
