#include "narcan/mlp.hpp"

#include <cmath>

#include "narcan/error.hpp"

namespace narcan {

void MlpGrads::set_zero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

Mlp::Mlp(int input_dim, const std::vector<int>& hidden_widths, int output_dim,
         Output out_kind, Rng& rng, bool zero_output_layer)
    : output(out_kind) {
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int h : hidden_widths) dims.push_back(h);
  dims.push_back(output_dim);

  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    const int in = dims[i], out = dims[i + 1];
    MatrixXd weight(in, out);
    const bool is_output = (i + 2 == dims.size());
    if (is_output && zero_output_layer) {
      weight.setZero();
    } else {
      // He scaling for the ReLU stack.
      const double stddev = std::sqrt(2.0 / in);
      for (int r = 0; r < in; ++r)
        for (int c = 0; c < out; ++c) weight(r, c) = stddev * rng.normal();
    }
    w.push_back(std::move(weight));
    b.push_back(VectorXd::Zero(out));
  }
}

std::vector<int> Mlp::layer_widths() const {
  std::vector<int> widths;
  widths.reserve(w.size());
  for (const auto& m : w) widths.push_back(static_cast<int>(m.cols()));
  return widths;
}

MatrixXd Mlp::forward(const MatrixXd& x) const {
  Cache cache;
  return forward(x, cache);
}

namespace {

inline double softplus(double v) {
  if (v > 30.0) return v;
  if (v < -30.0) return std::exp(v);
  return std::log1p(std::exp(v));
}

inline double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

MatrixXd Mlp::forward(const MatrixXd& x, Cache& cache) const {
  cache.acts.clear();
  cache.pre.clear();
  cache.acts.reserve(w.size() + 1);
  cache.pre.reserve(w.size());
  cache.acts.push_back(x);
  for (size_t i = 0; i < w.size(); ++i) {
    MatrixXd z = cache.acts.back() * w[i];
    z.rowwise() += b[i].transpose();
    const bool is_output = (i + 1 == w.size());
    if (!is_output) {
      cache.pre.push_back(z);
      z = z.unaryExpr([](double v) { return softplus(v); });
    } else if (output == Output::Sigmoid) {
      z = z.unaryExpr([](double v) { return logistic(v); });
    }
    cache.acts.push_back(std::move(z));
  }
  return cache.acts.back();
}

MatrixXd Mlp::backward(const Cache& cache, const MatrixXd& dy,
                       MlpGrads& grads) const {
  MatrixXd delta = dy;
  const int layers = layer_count();
  if (output == Output::Sigmoid) {
    const MatrixXd& y = cache.acts.back();
    delta = delta.cwiseProduct(y.cwiseProduct(MatrixXd::Ones(y.rows(), y.cols()) - y));
  }
  for (int i = layers - 1; i >= 0; --i) {
    const MatrixXd& input = cache.acts[i];
    grads.w[i].noalias() += input.transpose() * delta;
    grads.b[i] += delta.colwise().sum().transpose();
    if (i == 0) return delta * w[i].transpose();
    MatrixXd prev = delta * w[i].transpose();
    // softplus'(z) is the logistic of the stored pre-activation.
    delta = prev.cwiseProduct(cache.pre[i - 1].unaryExpr(
        [](double v) { return logistic(v); }));
  }
  return {};
}

MlpGrads Mlp::zero_grads() const {
  MlpGrads grads;
  for (const auto& m : w) grads.w.push_back(MatrixXd::Zero(m.rows(), m.cols()));
  for (const auto& v : b) grads.b.push_back(VectorXd::Zero(v.size()));
  return grads;
}

size_t Mlp::param_count() const {
  size_t n = 0;
  for (const auto& m : w) n += static_cast<size_t>(m.size());
  for (const auto& v : b) n += static_cast<size_t>(v.size());
  return n;
}

void Mlp::append_params(std::vector<float>& out) const {
  for (size_t i = 0; i < w.size(); ++i) {
    for (int r = 0; r < w[i].rows(); ++r)
      for (int c = 0; c < w[i].cols(); ++c)
        out.push_back(static_cast<float>(w[i](r, c)));
    for (int k = 0; k < b[i].size(); ++k)
      out.push_back(static_cast<float>(b[i](k)));
  }
}

size_t Mlp::read_params(const float* data, size_t count) {
  size_t pos = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    const size_t need = static_cast<size_t>(w[i].size() + b[i].size());
    if (pos + need > count)
      raise(ErrorCode::DecodeFailure, "mlp parameter blob too short");
    for (int r = 0; r < w[i].rows(); ++r)
      for (int c = 0; c < w[i].cols(); ++c) w[i](r, c) = data[pos++];
    for (int k = 0; k < b[i].size(); ++k) b[i](k) = data[pos++];
  }
  return pos;
}

static inline void adam_update_span(double* p, double* m, double* v,
                                    const double* g, long n, double lr,
                                    double bias1, double bias2) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  for (long i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bias1;
    const double vhat = v[i] / bias2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

AdamState AdamState::like(const Mlp& mlp) {
  AdamState s;
  for (const auto& m : mlp.w) {
    s.mw.push_back(MatrixXd::Zero(m.rows(), m.cols()));
    s.vw.push_back(MatrixXd::Zero(m.rows(), m.cols()));
  }
  for (const auto& v : mlp.b) {
    s.mb.push_back(VectorXd::Zero(v.size()));
    s.vb.push_back(VectorXd::Zero(v.size()));
  }
  return s;
}

void AdamState::update(Mlp& mlp, const MlpGrads& grads, double lr) {
  ++step;
  const double bias1 = 1.0 - std::pow(0.9, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(0.999, static_cast<double>(step));
  for (size_t i = 0; i < mlp.w.size(); ++i) {
    adam_update_span(mlp.w[i].data(), mw[i].data(), vw[i].data(),
                     grads.w[i].data(), mlp.w[i].size(), lr, bias1, bias2);
    adam_update_span(mlp.b[i].data(), mb[i].data(), vb[i].data(),
                     grads.b[i].data(), mlp.b[i].size(), lr, bias1, bias2);
  }
}

AdamMatrixState AdamMatrixState::like(const MatrixXd& param) {
  AdamMatrixState s;
  s.m = MatrixXd::Zero(param.rows(), param.cols());
  s.v = MatrixXd::Zero(param.rows(), param.cols());
  return s;
}

void AdamMatrixState::update(MatrixXd& param, const MatrixXd& grad, double lr) {
  ++step;
  const double bias1 = 1.0 - std::pow(0.9, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(0.999, static_cast<double>(step));
  adam_update_span(param.data(), m.data(), v.data(), grad.data(), param.size(),
                   lr, bias1, bias2);
}

}  // namespace narcan
