#pragma once

#include <Eigen/Dense>
#include <vector>

#include "narcan/rng.hpp"

namespace narcan {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct MlpGrads {
  std::vector<MatrixXd> w;
  std::vector<VectorXd> b;
  void set_zero();
};

// Fully connected network evaluated on row batches (N x dim). Hidden
// layers use softplus (smooth, so loss gradients admit finite-difference
// checks); the output is linear or squashed by a logistic into (0,1).
// Weights are stored input-major (in x out).
class Mlp {
 public:
  enum class Output { Linear, Sigmoid };

  Mlp() = default;
  Mlp(int input_dim, const std::vector<int>& hidden_widths, int output_dim,
      Output output, Rng& rng, bool zero_output_layer);

  int input_dim() const { return w.empty() ? 0 : static_cast<int>(w.front().rows()); }
  int output_dim() const { return w.empty() ? 0 : static_cast<int>(w.back().cols()); }
  int layer_count() const { return static_cast<int>(w.size()); }
  std::vector<int> layer_widths() const;

  struct Cache {
    // acts[0] is the input batch; acts[i] the post-activation output of
    // layer i-1 (the last entry is the network output). pre[i] holds the
    // pre-activation of hidden layer i (needed for the softplus slope).
    std::vector<MatrixXd> acts;
    std::vector<MatrixXd> pre;
  };

  MatrixXd forward(const MatrixXd& x) const;
  MatrixXd forward(const MatrixXd& x, Cache& cache) const;

  // Accumulates parameter gradients for dL/dY = dy and returns dL/dX.
  MatrixXd backward(const Cache& cache, const MatrixXd& dy,
                    MlpGrads& grads) const;

  MlpGrads zero_grads() const;
  size_t param_count() const;
  void append_params(std::vector<float>& out) const;
  size_t read_params(const float* data, size_t count);

  std::vector<MatrixXd> w;
  std::vector<VectorXd> b;
  Output output = Output::Linear;
};

// Adam state for one tensor list (same shapes as MlpGrads).
struct AdamState {
  std::vector<MatrixXd> mw, vw;
  std::vector<VectorXd> mb, vb;
  long step = 0;

  static AdamState like(const Mlp& mlp);
  void update(Mlp& mlp, const MlpGrads& grads, double lr);
};

// Adam over a single matrix parameter (used for the homography table).
struct AdamMatrixState {
  MatrixXd m, v;
  long step = 0;

  static AdamMatrixState like(const MatrixXd& param);
  void update(MatrixXd& param, const MatrixXd& grad, double lr);
};

}  // namespace narcan
