#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "narcan/image.hpp"
#include "narcan/mlp.hpp"
#include "narcan/rng.hpp"

namespace narcan {

using Eigen::Matrix3d;
using Eigen::Vector2d;

// Sinusoidal positional encoding: [x, sin(pi 2^k x), cos(pi 2^k x)] for
// k = 0..freqs-1, with the raw coordinate passed through.
struct PosEnc {
  int freqs = 0;

  int dim() const { return 1 + 2 * freqs; }
  void encode(double x, double* dst) const;
  void encode_deriv(double x, double* dst) const;
};

// Per-frame projective maps, 8 free parameters each with h33 fixed at 1:
// row t = (h11, h12, h13, h21, h22, h23, h31, h32).
struct HomographyTrajectory {
  MatrixXd params;  // T x 8

  static HomographyTrajectory identity(int frame_count);
  int frame_count() const { return static_cast<int>(params.rows()); }
  Matrix3d matrix(int t) const;
  void set_matrix(int t, const Matrix3d& m);
};

// Projects (u, v) through frame t's homography. Throws
// DegenerateHomography when the denominator vanishes at the query point.
Vector2d apply_homography(const HomographyTrajectory& traj, double u, double v,
                          int t_index);

// Residual deformation network g: encoded (u, v, t_norm) -> (du, dv).
struct ResidualField {
  PosEnc pe_spatial{8};
  PosEnc pe_time{4};
  Mlp mlp;

  int input_dim() const { return 2 * pe_spatial.dim() + pe_time.dim(); }
  void encode_row(double u, double v, double t_norm, double* dst) const;
};

// Canonical color network f: encoded (u', v') -> RGB in (0,1).
struct CanonicalField {
  PosEnc pe{10};
  Mlp mlp;

  int input_dim() const { return 2 * pe.dim(); }
  void encode_row(double u, double v, double* dst) const;
};

struct ModelSpec {
  int pe_freqs_spatial = 8;
  int pe_freqs_time = 4;
  int pe_freqs_canonical = 10;
  std::vector<int> hidden_g{256, 256, 256, 256, 256};
  std::vector<int> hidden_f{256, 256, 256, 256, 256, 256};
};

struct NarcanModel {
  HomographyTrajectory homography;
  ResidualField residual;
  CanonicalField canonical;
  int frame_count = 0;
  int frame_height = 0;
  int frame_width = 0;

  double t_norm(int index) const {
    return frame_count > 1 ? static_cast<double>(index) / (frame_count - 1)
                           : 0.0;
  }
};

// Fresh model: identity homography, zero-initialized output layers so the
// deformation starts at the pure homography and the canonical at gray.
NarcanModel make_model(int frame_count, int frame_height, int frame_width,
                       const ModelSpec& spec, Rng& rng);

// Full hybrid deformation: homography projection plus residual network.
Vector2d deform(const NarcanModel& model, double u, double v, int t_index);

// ---------------------------------------------------------------------------
// Batched evaluation (training fast path). Rows are samples.

struct BatchForward {
  VectorXd u, v;            // frame-domain inputs
  std::vector<int> t_index;
  VectorXd uh, vh, hw;      // homography outputs and denominators
  MatrixXd xg;              // residual encodings
  Mlp::Cache g_cache;
  MatrixXd g_out;           // N x 2 (zero when the residual is frozen)
  VectorXd u_prime, v_prime;
  MatrixXd xf;              // canonical encodings
  Mlp::Cache f_cache;
  MatrixXd rgb;             // N x 3
  bool residual_active = true;
};

struct ModelGrads {
  MatrixXd homography;  // T x 8
  MlpGrads residual;
  MlpGrads canonical;

  static ModelGrads like(const NarcanModel& model);
  void set_zero();
};

void model_forward(const NarcanModel& model, const VectorXd& u,
                   const VectorXd& v, const std::vector<int>& t_index,
                   bool use_residual, BatchForward& fwd);

// d_rgb is dL/d(rgb). Gradients accumulate into `grads`; homography
// gradients are skipped when train_homography is false.
void model_backward(const NarcanModel& model, const BatchForward& fwd,
                    const MatrixXd& d_rgb, bool train_homography,
                    ModelGrads& grads);

// Canonical-only path (used for rasters and the prior loss).
MatrixXd canonical_forward(const CanonicalField& field, const VectorXd& u,
                           const VectorXd& v, MatrixXd* xf = nullptr,
                           Mlp::Cache* cache = nullptr);
void canonical_backward(const CanonicalField& field, const Mlp::Cache& cache,
                        const MatrixXd& d_rgb, MlpGrads& grads);

// ---------------------------------------------------------------------------
// Rendering

Image render_frame(const NarcanModel& model, int t_index);

struct CanvasSpec {
  double origin_u = 0.0;
  double origin_v = 0.0;
  double scale = 1.0;
  int height = 0;
  int width = 0;
};

struct Bounds {
  double u_min = 0, v_min = 0, u_max = 0, v_max = 0;
};

RasterCanvas render_canonical_raster(const NarcanModel& model,
                                     const CanvasSpec& spec);

// Box of deform() over a fixed pattern of 65 samples per frame (64 along
// the pixel-center boundary plus the center), expanded by margin.
Bounds canonical_bounds(const NarcanModel& model, double margin);

CanvasSpec canvas_spec_from_bounds(const Bounds& bounds, int long_side);

// ---------------------------------------------------------------------------
// Checkpoints: directory with manifest.json plus flat little-endian
// float32 arrays homography.bin / residual.bin / canonical.bin.

void save_model(const NarcanModel& model, const std::string& directory);
NarcanModel load_model(const std::string& directory);

void write_f32_le(const std::string& path, const std::vector<float>& values);
std::vector<float> read_f32_le(const std::string& path);

}  // namespace narcan
