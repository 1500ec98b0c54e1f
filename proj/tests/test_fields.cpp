#include "narcan/fields.hpp"

#include <Eigen/Dense>

#include "doctest.h"
#include "narcan/metrics.hpp"
#include "test_util.hpp"

using namespace narcan;

namespace {

ModelSpec tiny_spec() {
  ModelSpec spec;
  spec.pe_freqs_spatial = 4;
  spec.pe_freqs_time = 2;
  spec.pe_freqs_canonical = 5;
  spec.hidden_g = {24, 24};
  spec.hidden_f = {24, 24};
  return spec;
}

void randomize(Mlp& mlp, Rng& rng, double scale) {
  for (auto& w : mlp.w)
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) w(r, c) += scale * rng.normal();
  for (auto& b : mlp.b)
    for (int i = 0; i < b.size(); ++i) b[i] += scale * rng.normal();
}

}  // namespace

TEST_CASE("apply_homography: identity and translation special cases") {
  HomographyTrajectory traj = HomographyTrajectory::identity(2);
  const Vector2d p = apply_homography(traj, 0.3, 0.7, 0);
  CHECK(p.x() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(p.y() == doctest::Approx(0.7).epsilon(1e-12));

  traj.params(1, 2) = 0.1;    // h13
  traj.params(1, 5) = -0.05;  // h23
  const Vector2d q = apply_homography(traj, 0.5, 0.5, 1);
  CHECK(q.x() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(q.y() == doctest::Approx(0.45).epsilon(1e-12));
}

TEST_CASE("apply_homography then the numeric inverse returns the point") {
  Rng rng(11);
  HomographyTrajectory traj = HomographyTrajectory::identity(1);
  Matrix3d m;
  m << 1.1, 0.05, 0.2, -0.04, 0.93, -0.1, 0.08, -0.06, 1.0;
  traj.set_matrix(0, m);
  for (int trial = 0; trial < 20; ++trial) {
    const double u = rng.uniform(), v = rng.uniform();
    const Vector2d fwd = apply_homography(traj, u, v, 0);
    const Eigen::Vector3d back =
        m.inverse() * Eigen::Vector3d(fwd.x(), fwd.y(), 1.0);
    CHECK(back.x() / back.z() == doctest::Approx(u).epsilon(1e-9));
    CHECK(back.y() / back.z() == doctest::Approx(v).epsilon(1e-9));
  }
}

TEST_CASE("degenerate denominator raises DegenerateHomography") {
  HomographyTrajectory traj = HomographyTrajectory::identity(1);
  traj.params(0, 6) = -2.0;  // w = 1 - 2u, vanishes at u = 0.5
  CHECK_THROWS_AS(apply_homography(traj, 0.5, 0.3, 0), Error);
}

TEST_CASE("zero-initialized residual output makes deform equal the homography") {
  Rng rng(3);
  NarcanModel model = make_model(2, 16, 16, tiny_spec(), rng);
  model.homography.params(1, 2) = 0.07;
  for (int trial = 0; trial < 10; ++trial) {
    const double u = rng.uniform(), v = rng.uniform();
    for (int t = 0; t < 2; ++t) {
      const Vector2d d = deform(model, u, v, t);
      const Vector2d h = apply_homography(model.homography, u, v, t);
      CHECK(d.x() == h.x());
      CHECK(d.y() == h.y());
    }
  }
}

TEST_CASE("constant residual adds to the homography output") {
  Rng rng(4);
  NarcanModel model = make_model(2, 16, 16, tiny_spec(), rng);
  model.residual.mlp.b.back() << 0.01, 0.0;
  const Vector2d d = deform(model, 0.2, 0.2, 0);
  CHECK(d.x() == doctest::Approx(0.21).epsilon(1e-12));
  CHECK(d.y() == doctest::Approx(0.20).epsilon(1e-12));
}

TEST_CASE("finite-difference Jacobian of deform w.r.t. h13 is (1, 0)") {
  Rng rng(5);
  NarcanModel model = make_model(2, 16, 16, tiny_spec(), rng);
  randomize(model.residual.mlp, rng, 0.05);
  const double h = 1e-5;
  const double u = 0.37, v = 0.61;
  model.homography.params(0, 2) += h;
  const Vector2d plus = deform(model, u, v, 0);
  model.homography.params(0, 2) -= 2 * h;
  const Vector2d minus = deform(model, u, v, 0);
  CHECK((plus.x() - minus.x()) / (2 * h) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs((plus.y() - minus.y()) / (2 * h)) < 1e-4);
}

TEST_CASE("composing two trajectories equals the matrix-product trajectory") {
  Rng rng(6);
  HomographyTrajectory a = HomographyTrajectory::identity(3);
  HomographyTrajectory b = HomographyTrajectory::identity(3);
  for (int t = 0; t < 3; ++t) {
    Matrix3d ma = Matrix3d::Identity(), mb = Matrix3d::Identity();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        ma(r, c) += 0.08 * rng.normal() * (r == 2 ? 0.2 : 1.0);
        mb(r, c) += 0.08 * rng.normal() * (r == 2 ? 0.2 : 1.0);
      }
    ma(2, 2) = 1.0;
    mb(2, 2) = 1.0;
    a.set_matrix(t, ma);
    b.set_matrix(t, mb);
  }
  HomographyTrajectory product = HomographyTrajectory::identity(3);
  for (int t = 0; t < 3; ++t)
    product.set_matrix(t, a.matrix(t) * b.matrix(t));
  for (int t = 0; t < 3; ++t)
    for (int trial = 0; trial < 8; ++trial) {
      const double u = rng.uniform(), v = rng.uniform();
      const Vector2d inner = apply_homography(b, u, v, t);
      const Vector2d two_step = apply_homography(a, inner.x(), inner.y(), t);
      const Vector2d one_step = apply_homography(product, u, v, t);
      CHECK(one_step.x() == doctest::Approx(two_step.x()).epsilon(1e-9));
      CHECK(one_step.y() == doctest::Approx(two_step.y()).epsilon(1e-9));
    }
}

TEST_CASE("fresh model renders constant gray and ignores t") {
  Rng rng(7);
  NarcanModel model = make_model(3, 12, 12, tiny_spec(), rng);
  const Image frame0 = render_frame(model, 0);
  for (float v : frame0.data) CHECK(v == 0.5f);
  const Image frame2 = render_frame(model, 2);
  CHECK(test::max_abs_diff(frame0, frame2) == 0.0);
}

TEST_CASE("render output stays inside [0,1] for wild parameters") {
  Rng rng(8);
  NarcanModel model = make_model(2, 10, 10, tiny_spec(), rng);
  randomize(model.canonical.mlp, rng, 30.0);
  randomize(model.residual.mlp, rng, 1.0);
  const Image frame = render_frame(model, 1);
  for (float v : frame.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("canonical field overfits one image and reproduces it at 40+ dB") {
  Rng rng(9);
  NarcanModel model = make_model(2, 16, 16, tiny_spec(), rng);
  const Image target = test::smooth_image(16, 16, 3);

  const long n = 16 * 16;
  VectorXd u(n), v(n);
  MatrixXd want(n, 3);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const long i = y * 16 + x;
      u[i] = frame_u(x, 16);
      v[i] = frame_v(y, 16);
      for (int c = 0; c < 3; ++c) want(i, c) = target.at(y, x, c);
    }

  AdamState adam = AdamState::like(model.canonical.mlp);
  MlpGrads grads = model.canonical.mlp.zero_grads();
  for (int iter = 0; iter < 1500; ++iter) {
    Mlp::Cache cache;
    const MatrixXd rgb =
        canonical_forward(model.canonical, u, v, nullptr, &cache);
    MatrixXd diff = rgb - want;
    grads.set_zero();
    canonical_backward(model.canonical, cache,
                       diff * (2.0 / diff.size()), grads);
    adam.update(model.canonical.mlp, grads, 2e-3);
  }
  const Image rendered = render_frame(model, 0);
  CHECK(psnr(rendered, target) > 40.0);
}

TEST_CASE("canonical raster of a constant-red field is all red") {
  Rng rng(10);
  NarcanModel model = make_model(2, 16, 16, tiny_spec(), rng);
  for (auto& w : model.canonical.mlp.w) w.setZero();
  model.canonical.mlp.b.back() << 30.0, -30.0, -30.0;
  const RasterCanvas canvas =
      render_canonical_raster(model, {0.0, 0.0, 0.01, 16, 16});
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      CHECK(canvas.image.at(y, x, 0) == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(canvas.image.at(y, x, 1) == doctest::Approx(0.0).epsilon(1e-6));
    }
}

TEST_CASE("canonical_bounds of an identity model hits pixel-center extremes") {
  Rng rng(12);
  NarcanModel model = make_model(2, 96, 96, tiny_spec(), rng);
  const Bounds b = canonical_bounds(model, 0.0);
  CHECK(b.u_min == doctest::Approx(0.5 / 96).epsilon(1e-12));
  CHECK(b.v_min == doctest::Approx(0.5 / 96).epsilon(1e-12));
  CHECK(b.u_max == doctest::Approx(95.5 / 96).epsilon(1e-12));
  CHECK(b.v_max == doctest::Approx(95.5 / 96).epsilon(1e-12));

  model.homography.params(1, 2) = 0.1;  // translate frame 1 by +0.1 in u
  const Bounds shifted = canonical_bounds(model, 0.0);
  CHECK(shifted.u_max == doctest::Approx(95.5 / 96 + 0.1).epsilon(1e-12));
  CHECK(shifted.u_min == doctest::Approx(0.5 / 96).epsilon(1e-12));

  const Bounds grown = canonical_bounds(model, 0.05);
  CHECK(grown.u_min == doctest::Approx(shifted.u_min - 0.05).epsilon(1e-12));
  CHECK(grown.u_max == doctest::Approx(shifted.u_max + 0.05).epsilon(1e-12));
}

TEST_CASE("resampling the canonical raster reproduces render_frame") {
  Rng rng(13);
  NarcanModel model = make_model(2, 24, 24, tiny_spec(), rng);
  randomize(model.canonical.mlp, rng, 0.3);

  const Bounds b = canonical_bounds(model, 0.02);
  const CanvasSpec spec = canvas_spec_from_bounds(b, 256);
  const RasterCanvas canvas = render_canonical_raster(model, spec);
  const Image direct = render_frame(model, 0);

  Image resampled(24, 24, 3);
  float sample[3];
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) {
      bilinear_sample(canvas.image, canvas.to_px(frame_u(x, 24)),
                      canvas.to_py(frame_v(y, 24)), sample);
      for (int c = 0; c < 3; ++c) resampled.at(y, x, c) = sample[c];
    }
  CHECK(psnr(resampled, direct) > 40.0);
}

TEST_CASE("analytic gradients match central differences to 1e-3 relative") {
  Rng rng(14);
  ModelSpec spec = tiny_spec();
  spec.hidden_g = {16, 16};
  spec.hidden_f = {16, 16};
  NarcanModel model = make_model(2, 16, 16, spec, rng);
  randomize(model.residual.mlp, rng, 0.2);
  randomize(model.canonical.mlp, rng, 0.5);
  for (int c = 0; c < 8; ++c) model.homography.params(1, c) += 0.02 * rng.normal();

  // Scalar loss over a full-frame render against a fixed random target.
  const Image target = test::random_image(16, 16, 3, 99);
  const long n = 2 * 16 * 16;
  VectorXd u(n), v(n);
  std::vector<int> tidx(n);
  MatrixXd want(n, 3);
  long i = 0;
  for (int t = 0; t < 2; ++t)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x, ++i) {
        u[i] = frame_u(x, 16);
        v[i] = frame_v(y, 16);
        tidx[i] = t;
        for (int c = 0; c < 3; ++c) want(i, c) = target.at(y, x, c);
      }

  const auto loss_value = [&]() {
    BatchForward fwd;
    model_forward(model, u, v, tidx, true, fwd);
    const MatrixXd diff = fwd.rgb - want;
    return diff.squaredNorm() / static_cast<double>(diff.size());
  };

  BatchForward fwd;
  model_forward(model, u, v, tidx, true, fwd);
  MatrixXd diff = fwd.rgb - want;
  ModelGrads grads = ModelGrads::like(model);
  model_backward(model, fwd, diff * (2.0 / diff.size()), true, grads);

  const double step = 1e-6;
  const auto check_param = [&](double* param, double analytic) {
    const double saved = *param;
    *param = saved + step;
    const double plus = loss_value();
    *param = saved - step;
    const double minus = loss_value();
    *param = saved;
    const double numeric = (plus - minus) / (2 * step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    CHECK(std::abs(analytic - numeric) / denom < 1e-3);
  };

  Rng pick(15);
  for (int rep = 0; rep < 10; ++rep) {
    const int t = static_cast<int>(pick.uniform_int(2));
    const int c = static_cast<int>(pick.uniform_int(8));
    check_param(&model.homography.params(t, c), grads.homography(t, c));
  }
  for (int rep = 0; rep < 10; ++rep) {
    const size_t layer = pick.uniform_int(model.residual.mlp.w.size());
    auto& w = model.residual.mlp.w[layer];
    const int r = static_cast<int>(pick.uniform_int(w.rows()));
    const int c = static_cast<int>(pick.uniform_int(w.cols()));
    check_param(&w(r, c), grads.residual.w[layer](r, c));
  }
  for (int rep = 0; rep < 10; ++rep) {
    const size_t layer = pick.uniform_int(model.canonical.mlp.w.size());
    auto& w = model.canonical.mlp.w[layer];
    const int r = static_cast<int>(pick.uniform_int(w.rows()));
    const int c = static_cast<int>(pick.uniform_int(w.cols()));
    check_param(&w(r, c), grads.canonical.w[layer](r, c));
  }
}

TEST_CASE("checkpoint round trip restores the model to float32 precision") {
  Rng rng(16);
  NarcanModel model = make_model(3, 12, 10, tiny_spec(), rng);
  randomize(model.canonical.mlp, rng, 0.4);
  randomize(model.residual.mlp, rng, 0.1);
  model.homography.params(2, 2) = 0.125;  // exactly representable

  test::TempDir dir("ckpt");
  save_model(model, dir.path());
  const NarcanModel loaded = load_model(dir.path());
  CHECK(loaded.frame_count == 3);
  CHECK(loaded.frame_height == 12);
  CHECK(loaded.frame_width == 10);
  CHECK(loaded.homography.params(2, 2) == 0.125);
  CHECK(loaded.residual.mlp.layer_widths() ==
        model.residual.mlp.layer_widths());

  const Image a = render_frame(model, 1);
  const Image b = render_frame(loaded, 1);
  CHECK(test::max_abs_diff(a, b) < 1e-5);
}
