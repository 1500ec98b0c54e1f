#include "narcan/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "narcan/frames_io.hpp"
#include "narcan/png_io.hpp"
#include "narcan/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace narcan {

namespace {

constexpr double kTau = 6.28318530717958647692;

// Smooth band-limited color field: gradient + low-frequency sinusoids +
// a few Gaussian blobs, squashed into a comfortable [0.08, 0.92] range so
// the sigmoid-output canonical network can fit it.
struct ColorField {
  struct Blob {
    double cu, cv, sigma;
    std::array<double, 3> tint;
  };
  std::array<double, 3> base{};
  std::array<double, 3> grad_u{}, grad_v{};
  std::array<double, 3> sin_amp{};
  std::array<double, 3> sin_fu{}, sin_fv{}, sin_phase{};
  std::vector<Blob> blobs;

  static ColorField random(Rng& rng) {
    ColorField f;
    for (int c = 0; c < 3; ++c) {
      f.base[c] = rng.uniform(-0.2, 0.2);
      f.grad_u[c] = rng.uniform(-0.5, 0.5);
      f.grad_v[c] = rng.uniform(-0.5, 0.5);
      f.sin_amp[c] = rng.uniform(0.15, 0.4);
      f.sin_fu[c] = rng.uniform(0.4, 1.3);
      f.sin_fv[c] = rng.uniform(0.4, 1.3);
      f.sin_phase[c] = rng.uniform(0.0, kTau);
    }
    const int blob_count = 3;
    for (int i = 0; i < blob_count; ++i) {
      Blob b;
      b.cu = rng.uniform(0.2, 0.8);
      b.cv = rng.uniform(0.2, 0.8);
      b.sigma = rng.uniform(0.1, 0.22);
      for (int c = 0; c < 3; ++c) b.tint[c] = rng.uniform(-0.9, 0.9);
      f.blobs.push_back(b);
    }
    return f;
  }

  std::array<double, 3> operator()(double u, double v) const {
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) {
      double raw = base[c] + grad_u[c] * (u - 0.5) + grad_v[c] * (v - 0.5) +
                   sin_amp[c] * std::sin(kTau * (sin_fu[c] * u +
                                                 sin_fv[c] * v) +
                                         sin_phase[c]);
      for (const Blob& b : blobs) {
        const double d2 = (u - b.cu) * (u - b.cu) + (v - b.cv) * (v - b.cv);
        raw += b.tint[c] * std::exp(-0.5 * d2 / (b.sigma * b.sigma));
      }
      out[c] = 0.5 + 0.42 * std::tanh(raw);
    }
    return out;
  }
};

Matrix3d translation_matrix(double tx, double ty) {
  Matrix3d m = Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return m;
}

// Similarity about the frame center plus a mild perspective row; the
// parameters all vanish at tau = 0 so frame 0 maps identically.
Matrix3d smooth_homography(double tau) {
  const double theta = 0.05 * std::sin(kTau * tau);
  const double scale = 1.0 + 0.045 * std::sin(3.14159265358979 * tau);
  const double tx = 0.06 * std::sin(kTau * tau);
  const double ty = -0.04 * std::sin(3.14159265358979 * tau);
  const double p1 = 0.025 * std::sin(3.14159265358979 * tau);
  const double p2 = -0.02 * std::sin(3.14159265358979 * tau);

  Matrix3d rot = Matrix3d::Identity();
  rot(0, 0) = scale * std::cos(theta);
  rot(0, 1) = -scale * std::sin(theta);
  rot(1, 0) = scale * std::sin(theta);
  rot(1, 1) = scale * std::cos(theta);

  Matrix3d m = translation_matrix(0.5 + tx, 0.5 + ty) * rot *
               translation_matrix(-0.5, -0.5);
  m(2, 0) = p1;
  m(2, 1) = p2;
  return m / m(2, 2);
}

}  // namespace

SceneKind scene_kind_from_name(const std::string& name) {
  if (name == "homography") return SceneKind::Homography;
  if (name == "warp") return SceneKind::HybridWarp;
  if (name == "translation") return SceneKind::TranslationLarge;
  if (name == "translation-linear") return SceneKind::TranslationLinear;
  if (name == "twoshot") return SceneKind::TwoShot;
  raise(ErrorCode::InvalidArgument, "unknown synthetic scene kind: " + name);
}

std::string scene_kind_name(SceneKind kind) {
  switch (kind) {
    case SceneKind::Homography: return "homography";
    case SceneKind::HybridWarp: return "warp";
    case SceneKind::TranslationLarge: return "translation";
    case SceneKind::TranslationLinear: return "translation-linear";
    case SceneKind::TwoShot: return "twoshot";
  }
  return "homography";
}

SyntheticScene make_synthetic_scene(SceneKind kind, int frame_count,
                                    int height, int width, uint64_t seed) {
  if (frame_count < 2 || height < 8 || width < 8)
    raise(ErrorCode::InvalidArgument, "scene needs T >= 2 and 8x8 frames");

  Rng rng(seed);
  SyntheticScene scene;
  scene.kind = kind;
  const ColorField field_a = ColorField::random(rng);
  const ColorField field_b = ColorField::random(rng);
  const int T = frame_count;

  scene.shot_boundary = (kind == SceneKind::TwoShot) ? T / 2 : -1;
  scene.color = [field_a, field_b, boundary = scene.shot_boundary](
                    double u, double v, int t) {
    return (boundary >= 0 && t >= boundary) ? field_b(u, v) : field_a(u, v);
  };

  // Trajectory.
  scene.gt_homography = HomographyTrajectory::identity(T);
  const double warp_amplitude =
      (kind == SceneKind::HybridWarp) ? 2.0 / width : 0.0;
  if (kind == SceneKind::TranslationLinear) {
    scene.step_u = 2.0 / width;
    scene.step_v = 0.0;
  }
  for (int t = 0; t < T; ++t) {
    const double tau = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
    Matrix3d m = Matrix3d::Identity();
    switch (kind) {
      case SceneKind::Homography:
      case SceneKind::HybridWarp:
        m = smooth_homography(tau);
        break;
      case SceneKind::TranslationLarge:
        m = translation_matrix(15.0 / width * std::sin(kTau * tau),
                               6.0 / height * std::sin(3.14159265 * tau));
        break;
      case SceneKind::TranslationLinear:
        m = translation_matrix(scene.step_u * t, scene.step_v * t);
        break;
      case SceneKind::TwoShot: {
        const int local = scene.shot_boundary > 0 && t >= scene.shot_boundary
                              ? t - scene.shot_boundary
                              : t;
        const int len = scene.shot_boundary > 0
                            ? (t >= scene.shot_boundary
                                   ? T - scene.shot_boundary
                                   : scene.shot_boundary)
                            : T;
        const double local_tau =
            len > 1 ? static_cast<double>(local) / (len - 1) : 0.0;
        // Shots are near-static so reconstruction artifacts, not real
        // motion, dominate the temporal metrics.
        m = translation_matrix(0.008 * std::sin(kTau * local_tau),
                               0.006 * std::sin(3.14159265 * local_tau));
        break;
      }
    }
    scene.gt_homography.set_matrix(t, m);
  }

  scene.to_canonical = [traj = scene.gt_homography, warp_amplitude,
                        T](double u, double v, int t) {
    Vector2d q = apply_homography(traj, u, v, t);
    if (warp_amplitude > 0.0) {
      const double tau = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
      q.x() += warp_amplitude * std::sin(kTau * (1.1 * v + 0.8 * tau));
      q.y() += 0.8 * warp_amplitude * std::cos(kTau * (0.9 * u - 0.7 * tau));
    }
    return q;
  };

  // Frames.
  scene.frames.frames.reserve(T);
  for (int t = 0; t < T; ++t) {
    Image frame(height, width, 3);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const Vector2d q =
            scene.to_canonical(frame_u(x, width), frame_v(y, height), t);
        const auto rgb = scene.color(q.x(), q.y(), t);
        for (int c = 0; c < 3; ++c)
          frame.at(y, x, c) = static_cast<float>(rgb[c]);
      }
    scene.frames.frames.push_back(std::move(frame));
  }

  // Canonical raster over everything the frames observe, with margin.
  Bounds bounds{std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
  for (int t = 0; t < T; ++t)
    for (int y = 0; y < height; y += std::max(1, height / 8))
      for (int x = 0; x < width; x += std::max(1, width / 8)) {
        const Vector2d q =
            scene.to_canonical(frame_u(x, width), frame_v(y, height), t);
        bounds.u_min = std::min(bounds.u_min, q.x());
        bounds.v_min = std::min(bounds.v_min, q.y());
        bounds.u_max = std::max(bounds.u_max, q.x());
        bounds.v_max = std::max(bounds.v_max, q.y());
      }
  const double margin = 0.12;
  bounds.u_min -= margin;
  bounds.v_min -= margin;
  bounds.u_max += margin;
  bounds.v_max += margin;
  const CanvasSpec spec = canvas_spec_from_bounds(bounds, 2 * std::max(height, width));

  scene.gt_canonical.origin_u = spec.origin_u;
  scene.gt_canonical.origin_v = spec.origin_v;
  scene.gt_canonical.scale = spec.scale;
  scene.gt_canonical.image = Image(spec.height, spec.width, 3);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      const auto rgb = scene.color(spec.origin_u + x * spec.scale,
                                   spec.origin_v + y * spec.scale, 0);
      for (int c = 0; c < 3; ++c)
        scene.gt_canonical.image.at(y, x, c) = static_cast<float>(rgb[c]);
    }

  // Mask disk in canonical space. The mask raster is finer than the
  // canonical one so nearest-neighbor propagation is not quantization
  // bound.
  scene.mask_center_u = 0.5;
  scene.mask_center_v = 0.45;
  scene.mask_radius = 0.15;
  const CanvasSpec mask_spec =
      canvas_spec_from_bounds(bounds, 6 * std::max(height, width));
  scene.gt_mask_canvas.origin_u = mask_spec.origin_u;
  scene.gt_mask_canvas.origin_v = mask_spec.origin_v;
  scene.gt_mask_canvas.scale = mask_spec.scale;
  scene.gt_mask_canvas.image = Image(mask_spec.height, mask_spec.width, 1);
  for (int y = 0; y < mask_spec.height; ++y)
    for (int x = 0; x < mask_spec.width; ++x) {
      const double du =
          mask_spec.origin_u + x * mask_spec.scale - scene.mask_center_u;
      const double dv =
          mask_spec.origin_v + y * mask_spec.scale - scene.mask_center_v;
      scene.gt_mask_canvas.image.at(y, x, 0) =
          du * du + dv * dv <= scene.mask_radius * scene.mask_radius ? 1.0f
                                                                     : 0.0f;
    }

  scene.gt_masks.reserve(T);
  for (int t = 0; t < T; ++t) {
    Image mask(height, width, 1);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const Vector2d q =
            scene.to_canonical(frame_u(x, width), frame_v(y, height), t);
        const double du = q.x() - scene.mask_center_u;
        const double dv = q.y() - scene.mask_center_v;
        mask.at(y, x, 0) =
            du * du + dv * dv <= scene.mask_radius * scene.mask_radius ? 1.0f
                                                                       : 0.0f;
      }
    scene.gt_masks.push_back(std::move(mask));
  }
  return scene;
}

void write_scene(const SyntheticScene& scene, const std::string& directory) {
  const fs::path root(directory);
  save_frames(scene.frames, (root / "frames").string());
  std::error_code ec;
  fs::create_directories(root / "gt" / "masks", ec);
  export_canonical(scene.gt_canonical, (root / "gt" / "canonical.png").string());

  encode_png_file(scene.gt_mask_canvas.image, (root / "gt" / "mask.png").string());
  json mask_manifest = {
      {"origin_u", scene.gt_mask_canvas.origin_u},
      {"origin_v", scene.gt_mask_canvas.origin_v},
      {"scale", scene.gt_mask_canvas.scale},
      {"height", scene.gt_mask_canvas.height()},
      {"width", scene.gt_mask_canvas.width()},
  };
  std::ofstream mout((root / "gt" / "mask.canonical.json").string());
  mout << mask_manifest.dump(2) << "\n";

  char name[32];
  for (size_t t = 0; t < scene.gt_masks.size(); ++t) {
    std::snprintf(name, sizeof(name), "mask_%05zu.png", t);
    encode_png_file(scene.gt_masks[t], (root / "gt" / "masks" / name).string());
  }

  json traj = json::array();
  for (int t = 0; t < scene.gt_homography.frame_count(); ++t) {
    json row = json::array();
    for (int c = 0; c < 8; ++c) row.push_back(scene.gt_homography.params(t, c));
    traj.push_back(row);
  }
  std::ofstream tout((root / "gt" / "trajectory.json").string());
  tout << traj.dump() << "\n";

  json info = {
      {"kind", scene_kind_name(scene.kind)},
      {"T", scene.frames.frame_count()},
      {"H", scene.frames.height()},
      {"W", scene.frames.width()},
      {"step_u", scene.step_u},
      {"step_v", scene.step_v},
      {"mask_center_u", scene.mask_center_u},
      {"mask_center_v", scene.mask_center_v},
      {"mask_radius", scene.mask_radius},
      {"shot_boundary", scene.shot_boundary},
  };
  std::ofstream iout((root / "gt" / "scene.json").string());
  iout << info.dump(2) << "\n";
}

}  // namespace narcan
