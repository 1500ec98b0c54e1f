#include "narcan/fields.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace narcan {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDegenerateEps = 1e-8;
constexpr int kBoundsEdgeSamples = 16;  // per edge; 64 boundary points
}  // namespace

void PosEnc::encode(double x, double* dst) const {
  dst[0] = x;
  double freq = kPi;
  for (int k = 0; k < freqs; ++k) {
    dst[1 + 2 * k] = std::sin(freq * x);
    dst[2 + 2 * k] = std::cos(freq * x);
    freq *= 2.0;
  }
}

void PosEnc::encode_deriv(double x, double* dst) const {
  dst[0] = 1.0;
  double freq = kPi;
  for (int k = 0; k < freqs; ++k) {
    dst[1 + 2 * k] = freq * std::cos(freq * x);
    dst[2 + 2 * k] = -freq * std::sin(freq * x);
    freq *= 2.0;
  }
}

HomographyTrajectory HomographyTrajectory::identity(int frame_count) {
  HomographyTrajectory traj;
  traj.params = MatrixXd::Zero(frame_count, 8);
  traj.params.col(0).setOnes();  // h11
  traj.params.col(4).setOnes();  // h22
  return traj;
}

Matrix3d HomographyTrajectory::matrix(int t) const {
  Matrix3d m;
  m << params(t, 0), params(t, 1), params(t, 2),
       params(t, 3), params(t, 4), params(t, 5),
       params(t, 6), params(t, 7), 1.0;
  return m;
}

void HomographyTrajectory::set_matrix(int t, const Matrix3d& m) {
  const double h33 = m(2, 2);
  if (std::abs(h33) < kDegenerateEps)
    raise(ErrorCode::DegenerateHomography, "h33 is zero; cannot normalize");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      if (r == 2 && c == 2) continue;
      params(t, r * 3 + c) = m(r, c) / h33;
    }
}

Vector2d apply_homography(const HomographyTrajectory& traj, double u, double v,
                          int t_index) {
  if (t_index < 0 || t_index >= traj.frame_count())
    raise(ErrorCode::InvalidArgument, "t_index out of range");
  const auto& p = traj.params;
  const double w = p(t_index, 6) * u + p(t_index, 7) * v + 1.0;
  if (std::abs(w) < kDegenerateEps)
    raise(ErrorCode::DegenerateHomography,
          "denominator vanished at frame " + std::to_string(t_index));
  return {(p(t_index, 0) * u + p(t_index, 1) * v + p(t_index, 2)) / w,
          (p(t_index, 3) * u + p(t_index, 4) * v + p(t_index, 5)) / w};
}

void ResidualField::encode_row(double u, double v, double t_norm,
                               double* dst) const {
  pe_spatial.encode(u, dst);
  pe_spatial.encode(v, dst + pe_spatial.dim());
  pe_time.encode(t_norm, dst + 2 * pe_spatial.dim());
}

void CanonicalField::encode_row(double u, double v, double* dst) const {
  pe.encode(u, dst);
  pe.encode(v, dst + pe.dim());
}

NarcanModel make_model(int frame_count, int frame_height, int frame_width,
                       const ModelSpec& spec, Rng& rng) {
  NarcanModel model;
  model.frame_count = frame_count;
  model.frame_height = frame_height;
  model.frame_width = frame_width;
  model.homography = HomographyTrajectory::identity(frame_count);
  model.residual.pe_spatial.freqs = spec.pe_freqs_spatial;
  model.residual.pe_time.freqs = spec.pe_freqs_time;
  model.residual.mlp = Mlp(model.residual.input_dim(), spec.hidden_g, 2,
                           Mlp::Output::Linear, rng, /*zero_output=*/true);
  model.canonical.pe.freqs = spec.pe_freqs_canonical;
  model.canonical.mlp = Mlp(model.canonical.input_dim(), spec.hidden_f, 3,
                            Mlp::Output::Sigmoid, rng, /*zero_output=*/true);
  return model;
}

Vector2d deform(const NarcanModel& model, double u, double v, int t_index) {
  const Vector2d h = apply_homography(model.homography, u, v, t_index);
  // A single row is contiguous in either storage order.
  MatrixXd row(1, model.residual.input_dim());
  model.residual.encode_row(u, v, model.t_norm(t_index), row.data());
  const MatrixXd g = model.residual.mlp.forward(row);
  return {h.x() + g(0, 0), h.y() + g(0, 1)};
}

ModelGrads ModelGrads::like(const NarcanModel& model) {
  ModelGrads grads;
  grads.homography = MatrixXd::Zero(model.homography.params.rows(), 8);
  grads.residual = model.residual.mlp.zero_grads();
  grads.canonical = model.canonical.mlp.zero_grads();
  return grads;
}

void ModelGrads::set_zero() {
  homography.setZero();
  residual.set_zero();
  canonical.set_zero();
}

void model_forward(const NarcanModel& model, const VectorXd& u,
                   const VectorXd& v, const std::vector<int>& t_index,
                   bool use_residual, BatchForward& fwd) {
  const long n = u.size();
  fwd.u = u;
  fwd.v = v;
  fwd.t_index = t_index;
  fwd.residual_active = use_residual;

  // Homography projection.
  fwd.uh.resize(n);
  fwd.vh.resize(n);
  fwd.hw.resize(n);
  const auto& p = model.homography.params;
  for (long i = 0; i < n; ++i) {
    const int t = t_index[i];
    const double w = p(t, 6) * u[i] + p(t, 7) * v[i] + 1.0;
    if (std::abs(w) < kDegenerateEps)
      raise(ErrorCode::DegenerateHomography,
            "denominator vanished at frame " + std::to_string(t));
    fwd.hw[i] = w;
    fwd.uh[i] = (p(t, 0) * u[i] + p(t, 1) * v[i] + p(t, 2)) / w;
    fwd.vh[i] = (p(t, 3) * u[i] + p(t, 4) * v[i] + p(t, 5)) / w;
  }

  // Residual network.
  if (use_residual) {
    fwd.xg.resize(n, model.residual.input_dim());
    std::vector<double> row(model.residual.input_dim());
    for (long i = 0; i < n; ++i) {
      model.residual.encode_row(u[i], v[i], model.t_norm(t_index[i]),
                                row.data());
      for (int j = 0; j < static_cast<int>(row.size()); ++j)
        fwd.xg(i, j) = row[j];
    }
    fwd.g_out = model.residual.mlp.forward(fwd.xg, fwd.g_cache);
  } else {
    fwd.g_out = MatrixXd::Zero(n, 2);
  }

  fwd.u_prime = fwd.uh + fwd.g_out.col(0);
  fwd.v_prime = fwd.vh + fwd.g_out.col(1);

  // Canonical network.
  fwd.xf.resize(n, model.canonical.input_dim());
  std::vector<double> row(model.canonical.input_dim());
  for (long i = 0; i < n; ++i) {
    model.canonical.encode_row(fwd.u_prime[i], fwd.v_prime[i], row.data());
    for (int j = 0; j < static_cast<int>(row.size()); ++j)
      fwd.xf(i, j) = row[j];
  }
  fwd.rgb = model.canonical.mlp.forward(fwd.xf, fwd.f_cache);
}

void model_backward(const NarcanModel& model, const BatchForward& fwd,
                    const MatrixXd& d_rgb, bool train_homography,
                    ModelGrads& grads) {
  const long n = fwd.u.size();
  const MatrixXd d_xf =
      model.canonical.mlp.backward(fwd.f_cache, d_rgb, grads.canonical);

  // Chain through the canonical encoding to (u', v').
  const int cdim = model.canonical.pe.dim();
  VectorXd d_up(n), d_vp(n);
  std::vector<double> deriv(cdim);
  for (long i = 0; i < n; ++i) {
    double acc_u = 0.0, acc_v = 0.0;
    model.canonical.pe.encode_deriv(fwd.u_prime[i], deriv.data());
    for (int j = 0; j < cdim; ++j) acc_u += d_xf(i, j) * deriv[j];
    model.canonical.pe.encode_deriv(fwd.v_prime[i], deriv.data());
    for (int j = 0; j < cdim; ++j) acc_v += d_xf(i, cdim + j) * deriv[j];
    d_up[i] = acc_u;
    d_vp[i] = acc_v;
  }

  if (fwd.residual_active) {
    MatrixXd d_g(n, 2);
    d_g.col(0) = d_up;
    d_g.col(1) = d_vp;
    model.residual.mlp.backward(fwd.g_cache, d_g, grads.residual);
  }

  if (train_homography) {
    for (long i = 0; i < n; ++i) {
      const int t = fwd.t_index[i];
      const double u = fwd.u[i], v = fwd.v[i];
      const double w = fwd.hw[i];
      const double gu = d_up[i] / w;
      const double gv = d_vp[i] / w;
      grads.homography(t, 0) += gu * u;
      grads.homography(t, 1) += gu * v;
      grads.homography(t, 2) += gu;
      grads.homography(t, 3) += gv * u;
      grads.homography(t, 4) += gv * v;
      grads.homography(t, 5) += gv;
      grads.homography(t, 6) -= (gu * fwd.uh[i] + gv * fwd.vh[i]) * u;
      grads.homography(t, 7) -= (gu * fwd.uh[i] + gv * fwd.vh[i]) * v;
    }
  }
}

MatrixXd canonical_forward(const CanonicalField& field, const VectorXd& u,
                           const VectorXd& v, MatrixXd* xf_out,
                           Mlp::Cache* cache_out) {
  const long n = u.size();
  MatrixXd xf(n, field.input_dim());
  std::vector<double> row(field.input_dim());
  for (long i = 0; i < n; ++i) {
    field.encode_row(u[i], v[i], row.data());
    for (int j = 0; j < static_cast<int>(row.size()); ++j) xf(i, j) = row[j];
  }
  Mlp::Cache local;
  Mlp::Cache& cache = cache_out ? *cache_out : local;
  MatrixXd rgb = field.mlp.forward(xf, cache);
  if (xf_out) *xf_out = std::move(xf);
  return rgb;
}

void canonical_backward(const CanonicalField& field, const Mlp::Cache& cache,
                        const MatrixXd& d_rgb, MlpGrads& grads) {
  field.mlp.backward(cache, d_rgb, grads);
}

Image render_frame(const NarcanModel& model, int t_index) {
  const int h = model.frame_height, w = model.frame_width;
  Image out(h, w, 3);
  const long n = static_cast<long>(h) * w;
  VectorXd u(n), v(n);
  std::vector<int> t(n, t_index);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      u[static_cast<long>(y) * w + x] = frame_u(x, w);
      v[static_cast<long>(y) * w + x] = frame_v(y, h);
    }
  BatchForward fwd;
  model_forward(model, u, v, t, /*use_residual=*/true, fwd);
  for (long i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      out.data[i * 3 + c] = static_cast<float>(fwd.rgb(i, c));
  return out;
}

RasterCanvas render_canonical_raster(const NarcanModel& model,
                                     const CanvasSpec& spec) {
  if (spec.height < 8 || spec.width < 8)
    raise(ErrorCode::InvalidArgument, "canvas must be at least 8x8");
  RasterCanvas canvas;
  canvas.origin_u = spec.origin_u;
  canvas.origin_v = spec.origin_v;
  canvas.scale = spec.scale;
  canvas.image = Image(spec.height, spec.width, 3);
  const long n = static_cast<long>(spec.height) * spec.width;
  VectorXd u(n), v(n);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      u[static_cast<long>(y) * spec.width + x] = spec.origin_u + x * spec.scale;
      v[static_cast<long>(y) * spec.width + x] = spec.origin_v + y * spec.scale;
    }
  const MatrixXd rgb = canonical_forward(model.canonical, u, v);
  for (long i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      canvas.image.data[i * 3 + c] = static_cast<float>(rgb(i, c));
  return canvas;
}

Bounds canonical_bounds(const NarcanModel& model, double margin) {
  if (margin < 0.0)
    raise(ErrorCode::InvalidArgument, "margin must be non-negative");
  const int w = model.frame_width, h = model.frame_height;
  const double u0 = frame_u(0, w), u1 = frame_u(w - 1, w);
  const double v0 = frame_v(0, h), v1 = frame_v(h - 1, h);

  std::vector<Vector2d> pattern;
  pattern.reserve(4 * kBoundsEdgeSamples + 1);
  for (int i = 0; i < kBoundsEdgeSamples; ++i) {
    const double s = static_cast<double>(i) / kBoundsEdgeSamples;
    pattern.emplace_back(u0 + s * (u1 - u0), v0);
    pattern.emplace_back(u1, v0 + s * (v1 - v0));
    pattern.emplace_back(u1 - s * (u1 - u0), v1);
    pattern.emplace_back(u0, v1 - s * (v1 - v0));
  }
  pattern.emplace_back(0.5 * (u0 + u1), 0.5 * (v0 + v1));

  Bounds b{std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};
  for (int t = 0; t < model.frame_count; ++t)
    for (const Vector2d& p : pattern) {
      const Vector2d q = deform(model, p.x(), p.y(), t);
      b.u_min = std::min(b.u_min, q.x());
      b.v_min = std::min(b.v_min, q.y());
      b.u_max = std::max(b.u_max, q.x());
      b.v_max = std::max(b.v_max, q.y());
    }
  b.u_min -= margin;
  b.v_min -= margin;
  b.u_max += margin;
  b.v_max += margin;
  return b;
}

CanvasSpec canvas_spec_from_bounds(const Bounds& bounds, int long_side) {
  CanvasSpec spec;
  const double du = bounds.u_max - bounds.u_min;
  const double dv = bounds.v_max - bounds.v_min;
  const double extent = std::max(du, dv);
  spec.scale = extent > 0.0 ? extent / long_side : 1.0 / long_side;
  spec.width = std::max(8, static_cast<int>(std::lround(du / spec.scale)));
  spec.height = std::max(8, static_cast<int>(std::lround(dv / spec.scale)));
  spec.origin_u = bounds.u_min + 0.5 * spec.scale;
  spec.origin_v = bounds.v_min + 0.5 * spec.scale;
  return spec;
}

// ---------------------------------------------------------------------------
// Checkpoint io

void write_f32_le(const std::string& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoFailure, "cannot write " + path);
  std::vector<uint8_t> bytes(values.size() * 4);
  for (size_t i = 0; i < values.size(); ++i) {
    uint32_t bits;
    std::memcpy(&bits, &values[i], 4);
    bytes[4 * i + 0] = static_cast<uint8_t>(bits & 0xff);
    bytes[4 * i + 1] = static_cast<uint8_t>((bits >> 8) & 0xff);
    bytes[4 * i + 2] = static_cast<uint8_t>((bits >> 16) & 0xff);
    bytes[4 * i + 3] = static_cast<uint8_t>((bits >> 24) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::IoFailure, "short write to " + path);
}

std::vector<float> read_f32_le(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) raise(ErrorCode::IoFailure, "cannot read " + path);
  const std::streamsize size = in.tellg();
  if (size % 4 != 0)
    raise(ErrorCode::DecodeFailure, path + ": size not a multiple of 4");
  in.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) raise(ErrorCode::IoFailure, "short read from " + path);
  std::vector<float> values(bytes.size() / 4);
  for (size_t i = 0; i < values.size(); ++i) {
    const uint32_t bits = static_cast<uint32_t>(bytes[4 * i]) |
                          (static_cast<uint32_t>(bytes[4 * i + 1]) << 8) |
                          (static_cast<uint32_t>(bytes[4 * i + 2]) << 16) |
                          (static_cast<uint32_t>(bytes[4 * i + 3]) << 24);
    std::memcpy(&values[i], &bits, 4);
  }
  return values;
}

void save_model(const NarcanModel& model, const std::string& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  json manifest = {
      {"version", 1},
      {"T", model.frame_count},
      {"H", model.frame_height},
      {"W", model.frame_width},
      {"pe_freqs_spatial", model.residual.pe_spatial.freqs},
      {"pe_freqs_time", model.residual.pe_time.freqs},
      {"pe_freqs_canonical", model.canonical.pe.freqs},
      {"layers_g", model.residual.mlp.layer_widths()},
      {"layers_f", model.canonical.mlp.layer_widths()},
  };
  std::ofstream mf((fs::path(directory) / "manifest.json").string());
  if (!mf) raise(ErrorCode::IoFailure, "cannot write manifest in " + directory);
  mf << manifest.dump(2) << "\n";

  std::vector<float> h;
  h.reserve(static_cast<size_t>(model.homography.params.size()));
  for (int t = 0; t < model.homography.frame_count(); ++t)
    for (int c = 0; c < 8; ++c)
      h.push_back(static_cast<float>(model.homography.params(t, c)));
  write_f32_le((fs::path(directory) / "homography.bin").string(), h);

  std::vector<float> g;
  model.residual.mlp.append_params(g);
  write_f32_le((fs::path(directory) / "residual.bin").string(), g);

  std::vector<float> f;
  model.canonical.mlp.append_params(f);
  write_f32_le((fs::path(directory) / "canonical.bin").string(), f);
}

NarcanModel load_model(const std::string& directory) {
  std::ifstream mf((fs::path(directory) / "manifest.json").string());
  if (!mf)
    raise(ErrorCode::ManifestMissing, directory + ": manifest.json not found");
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    raise(ErrorCode::DecodeFailure,
          directory + "/manifest.json: " + e.what());
  }

  NarcanModel model;
  try {
    model.frame_count = manifest.at("T").get<int>();
    model.frame_height = manifest.at("H").get<int>();
    model.frame_width = manifest.at("W").get<int>();
    ModelSpec spec;
    spec.pe_freqs_spatial = manifest.at("pe_freqs_spatial").get<int>();
    spec.pe_freqs_time = manifest.at("pe_freqs_time").get<int>();
    spec.pe_freqs_canonical = manifest.at("pe_freqs_canonical").get<int>();
    auto layers_g = manifest.at("layers_g").get<std::vector<int>>();
    auto layers_f = manifest.at("layers_f").get<std::vector<int>>();
    if (layers_g.empty() || layers_g.back() != 2)
      raise(ErrorCode::DecodeFailure, "layers_g must end in 2");
    if (layers_f.empty() || layers_f.back() != 3)
      raise(ErrorCode::DecodeFailure, "layers_f must end in 3");
    spec.hidden_g.assign(layers_g.begin(), layers_g.end() - 1);
    spec.hidden_f.assign(layers_f.begin(), layers_f.end() - 1);
    Rng rng(0);  // weights are overwritten below
    model = make_model(model.frame_count, model.frame_height,
                       model.frame_width, spec, rng);
  } catch (const json::exception& e) {
    raise(ErrorCode::DecodeFailure,
          directory + "/manifest.json: " + e.what());
  }

  const auto h = read_f32_le((fs::path(directory) / "homography.bin").string());
  if (static_cast<long>(h.size()) != model.homography.params.size())
    raise(ErrorCode::DecodeFailure, directory + ": homography.bin size");
  for (int t = 0; t < model.homography.frame_count(); ++t)
    for (int c = 0; c < 8; ++c)
      model.homography.params(t, c) = h[static_cast<size_t>(t) * 8 + c];

  const auto g = read_f32_le((fs::path(directory) / "residual.bin").string());
  if (model.residual.mlp.read_params(g.data(), g.size()) != g.size())
    raise(ErrorCode::DecodeFailure, directory + ": residual.bin size");
  const auto f = read_f32_le((fs::path(directory) / "canonical.bin").string());
  if (model.canonical.mlp.read_params(f.data(), f.size()) != f.size())
    raise(ErrorCode::DecodeFailure, directory + ": canonical.bin size");
  return model;
}

}  // namespace narcan
