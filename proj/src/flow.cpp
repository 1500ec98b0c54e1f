#include "narcan/flow.hpp"

#include <algorithm>
#include <cmath>

namespace narcan {

FlowField ZeroFlowBackend::compute(const Image& a, const Image& b, int, int) {
  if (!a.same_shape(b))
    raise(ErrorCode::ShapeMismatch, "flow: image shapes differ");
  return FlowField(a.height, a.width);
}

FlowField AnalyticFlowBackend::compute(const Image& a, const Image&, int index_a,
                                       int index_b) {
  return fn_(index_a, index_b, a.height, a.width);
}

FlowField BlockMatchingFlow::compute(const Image& a, const Image& b, int, int) {
  if (!a.same_shape(b))
    raise(ErrorCode::ShapeMismatch, "flow: image shapes differ");
  const int h = a.height, w = a.width, c = a.channels;
  const int half = patch_ / 2;
  FlowField flow(h, w);

  // Candidate displacements ordered by |d|^2 then lexicographically, so
  // the zero shift wins all ties.
  std::vector<std::pair<int, int>> candidates;
  candidates.reserve((2 * radius_ + 1) * (2 * radius_ + 1));
  for (int dy = -radius_; dy <= radius_; ++dy)
    for (int dx = -radius_; dx <= radius_; ++dx) candidates.emplace_back(dy, dx);
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& l, const auto& r) {
              const int ln = l.first * l.first + l.second * l.second;
              const int rn = r.first * r.first + r.second * r.second;
              return ln != rn ? ln < rn : l < r;
            });

#pragma omp parallel for schedule(dynamic, 4)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Patch variance in a; textureless -> invalid.
      double mean = 0.0, sq = 0.0;
      int count = 0;
      for (int py = -half; py < patch_ - half; ++py)
        for (int px = -half; px < patch_ - half; ++px) {
          const int yy = std::clamp(y + py, 0, h - 1);
          const int xx = std::clamp(x + px, 0, w - 1);
          for (int ch = 0; ch < c; ++ch) {
            const double v = a.at(yy, xx, ch);
            mean += v;
            sq += v * v;
            ++count;
          }
        }
      mean /= count;
      const double variance = sq / count - mean * mean;
      if (variance < var_threshold_) {
        flow.valid[flow.index(y, x)] = 0;
        continue;
      }

      double best = std::numeric_limits<double>::infinity();
      int best_dy = 0, best_dx = 0;
      for (const auto& [dy, dx] : candidates) {
        double ssd = 0.0;
        for (int py = -half; py < patch_ - half; ++py)
          for (int px = -half; px < patch_ - half; ++px) {
            const int ya = std::clamp(y + py, 0, h - 1);
            const int xa = std::clamp(x + px, 0, w - 1);
            const int yb = std::clamp(y + dy + py, 0, h - 1);
            const int xb = std::clamp(x + dx + px, 0, w - 1);
            for (int ch = 0; ch < c; ++ch) {
              const double d = a.at(ya, xa, ch) - b.at(yb, xb, ch);
              ssd += d * d;
            }
            if (ssd >= best) break;
          }
        if (ssd < best) {
          best = ssd;
          best_dy = dy;
          best_dx = dx;
        }
      }
      flow.du[flow.index(y, x)] = static_cast<float>(best_dx) / w;
      flow.dv[flow.index(y, x)] = static_cast<float>(best_dy) / h;
    }
  }
  return flow;
}

FlowField flow_between(const Image& a, const Image& b, FlowBackend& backend,
                       int index_a, int index_b) {
  if (!a.same_shape(b))
    raise(ErrorCode::ShapeMismatch, "flow_between: image shapes differ");
  return backend.compute(a, b, index_a, index_b);
}

Image warp_by_flow(const Image& src, const FlowField& flow,
                   std::vector<uint8_t>* sample_ok) {
  if (src.height != flow.height || src.width != flow.width)
    raise(ErrorCode::DimensionMismatch, "warp: flow/image dimensions differ");
  const int h = src.height, w = src.width, c = src.channels;
  Image out(h, w, c);
  if (sample_ok) sample_ok->assign(static_cast<size_t>(h) * w, 0);
  std::vector<float> sample(c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = flow.index(y, x);
      if (!flow.valid[i]) continue;
      double sx = x - static_cast<double>(flow.du[i]) * w;
      double sy = y - static_cast<double>(flow.dv[i]) * h;
      // Normalized float storage perturbs integer pixel shifts by ~1e-7;
      // snap so integer flows resample exactly.
      if (std::abs(sx - std::round(sx)) < 1e-4) sx = std::round(sx);
      if (std::abs(sy - std::round(sy)) < 1e-4) sy = std::round(sy);
      if (sx < -0.5 || sx > w - 0.5 || sy < -0.5 || sy > h - 0.5) continue;
      bilinear_sample(src, sx, sy, sample.data());
      for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = sample[ch];
      if (sample_ok) (*sample_ok)[i] = 1;
    }
  return out;
}

std::unique_ptr<FlowBackend> make_flow_backend(const std::string& name) {
  if (name == "zero") return std::make_unique<ZeroFlowBackend>();
  if (name == "block" || name.empty())
    return std::make_unique<BlockMatchingFlow>();
  raise(ErrorCode::InvalidArgument, "unknown flow backend: " + name);
}

Matrix3d homography_from_flow(const FlowField& flow) {
  // Correspondences (u,v) -> (u + du, v + dv) in normalized coordinates,
  // subsampled on a stride-4 grid. Border pixels are skipped: clamped
  // block-matching patches bias the flow there.
  std::vector<double> rows;
  std::vector<double> rhs;
  const int h = flow.height, w = flow.width;
  const int margin = std::min({8, h / 4, w / 4});
  for (int y = margin; y < h - margin; y += 4)
    for (int x = margin; x < w - margin; x += 4) {
      const size_t i = flow.index(y, x);
      if (!flow.valid[i]) continue;
      const double u = frame_u(x, w), v = frame_v(y, h);
      const double up = u + flow.du[i], vp = v + flow.dv[i];
      rows.insert(rows.end(), {u, v, 1, 0, 0, 0, -up * u, -up * v});
      rhs.push_back(up);
      rows.insert(rows.end(), {0, 0, 0, u, v, 1, -vp * u, -vp * v});
      rhs.push_back(vp);
    }
  if (rhs.size() < 16) return Matrix3d::Identity();  // not enough support

  const long n = static_cast<long>(rhs.size());
  MatrixXd A(n, 8);
  VectorXd bvec(n);
  for (long r = 0; r < n; ++r) {
    for (int cidx = 0; cidx < 8; ++cidx) A(r, cidx) = rows[r * 8 + cidx];
    bvec[r] = rhs[r];
  }
  const VectorXd hsol = A.colPivHouseholderQr().solve(bvec);
  Matrix3d m;
  m << hsol[0], hsol[1], hsol[2], hsol[3], hsol[4], hsol[5], hsol[6], hsol[7],
      1.0;
  return m;
}

HomographyTrajectory chain_homographies_from_flow(const FrameSequence& seq,
                                                  FlowBackend& backend) {
  const int T = seq.frame_count();
  HomographyTrajectory traj = HomographyTrajectory::identity(T);
  Matrix3d accumulated = Matrix3d::Identity();
  for (int t = 0; t + 1 < T; ++t) {
    const FlowField flow =
        flow_between(seq.frames[t], seq.frames[t + 1], backend, t, t + 1);
    const Matrix3d step = homography_from_flow(flow);  // frame t -> t+1
    accumulated = accumulated * step.inverse();
    Matrix3d normalized = accumulated / accumulated(2, 2);
    traj.set_matrix(t + 1, normalized);
  }
  return traj;
}

}  // namespace narcan
