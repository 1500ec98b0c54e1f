#include "narcan/training.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "json.hpp"
#include "narcan/metrics.hpp"
#include "narcan/rng.hpp"

using nlohmann::json;

namespace narcan {

void PriorSchedule::validate() const {
  long prev_end = std::numeric_limits<long>::min();
  for (const SchedulePhase& p : phases) {
    if (p.iter_start >= p.iter_end)
      raise(ErrorCode::InvalidArgument, "schedule phase must have start < end");
    if (p.iter_start < prev_end)
      raise(ErrorCode::InvalidArgument,
            "schedule phases must be ascending and non-overlapping");
    if (p.update_every < 1)
      raise(ErrorCode::InvalidArgument, "update_every must be >= 1");
    if (!(p.noise_strength >= 0.0 && p.noise_strength <= 1.0))
      raise(ErrorCode::InvalidArgument, "noise_strength must be in [0,1]");
    prev_end = p.iter_end;
  }
  if (!phases.empty() && prior_start_iter > phases.front().iter_start)
    raise(ErrorCode::InvalidArgument,
          "prior_start_iter must not exceed the first phase start");
}

PriorSchedule default_schedule() {
  PriorSchedule s;
  s.prior_start_iter = 1000;
  s.phases = {
      {1000, 3000, 0.4, 10},
      {3000, 5000, 0.3, 100},
      {5000, 12000, 0.2, 2000},
  };
  return s;
}

ScheduleQuery schedule_query(const PriorSchedule& schedule, long iter) {
  ScheduleQuery q;
  if (iter < schedule.prior_start_iter) return q;
  for (const SchedulePhase& p : schedule.phases) {
    if (iter >= p.iter_start && iter < p.iter_end) {
      q.active = true;
      q.noise_strength = p.noise_strength;
      q.regenerate_target = (iter - p.iter_start) % p.update_every == 0;
      return q;
    }
  }
  return q;
}

long count_target_generations(const PriorSchedule& schedule) {
  long count = 0;
  for (const SchedulePhase& p : schedule.phases)
    count += (p.iter_end - 1 - p.iter_start) / p.update_every + 1;
  return count;
}

double reconstruction_loss(const NarcanModel& model, const FrameSequence& seq,
                           std::span<const PixelSample> batch) {
  const long n = static_cast<long>(batch.size());
  if (n == 0) return 0.0;
  VectorXd u(n), v(n);
  std::vector<int> t(n);
  for (long i = 0; i < n; ++i) {
    u[i] = frame_u(batch[i].x, seq.width());
    v[i] = frame_v(batch[i].y, seq.height());
    t[i] = batch[i].t;
  }
  BatchForward fwd;
  model_forward(model, u, v, t, /*use_residual=*/true, fwd);
  double acc = 0.0;
  for (long i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      const double d =
          fwd.rgb(i, c) - seq.frames[batch[i].t].at(batch[i].y, batch[i].x, c);
      acc += d * d;
    }
  return acc / static_cast<double>(3 * n);
}

void TrainReport::append_jsonl(std::ostream& out, int log_every,
                               int segment) const {
  for (const IterRecord& r : iterations) {
    if (r.iter % log_every != 0 && !r.prior_update) continue;
    json line = {
        {"segment", segment}, {"iter", r.iter},       {"loss", r.loss},
        {"recon", r.recon},   {"prior", r.prior},     {"prior_update", r.prior_update},
    };
    out << line.dump() << "\n";
  }
  json summary = {
      {"segment", segment},
      {"final_psnr_per_frame", final_psnr_per_frame},
      {"mean_final_psnr", mean_final_psnr},
      {"prior_updates", prior_update_iters},
  };
  out << summary.dump() << "\n";
}

namespace {

struct CanvasGrid {
  VectorXd u, v;
};

CanvasGrid grid_for_spec(const CanvasSpec& spec) {
  const long n = static_cast<long>(spec.height) * spec.width;
  CanvasGrid g{VectorXd(n), VectorXd(n)};
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      g.u[static_cast<long>(y) * spec.width + x] = spec.origin_u + x * spec.scale;
      g.v[static_cast<long>(y) * spec.width + x] = spec.origin_v + y * spec.scale;
    }
  return g;
}

RasterCanvas canvas_from_matrix(const CanvasSpec& spec, const MatrixXd& rgb) {
  RasterCanvas canvas;
  canvas.origin_u = spec.origin_u;
  canvas.origin_v = spec.origin_v;
  canvas.scale = spec.scale;
  canvas.image = Image(spec.height, spec.width, 3);
  for (long i = 0; i < rgb.rows(); ++i)
    for (int c = 0; c < 3; ++c)
      canvas.image.data[i * 3 + c] = static_cast<float>(rgb(i, c));
  return canvas;
}

}  // namespace

TrainReport train(const FrameSequence& seq, NarcanModel& model,
                  const TrainConfig& cfg, const PriorSchedule& schedule,
                  PriorProvider* provider) {
  seq.validate();
  schedule.validate();
  if (cfg.total_iters < 1)
    raise(ErrorCode::InvalidArgument, "total_iters must be >= 1");
  if (model.frame_count != seq.frame_count() ||
      model.frame_height != seq.height() || model.frame_width != seq.width())
    raise(ErrorCode::DimensionMismatch, "model/sequence dimensions differ");
  const bool prior_on = cfg.use_prior && cfg.lambda_prior > 0.0;
  if (prior_on && provider == nullptr)
    raise(ErrorCode::InvalidArgument, "use_prior requires a prior provider");

  const auto start_time = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);

  ModelGrads grads = ModelGrads::like(model);
  AdamMatrixState adam_h = AdamMatrixState::like(model.homography.params);
  AdamState adam_g = AdamState::like(model.residual.mlp);
  AdamState adam_f = AdamState::like(model.canonical.mlp);

  const int T = seq.frame_count(), H = seq.height(), W = seq.width();
  const long n = cfg.batch_pixels;
  VectorXd bu(n), bv(n);
  std::vector<int> bt(n);
  MatrixXd gt(n, 3);

  // Cached prior target; regenerated exactly when the schedule says so.
  bool have_target = false;
  CanvasSpec target_spec;
  CanvasGrid target_grid;
  MatrixXd target_rgb;

  TrainReport report;
  report.iterations.reserve(cfg.total_iters);

  for (long iter = 0; iter < cfg.total_iters; ++iter) {
    // Uniform (t, pixel) batch.
    for (long i = 0; i < n; ++i) {
      const int t = static_cast<int>(rng.uniform_int(T));
      const int x = static_cast<int>(rng.uniform_int(W));
      const int y = static_cast<int>(rng.uniform_int(H));
      bt[i] = t;
      bu[i] = frame_u(x, W);
      bv[i] = frame_v(y, H);
      const Image& frame = seq.frames[t];
      for (int c = 0; c < 3; ++c) gt(i, c) = frame.at(y, x, c);
    }

    grads.set_zero();
    BatchForward fwd;
    double recon = 0.0;
    double prior_loss = 0.0;
    bool regenerated = false;
    try {
      model_forward(model, bu, bv, bt, cfg.use_residual, fwd);
      MatrixXd diff = fwd.rgb - gt;
      recon = diff.squaredNorm() / static_cast<double>(diff.size());
      MatrixXd d_rgb =
          diff * (2.0 * cfg.lambda_recon / static_cast<double>(diff.size()));
      model_backward(model, fwd, d_rgb, cfg.use_homography, grads);

      const ScheduleQuery q = schedule_query(schedule, iter);
      if (prior_on && q.active) {
        if (q.regenerate_target || !have_target) {
          const Bounds bounds = canonical_bounds(model, cfg.bounds_margin);
          target_spec =
              canvas_spec_from_bounds(bounds, cfg.prior_raster_long_side);
          target_grid = grid_for_spec(target_spec);
          const MatrixXd current_rgb = canonical_forward(
              model.canonical, target_grid.u, target_grid.v);
          RasterCanvas current = canvas_from_matrix(target_spec, current_rgb);
          RasterCanvas target =
              provider->generate_target(current, q.noise_strength,
                                        cfg.prior_prompt, cfg.seed + iter);
          target_rgb.resize(current_rgb.rows(), 3);
          for (long i = 0; i < current_rgb.rows(); ++i)
            for (int c = 0; c < 3; ++c)
              target_rgb(i, c) = target.image.data[i * 3 + c];
          have_target = true;
          regenerated = true;
          report.prior_update_iters.push_back(iter);
        }
        Mlp::Cache cache;
        const MatrixXd current_rgb = canonical_forward(
            model.canonical, target_grid.u, target_grid.v, nullptr, &cache);
        MatrixXd pdiff = current_rgb - target_rgb;
        prior_loss = pdiff.squaredNorm() / static_cast<double>(pdiff.size());
        MatrixXd d_prior =
            pdiff * (2.0 * cfg.lambda_prior / static_cast<double>(pdiff.size()));
        canonical_backward(model.canonical, cache, d_prior, grads.canonical);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateHomography)
        raise(ErrorCode::DegenerateHomography,
              std::string(e.what()) + " (training iteration " +
                  std::to_string(iter) + ")");
      if (e.code() == ErrorCode::BackendUnavailable &&
          !cfg.abort_checkpoint_dir.empty()) {
        save_model(model, cfg.abort_checkpoint_dir);
        raise(ErrorCode::BackendUnavailable,
              std::string(e.what()) + " (checkpoint saved to " +
                  cfg.abort_checkpoint_dir + ")");
      }
      throw;
    }

    const double total = cfg.lambda_recon * recon +
                         (prior_loss > 0.0 ? cfg.lambda_prior * prior_loss : 0.0);
    if (!std::isfinite(total))
      raise(ErrorCode::NumericFailure,
            "non-finite loss at iteration " + std::to_string(iter));
    report.iterations.push_back({iter, total, recon, prior_loss, regenerated});

    if (cfg.use_homography)
      adam_h.update(model.homography.params, grads.homography,
                    cfg.lr_homography);
    if (cfg.use_residual)
      adam_g.update(model.residual.mlp, grads.residual, cfg.lr_residual);
    adam_f.update(model.canonical.mlp, grads.canonical, cfg.lr_canonical);
  }

  report.final_psnr_per_frame.resize(T);
  double psnr_sum = 0.0;
  for (int t = 0; t < T; ++t) {
    const Image rendered = render_frame(model, t);
    report.final_psnr_per_frame[t] = psnr(rendered, seq.frames[t]);
    psnr_sum += report.final_psnr_per_frame[t];
  }
  report.mean_final_psnr = psnr_sum / T;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    start_time)
          .count();
  return report;
}

}  // namespace narcan
