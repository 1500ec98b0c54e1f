#pragma once

#include <span>
#include <string>
#include <vector>

#include "narcan/fields.hpp"
#include "narcan/image.hpp"
#include "narcan/prior.hpp"

namespace narcan {

// Half-open iteration interval with one noise strength and one target
// regeneration period.
struct SchedulePhase {
  long iter_start = 0;
  long iter_end = 0;
  double noise_strength = 0.0;
  long update_every = 1;
};

struct PriorSchedule {
  std::vector<SchedulePhase> phases;  // non-overlapping, ascending
  long prior_start_iter = 0;

  void validate() const;
};

// The pinned production schedule: prior starts at iteration 1000;
// [1000,3000) s=0.4 every 10, [3000,5000) s=0.3 every 100,
// [5000,12000) s=0.2 every 2000.
PriorSchedule default_schedule();

struct ScheduleQuery {
  bool active = false;
  double noise_strength = 0.0;
  bool regenerate_target = false;
};

ScheduleQuery schedule_query(const PriorSchedule& schedule, long iter);

// Number of iterations with regenerate_target == true.
long count_target_generations(const PriorSchedule& schedule);

struct PixelSample {
  int t = 0;
  int x = 0;
  int y = 0;
};

// Plain MSE over the batch's samples and channels.
double reconstruction_loss(const NarcanModel& model, const FrameSequence& seq,
                           std::span<const PixelSample> batch);

struct TrainConfig {
  long total_iters = 12000;
  int batch_pixels = 8192;
  double lr_homography = 1e-4;
  double lr_residual = 1e-3;
  double lr_canonical = 1e-3;
  double lambda_recon = 1.0;
  double lambda_prior = 0.1;
  bool use_homography = true;  // false freezes H at its initial value
  bool use_residual = true;    // false freezes g at zero
  bool use_prior = true;       // false drops the prior term entirely
  uint64_t seed = 0;
  int prior_raster_long_side = 256;
  double bounds_margin = 0.05;
  std::string prior_prompt = "a photo of the scene";
  int log_every = 1;
  // When set, a checkpoint is committed here before a backend failure is
  // re-thrown.
  std::string abort_checkpoint_dir;
};

struct IterRecord {
  long iter = 0;
  double loss = 0.0;
  double recon = 0.0;
  double prior = 0.0;
  bool prior_update = false;
};

struct TrainReport {
  std::vector<IterRecord> iterations;
  std::vector<long> prior_update_iters;
  std::vector<double> final_psnr_per_frame;
  double mean_final_psnr = 0.0;
  // Wall time stays out of serialized reports so reruns are byte-identical.
  double wall_seconds = 0.0;

  void append_jsonl(std::ostream& out, int log_every, int segment) const;
};

// Joint optimization of the model under reconstruction loss plus the
// scheduled prior term. Deterministic for a fixed config/seed/provider.
TrainReport train(const FrameSequence& seq, NarcanModel& model,
                  const TrainConfig& cfg, const PriorSchedule& schedule,
                  PriorProvider* provider);

}  // namespace narcan
