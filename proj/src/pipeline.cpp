#include "narcan/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "narcan/editing.hpp"
#include "narcan/frames_io.hpp"
#include "narcan/metrics.hpp"
#include "narcan/png_io.hpp"
#include "narcan/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace narcan {

namespace {

// Staging directory committed with a single rename.
class CommitDir {
 public:
  explicit CommitDir(std::string final_path)
      : final_(std::move(final_path)),
        staging_(final_ + ".tmp-" + std::to_string(::getpid())) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
    fs::create_directories(staging_, ec);
    if (!fs::is_directory(staging_))
      raise(ErrorCode::IoFailure, "cannot create " + staging_);
  }
  ~CommitDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }
  const std::string& path() const { return staging_; }
  void commit() {
    std::error_code ec;
    fs::remove_all(final_, ec);
    fs::rename(staging_, final_, ec);
    if (ec)
      raise(ErrorCode::IoFailure,
            "cannot commit " + staging_ + " -> " + final_ + ": " + ec.message());
    committed_ = true;
  }

 private:
  std::string final_, staging_;
  bool committed_ = false;
};

FrameSequence slice_frames(const FrameSequence& seq, int start, int end) {
  FrameSequence out;
  out.fps = seq.fps;
  out.frames.assign(seq.frames.begin() + start, seq.frames.begin() + end);
  return out;
}

std::vector<std::string> split_paths(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

FitOutcome fit_pipeline(const ProjectConfig& config) {
  FrameSequence seq = load_frames(config.frames_dir, config.pattern);
  seq.validate();

  std::unique_ptr<PriorProvider> provider = make_prior_provider(config);
  TrainConfig train_cfg = config.train;
  train_cfg.seed = config.seed;
  const bool prior_on =
      train_cfg.use_prior && train_cfg.lambda_prior > 0.0 && provider;

  if (prior_on && config.prior_finetune && provider->supports_finetune()) {
    FinetuneSpec spec;
    spec.frames = &seq;
    spec.special_token = config.special_token;
    spec.steps = config.finetune_steps;
    spec.rank = config.finetune_rank;
    provider->finetune(spec);
  }

  const SegmentPlan plan =
      plan_segments(seq.frame_count(), config.k, config.overlap);

  HomographyTrajectory init_traj = HomographyTrajectory::identity(seq.frame_count());
  if (config.homography_init == "flow") {
    auto backend = make_flow_backend(config.flow_backend);
    init_traj = chain_homographies_from_flow(seq, *backend);
  } else if (config.homography_init != "identity") {
    raise(ErrorCode::InvalidArgument,
          "unknown homography_init: " + config.homography_init);
  }

  CommitDir staging(config.output_dir);

  SegmentModelSet set;
  set.plan = plan;
  std::ostringstream report_stream;
  FitOutcome outcome;
  double psnr_acc = 0.0;
  for (int i = 0; i < plan.k; ++i) {
    const auto [start, end] = plan.segments[i];
    FrameSequence segment = slice_frames(seq, start, end);
    Rng model_rng(config.seed + static_cast<uint64_t>(i));
    NarcanModel model = make_model(segment.frame_count(), segment.height(),
                                   segment.width(), config.model, model_rng);
    for (int t = 0; t < segment.frame_count(); ++t)
      for (int c = 0; c < 8; ++c)
        model.homography.params(t, c) = init_traj.params(start + t, c);

    TrainConfig cfg = train_cfg;
    cfg.seed = config.seed + 1000003ull * static_cast<uint64_t>(i);
    cfg.abort_checkpoint_dir =
        (fs::path(staging.path()) / ("aborted_segment_" + std::to_string(i)))
            .string();
    TrainReport report = train(segment, model, cfg, config.schedule,
                               provider.get());
    report.append_jsonl(report_stream, cfg.log_every, i);
    psnr_acc += report.mean_final_psnr;
    outcome.segment_psnr.push_back(report.mean_final_psnr);
    set.models.push_back(std::move(model));
  }

  save_model_set(set, staging.path());
  {
    std::ofstream out((fs::path(staging.path()) / "report.jsonl").string());
    if (!out) raise(ErrorCode::IoFailure, "cannot write report.jsonl");
    out << report_stream.str();
  }
  {
    ProjectConfig stored = config;
    stored.save((fs::path(staging.path()) / "config.json").string());
  }
  staging.commit();

  outcome.checkpoint_dir = config.output_dir;
  outcome.report_path = (fs::path(config.output_dir) / "report.jsonl").string();
  outcome.mean_psnr = psnr_acc / plan.k;
  return outcome;
}

void render_pipeline(const std::string& checkpoint_dir,
                     const std::string& edited_canonical,
                     const std::string& out_dir) {
  const SegmentModelSet set = load_model_set(checkpoint_dir);
  FrameSequence out;
  if (edited_canonical.empty()) {
    out.frames.reserve(set.plan.total_frames());
    for (int t = 0; t < set.plan.total_frames(); ++t)
      out.frames.push_back(render_blended(set, t));
  } else {
    std::vector<RasterCanvas> canvases;
    for (const std::string& path : split_paths(edited_canonical))
      canvases.push_back(import_canonical(path));
    out = render_edited_video(set, canvases);
  }
  CommitDir staging(out_dir);
  save_frames(out, staging.path());
  staging.commit();
}

void export_canonical_pipeline(const std::string& checkpoint_dir,
                               const std::string& out_prefix, int long_side,
                               bool with_grid) {
  const SegmentModelSet set = load_model_set(checkpoint_dir);
  std::vector<RasterCanvas> canvases;
  for (const NarcanModel& model : set.models) {
    const Bounds bounds = canonical_bounds(model, 0.05);
    canvases.push_back(
        render_canonical_raster(model, canvas_spec_from_bounds(bounds, long_side)));
  }
  if (set.plan.k == 1) {
    export_canonical(canvases[0], out_prefix + ".png");
  } else {
    char suffix[16];
    for (int i = 0; i < set.plan.k; ++i) {
      std::snprintf(suffix, sizeof(suffix), "_%02d.png", i);
      export_canonical(canvases[i], out_prefix + suffix);
    }
  }
  if (with_grid) {
    if (set.plan.k > 4)
      raise(ErrorCode::InvalidArgument,
            "grid export supports at most 4 segments");
    // Grid cells must share dimensions; pad via the largest cell is not
    // needed because segments share frame dims and margins.
    std::vector<RasterCanvas> cells = canvases;
    int max_h = 0, max_w = 0;
    for (const auto& c : cells) {
      max_h = std::max(max_h, c.height());
      max_w = std::max(max_w, c.width());
    }
    for (auto& c : cells)
      if (c.height() != max_h || c.width() != max_w) {
        Image padded(max_h, max_w, c.channels(), 0.0f);
        for (int y = 0; y < c.height(); ++y)
          for (int x = 0; x < c.width(); ++x)
            for (int ch = 0; ch < c.channels(); ++ch)
              padded.at(y, x, ch) = c.image.at(y, x, ch);
        c.image = std::move(padded);
      }
    const auto [grid, manifest] = grid_concat(cells);
    encode_png_file(grid.image, out_prefix + "_grid.png");
    save_grid_manifest(manifest, out_prefix + "_grid.json");
  }
}

void import_edit_pipeline(const std::string& base_path,
                          const std::string& edit_path,
                          const std::string& mode,
                          const std::string& out_path) {
  const RasterCanvas base = import_canonical(base_path);
  EditLayer layer;
  layer.canvas.image = decode_png_file(edit_path, 4);
  layer.canvas.origin_u = base.origin_u;
  layer.canvas.origin_v = base.origin_v;
  layer.canvas.scale = base.scale;
  if (mode == "replace")
    layer.mode = BlendMode::Replace;
  else if (mode == "alpha_over" || mode.empty())
    layer.mode = BlendMode::AlphaOver;
  else
    raise(ErrorCode::InvalidArgument, "unknown blend mode: " + mode);
  export_canonical(composite_edit(base, layer), out_path);
}

void propagate_mask_pipeline(const std::string& checkpoint_dir,
                             const std::string& mask_path,
                             const std::string& out_dir) {
  const SegmentModelSet set = load_model_set(checkpoint_dir);
  MaskLayer mask;
  mask.canvas = import_canonical(mask_path);
  if (mask.canvas.channels() != 1) {
    // Accept RGB(A) mask files; threshold the first channel.
    Image single(mask.canvas.height(), mask.canvas.width(), 1);
    for (int y = 0; y < single.height; ++y)
      for (int x = 0; x < single.width; ++x)
        single.at(y, x, 0) =
            mask.canvas.image.at(y, x, 0) > 0.5f ? 1.0f : 0.0f;
    mask.canvas.image = std::move(single);
  } else {
    for (float& v : mask.canvas.image.data) v = v > 0.5f ? 1.0f : 0.0f;
  }

  const std::vector<Image> masks = propagate_mask(set, mask);
  CommitDir staging(out_dir);
  char name[32];
  for (size_t t = 0; t < masks.size(); ++t) {
    std::snprintf(name, sizeof(name), "mask_%05zu.png", t);
    encode_png_file(masks[t], (fs::path(staging.path()) / name).string());
  }
  staging.commit();
}

std::string metrics_pipeline(const std::string& video_dir,
                             const std::string& against_dir,
                             const std::string& flow_backend_name) {
  const FrameSequence video = load_frames(video_dir);
  auto backend = make_flow_backend(flow_backend_name);
  const ConsistencyReport report = consistency_report(video, *backend);
  json j = json::parse(report.to_json());
  if (!against_dir.empty()) {
    const FrameSequence other = load_frames(against_dir);
    j["psnr"] = psnr(video, other);
    j["ssim"] = ssim(video, other);
  }
  return j.dump(2);
}

std::string ablate_pipeline(const ProjectConfig& config,
                            const std::string& variant) {
  ProjectConfig cfg = config;
  if (variant == "no_homography")
    cfg.train.use_homography = false;
  else if (variant == "no_residual")
    cfg.train.use_residual = false;
  else if (variant == "no_prior")
    cfg.train.use_prior = false;
  else if (variant != "full")
    raise(ErrorCode::InvalidArgument,
          "unknown ablation variant: " + variant +
              " (expected no_homography|no_residual|no_prior|full)");

  cfg.output_dir = (fs::path(config.output_dir) / variant).string();
  const FitOutcome outcome = fit_pipeline(cfg);

  const std::string canonical_prefix =
      (fs::path(cfg.output_dir) / "canonical").string();
  export_canonical_pipeline(cfg.output_dir, canonical_prefix, 256, false);

  json row = {
      {"variant", variant},
      {"mean_frame_psnr", outcome.mean_psnr},
      {"checkpoint", outcome.checkpoint_dir},
      {"canonical", canonical_prefix + ".png"},
  };
  return row.dump(2);
}

std::string plan_pipeline(int total_frames, int k, int overlap) {
  const SegmentPlan plan = plan_segments(total_frames, k, overlap);
  json segments = json::array();
  for (const auto& [s, e] : plan.segments) segments.push_back({s, e});
  json j = {
      {"T", total_frames}, {"k", plan.k}, {"overlap", plan.overlap},
      {"segments", segments},
  };
  return j.dump(2);
}

void synthetic_pipeline(const std::string& kind, const std::string& out_dir,
                        int frame_count, int height, int width,
                        uint64_t seed) {
  const SyntheticScene scene = make_synthetic_scene(
      scene_kind_from_name(kind), frame_count, height, width, seed);
  CommitDir staging(out_dir);
  write_scene(scene, staging.path());
  staging.commit();
}

}  // namespace narcan
