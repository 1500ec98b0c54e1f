#include "narcan/config.hpp"

#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "narcan/frames_io.hpp"
#include "narcan/http_prior.hpp"

using nlohmann::json;

namespace narcan {

namespace {

PriorSchedule schedule_from_json(const json& j) {
  PriorSchedule s;
  s.prior_start_iter = j.value("prior_start_iter", 1000);
  s.phases.clear();
  for (const auto& row : j.at("phases")) {
    SchedulePhase p;
    p.iter_start = row.at(0).get<long>();
    p.iter_end = row.at(1).get<long>();
    p.noise_strength = row.at(2).get<double>();
    p.update_every = row.at(3).get<long>();
    s.phases.push_back(p);
  }
  s.validate();
  return s;
}

json schedule_to_json(const PriorSchedule& s) {
  json phases = json::array();
  for (const SchedulePhase& p : s.phases)
    phases.push_back({p.iter_start, p.iter_end, p.noise_strength,
                      p.update_every});
  return {{"prior_start_iter", s.prior_start_iter}, {"phases", phases}};
}

}  // namespace

ProjectConfig ProjectConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorCode::DecodeFailure, std::string("config: ") + e.what());
  }

  ProjectConfig c;
  c.schedule = default_schedule();
  try {
    c.frames_dir = j.value("frames_dir", c.frames_dir);
    c.pattern = j.value("pattern", c.pattern);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
    c.k = j.value("k", c.k);
    c.overlap = j.value("overlap", c.overlap);

    c.train.total_iters = j.value("total_iters", c.train.total_iters);
    c.train.batch_pixels = j.value("batch_pixels", c.train.batch_pixels);
    c.train.lr_homography = j.value("lr_homography", c.train.lr_homography);
    c.train.lr_residual = j.value("lr_residual", c.train.lr_residual);
    c.train.lr_canonical = j.value("lr_canonical", c.train.lr_canonical);
    c.train.lambda_recon = j.value("lambda_recon", c.train.lambda_recon);
    c.train.lambda_prior = j.value("lambda_prior", c.train.lambda_prior);
    c.train.use_homography = j.value("use_homography", c.train.use_homography);
    c.train.use_residual = j.value("use_residual", c.train.use_residual);
    c.train.use_prior = j.value("use_prior", c.train.use_prior);
    c.train.prior_raster_long_side =
        j.value("prior_raster_long_side", c.train.prior_raster_long_side);
    c.train.bounds_margin = j.value("bounds_margin", c.train.bounds_margin);
    c.train.log_every = j.value("log_every", c.train.log_every);
    c.train.seed = c.seed;

    c.model.pe_freqs_spatial =
        j.value("pe_freqs_spatial", c.model.pe_freqs_spatial);
    c.model.pe_freqs_time = j.value("pe_freqs_time", c.model.pe_freqs_time);
    c.model.pe_freqs_canonical =
        j.value("pe_freqs_canonical", c.model.pe_freqs_canonical);
    c.model.hidden_g = j.value("hidden_g", c.model.hidden_g);
    c.model.hidden_f = j.value("hidden_f", c.model.hidden_f);

    if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));

    c.prior_backend = j.value("prior_backend", c.prior_backend);
    c.prior_finetune = j.value("prior_finetune", c.prior_finetune);
    c.special_token = j.value("special_token", c.special_token);
    c.finetune_steps = j.value("finetune_steps", c.finetune_steps);
    c.finetune_rank = j.value("finetune_rank", c.finetune_rank);
    c.flow_backend = j.value("flow_backend", c.flow_backend);
    c.homography_init = j.value("homography_init", c.homography_init);
  } catch (const json::exception& e) {
    raise(ErrorCode::DecodeFailure, std::string("config: ") + e.what());
  }
  c.train.prior_prompt = "a photo of " + c.special_token;
  return c;
}

ProjectConfig ProjectConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot read config " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string ProjectConfig::to_json_text() const {
  json j = {
      {"frames_dir", frames_dir},
      {"pattern", pattern},
      {"output_dir", output_dir},
      {"seed", seed},
      {"k", k},
      {"overlap", overlap},
      {"total_iters", train.total_iters},
      {"batch_pixels", train.batch_pixels},
      {"lr_homography", train.lr_homography},
      {"lr_residual", train.lr_residual},
      {"lr_canonical", train.lr_canonical},
      {"lambda_recon", train.lambda_recon},
      {"lambda_prior", train.lambda_prior},
      {"use_homography", train.use_homography},
      {"use_residual", train.use_residual},
      {"use_prior", train.use_prior},
      {"prior_raster_long_side", train.prior_raster_long_side},
      {"bounds_margin", train.bounds_margin},
      {"log_every", train.log_every},
      {"pe_freqs_spatial", model.pe_freqs_spatial},
      {"pe_freqs_time", model.pe_freqs_time},
      {"pe_freqs_canonical", model.pe_freqs_canonical},
      {"hidden_g", model.hidden_g},
      {"hidden_f", model.hidden_f},
      {"schedule", schedule_to_json(schedule)},
      {"prior_backend", prior_backend},
      {"prior_finetune", prior_finetune},
      {"special_token", special_token},
      {"finetune_steps", finetune_steps},
      {"finetune_rank", finetune_rank},
      {"flow_backend", flow_backend},
      {"homography_init", homography_init},
  };
  return j.dump(2);
}

void ProjectConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoFailure, "cannot write config " + path);
  out << to_json_text() << "\n";
}

std::unique_ptr<PriorProvider> make_prior_provider(const ProjectConfig& config) {
  std::string selection = config.prior_backend;
  if (const char* url = std::getenv("NARCAN_PRIOR_URL"); url && *url)
    selection = std::string("http:") + url;

  if (selection == "none") return nullptr;
  if (selection == "identity") return std::make_unique<IdentityPrior>();
  if (selection.rfind("blur", 0) == 0) {
    double sigma = 2.0;
    if (const auto colon = selection.find(':'); colon != std::string::npos)
      sigma = std::stod(selection.substr(colon + 1));
    return std::make_unique<BlurPrior>(sigma);
  }
  if (selection.rfind("oracle:", 0) == 0) {
    const std::string path = selection.substr(7);
    return std::make_unique<OraclePrior>(import_canonical(path));
  }
  if (selection.rfind("http", 0) == 0) {
    std::string url = "localhost:9821";
    if (const auto colon = selection.find(':'); colon != std::string::npos)
      url = selection.substr(colon + 1);
    return std::make_unique<HttpPrior>(url);
  }
  raise(ErrorCode::InvalidArgument,
        "unknown prior backend: " + config.prior_backend);
}

}  // namespace narcan
