#pragma once

#include <memory>
#include <string>

#include "narcan/fields.hpp"
#include "narcan/flow.hpp"
#include "narcan/prior.hpp"
#include "narcan/training.hpp"

namespace narcan {

// Everything one fit/render/ablate run needs, loadable from a JSON file.
// Flags on the CLI override file values; NARCAN_PRIOR_URL overrides the
// prior backend selection.
struct ProjectConfig {
  std::string frames_dir;
  std::string pattern = "*.png";
  std::string output_dir = "narcan_out";
  uint64_t seed = 1;

  int k = 1;
  int overlap = 10;

  TrainConfig train;
  ModelSpec model;
  PriorSchedule schedule;  // defaults to default_schedule()

  // identity | blur:<sigma> | oracle:<canonical.png> | http[:<url>] | none
  std::string prior_backend = "identity";
  bool prior_finetune = true;
  std::string special_token = "narcan_scene";
  int finetune_steps = 400;
  int finetune_rank = 16;

  std::string flow_backend = "block";
  std::string homography_init = "identity";  // identity | flow

  static ProjectConfig load(const std::string& path);
  static ProjectConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  void save(const std::string& path) const;
};

// Builds the provider named by the config (or by NARCAN_PRIOR_URL when
// set). "none" yields nullptr.
std::unique_ptr<PriorProvider> make_prior_provider(const ProjectConfig& config);

}  // namespace narcan
