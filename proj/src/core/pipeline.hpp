#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/expert.hpp"
#include "core/planner.hpp"
#include "core/renderer.hpp"
#include "core/trajgen.hpp"

namespace skyforge {

// Full synthesize run configuration; serialized as a single JSON document.
// Command-line flags override individual fields.
struct SynthesisConfig {
  std::vector<std::string> scene_paths;
  std::vector<std::string> queries;  // empty = every object in every scene
  PlannerConfig planner;
  TrajGenConfig trajgen;
  RandomizationSpec randomization;
  DroneParams nominal;
  CameraModel camera;
  RenderConfig render;
  ControllerGains gains;
  int trajectories_per_pair = 8;
  uint64_t master_seed = 0;
  int workers = 1;
  std::string output_dir = "out";

  nlohmann::json to_json() const;
  static SynthesisConfig from_json(const nlohmann::json& j);
  static SynthesisConfig load(const std::string& path);
};

struct SynthesisReport {
  DatasetManifest manifest;
  StatsReport stats;
  std::string dataset_path;

  nlohmann::json to_json() const;
};

// plan -> trajgen -> expert -> renderer -> dataset for every (scene, query)
// pair. Per-task seeds derive from (master seed, scene, object, trajectory),
// and outputs merge in canonical order, so the result is byte-identical for
// any worker count. Throws Error(synthesis) when no rollout succeeds.
SynthesisReport synthesize(const SynthesisConfig& config);

}  // namespace skyforge
