#include "core/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace skyforge {

namespace {

// Seed-stream tags so the derived streams for planning, flying, and shuffling
// never collide.
enum SeedTag : uint64_t { kSeedPlan = 1, kSeedFly = 2, kSeedShuffle = 3 };

void run_parallel(std::size_t task_count, int workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || task_count <= 1) {
    for (std::size_t i = 0; i < task_count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= task_count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min<int>(workers, static_cast<int>(task_count)); ++w)
    pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct PairTask {
  std::size_t scene_index = 0;
  int object_id = 0;
  std::string query;
};

struct FlightTask {
  std::size_t scene_index = 0;
  int object_id = 0;
  std::string query;
  const ReferenceTrajectory* reference = nullptr;
  std::size_t traj_index = 0;  // within its (scene, object) pair
  uint64_t seed = 0;
};

}  // namespace

SynthesisReport synthesize(const SynthesisConfig& config) {
  if (config.scene_paths.empty()) fail(ErrorCode::invalid_argument, "synthesize: no scenes configured");

  std::vector<std::unique_ptr<SceneWorld>> worlds;
  worlds.reserve(config.scene_paths.size());
  for (const auto& path : config.scene_paths) worlds.push_back(std::make_unique<SceneWorld>(SceneWorld::load(path)));

  // Canonical (scene, object) pair list. An empty query list means every
  // object; an explicit query must resolve in at least one scene.
  std::vector<PairTask> pairs;
  for (std::size_t si = 0; si < worlds.size(); ++si) {
    const SceneWorld& world = *worlds[si];
    if (config.queries.empty()) {
      for (const auto& obj : world.objects()) pairs.push_back({si, obj.object_id, obj.name});
    } else {
      for (const auto& name : config.queries) {
        if (const SemanticObject* obj = world.find_object(name))
          pairs.push_back({si, obj->object_id, name});
      }
    }
  }
  for (const auto& name : config.queries) {
    bool resolved = std::any_of(pairs.begin(), pairs.end(),
                                [&](const PairTask& p) { return p.query == name; });
    if (!resolved) {
      std::string available;
      for (const auto& world : worlds) {
        for (const auto& obj_name : world->object_names()) available += " '" + obj_name + "'";
      }
      fail(ErrorCode::unknown_object, "query '" + name + "' not found in any scene; available:" + available);
    }
  }
  if (pairs.empty()) fail(ErrorCode::unknown_object, "synthesize: no (scene, query) pair resolved");

  // Phase A: plan + reference generation per pair, parallel, canonical slots.
  std::vector<TrajGenResult> pair_refs(pairs.size());
  std::vector<std::string> pair_errors(pairs.size());
  run_parallel(pairs.size(), config.workers, [&](std::size_t i) {
    const PairTask& task = pairs[i];
    const SceneWorld& world = *worlds[task.scene_index];
    const SemanticObject& object = world.object_by_id(task.object_id);
    PlannerConfig pc = config.planner;
    pc.rng_seed = Rng::mix(Rng::mix(config.master_seed, kSeedPlan),
                           Rng::mix(task.scene_index, static_cast<uint64_t>(task.object_id)));
    TrajGenConfig tc = config.trajgen;
    tc.max_trajectories = config.trajectories_per_pair;
    try {
      PlanTree tree = grow_tree(world, object, pc);
      pair_refs[i] = generate_references(tree, world, object, tc);
    } catch (const Error& e) {
      pair_errors[i] = e.what();  // a pair may be infeasible; skip it, keep going
    }
  });

  // Phase B: flights, parallel over a canonical flattened task list.
  std::vector<FlightTask> flights;
  uint64_t discarded = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    discarded += static_cast<uint64_t>(pair_refs[i].discarded_spline_collisions) +
                 static_cast<uint64_t>(pair_refs[i].discarded_approach);
    for (std::size_t ti = 0; ti < pair_refs[i].trajectories.size(); ++ti) {
      FlightTask f;
      f.scene_index = pairs[i].scene_index;
      f.object_id = pairs[i].object_id;
      f.query = pairs[i].query;
      f.reference = &pair_refs[i].trajectories[ti];
      f.traj_index = ti;
      f.seed = Rng::mix(Rng::mix(config.master_seed, kSeedFly),
                        Rng::mix(Rng::mix(pairs[i].scene_index, static_cast<uint64_t>(pairs[i].object_id)), ti));
      flights.push_back(std::move(f));
    }
  }

  std::vector<Rollout> rollouts(flights.size());
  run_parallel(flights.size(), config.workers, [&](std::size_t i) {
    const FlightTask& f = flights[i];
    const SceneWorld& world = *worlds[f.scene_index];
    const SemanticObject& query = world.object_by_id(f.object_id);
    rollouts[i] = fly_reference(*f.reference, config.nominal, config.randomization, world,
                                config.camera, query, f.seed, config.gains, config.render);
    rollouts[i].reference_id = static_cast<int>(i);
  });

  // Phase C: serial merge in canonical order.
  DatasetManifest manifest;
  manifest.master_seed = config.master_seed;
  manifest.discarded_trajectories = discarded;
  for (const auto& path : config.scene_paths)
    manifest.scenes.push_back(std::filesystem::path(path).stem().string());
  for (const auto& pair : pairs) {
    if (std::find(manifest.queries.begin(), manifest.queries.end(), pair.query) == manifest.queries.end())
      manifest.queries.push_back(pair.query);
  }

  std::vector<DemoChunk> chunks;
  uint64_t rollout_id = 0;
  for (std::size_t i = 0; i < flights.size(); ++i) {
    if (rollouts[i].failed) {
      ++manifest.failed_rollouts;
      continue;
    }
    uint64_t id = rollout_id++;
    uint64_t samples = rollouts[i].states.size();
    manifest.per_rollout_samples.push_back({id, samples});
    manifest.total_samples += samples;
    auto rollout_chunks = chunk_rollout(rollouts[i], id, static_cast<uint32_t>(flights[i].scene_index),
                                        flights[i].query, &manifest.dropped_samples);
    for (auto& c : rollout_chunks) chunks.push_back(std::move(c));
  }
  manifest.trajectory_count = rollout_id;
  if (rollout_id == 0) fail(ErrorCode::synthesis, "synthesize: zero successful rollouts");

  for (std::size_t i = 0; i < chunks.size(); ++i) chunks[i].chunk_id = i;
  shuffle_chunks(chunks, Rng::mix(config.master_seed, kSeedShuffle));
  manifest.chunk_count = chunks.size();

  std::filesystem::create_directories(config.output_dir);
  SynthesisReport report;
  report.dataset_path = (std::filesystem::path(config.output_dir) / "dataset.skyf").string();
  write_dataset(chunks, manifest, report.dataset_path);
  report.manifest = manifest;
  report.stats = dataset_stats(manifest);
  return report;
}

namespace {

template <typename T>
void maybe_get(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

nlohmann::json SynthesisConfig::to_json() const {
  nlohmann::json j;
  j["scenes"] = scene_paths;
  j["queries"] = queries;
  j["planner"] = {{"eta", planner.eta},
                  {"iterations", planner.iterations},
                  {"alpha", planner.alpha},
                  {"dimension", planner.dimension}};
  if (planner.planning_altitude) j["planner"]["planning_altitude"] = *planner.planning_altitude;
  j["trajgen"] = {{"dt", trajgen.dt},
                  {"v_max", trajgen.v_max},
                  {"min_length", trajgen.min_length},
                  {"yaw_rate_max", trajgen.yaw_rate_max},
                  {"approach_bias", trajgen.approach_bias}};
  j["randomization"] = {{"param_fraction", randomization.param_fraction},
                        {"perturb_period", randomization.perturb_period},
                        {"pos_sigma", randomization.pos_sigma},
                        {"vel_sigma", randomization.vel_sigma},
                        {"yaw_sigma", randomization.yaw_sigma}};
  j["drone"] = {{"m_dr", nominal.m_dr}, {"k_th", nominal.k_th}, {"g", nominal.g}};
  j["camera"] = {{"width", camera.width}, {"height", camera.height}, {"fx", camera.fx},
                 {"fy", camera.fy},       {"cx", camera.cx},         {"cy", camera.cy}};
  j["render"] = {{"background_floor", render.background_floor}};
  j["gains"] = {{"kp", gains.kp},     {"kd", gains.kd},
                {"ki", gains.ki},     {"ki_v", gains.ki_v},
                {"bias_limit", gains.bias_limit}, {"k_att", gains.k_att},
                {"omega_max", gains.omega_max}};
  j["trajectories_per_pair"] = trajectories_per_pair;
  j["master_seed"] = master_seed;
  j["workers"] = workers;
  j["output_dir"] = output_dir;
  return j;
}

SynthesisConfig SynthesisConfig::from_json(const nlohmann::json& j) {
  SynthesisConfig c;
  maybe_get(j, "scenes", c.scene_paths);
  maybe_get(j, "queries", c.queries);
  if (j.contains("planner")) {
    const auto& jp = j.at("planner");
    maybe_get(jp, "eta", c.planner.eta);
    maybe_get(jp, "iterations", c.planner.iterations);
    maybe_get(jp, "alpha", c.planner.alpha);
    maybe_get(jp, "dimension", c.planner.dimension);
    if (jp.contains("planning_altitude")) c.planner.planning_altitude = jp.at("planning_altitude").get<double>();
  }
  if (j.contains("trajgen")) {
    const auto& jt = j.at("trajgen");
    maybe_get(jt, "dt", c.trajgen.dt);
    maybe_get(jt, "v_max", c.trajgen.v_max);
    maybe_get(jt, "min_length", c.trajgen.min_length);
    maybe_get(jt, "yaw_rate_max", c.trajgen.yaw_rate_max);
    maybe_get(jt, "approach_bias", c.trajgen.approach_bias);
  }
  if (j.contains("randomization")) {
    const auto& jr = j.at("randomization");
    maybe_get(jr, "param_fraction", c.randomization.param_fraction);
    maybe_get(jr, "perturb_period", c.randomization.perturb_period);
    maybe_get(jr, "pos_sigma", c.randomization.pos_sigma);
    maybe_get(jr, "vel_sigma", c.randomization.vel_sigma);
    maybe_get(jr, "yaw_sigma", c.randomization.yaw_sigma);
  }
  if (j.contains("drone")) {
    const auto& jd = j.at("drone");
    maybe_get(jd, "m_dr", c.nominal.m_dr);
    maybe_get(jd, "k_th", c.nominal.k_th);
    maybe_get(jd, "g", c.nominal.g);
  }
  if (j.contains("camera")) {
    const auto& jc = j.at("camera");
    maybe_get(jc, "width", c.camera.width);
    maybe_get(jc, "height", c.camera.height);
    maybe_get(jc, "fx", c.camera.fx);
    maybe_get(jc, "fy", c.camera.fy);
    maybe_get(jc, "cx", c.camera.cx);
    maybe_get(jc, "cy", c.camera.cy);
  }
  if (j.contains("render")) maybe_get(j.at("render"), "background_floor", c.render.background_floor);
  if (j.contains("gains")) {
    const auto& jg = j.at("gains");
    maybe_get(jg, "kp", c.gains.kp);
    maybe_get(jg, "kd", c.gains.kd);
    maybe_get(jg, "ki", c.gains.ki);
    maybe_get(jg, "ki_v", c.gains.ki_v);
    maybe_get(jg, "bias_limit", c.gains.bias_limit);
    maybe_get(jg, "k_att", c.gains.k_att);
    maybe_get(jg, "omega_max", c.gains.omega_max);
  }
  maybe_get(j, "trajectories_per_pair", c.trajectories_per_pair);
  maybe_get(j, "master_seed", c.master_seed);
  maybe_get(j, "workers", c.workers);
  maybe_get(j, "output_dir", c.output_dir);
  return c;
}

SynthesisConfig SynthesisConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, "invalid config JSON in " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json SynthesisReport::to_json() const {
  return nlohmann::json{{"dataset", dataset_path},
                        {"manifest", manifest.to_json()},
                        {"stats",
                         {{"trajectories", stats.trajectories},
                          {"queries", stats.query_count},
                          {"scenes", stats.scene_count},
                          {"total_samples", stats.total_samples},
                          {"chunk_count", stats.chunk_count},
                          {"chunked_samples", stats.chunked_samples},
                          {"dropped_samples", stats.dropped_samples},
                          {"mean_samples_per_trajectory", stats.mean_samples_per_trajectory},
                          {"mean_duration_seconds", stats.mean_duration_seconds}}}};
}

}  // namespace skyforge
