#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "core/expert.hpp"

namespace skyforge {

constexpr int kChunkSamples = 40;  // 2 s at 20 Hz
constexpr char kContainerMagic[4] = {'S', 'K', 'Y', 'F'};
constexpr uint32_t kContainerVersion = 1;
constexpr int kDatasetVersion = 1;

// One shuffled training unit: 40 contiguous (state, input, image) samples.
// Images are stored quantized to u8 rgb; states/inputs stay 32-bit floats.
struct DemoChunk {
  uint64_t chunk_id = 0;
  uint64_t rollout_id = 0;
  uint32_t start_index = 0;
  uint32_t scene_id = 0;
  uint16_t image_width = 0;
  uint16_t image_height = 0;
  std::string query;
  std::vector<std::array<float, 14>> samples;  // p(3) v(3) q(xyzw) | f_th omega(3)
  std::vector<std::vector<uint8_t>> images;    // each width*height*3
};

struct RolloutSampleCount {
  uint64_t rollout_id = 0;
  uint64_t samples = 0;
};

struct DatasetManifest {
  int dataset_version = kDatasetVersion;
  uint64_t master_seed = 0;
  std::vector<std::string> scenes;
  std::vector<std::string> queries;
  uint64_t trajectory_count = 0;  // successful rollouts
  std::vector<RolloutSampleCount> per_rollout_samples;
  uint64_t total_samples = 0;
  uint64_t chunk_count = 0;
  uint64_t dropped_samples = 0;       // trailing remainders < 40
  uint64_t failed_rollouts = 0;
  uint64_t discarded_trajectories = 0;  // spline-collision + approach discards
  std::string container_hash;           // fnv1a-64 of the container bytes, hex

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

// floor(len/40) chunks per rollout; the trailing remainder is dropped and
// tallied. Chunk ids are assigned later, in canonical order.
std::vector<DemoChunk> chunk_rollout(const Rollout& rollout, uint64_t rollout_id, uint32_t scene_id,
                                     const std::string& query, uint64_t* dropped_samples = nullptr);

// Deterministic Fisher-Yates permutation.
void shuffle_chunks(std::vector<DemoChunk>& chunks, uint64_t seed);

uint64_t fnv1a64(const uint8_t* data, std::size_t len);
std::string to_hex(uint64_t value);

// Serializes chunks (little-endian, "SKYF" magic) and the manifest sidecar
// `<path>.manifest.json`; fills manifest.container_hash.
void write_dataset(const std::vector<DemoChunk>& chunks, DatasetManifest& manifest,
                   const std::string& path);

struct Dataset {
  std::vector<DemoChunk> chunks;
  DatasetManifest manifest;
};

// Errors on bad magic/version and reports the byte offset on truncation.
Dataset read_dataset(const std::string& path);

struct StatsReport {
  uint64_t trajectories = 0;
  uint64_t query_count = 0;
  uint64_t scene_count = 0;
  uint64_t total_samples = 0;
  uint64_t chunk_count = 0;
  uint64_t chunked_samples = 0;  // chunk_count * 40, the post-drop number
  uint64_t dropped_samples = 0;
  double mean_samples_per_trajectory = 0.0;
  double mean_duration_seconds = 0.0;

  std::string to_string() const;
};

// Verifies the manifest-internal identities; throws Error(verify) naming the
// first violated identity.
StatsReport dataset_stats(const DatasetManifest& manifest);

// Full container re-scan: magic/version, record integrity, manifest identities,
// hash match, per-chunk sample shape. Throws Error(verify) on the first offense.
StatsReport verify_dataset(const std::string& path);

}  // namespace skyforge
