#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/dynamics.hpp"
#include "core/world.hpp"

namespace skyforge {

// Pinhole camera rigidly mounted with its optical axis along the body x-axis
// (camera x = body y, camera y = body z). Default grid matches a 42x24
// patch-logit image.
struct CameraModel {
  int width = 42;
  int height = 24;
  double fx = 25.0;
  double fy = 25.0;
  double cx = 21.0;
  double cy = 12.0;

  void validate() const;
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

// Pinhole projection of a world point through the drone-mounted camera.
// Empty for points at or behind the image plane.
std::optional<PixelProjection> project_point(const Eigen::Vector3d& p_world, const DroneState& state,
                                             const CameraModel& camera);

// Ray direction (unit, world frame) through pixel (u, v); projection inverse.
Eigen::Vector3d pixel_ray(double u, double v, const DroneState& state, const CameraModel& camera);

// Cosine similarity of two unit embeddings clamped to [-1, 1].
// Throws when either input is not unit norm.
double raw_similarity(const Eigen::VectorXd& query_embedding, const Eigen::VectorXd& object_embedding);

struct HeatmapImage {
  int width = 0;
  int height = 0;
  std::vector<float> scores;  // row-major, [0, 1]
  std::vector<float> rgb;     // row-major, 3 channels, [0, 1]

  float score_at(int x, int y) const { return scores[static_cast<std::size_t>(y * width + x)]; }
};

struct RenderConfig {
  double background_floor = 0.15;  // raw score for clutter and empty pixels
};

// Per-flight running maximum; reset (reconstruct) at rollout start.
struct RenderMemory {
  double running_max = 0.0;
};

// Splat the labeled cloud with a nearest-depth z-buffer, score against the
// query embedding, normalize by the running per-flight maximum, colormap.
HeatmapImage render_heatmap(const DroneState& state, const SceneWorld& world,
                            const Eigen::VectorXd& query_embedding, const CameraModel& camera,
                            RenderMemory& memory, const RenderConfig& config = {});

// 256-entry monotone blue->green->yellow->red table; entries are distinct and
// the red channel is non-decreasing.
const std::array<std::array<uint8_t, 3>, 256>& colormap_table();

// Maps scores in [0,1] to rgb via the table. Out-of-range inputs are clamped;
// returns how many were clamped.
int colormap_grid(const std::vector<float>& scores, std::vector<float>& rgb_out);

void write_ppm(const HeatmapImage& image, const std::string& path);

}  // namespace skyforge
