#include "core/renderer.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "core/error.hpp"

namespace skyforge {

namespace {

// Rows are the camera axes expressed in the body frame.
Eigen::Matrix3d camera_from_body() {
  Eigen::Matrix3d r;
  r << 0, 1, 0,  // camera x = body y
       0, 0, 1,  // camera y = body z
       1, 0, 0;  // camera z = body x (optical axis)
  return r;
}

constexpr double kMinDepth = 1e-9;

}  // namespace

void CameraModel::validate() const {
  if (width <= 0 || height <= 0 || !(fx > 0.0) || !(fy > 0.0))
    fail(ErrorCode::invalid_argument, "camera: dimensions and focal lengths must be positive");
  if (!(cx > 0.0 && cx < width && cy > 0.0 && cy < height))
    fail(ErrorCode::invalid_argument, "camera: principal point must lie inside the image");
}

std::optional<PixelProjection> project_point(const Eigen::Vector3d& p_world, const DroneState& state,
                                             const CameraModel& camera) {
  Eigen::Vector3d p_body = state.q_BW.conjugate() * (p_world - state.p_W);
  Eigen::Vector3d p_cam = camera_from_body() * p_body;
  if (p_cam.z() <= kMinDepth) return std::nullopt;
  PixelProjection out;
  out.u = camera.fx * p_cam.x() / p_cam.z() + camera.cx;
  out.v = camera.fy * p_cam.y() / p_cam.z() + camera.cy;
  out.depth = p_cam.z();
  return out;
}

Eigen::Vector3d pixel_ray(double u, double v, const DroneState& state, const CameraModel& camera) {
  Eigen::Vector3d dir_cam((u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, 1.0);
  Eigen::Vector3d dir_body = camera_from_body().transpose() * dir_cam;
  return (state.q_BW * dir_body).normalized();
}

double raw_similarity(const Eigen::VectorXd& query_embedding, const Eigen::VectorXd& object_embedding) {
  if (query_embedding.size() != object_embedding.size())
    fail(ErrorCode::invalid_argument, "similarity: embedding dimensions differ");
  if (std::abs(query_embedding.norm() - 1.0) > 1e-6 || std::abs(object_embedding.norm() - 1.0) > 1e-6)
    fail(ErrorCode::invalid_argument, "similarity: embeddings must be unit norm");
  return std::clamp(query_embedding.dot(object_embedding), -1.0, 1.0);
}

HeatmapImage render_heatmap(const DroneState& state, const SceneWorld& world,
                            const Eigen::VectorXd& query_embedding, const CameraModel& camera,
                            RenderMemory& memory, const RenderConfig& config) {
  camera.validate();
  const std::size_t pixels = static_cast<std::size_t>(camera.width) * camera.height;
  const float floor_score = static_cast<float>(config.background_floor);

  // Raw similarity per object, clamped to [0, 1] so the normalized grid stays
  // in range; anti-correlated objects render below the background floor.
  std::vector<std::pair<int, float>> object_scores;
  for (const auto& obj : world.objects())
    object_scores.emplace_back(obj.object_id,
                               static_cast<float>(std::max(0.0, raw_similarity(query_embedding, obj.embedding))));
  auto score_of = [&](const std::optional<int>& id) -> float {
    if (!id) return floor_score;
    for (const auto& [obj_id, s] : object_scores) {
      if (obj_id == *id) return s;
    }
    return floor_score;
  };

  std::vector<float> raw(pixels, floor_score);
  std::vector<double> zbuf(pixels, std::numeric_limits<double>::infinity());
  for (const auto& pt : world.points()) {
    auto proj = project_point(pt.position, state, camera);
    if (!proj) continue;
    int px = static_cast<int>(std::floor(proj->u));
    int py = static_cast<int>(std::floor(proj->v));
    if (px < 0 || px >= camera.width || py < 0 || py >= camera.height) continue;
    std::size_t idx = static_cast<std::size_t>(py * camera.width + px);
    if (proj->depth < zbuf[idx]) {
      zbuf[idx] = proj->depth;
      raw[idx] = score_of(pt.object_id);
    }
  }

  double frame_max = 0.0;
  for (float s : raw) frame_max = std::max(frame_max, static_cast<double>(s));
  memory.running_max = std::max(memory.running_max, frame_max);

  HeatmapImage image;
  image.width = camera.width;
  image.height = camera.height;
  image.scores.resize(pixels);
  double norm = memory.running_max > 0.0 ? memory.running_max : 1.0;
  for (std::size_t i = 0; i < pixels; ++i)
    image.scores[i] = static_cast<float>(std::clamp(raw[i] / norm, 0.0, 1.0));
  colormap_grid(image.scores, image.rgb);
  return image;
}

const std::array<std::array<uint8_t, 3>, 256>& colormap_table() {
  static const std::array<std::array<uint8_t, 3>, 256> table = [] {
    // Piecewise-linear through fixed control colors; integer math keeps the
    // table bit-exact across platforms.
    constexpr int stops[5][3] = {
        {13, 8, 92},     // dark blue
        {33, 77, 216},   // blue
        {38, 188, 100},  // green
        {231, 231, 38},  // yellow
        {242, 22, 13},   // red
    };
    std::array<std::array<uint8_t, 3>, 256> t{};
    for (int i = 0; i < 256; ++i) {
      int seg = std::min(i / 64, 3);
      double f = (i - seg * 64) / 64.0;
      for (int c = 0; c < 3; ++c) {
        double v = stops[seg][c] + f * (stops[seg + 1][c] - stops[seg][c]);
        t[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] =
            static_cast<uint8_t>(std::lround(v));
      }
    }
    return t;
  }();
  return table;
}

int colormap_grid(const std::vector<float>& scores, std::vector<float>& rgb_out) {
  const auto& table = colormap_table();
  rgb_out.resize(scores.size() * 3);
  int clamped = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    float s = scores[i];
    if (s < 0.0f || s > 1.0f || !std::isfinite(s)) {
      s = std::isfinite(s) ? std::clamp(s, 0.0f, 1.0f) : 0.0f;
      ++clamped;
    }
    int bin = static_cast<int>(std::lround(s * 255.0f));
    const auto& rgb = table[static_cast<std::size_t>(bin)];
    rgb_out[3 * i + 0] = static_cast<float>(rgb[0]) / 255.0f;
    rgb_out[3 * i + 1] = static_cast<float>(rgb[1]) / 255.0f;
    rgb_out[3 * i + 2] = static_cast<float>(rgb[2]) / 255.0f;
  }
  return clamped;
}

void write_ppm(const HeatmapImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write image file: " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  for (float v : image.rgb) {
    uint8_t byte = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    out.put(static_cast<char>(byte));
  }
}

}  // namespace skyforge
