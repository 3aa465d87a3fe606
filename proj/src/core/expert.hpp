#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "core/dynamics.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"
#include "core/trajgen.hpp"
#include "core/world.hpp"

namespace skyforge {

struct RandomizationSpec {
  double param_fraction = 0.30;  // mass/thrust-coefficient randomization, hard bound
  double perturb_period = 2.0;   // seconds between pose/velocity perturbations
  double pos_sigma = 0.15;       // meters
  double vel_sigma = 0.15;       // m/s
  double yaw_sigma = 0.10;       // radians
  uint64_t rng_seed = 0;
};

// m_dr and k_th independently scaled by uniform factors in
// [1 - param_fraction, 1 + param_fraction]; g untouched.
DroneParams randomize_params(const DroneParams& nominal, const RandomizationSpec& spec, Rng& rng);

// Gaussian position/velocity offsets plus a world-yaw kick; quaternion renormalized.
DroneState perturb_state(const DroneState& x, const RandomizationSpec& spec, Rng& rng);

struct TrackingSetpoint {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d a = Eigen::Vector3d::Zero();  // feed-forward, optional
  double yaw = 0.0;
};

struct ControllerGains {
  double kp = 7.0;
  double kd = 5.0;
  double ki = 3.0;           // on position error, feeds the bias estimate
  double ki_v = 6.0;         // on velocity error, feeds the bias estimate
  double bias_limit = 8.0;   // m/s^2 clamp on the integral term
  double k_att = 10.0;       // attitude P gain
  double omega_max = 8.0;    // rad/s per-axis clamp
};

// Cascaded position -> acceleration -> attitude tracking law. The integral
// bias estimate absorbs the accel-scale error left by believing nominal
// (m_dr, k_th) while the plant runs randomized ones; that bias is what makes
// the closed loop funnel back after perturbations. Reset per rollout.
class TrackingController {
 public:
  explicit TrackingController(const DroneParams& believed, const ControllerGains& gains = {});

  void reset();
  ControlInput step(const DroneState& x, const TrackingSetpoint& sp, double dt);

  // Acceleration the law asks for before thrust/attitude realization (PD +
  // feed-forward + current bias estimate). Exposed for contract tests.
  Eigen::Vector3d desired_acceleration(const DroneState& x, const TrackingSetpoint& sp) const;

  const DroneParams& believed_params() const { return believed_; }
  uint64_t saturation_count() const { return saturations_; }

 private:
  DroneParams believed_;
  ControllerGains gains_;
  Eigen::Vector3d bias_ = Eigen::Vector3d::Zero();
  uint64_t saturations_ = 0;
};

// Stateless single call (zero integral state); the closed-loop expert uses a
// persistent TrackingController instead.
ControlInput track_step(const DroneState& x, const TrackingSetpoint& sp, const DroneParams& believed);

struct Rollout {
  std::vector<DroneState> states;
  std::vector<ControlInput> inputs;
  std::vector<HeatmapImage> images;
  DroneParams params_used;  // randomized plant parameters
  int reference_id = -1;
  int object_id = -1;
  bool failed = false;
  double max_position_error = 0.0;
};

constexpr double kDivergenceThreshold = 5.0;  // meters

// Closed-loop flight along a 20 Hz reference: the controller believes the
// nominal parameters, the plant integrates randomized ones, the state is
// re-perturbed every perturb_period seconds, and (state, input, heatmap) is
// logged at every step.
Rollout fly_reference(const ReferenceTrajectory& ref, const DroneParams& nominal,
                      const RandomizationSpec& spec, const SceneWorld& world,
                      const CameraModel& camera, const SemanticObject& query, uint64_t seed,
                      const ControllerGains& gains = {}, const RenderConfig& render_config = {});

}  // namespace skyforge
