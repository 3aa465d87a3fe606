#include "core/expert.hpp"

#include <cmath>

#include "core/error.hpp"

namespace skyforge {

DroneParams randomize_params(const DroneParams& nominal, const RandomizationSpec& spec, Rng& rng) {
  if (!(spec.param_fraction >= 0.0 && spec.param_fraction < 1.0))
    fail(ErrorCode::invalid_argument, "param_fraction must be in [0, 1)");
  DroneParams out = nominal;
  out.m_dr = nominal.m_dr * rng.uniform(1.0 - spec.param_fraction, 1.0 + spec.param_fraction);
  out.k_th = nominal.k_th * rng.uniform(1.0 - spec.param_fraction, 1.0 + spec.param_fraction);
  return out;
}

DroneState perturb_state(const DroneState& x, const RandomizationSpec& spec, Rng& rng) {
  DroneState out = x;
  for (int i = 0; i < 3; ++i) out.p_W[i] += spec.pos_sigma * rng.gaussian();
  for (int i = 0; i < 3; ++i) out.v_W[i] += spec.vel_sigma * rng.gaussian();
  double dyaw = spec.yaw_sigma * rng.gaussian();
  out.q_BW = (yaw_quaternion(dyaw) * x.q_BW).normalized();
  return out;
}

TrackingController::TrackingController(const DroneParams& believed, const ControllerGains& gains)
    : believed_(believed), gains_(gains) {}

void TrackingController::reset() {
  bias_ = Eigen::Vector3d::Zero();
  saturations_ = 0;
}

Eigen::Vector3d TrackingController::desired_acceleration(const DroneState& x,
                                                         const TrackingSetpoint& sp) const {
  Eigen::Vector3d e_p = sp.p - x.p_W;
  Eigen::Vector3d e_v = sp.v - x.v_W;
  return sp.a + gains_.kp * e_p + gains_.kd * e_v + bias_;
}

ControlInput TrackingController::step(const DroneState& x, const TrackingSetpoint& sp, double dt) {
  if (!sp.p.allFinite() || !sp.v.allFinite() || !sp.a.allFinite() || !std::isfinite(sp.yaw))
    fail(ErrorCode::invalid_argument, "track_step: non-finite reference sample");

  Eigen::Vector3d e_p = sp.p - x.p_W;
  Eigen::Vector3d e_v = sp.v - x.v_W;
  bias_ += (gains_.ki * e_p + gains_.ki_v * e_v) * dt;
  bias_ = bias_.cwiseMax(-gains_.bias_limit).cwiseMin(gains_.bias_limit);

  Eigen::Vector3d a_des = desired_acceleration(x, sp);

  // Thrust realizes g*z_W - a_des along the body z-axis (gravity points +z_W,
  // thrust pulls -z_B).
  Eigen::Vector3d thrust_vec = believed_.g * Eigen::Vector3d::UnitZ() - a_des;
  double magnitude = thrust_vec.norm();
  ControlInput u;
  u.f_th = believed_.m_dr * magnitude / believed_.k_th;
  if (u.f_th > 1.0 || u.f_th < 0.0) {
    u.f_th = std::clamp(u.f_th, 0.0, 1.0);
    ++saturations_;
  }

  Eigen::Vector3d z_des = magnitude > 1e-9 ? (thrust_vec / magnitude).eval()
                                           : Eigen::Vector3d::UnitZ().eval();
  Eigen::Vector3d x_heading(std::cos(sp.yaw), std::sin(sp.yaw), 0.0);
  Eigen::Vector3d y_des = z_des.cross(x_heading);
  if (y_des.norm() < 1e-6) {
    // Thrust axis nearly parallel to the heading; fall back to the world frame.
    y_des = z_des.cross(Eigen::Vector3d::UnitY()).norm() > 1e-6
                ? z_des.cross(Eigen::Vector3d::UnitY())
                : Eigen::Vector3d::UnitX();
  }
  y_des.normalize();
  Eigen::Vector3d x_des = y_des.cross(z_des);
  Eigen::Matrix3d r_des;
  r_des.col(0) = x_des;
  r_des.col(1) = y_des;
  r_des.col(2) = z_des;

  Eigen::Quaterniond q_err = x.q_BW.conjugate() * Eigen::Quaterniond(r_des);
  if (q_err.w() < 0.0) q_err.coeffs() = -q_err.coeffs();
  Eigen::Vector3d omega = 2.0 * gains_.k_att * q_err.vec();
  u.omega_B = omega.cwiseMax(-gains_.omega_max).cwiseMin(gains_.omega_max);
  return u;
}

ControlInput track_step(const DroneState& x, const TrackingSetpoint& sp, const DroneParams& believed) {
  TrackingController controller(believed);
  return controller.step(x, sp, 0.0);
}

namespace {

DroneState initial_state(const TrajectorySample& s0) {
  DroneState x;
  x.p_W = s0.p;
  x.v_W = s0.v;
  x.q_BW = yaw_quaternion(s0.yaw);
  return x;
}

Eigen::Vector3d feedforward_accel(const ReferenceTrajectory& ref, std::size_t k, double dt) {
  if (k + 1 < ref.samples.size()) return (ref.samples[k + 1].v - ref.samples[k].v) / dt;
  if (k > 0) return (ref.samples[k].v - ref.samples[k - 1].v) / dt;
  return Eigen::Vector3d::Zero();
}

}  // namespace

Rollout fly_reference(const ReferenceTrajectory& ref, const DroneParams& nominal,
                      const RandomizationSpec& spec, const SceneWorld& world,
                      const CameraModel& camera, const SemanticObject& query, uint64_t seed,
                      const ControllerGains& gains, const RenderConfig& render_config) {
  if (ref.samples.size() < 2) fail(ErrorCode::invalid_argument, "fly_reference: reference too short");
  const double dt = kLogDt;
  Rng rng(seed);
  Rollout rollout;
  rollout.object_id = ref.object_id;
  rollout.params_used = randomize_params(nominal, spec, rng);

  TrackingController controller(nominal, gains);
  RenderMemory memory;
  DroneState x = initial_state(ref.samples.front());
  long perturb_steps = std::max<long>(1, std::lround(spec.perturb_period / dt));

  std::size_t n = ref.samples.size();
  rollout.states.reserve(n);
  rollout.inputs.reserve(n);
  rollout.images.reserve(n);

  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && static_cast<long>(k) % perturb_steps == 0) x = perturb_state(x, spec, rng);

    const TrajectorySample& s = ref.samples[k];
    double err = (x.p_W - s.p).norm();
    rollout.max_position_error = std::max(rollout.max_position_error, err);
    if (err > kDivergenceThreshold) {
      rollout.failed = true;
      break;
    }

    rollout.images.push_back(render_heatmap(x, world, query.embedding, camera, memory, render_config));
    TrackingSetpoint sp{s.p, s.v, feedforward_accel(ref, k, dt), s.yaw};
    ControlInput u = controller.step(x, sp, dt);
    rollout.states.push_back(x);
    rollout.inputs.push_back(u);

    if (k + 1 < n) x = integrate_step(x, u, rollout.params_used, dt);
  }
  return rollout;
}

}  // namespace skyforge
