#include "core/dynamics.hpp"

#include <atomic>
#include <cmath>

#include "core/error.hpp"

namespace skyforge {

namespace {

std::atomic<uint64_t> g_saturation_count{0};

struct RawState {
  Eigen::Vector3d p;
  Eigen::Vector3d v;
  Eigen::Vector4d q;  // (x, y, z, w)
};

// q_dot = 1/2 * q ⊗ (omega, 0), expressed on raw quaternion coefficients so the
// RK4 stages stay linear in q.
Eigen::Vector4d quat_rate(const Eigen::Vector4d& q, const Eigen::Vector3d& w) {
  double qx = q[0], qy = q[1], qz = q[2], qw = q[3];
  return 0.5 * Eigen::Vector4d(qw * w.x() + qy * w.z() - qz * w.y(),
                               qw * w.y() + qz * w.x() - qx * w.z(),
                               qw * w.z() + qx * w.y() - qy * w.x(),
                               -qx * w.x() - qy * w.y() - qz * w.z());
}

RawState derivative_raw(const RawState& x, const ControlInput& u, const DroneParams& theta) {
  RawState dx;
  dx.p = x.v;
  Eigen::Quaterniond q(x.q[3], x.q[0], x.q[1], x.q[2]);
  q.normalize();  // stages drift off the unit sphere; rotation needs unit q
  Eigen::Vector3d z_B = q * Eigen::Vector3d::UnitZ();
  dx.v = theta.g * Eigen::Vector3d::UnitZ() - (theta.k_th * u.f_th / theta.m_dr) * z_B;
  dx.q = quat_rate(x.q, u.omega_B);
  return dx;
}

}  // namespace

StateDerivative state_derivative(const DroneState& x, const ControlInput& u, const DroneParams& theta) {
  if (!x.p_W.allFinite() || !x.v_W.allFinite() || !x.q_BW.coeffs().allFinite() ||
      !std::isfinite(u.f_th) || !u.omega_B.allFinite())
    fail(ErrorCode::invalid_argument, "state_derivative: non-finite state or input");
  RawState raw{x.p_W, x.v_W, x.q_BW.coeffs()};
  RawState dx = derivative_raw(raw, u, theta);
  return {dx.p, dx.v, dx.q};
}

DroneState integrate_step(const DroneState& x, const ControlInput& u, const DroneParams& theta, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "integrate_step: dt must be > 0");
  ControlInput uc = u;
  if (uc.f_th < 0.0 || uc.f_th > 1.0) {
    uc.f_th = std::clamp(uc.f_th, 0.0, 1.0);
    g_saturation_count.fetch_add(1, std::memory_order_relaxed);
  }
  if (!x.p_W.allFinite() || !x.v_W.allFinite() || !x.q_BW.coeffs().allFinite())
    fail(ErrorCode::invalid_argument, "integrate_step: non-finite state");

  constexpr int kSubsteps = 4;
  double h = dt / kSubsteps;
  RawState s{x.p_W, x.v_W, x.q_BW.coeffs()};
  for (int i = 0; i < kSubsteps; ++i) {
    RawState k1 = derivative_raw(s, uc, theta);
    RawState s2{s.p + 0.5 * h * k1.p, s.v + 0.5 * h * k1.v, s.q + 0.5 * h * k1.q};
    RawState k2 = derivative_raw(s2, uc, theta);
    RawState s3{s.p + 0.5 * h * k2.p, s.v + 0.5 * h * k2.v, s.q + 0.5 * h * k2.q};
    RawState k3 = derivative_raw(s3, uc, theta);
    RawState s4{s.p + h * k3.p, s.v + h * k3.v, s.q + h * k3.q};
    RawState k4 = derivative_raw(s4, uc, theta);
    s.p += (h / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
    s.v += (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    s.q += (h / 6.0) * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
    s.q.normalize();
  }
  DroneState out;
  out.p_W = s.p;
  out.v_W = s.v;
  out.q_BW = Eigen::Quaterniond(s.q[3], s.q[0], s.q[1], s.q[2]);
  return out;
}

uint64_t thrust_saturation_count() { return g_saturation_count.load(std::memory_order_relaxed); }
void reset_thrust_saturation_count() { g_saturation_count.store(0, std::memory_order_relaxed); }

StateInputTrajectory rollout(const DroneState& x0, std::span<const ControlInput> inputs,
                             const DroneParams& theta, double dt) {
  if (inputs.empty()) fail(ErrorCode::invalid_argument, "rollout: need at least one input");
  StateInputTrajectory traj;
  traj.states.reserve(inputs.size() + 1);
  traj.inputs.assign(inputs.begin(), inputs.end());
  traj.states.push_back(x0);
  for (const ControlInput& u : inputs) traj.states.push_back(integrate_step(traj.states.back(), u, theta, dt));
  return traj;
}

double quaternion_yaw(const Eigen::Quaterniond& q) {
  Eigen::Vector3d x_B = q * Eigen::Vector3d::UnitX();
  return std::atan2(x_B.y(), x_B.x());
}

Eigen::Quaterniond yaw_quaternion(double yaw) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
}

}  // namespace skyforge
