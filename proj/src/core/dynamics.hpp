#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstdint>
#include <span>
#include <vector>

namespace skyforge {

// World frame convention follows the equations of motion verbatim: gravity
// accelerates along +z_W and thrust pulls along -z_B. Quaternions are stored
// (x, y, z, w) and renormalized after every integration substep.
struct DroneState {
  Eigen::Vector3d p_W = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_W = Eigen::Vector3d::Zero();
  Eigen::Quaterniond q_BW = Eigen::Quaterniond::Identity();
};

struct ControlInput {
  double f_th = 0.0;  // normalized collective thrust, [0, 1]
  Eigen::Vector3d omega_B = Eigen::Vector3d::Zero();  // body rates, rad/s
};

struct DroneParams {
  double m_dr = 0.87;   // kg
  double k_th = 2.0 * 0.87 * 9.81;  // N per unit thrust; nominal hover at f_th = 0.5
  double g = 9.81;      // m/s^2

  double hover_thrust() const { return m_dr * g / k_th; }
};

struct StateDerivative {
  Eigen::Vector3d p_dot;
  Eigen::Vector3d v_dot;
  Eigen::Vector4d q_dot;  // (x, y, z, w) coefficients, not normalized
};

// Right-hand side of the equations of motion. Throws on non-finite input.
StateDerivative state_derivative(const DroneState& x, const ControlInput& u, const DroneParams& theta);

// Classical RK4 with 4 internal substeps and quaternion renormalization.
// Thrust is clamped to [0, 1]; clamps are tallied in thrust_saturation_count().
DroneState integrate_step(const DroneState& x, const ControlInput& u, const DroneParams& theta, double dt);

uint64_t thrust_saturation_count();
void reset_thrust_saturation_count();

struct StateInputTrajectory {
  std::vector<DroneState> states;   // K + 1
  std::vector<ControlInput> inputs; // K
};

StateInputTrajectory rollout(const DroneState& x0, std::span<const ControlInput> inputs,
                             const DroneParams& theta, double dt);

constexpr double kLogDt = 0.05;  // 20 Hz logging cadence

// Yaw (rotation about z_W) of the body x-axis projected to the horizontal plane.
double quaternion_yaw(const Eigen::Quaterniond& q);
Eigen::Quaterniond yaw_quaternion(double yaw);

}  // namespace skyforge
