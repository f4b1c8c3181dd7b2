#pragma once

// Planar soft-snake stand-in: four constant-curvature soft links joined by
// five wheeled rigid bodies (head, three body segments, tail). Link bending
// follows the commanded pressure ratio through a first-order lag; the rigid
// motion of the whole chain follows from momentum balance under anisotropic
// viscous friction at the wheels.

#include <array>
#include <cmath>
#include <cstddef>

#include "snakecpg/cpg.hpp"
#include "snakecpg/rng.hpp"

namespace snakecpg::snake {

inline constexpr std::size_t kLinks = 4;
inline constexpr std::size_t kNodes = kLinks + 1;
inline constexpr double kGravity = 9.81;
inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  bool operator==(const Vec2&) const = default;
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}
/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

struct SnakeParams {
  std::array<double, kLinks> link_length{0.1, 0.1, 0.1, 0.1};  // m
  double head_mass = 0.100;  // kg
  double body_mass = 0.055;  // each of the three middle rigid bodies
  double tail_mass = 0.075;
  std::array<double, kLinks> max_pressure{8.5, 8.5, 8.5, 8.5};  // psi, lambda_i
  double nominal_pressure = 8.5;  // psi at which curvature_gain is calibrated
  double ground_mu = 0.8;         // lateral (wheel side-grip) coefficient
  double wheel_mu = 0.075;        // rolling fraction: tangential = ground_mu * wheel_mu
  double gravity_angle = 0.0;     // rad, planar tilt along world +x
  double act_tau = 0.15;          // s
  // 1/m per unit pressure ratio; gives a 30 deg mean joint amplitude at u = 1
  double curvature_gain = 9.729568;
  double friction_speed = 0.05;   // m/s, viscous regularisation speed

  void validate() const;

  double node_mass(std::size_t node) const;
  double total_mass() const;
  double tangential_coefficient() const { return ground_mu * wheel_mu; }
  double lateral_coefficient() const { return ground_mu; }
};

/// Randomisation ranges per episode.
struct DomainRandomization {
  double ground_mu_lo = 0.1, ground_mu_hi = 1.5;
  double wheel_mu_lo = 0.05, wheel_mu_hi = 0.10;
  double body_mass_lo = 0.035, body_mass_hi = 0.075;
  double tail_mass_lo = 0.065, tail_mass_hi = 0.085;
  double head_mass_lo = 0.075, head_mass_hi = 0.125;
  double pressure_lo = 5.0, pressure_hi = 12.0;
  double gravity_angle_lo = -0.001, gravity_angle_hi = 0.001;
};

/// Uniform draw of every randomised field; the rest is copied from `base`.
SnakeParams sample_domain_randomization(Rng& rng, const SnakeParams& base = {},
                                        const DomainRandomization& ranges = {});

/// Dynamic state. `theta` is the orientation of the body frame (head
/// tangent); `spin` is angular momentum about the centre of mass.
struct SnakeState {
  Vec2 com;
  double theta = 0.0;
  Vec2 momentum;
  double spin = 0.0;
  std::array<double, kLinks> delta{};       // bending angle per link, rad
  std::array<double, kLinks> delta_rate{};  // shape rate over the pending step
  double t = 0.0;

  /// Straight, motionless snake whose head sits at `head` facing `heading`.
  static SnakeState at_rest(const SnakeParams& params, Vec2 head = {}, double heading = 0.0);

  bool operator==(const SnakeState&) const = default;
};

Vec2 head_position(const SnakeState& state, const SnakeParams& params);
/// Direction of the tail-to-head chord (unwrapped, continuous in time).
double heading(const SnakeState& state, const SnakeParams& params);
Vec2 com_velocity(const SnakeState& state, const SnakeParams& params);
/// kappa_i = delta_i / l_i.
std::array<double, kLinks> curvature(const SnakeState& state, const SnakeParams& params);
std::array<Vec2, kNodes> node_positions(const SnakeState& state, const SnakeParams& params);
std::array<Vec2, kNodes> node_velocities(const SnakeState& state, const SnakeParams& params);
double kinetic_energy(const SnakeState& state, const SnakeParams& params);

/// Advances the bending angles by dt toward the commanded targets
/// (delta*_i = curvature_gain * (lambda_i / nominal) * psi_i * l_i) with the
/// exact first-order response, and records the shape rate used by propel().
SnakeState actuate(const SnakeState& state, const cpg::CpgOutput& psi,
                   const SnakeParams& params, double dt);

/// Advances pose and momenta by dt with RK4, interpolating the shape linearly
/// across the step set up by actuate(). Clears the pending shape rate.
SnakeState propel(const SnakeState& state, const SnakeParams& params, double dt);

/// actuate() followed by propel().
SnakeState substep(const SnakeState& state, const cpg::CpgOutput& psi,
                   const SnakeParams& params, double dt);

/// Goal-relative quantities.
struct GoalFrame {
  Vec2 goal;
  double rho_g = 0.0;    // head-to-goal distance
  double d_g = 0.0;      // travel along the goal direction from the origin
  double v_g = 0.0;      // COM velocity projected on the goal direction
  double theta_g = 0.0;  // angle from goal direction to velocity direction
  double l_g = 0.0;      // alias of rho_g used by the reward
};

/// `origin` is the head position when the goal was issued.
GoalFrame goal_frame(const SnakeState& state, const SnakeParams& params, Vec2 goal,
                     Vec2 origin);

using Observation = std::array<double, 8>;

/// [rho_g, d rho_g/dt, theta_g, d theta_g/dt, kappa_1..4]; rates are finite
/// differences over `control_dt` against `previous`.
Observation observe(const SnakeState& state, const SnakeParams& params,
                    const GoalFrame& current, const GoalFrame& previous, double control_dt);

/// One row of the trajectory export.
struct TrajectoryRow {
  double t = 0.0;
  Vec2 head;
  double heading = 0.0;
  std::array<double, kLinks> kappa{};
  std::array<double, kLinks> psi{};
  double rho_g = 0.0;
  double theta_g = 0.0;
  double v_g = 0.0;
  double reward = 0.0;
};

}  // namespace snakecpg::snake
