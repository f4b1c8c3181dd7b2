#include "snakecpg/snake.hpp"

#include <sstream>

#include "snakecpg/error.hpp"

namespace snakecpg::snake {
namespace {

// Forward-mode dual number: carries d/ds along the shape-rate direction.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }
Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
Dual cos(Dual a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }

// sin(x)/x, even in x
Dual sinc(Dual a) {
  if (std::fabs(a.v) < 1e-4) {
    const double x2 = a.v * a.v;
    return {1.0 - x2 / 6.0 + x2 * x2 / 120.0, (-a.v / 3.0 + a.v * x2 / 30.0) * a.d};
  }
  const double s = std::sin(a.v), c = std::cos(a.v);
  return {s / a.v, (c * a.v - s) / (a.v * a.v) * a.d};
}

struct BodyShape {
  std::array<Vec2, kNodes> r;     // body-frame node positions (head at origin)
  std::array<Vec2, kNodes> rdot;  // their rates
  std::array<double, kNodes> phi; // body-frame tangent angle at each node
};

// Walks from the head toward the tail. Each soft link is a circular arc: the
// tangent turns by -delta_i when moving tailward and the chord has length
// l * sinc(delta/2) along the mean tangent.
BodyShape body_shape(const std::array<double, kLinks>& delta,
                     const std::array<double, kLinks>& rate,
                     const std::array<double, kLinks>& length) {
  BodyShape shape;
  Dual px{0.0, 0.0}, py{0.0, 0.0}, phi{0.0, 0.0};
  shape.r[0] = {0.0, 0.0};
  shape.rdot[0] = {0.0, 0.0};
  shape.phi[0] = 0.0;
  for (std::size_t i = 0; i < kLinks; ++i) {
    const Dual di{delta[i], rate[i]};
    const Dual mid = phi - 0.5 * di;
    const Dual chord = length[i] * sinc(0.5 * di);
    px = px - chord * cos(mid);
    py = py - chord * sin(mid);
    phi = phi - di;
    shape.r[i + 1] = {px.v, py.v};
    shape.rdot[i + 1] = {px.d, py.d};
    shape.phi[i + 1] = phi.v;
  }
  return shape;
}

struct Kinematics {
  BodyShape shape;
  std::array<Vec2, kNodes> rho;     // body-frame positions relative to the COM
  std::array<Vec2, kNodes> rhodot;
  double inertia = 0.0;
  double shape_spin = 0.0;          // sum m rho x rhodot
  double mass = 0.0;
};

Kinematics kinematics(const std::array<double, kLinks>& delta,
                      const std::array<double, kLinks>& rate, const SnakeParams& p) {
  Kinematics k;
  k.shape = body_shape(delta, rate, p.link_length);
  Vec2 c, cdot;
  for (std::size_t n = 0; n < kNodes; ++n) {
    const double m = p.node_mass(n);
    k.mass += m;
    c += m * k.shape.r[n];
    cdot += m * k.shape.rdot[n];
  }
  c = c * (1.0 / k.mass);
  cdot = cdot * (1.0 / k.mass);
  for (std::size_t n = 0; n < kNodes; ++n) {
    const double m = p.node_mass(n);
    k.rho[n] = k.shape.r[n] - c;
    k.rhodot[n] = k.shape.rdot[n] - cdot;
    k.inertia += m * dot(k.rho[n], k.rho[n]);
    k.shape_spin += m * cross(k.rho[n], k.rhodot[n]);
  }
  return k;
}

// Pose and momenta as integrated by RK4.
struct Rigid {
  double cx = 0.0, cy = 0.0, theta = 0.0, px = 0.0, py = 0.0, spin = 0.0;
};

Rigid axpy(const Rigid& s, double h, const Rigid& d) {
  return {s.cx + h * d.cx, s.cy + h * d.cy, s.theta + h * d.theta,
          s.px + h * d.px, s.py + h * d.py, s.spin + h * d.spin};
}

inline Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

Rigid rigid_rhs(const Rigid& s, const std::array<double, kLinks>& delta,
                const std::array<double, kLinks>& rate, const SnakeParams& p) {
  const Kinematics k = kinematics(delta, rate, p);
  const double omega = (s.spin - k.shape_spin) / k.inertia;
  const Vec2 vc{s.px / k.mass, s.py / k.mass};
  const double tilt = kGravity * std::sin(p.gravity_angle);
  const double ct = p.tangential_coefficient();
  const double cn = p.lateral_coefficient();

  Rigid d;
  d.cx = vc.x;
  d.cy = vc.y;
  d.theta = omega;
  Vec2 force;
  double torque = 0.0;
  for (std::size_t n = 0; n < kNodes; ++n) {
    const double m = p.node_mass(n);
    const Vec2 arm = rotate(k.rho[n], s.theta);
    const Vec2 v = vc + omega * perp(arm) + rotate(k.rhodot[n], s.theta);
    const double heading_n = s.theta + k.shape.phi[n];
    const Vec2 t{std::cos(heading_n), std::sin(heading_n)};
    const Vec2 nrm = perp(t);
    const double scale = m * kGravity / p.friction_speed;
    Vec2 f = -scale * (ct * dot(v, t) * t + cn * dot(v, nrm) * nrm);
    f.x += m * tilt;
    force += f;
    torque += cross(arm, f);
  }
  d.px = force.x;
  d.py = force.y;
  d.spin = torque;
  return d;
}

std::array<double, kLinks> shape_at(const SnakeState& s, double remaining) {
  std::array<double, kLinks> out{};
  for (std::size_t i = 0; i < kLinks; ++i) out[i] = s.delta[i] - s.delta_rate[i] * remaining;
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterDomainError("invalid snake parameter: " + what);
}

}  // namespace

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

void SnakeParams::validate() const {
  for (double l : link_length) require(l > 0.0 && std::isfinite(l), "link_length must be positive");
  require(head_mass > 0.0 && body_mass > 0.0 && tail_mass > 0.0, "masses must be positive");
  for (double lam : max_pressure) require(lam > 0.0, "max_pressure must be positive");
  require(nominal_pressure > 0.0, "nominal_pressure must be positive");
  require(ground_mu > 0.0 && wheel_mu > 0.0, "friction coefficients must be positive");
  require(act_tau > 0.0, "act_tau must be positive");
  require(friction_speed > 0.0, "friction_speed must be positive");
  require(std::isfinite(curvature_gain), "curvature_gain must be finite");
}

double SnakeParams::node_mass(std::size_t node) const {
  if (node == 0) return head_mass;
  if (node == kNodes - 1) return tail_mass;
  return body_mass;
}

double SnakeParams::total_mass() const {
  return head_mass + tail_mass + static_cast<double>(kNodes - 2) * body_mass;
}

SnakeParams sample_domain_randomization(Rng& rng, const SnakeParams& base,
                                        const DomainRandomization& r) {
  SnakeParams p = base;
  p.ground_mu = uniform(rng, r.ground_mu_lo, r.ground_mu_hi);
  p.wheel_mu = uniform(rng, r.wheel_mu_lo, r.wheel_mu_hi);
  p.body_mass = uniform(rng, r.body_mass_lo, r.body_mass_hi);
  p.tail_mass = uniform(rng, r.tail_mass_lo, r.tail_mass_hi);
  p.head_mass = uniform(rng, r.head_mass_lo, r.head_mass_hi);
  for (double& lam : p.max_pressure) lam = uniform(rng, r.pressure_lo, r.pressure_hi);
  p.gravity_angle = uniform(rng, r.gravity_angle_lo, r.gravity_angle_hi);
  return p;
}

SnakeState SnakeState::at_rest(const SnakeParams& params, Vec2 head, double heading) {
  SnakeState s;
  const Kinematics k = kinematics(s.delta, s.delta_rate, params);
  // rho[0] is the head relative to the COM in the body frame.
  s.theta = heading;
  s.com = head - rotate(k.rho[0], heading);
  return s;
}

Vec2 head_position(const SnakeState& state, const SnakeParams& params) {
  const Kinematics k = kinematics(state.delta, {}, params);
  return state.com + rotate(k.rho[0], state.theta);
}

double heading(const SnakeState& state, const SnakeParams& params) {
  const BodyShape shape = body_shape(state.delta, {}, params.link_length);
  const Vec2 chord = shape.r[0] - shape.r[kNodes - 1];
  return state.theta + std::atan2(chord.y, chord.x);
}

Vec2 com_velocity(const SnakeState& state, const SnakeParams& params) {
  return state.momentum * (1.0 / params.total_mass());
}

std::array<double, kLinks> curvature(const SnakeState& state, const SnakeParams& params) {
  std::array<double, kLinks> kappa{};
  for (std::size_t i = 0; i < kLinks; ++i) kappa[i] = state.delta[i] / params.link_length[i];
  return kappa;
}

std::array<Vec2, kNodes> node_positions(const SnakeState& state, const SnakeParams& params) {
  const Kinematics k = kinematics(state.delta, {}, params);
  std::array<Vec2, kNodes> out;
  for (std::size_t n = 0; n < kNodes; ++n) out[n] = state.com + rotate(k.rho[n], state.theta);
  return out;
}

std::array<Vec2, kNodes> node_velocities(const SnakeState& state, const SnakeParams& params) {
  const Kinematics k = kinematics(state.delta, state.delta_rate, params);
  const double omega = (state.spin - k.shape_spin) / k.inertia;
  const Vec2 vc = state.momentum * (1.0 / k.mass);
  std::array<Vec2, kNodes> out;
  for (std::size_t n = 0; n < kNodes; ++n) {
    const Vec2 arm = rotate(k.rho[n], state.theta);
    out[n] = vc + omega * perp(arm) + rotate(k.rhodot[n], state.theta);
  }
  return out;
}

double kinetic_energy(const SnakeState& state, const SnakeParams& params) {
  const auto v = node_velocities(state, params);
  double e = 0.0;
  for (std::size_t n = 0; n < kNodes; ++n) e += 0.5 * params.node_mass(n) * dot(v[n], v[n]);
  return e;
}

SnakeState actuate(const SnakeState& state, const cpg::CpgOutput& psi,
                   const SnakeParams& params, double dt) {
  SnakeState next = state;
  const double decay = std::exp(-dt / params.act_tau);
  for (std::size_t i = 0; i < kLinks; ++i) {
    const double pressure_ratio = params.max_pressure[i] / params.nominal_pressure * psi[i];
    const double target = params.curvature_gain * pressure_ratio * params.link_length[i];
    next.delta[i] = target + (state.delta[i] - target) * decay;
    next.delta_rate[i] = (next.delta[i] - state.delta[i]) / dt;
  }
  return next;
}

SnakeState propel(const SnakeState& state, const SnakeParams& params, double dt) {
  const Rigid s0{state.com.x, state.com.y, state.theta,
                 state.momentum.x, state.momentum.y, state.spin};
  const auto shape0 = shape_at(state, dt);
  const auto shape_mid = shape_at(state, 0.5 * dt);
  const auto& shape1 = state.delta;
  const auto& rate = state.delta_rate;

  const Rigid k1 = rigid_rhs(s0, shape0, rate, params);
  const Rigid k2 = rigid_rhs(axpy(s0, 0.5 * dt, k1), shape_mid, rate, params);
  const Rigid k3 = rigid_rhs(axpy(s0, 0.5 * dt, k2), shape_mid, rate, params);
  const Rigid k4 = rigid_rhs(axpy(s0, dt, k3), shape1, rate, params);

  const double h6 = dt / 6.0;
  SnakeState next = state;
  next.com.x = s0.cx + h6 * (k1.cx + 2.0 * k2.cx + 2.0 * k3.cx + k4.cx);
  next.com.y = s0.cy + h6 * (k1.cy + 2.0 * k2.cy + 2.0 * k3.cy + k4.cy);
  next.theta = s0.theta + h6 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta);
  next.momentum.x = s0.px + h6 * (k1.px + 2.0 * k2.px + 2.0 * k3.px + k4.px);
  next.momentum.y = s0.py + h6 * (k1.py + 2.0 * k2.py + 2.0 * k3.py + k4.py);
  next.spin = s0.spin + h6 * (k1.spin + 2.0 * k2.spin + 2.0 * k3.spin + k4.spin);
  next.delta_rate.fill(0.0);
  next.t = state.t + dt;
  return next;
}

SnakeState substep(const SnakeState& state, const cpg::CpgOutput& psi,
                   const SnakeParams& params, double dt) {
  return propel(actuate(state, psi, params, dt), params, dt);
}

GoalFrame goal_frame(const SnakeState& state, const SnakeParams& params, Vec2 goal,
                     Vec2 origin) {
  GoalFrame f;
  f.goal = goal;
  const Vec2 h = head_position(state, params);
  const Vec2 to_goal = goal - h;
  f.rho_g = norm(to_goal);
  f.l_g = f.rho_g;

  const Vec2 issue_dir = goal - origin;
  const double issue_len = norm(issue_dir);
  f.d_g = issue_len > 0.0 ? dot(h - origin, issue_dir) / issue_len : 0.0;

  const Vec2 v = com_velocity(state, params);
  if (f.rho_g > 0.0) {
    const Vec2 g = to_goal * (1.0 / f.rho_g);
    f.v_g = dot(v, g);
    // Velocity direction; a motionless snake falls back to its heading.
    const Vec2 dir = norm(v) > 1e-9 ? v : Vec2{std::cos(heading(state, params)),
                                               std::sin(heading(state, params))};
    f.theta_g = wrap_angle(std::atan2(cross(g, dir), dot(g, dir)));
  }
  return f;
}

Observation observe(const SnakeState& state, const SnakeParams& params,
                    const GoalFrame& current, const GoalFrame& previous, double control_dt) {
  const auto kappa = curvature(state, params);
  return {current.rho_g,
          (current.rho_g - previous.rho_g) / control_dt,
          current.theta_g,
          wrap_angle(current.theta_g - previous.theta_g) / control_dt,
          kappa[0],
          kappa[1],
          kappa[2],
          kappa[3]};
}

}  // namespace snakecpg::snake
