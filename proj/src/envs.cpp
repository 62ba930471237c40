#include "ndp/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ndp {

namespace cartpole {

double theta_limit() { return 12.0 * std::numbers::pi / 180.0; }

CartPoleState reset(Rng& rng) {
  std::uniform_real_distribution<double> init(-0.05, 0.05);
  CartPoleState s;
  s.x = init(rng);
  s.x_dot = init(rng);
  s.theta = init(rng);
  s.theta_dot = init(rng);
  return s;
}

bool terminal(const CartPoleState& s) {
  return std::abs(s.x) > kXLimit || std::abs(s.theta) > theta_limit() ||
         s.steps >= kMaxSteps;
}

CartPoleState integrate(const CartPoleState& s, double force) {
  double cos_t = std::cos(s.theta);
  double sin_t = std::sin(s.theta);
  double total_mass = kMassCart + kMassPole;
  double polemass_length = kMassPole * kHalfLength;

  double temp =
      (force + polemass_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
  double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / total_mass));
  double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

  CartPoleState next = s;
  // semi-implicit Euler: velocities first, then positions with the new
  // velocities (keeps zero-force oscillations bounded at tau = 0.02)
  next.x_dot += kTau * x_acc;
  next.x += kTau * next.x_dot;
  next.theta_dot += kTau * theta_acc;
  next.theta += kTau * next.theta_dot;
  next.steps += 1;
  return next;
}

CartPoleStep step(const CartPoleState& s, int action) {
  if (terminal(s))
    fail(ErrorKind::Contract, "cartpole: stepping a terminal state");
  if (action != 0 && action != 1)
    fail(ErrorKind::Contract, "cartpole: action must be 0 or 1");
  CartPoleStep out;
  out.state = integrate(s, action == 1 ? kForceMag : -kForceMag);
  out.reward = 1.0;
  out.done = terminal(out.state);
  return out;
}

std::vector<double> observe(const CartPoleState& s) {
  return {s.x, s.x_dot, s.theta, s.theta_dot};
}

}  // namespace cartpole

double cartpole_rollout(const Policy& policy, Rng& rng, int max_steps) {
  CartPoleState s = cartpole::reset(rng);
  double total = 0.0;
  for (int t = 0; t < max_steps; ++t) {
    auto out = policy(cartpole::observe(s));
    int action = out.size() > 1 && out[1] > out[0] ? 1 : 0;
    auto step = cartpole::step(s, action);
    total += step.reward;
    s = step.state;
    if (step.done) break;
  }
  return total;
}

double xor_fitness(const Policy& policy) {
  static const double cases[4][3] = {
      {0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
  double mse = 0.0;
  for (const auto& c : cases) {
    auto out = policy({c[0], c[1]});
    if (out.empty()) fail(ErrorKind::Contract, "xor_fitness: empty policy output");
    double mapped = (out[0] + 1.0) / 2.0;
    double d = mapped - c[2];
    mse += d * d;
  }
  return -mse / 4.0;
}

double smallworld_fitness(const DevGraph& g, int n_random_refs,
                          std::uint64_t rng_seed, double penalty) {
  if (g.node_count() < 10) return penalty;
  try {
    auto rep = g.small_world_metrics(n_random_refs, rng_seed);
    return rep.sigma - std::abs(rep.omega);
  } catch (const Error&) {
    return penalty;  // disconnected or degenerate
  }
}

}  // namespace ndp
