#pragma once

#include <cmath>
#include <cstddef>

namespace pecons {

/// One classical fourth-order Runge-Kutta step of x' = f(t, x). `State` must
/// support addition and scaling by double (Eigen vectors and matrices do).
template <class State, class System>
State rk4_step(System&& f, double t, const State& x, double dt) {
  const double half = 0.5 * dt;
  const State k1 = f(t, x);
  const State k2 = f(t + half, State(x + half * k1));
  const State k3 = f(t + half, State(x + half * k2));
  const State k4 = f(t + dt, State(x + dt * k3));
  return State(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

/// Step layout used by every fixed-step integration: the span is divided into
/// a multiple of `record_stride` equal steps, each no longer than `dt`.
struct StepPlan {
  std::size_t steps = 0;
  double dt = 0.0;
};

inline StepPlan plan_steps(double t0, double t_final, double dt, std::size_t record_stride) {
  const double span = t_final - t0;
  const double per_record = dt * static_cast<double>(record_stride);
  const auto records = static_cast<std::size_t>(std::ceil(span / per_record - 1e-9));
  StepPlan plan;
  plan.steps = records * record_stride;
  plan.dt = span / static_cast<double>(plan.steps);
  return plan;
}

/// Integrates from t0 to t_final, calling `observe(step_index, t, x)` at step 0
/// and every `record_stride` steps after it. `guard(x)` may throw to abort.
template <class State, class System, class Observer, class Guard>
State integrate_fixed(System&& f, State x, double t0, double t_final, double dt,
                      std::size_t record_stride, Observer&& observe, Guard&& guard) {
  const StepPlan plan = plan_steps(t0, t_final, dt, record_stride);
  observe(std::size_t{0}, t0, x);
  for (std::size_t i = 0; i < plan.steps; ++i) {
    const double t = t0 + static_cast<double>(i) * plan.dt;
    x = rk4_step(f, t, x, plan.dt);
    guard(x);
    if ((i + 1) % record_stride == 0) {
      observe(i + 1, t0 + static_cast<double>(i + 1) * plan.dt, x);
    }
  }
  return x;
}

}  // namespace pecons
