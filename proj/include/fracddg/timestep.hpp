#ifndef FRACDDG_TIMESTEP_HPP_
#define FRACDDG_TIMESTEP_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracddg/errors.hpp"
#include "fracddg/models.hpp"

namespace fracddg {

struct RunControl {
  double t0 = 0.0;
  double T = 1.0;
  double cfl = 0.1;
  std::optional<double> dt_override;
  std::vector<double> snapshot_times;
  /// Upper bound from a stability estimate; applied after the CFL rule.
  std::optional<double> dt_cap;
};

inline void validate_control(const RunControl& c) {
  if (!(c.T > c.t0)) throw ParameterError("RunControl: need T > t0");
  if (!(c.cfl > 0.0 && c.cfl < 1.0)) throw ParameterError("RunControl: cfl must lie in (0,1)");
  if (c.dt_override && !(*c.dt_override > 0.0)) throw ParameterError("RunControl: dt must be positive");
  if (c.dt_cap && !(*c.dt_cap > 0.0)) throw ParameterError("RunControl: dt cap must be positive");
}

/// dt = cfl * dx_min^alpha unless overridden, then capped.
inline double time_step(const RunControl& c, double dx_min, double alpha) {
  double dt = c.dt_override ? *c.dt_override : c.cfl * std::pow(dx_min, alpha);
  if (c.dt_cap) dt = std::min(dt, *c.dt_cap);
  if (!(dt > 0.0)) throw ParameterError("time step must be positive");
  return dt;
}

template <class State>
bool state_finite(const State& s) {
  if constexpr (requires { s.all_finite(); }) {
    return s.all_finite();
  } else if constexpr (requires { s.allFinite(); }) {
    return s.allFinite();
  } else {
    return std::isfinite(s);
  }
}

/// Classical four-stage RK step.
template <class State, class F>
State erk4_step(const F& rhs, const State& u, double t, double dt) {
  if (!(dt > 0.0)) throw ParameterError("erk4_step: dt must be positive");
  auto check = [t](const State& k, int stage) {
    if (!state_finite(k)) {
      throw NumericalError("non-finite value in RK stage " + std::to_string(stage) + " at t=" + std::to_string(t));
    }
  };
  const State k1 = rhs(t, u);
  check(k1, 1);
  const State k2 = rhs(t + 0.5 * dt, u + (0.5 * dt) * k1);
  check(k2, 2);
  const State k3 = rhs(t + 0.5 * dt, u + (0.5 * dt) * k2);
  check(k3, 3);
  const State k4 = rhs(t + dt, u + dt * k3);
  check(k4, 4);
  State next = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  check(next, 5);
  return next;
}

template <class State>
struct IntegrationResult {
  State final_state;
  double t_final = 0.0;
  double dt = 0.0;
  long steps = 0;
  std::vector<std::pair<double, State>> snapshots;
};

/// Observer called after every accepted step with (t, state).
template <class State>
using StepObserver = std::function<void(double, const State&)>;

/// Steps from t0 to T with a fixed dt, shortening the step that would cross a
/// snapshot time or T so those times are hit exactly.
template <class State, class F>
IntegrationResult<State> integrate(const F& rhs, State state, const RunControl& control, double dx_min, double alpha,
                                   const StepObserver<State>& observer = nullptr) {
  validate_control(control);
  const double dt = time_step(control, dx_min, alpha);
  std::vector<double> stops = control.snapshot_times;
  std::sort(stops.begin(), stops.end());
  stops.erase(std::remove_if(stops.begin(), stops.end(),
                             [&](double s) { return !(s > control.t0 && s < control.T); }),
              stops.end());
  stops.push_back(control.T);

  IntegrationResult<State> res;
  res.dt = dt;
  double t = control.t0;
  for (double stop : control.snapshot_times) {
    if (stop == control.t0) res.snapshots.emplace_back(t, state);
  }
  for (double stop : stops) {
    while (t < stop) {
      double h = dt;
      // Avoid a sliver step: stretch the final step by up to 1e-10 relative.
      if (t + h >= stop - 1e-12 * std::max(1.0, std::abs(stop))) h = stop - t;
      state = erk4_step(rhs, state, t, h);
      t = (h == stop - t) ? stop : t + h;
      ++res.steps;
      if (observer) observer(t, state);
    }
    if (std::find(control.snapshot_times.begin(), control.snapshot_times.end(), stop) !=
        control.snapshot_times.end()) {
      res.snapshots.emplace_back(t, state);
    }
  }
  res.final_state = std::move(state);
  res.t_final = t;
  return res;
}

/// Dominant eigenvalue modulus of a linear map, by power iteration averaged
/// over blocks of steps so that complex-conjugate pairs do not stall it.
inline double spectral_radius_estimate(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                                       Eigen::Index n, int iterations = 200, unsigned seed = 7) {
  Eigen::VectorXd x(n);
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < n; ++i) x(i) = normal(rng);
  x.normalize();
  const int block = 8;
  double est = 0.0;
  for (int it = 0; it < iterations / block; ++it) {
    double log_growth = 0.0;
    for (int j = 0; j < block; ++j) {
      x = apply(x);
      const double nx = x.norm();
      if (nx == 0.0) return 0.0;
      log_growth += std::log(nx);
      x /= nx;
    }
    est = std::exp(log_growth / block);
  }
  return est;
}

/// RK4 stability bound along the real and imaginary axes, with margin.
inline constexpr double kRk4RealLimit = 2.78;
inline constexpr double kRk4ImagLimit = 2.82;

}  // namespace fracddg

#endif  // FRACDDG_TIMESTEP_HPP_
