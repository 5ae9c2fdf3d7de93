#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "hysnet/errors.hpp"
#include "hysnet/types.hpp"

namespace hysnet {

/// One classical four-stage Runge-Kutta step.
template <typename F>
Vec rk4_step(F&& f, Real t, const Vec& y, Real dt) {
  const Vec k1 = f(t, y);
  const Vec k2 = f(t + dt / 2, Vec(y + dt / 2 * k1));
  const Vec k3 = f(t + dt / 2, Vec(y + dt / 2 * k2));
  const Vec k4 = f(t + dt, Vec(y + dt * k3));
  return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

struct AdaptiveOptions {
  Real abs_tol = 1e-10;
  Real rel_tol = 1e-10;
  Real h_init = 1e-3;
  Real h_min = 1e-13;
  Real h_max = 1.0;
};

/// Dormand-Prince 5(4) with elementary step-size control. Calls
/// observer(t, y) after every accepted step (and once at t0); the observer
/// returns false to stop early.
template <typename F, typename Observer>
void integrate_adaptive(F&& f, Real t0, Real t1, Vec y, const AdaptiveOptions& opt,
                        Observer&& observer) {
  static const Real c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  Real t = t0;
  Real h = std::min(opt.h_init, t1 - t0);
  if (!observer(t, y)) return;
  while (t < t1) {
    h = std::min(h, t1 - t);
    const Vec k1 = f(t, y);
    const Vec k2 = f(t + c2 * h, Vec(y + h * (k1 / 5)));
    const Vec k3 = f(t + c3 * h, Vec(y + h * (3.0 / 40 * k1 + 9.0 / 40 * k2)));
    const Vec k4 = f(t + c4 * h, Vec(y + h * (44.0 / 45 * k1 - 56.0 / 15 * k2 + 32.0 / 9 * k3)));
    const Vec k5 = f(t + c5 * h,
                     Vec(y + h * (19372.0 / 6561 * k1 - 25360.0 / 2187 * k2 +
                                  64448.0 / 6561 * k3 - 212.0 / 729 * k4)));
    const Vec k6 = f(t + h, Vec(y + h * (9017.0 / 3168 * k1 - 355.0 / 33 * k2 +
                                         46732.0 / 5247 * k3 + 49.0 / 176 * k4 -
                                         5103.0 / 18656 * k5)));
    const Vec y5 = y + h * (35.0 / 384 * k1 + 500.0 / 1113 * k3 + 125.0 / 192 * k4 -
                            2187.0 / 6784 * k5 + 11.0 / 84 * k6);
    const Vec k7 = f(t + h, y5);
    const Vec y4 = y + h * (5179.0 / 57600 * k1 + 7571.0 / 16695 * k3 + 393.0 / 640 * k4 -
                            92097.0 / 339200 * k5 + 187.0 / 2100 * k6 + 1.0 / 40 * k7);
    Real err = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      const Real scale = opt.abs_tol + opt.rel_tol * std::abs(y5[i]);
      err = std::max(err, std::abs(y5[i] - y4[i]) / scale);
    }
    if (err <= 1.0) {
      t += h;
      y = y5;
      if (!observer(t, y)) return;
    }
    const Real factor =
        std::clamp(0.9 * std::pow(std::max(err, Real(1e-16)), Real(-0.2)), Real(0.2), Real(5.0));
    h = std::clamp(h * factor, opt.h_min, opt.h_max);
    if (h <= opt.h_min && err > 1.0)
      throw Error(ErrorCode::IntegrationDiverged, "adaptive step size underflow");
  }
}

/// Integrates y' = f(t, y) forward from (t0, y0) until event(y) crosses zero
/// from below; returns the crossing time located by bisection on the step.
template <typename F, typename Event>
Real integrate_until(F&& f, Real t0, const Vec& y0, Real t_max, Real dt, Event&& event) {
  Real t = t0;
  Vec y = y0;
  Real g = event(y);
  while (t < t_max) {
    const Vec y_next = rk4_step(f, t, y, dt);
    const Real g_next = event(y_next);
    if (g < 0 && g_next >= 0) {
      Real lo = 0, hi = dt;
      Vec y_hi = y_next;
      for (int it = 0; it < 60 && (hi - lo) > 1e-14 * std::max(Real(1), t); ++it) {
        const Real mid = 0.5 * (lo + hi);
        const Vec y_mid = rk4_step(f, t, y, mid);
        if (event(y_mid) >= 0) {
          hi = mid;
          y_hi = y_mid;
        } else {
          lo = mid;
        }
      }
      return t + hi;
    }
    t += dt;
    y = y_next;
    g = g_next;
  }
  throw Error(ErrorCode::NoConvergence, "event not reached before t_max");
}

}  // namespace hysnet
