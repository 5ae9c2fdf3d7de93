#include "hysnet/slow_flow.hpp"

#include <algorithm>
#include <cmath>

#include "hysnet/ode.hpp"

namespace hysnet {

SlowFlowModel make_small_damping_model(const ModalBasis& basis, const NetworkModel& model) {
  SlowFlowModel sf;
  sf.regime = Regime::SmallDamping;
  sf.nu = model.nu;
  sf.eta = model.eta;
  sf.epsilon = model.epsilon;
  sf.q = model.q;
  sf.mode_index = dominant_mode(basis, model.q);
  sf.mode = basis.modes.col(sf.mode_index - 1);
  sf.omega = basis.omegas[sf.mode_index - 1];
  sf.p = std::abs(sf.mode[model.q - 1]);
  sf.weights = Vec::Zero(model.n);
  for (int k = 0; k < model.n; ++k) {
    if (k == model.q - 1) continue;
    sf.weights[k] = sf.mode[k] * sf.mode[k];
  }
  sf.weight_sum = sf.weights.sum();
  return sf;
}

SlowFlowModel make_large_damping_model(const NetworkModel& model) {
  SlowFlowModel sf;
  sf.regime = Regime::LargeDamping;
  sf.nu = model.nu;
  sf.eta = model.eta;
  sf.epsilon = model.epsilon;
  sf.q = model.q;
  sf.p = 1.0;
  const Real kqq = model.stiffness(model.q - 1, model.q - 1);
  sf.omega = std::sqrt(kqq);
  sf.mode = Vec::Zero(model.n);
  sf.mode[model.q - 1] = 1.0;
  sf.weights = Vec::Zero(model.n);
  for (int k = 0; k < model.n; ++k) {
    if (k == model.q - 1) continue;
    sf.weights[k] = model.stiffness(model.q - 1, k) * model.stiffness(k, model.q - 1) / kqq;
  }
  sf.weight_sum = sf.weights.sum();
  return sf;
}

Real amplitude_rhs(const SlowFlowModel& sf, Real amp, Real zeta_agg) {
  const Real p2 = sf.p * sf.p;
  const Real a2 = amp * amp;
  return 0.5 * (p2 * sf.nu - zeta_agg) * amp + p2 * p2 * sf.eta / 8.0 * a2 * amp -
         p2 * p2 * p2 * sf.eta / 16.0 * a2 * a2 * amp;
}

std::vector<Real> nullcline(const SlowFlowModel& sf, Real zeta_agg) {
  std::vector<Real> roots{0.0};
  const Real p2 = sf.p * sf.p;
  if (sf.eta <= 0) return roots;
  const Real disc = (p2 * (8.0 * sf.nu + sf.eta) - 8.0 * zeta_agg) / (p2 * p2 * p2 * sf.eta);
  if (disc < 0) return roots;
  const Real s = std::sqrt(disc);
  const Real lo = 1.0 / p2 - s;
  const Real hi = 1.0 / p2 + s;
  if (lo > 0) roots.push_back(std::sqrt(lo));
  if (hi > 0 && hi != lo) roots.push_back(std::sqrt(hi));
  return roots;
}

BifurcationValues bifurcation_values(const SlowFlowModel& sf) {
  const Real p2 = sf.p * sf.p;
  return {p2 * sf.nu, p2 * (8.0 * sf.nu + sf.eta) / 8.0, 1.0 / sf.p};
}

RateLawParams rate_law_params(const SlowFlowModel& sf, Real delta, Real tau) {
  RateLawParams law;
  law.p2 = sf.p * sf.p;
  law.weight_sum = sf.weight_sum;
  law.nu = sf.nu;
  law.eta = sf.eta;
  law.delta = delta;
  law.tau = tau;
  return law;
}

Vec damping_rhs(const SlowFlowModel& sf, const Vec& zetas, const Vec& amps, Real delta,
                Real tau) {
  const RateLawParams law = rate_law_params(sf, delta, tau);
  Vec out = Vec::Zero(zetas.size());
  for (Index k = 0; k < zetas.size(); ++k) {
    if (k == sf.q - 1) continue;
    out[k] = (-zetas[k] + rate_target(law, amps[k] * amps[k])) / tau;
  }
  return out;
}

Vec2 planar_rhs(const SlowFlowModel& sf, const Vec2& state, Real delta, Real tau) {
  const Real amp = state[0];
  const Real zeta = state[1];
  const Real p2 = sf.p * sf.p;
  Vec2 out;
  out[0] = amplitude_rhs(sf, amp, zeta);
  out[1] = (-zeta + delta + p2 * sf.nu + p2 * p2 * sf.eta * amp * amp / 8.0) / tau;
  return out;
}

namespace {

Eigen::Matrix2d planar_jacobian(const SlowFlowModel& sf, const Vec2& state, Real delta,
                                Real tau) {
  (void)delta;
  const Real amp = state[0];
  const Real zeta = state[1];
  const Real p2 = sf.p * sf.p;
  const Real p4 = p2 * p2;
  const Real p6 = p4 * p2;
  Eigen::Matrix2d j;
  j(0, 0) = 0.5 * (p2 * sf.nu - zeta) + 3.0 * p4 * sf.eta / 8.0 * amp * amp -
            5.0 * p6 * sf.eta / 16.0 * amp * amp * amp * amp;
  j(0, 1) = -0.5 * amp;
  j(1, 0) = p4 * sf.eta * amp / (4.0 * tau);
  j(1, 1) = -1.0 / tau;
  return j;
}

}  // namespace

std::vector<CoupledEquilibrium> coupled_equilibria(const SlowFlowModel& sf, Real delta,
                                                   Real tau) {
  const Real p2 = sf.p * sf.p;
  const Real p = sf.p;
  std::vector<CoupledEquilibrium> out;
  out.push_back({p2 * sf.nu + delta, 0.0, CoupledEquilibrium::Stability::Stable});

  const Real disc = p2 * sf.eta * sf.eta - 32.0 * sf.eta * delta;
  if (disc < 0) return out;
  const Real zeta_lo = p2 * sf.nu + delta + (p2 * sf.eta - p * std::sqrt(disc)) / 16.0;
  const Real zeta_hi = p2 * sf.nu + delta + (p2 * sf.eta + p * std::sqrt(disc)) / 16.0;
  const auto amp_on_zeta_nullcline = [&](Real zeta) {
    return std::sqrt((zeta - delta - p2 * sf.nu) * 8.0 / (p2 * p2 * sf.eta));
  };
  out.push_back({zeta_lo, amp_on_zeta_nullcline(zeta_lo), CoupledEquilibrium::Stability::Saddle});
  const bool upper_stable = tau < 1.0 / (2.0 * delta);
  out.push_back({zeta_hi, amp_on_zeta_nullcline(zeta_hi),
                 upper_stable ? CoupledEquilibrium::Stability::Stable
                              : CoupledEquilibrium::Stability::Unstable});
  return out;
}

std::pair<Real, Real> forced_amplitude_rhs(const SlowFlowModel& sf, Real amp, Real phi,
                                           const Vec& f, Real delta) {
  const Real drive = sf.mode.dot(f);
  if (amp <= 0 && std::abs(drive) > 0)
    throw Error(ErrorCode::InvalidArgument,
                "phase equation singular at A = 0; use the linearized growth law");
  const Real p2 = sf.p * sf.p;
  const Real p4 = p2 * p2;
  const Real p6 = p4 * p2;
  const Real a2 = amp * amp;
  const Real da = -0.5 * delta * amp + p4 * sf.eta / 8.0 * a2 * amp -
                  p6 * sf.eta / 16.0 * a2 * a2 * amp - std::sin(phi) / (2.0 * sf.omega) * drive;
  const Real dphi = amp > 0 ? -std::cos(phi) / (2.0 * amp * sf.omega) * drive : 0.0;
  return {da, dphi};
}

Real trigger_threshold(const SlowFlowModel& sf, Real delta) {
  const Real p2 = sf.p * sf.p;
  if (8.0 * delta >= p2 * sf.eta)
    throw Error(ErrorCode::NoThreshold, "bistability window absent: 8 delta >= p^2 eta");
  const Real inner = std::sqrt((p2 * sf.eta - 8.0 * delta) / (p2 * p2 * p2 * sf.eta));
  return std::sqrt(1.0 / p2 - inner);
}

Real required_trigger_time(const SlowFlowModel& sf, const Vec& f, Real delta,
                           TriggerMethod method) {
  const Real drive = std::abs(sf.mode.dot(f));
  if (drive < 1e-14)
    throw Error(ErrorCode::InfiniteTriggerTime, "forcing orthogonal to the dominant mode");
  const Real abar = trigger_threshold(sf, delta);
  if (method == TriggerMethod::ClosedForm)
    return 2.0 * sf.omega * abar / (sf.epsilon * drive);

  // phase-locked scalar law from rest; slow time, then rescale
  const Real p4 = sf.p * sf.p * sf.p * sf.p;
  const Real p6 = p4 * sf.p * sf.p;
  const auto rhs = [&](Real, const Vec& y) {
    const Real a = y[0];
    Vec dy(1);
    dy[0] = -0.5 * delta * a + p4 * sf.eta / 8.0 * a * a * a -
            p6 * sf.eta / 16.0 * a * a * a * a * a + drive / (2.0 * sf.omega);
    if (dy[0] <= 0)
      throw Error(ErrorCode::InfiniteTriggerTime, "growth stalls below the threshold");
    return dy;
  };
  Vec y0(1);
  y0[0] = 0.0;
  const Real t_guess = 2.0 * sf.omega * abar / drive;
  const Real t_slow = integrate_until(rhs, 0.0, y0, 50.0 * t_guess, t_guess / 400.0,
                                      [&](const Vec& y) { return y[0] - abar; });
  return t_slow / sf.epsilon;
}

TriggerPlan plan_trigger(const SlowFlowModel& sf, const Vec& f, Real delta) {
  TriggerPlan plan;
  plan.f = f;
  plan.delta = delta;
  plan.threshold = trigger_threshold(sf, delta);
  plan.t_req_closed_form = required_trigger_time(sf, f, delta, TriggerMethod::ClosedForm);
  plan.t_req_integrated = required_trigger_time(sf, f, delta, TriggerMethod::Integrate);
  return plan;
}

std::vector<Vec2> stable_manifold_branch(const SlowFlowModel& sf, Real delta, Real tau,
                                         Real arc_budget) {
  const auto equilibria = coupled_equilibria(sf, delta, tau);
  const CoupledEquilibrium* saddle = nullptr;
  for (const auto& e : equilibria)
    if (e.stability == CoupledEquilibrium::Stability::Saddle) saddle = &e;
  if (saddle == nullptr)
    throw Error(ErrorCode::NoSaddle, "no saddle equilibrium at this delta");

  const Vec2 x_saddle(saddle->amp, saddle->zeta);
  const Eigen::Matrix2d jac = planar_jacobian(sf, x_saddle, delta, tau);
  const Eigen::EigenSolver<Eigen::Matrix2d> es(jac);
  int stable_idx = es.eigenvalues()[0].real() < es.eigenvalues()[1].real() ? 0 : 1;
  Vec2 dir = es.eigenvectors().col(stable_idx).real();
  dir.normalize();
  if (dir[0] < 0) dir = -dir;  // branch toward larger amplitude

  const BifurcationValues bif = bifurcation_values(sf);
  const Real amp_cap = 2.0 * bif.amp_sn;
  const Real zeta_cap = 2.0 * bif.zeta_sn;

  std::vector<Vec2> polyline;
  Real arc = 0.0;
  Vec2 prev = x_saddle + 1e-6 * dir;
  const auto backward = [&](Real, const Vec& y) {
    const Vec2 d = planar_rhs(sf, Vec2(y[0], y[1]), delta, tau);
    Vec out(2);
    out << -d[0], -d[1];
    return out;
  };
  AdaptiveOptions opt;
  opt.abs_tol = 1e-10;
  opt.rel_tol = 1e-10;
  opt.h_init = 1e-4;
  opt.h_max = 0.5;
  Vec start(2);
  start << prev[0], prev[1];
  integrate_adaptive(backward, 0.0, 1e4, start, opt, [&](Real, const Vec& y) {
    const Vec2 pt(y[0], y[1]);
    arc += (pt - prev).norm();
    prev = pt;
    polyline.emplace_back(pt[1], pt[0]);  // (zeta, A)
    if (arc >= arc_budget) return false;
    if (pt[0] < 0 || pt[0] > amp_cap || pt[1] < 0 || pt[1] > zeta_cap) return false;
    return true;
  });
  return polyline;
}

FourNodeReference fournode_reference(int q, Regime regime) {
  if (q < 1 || q > 4) throw Error(ErrorCode::InvalidArgument, "Q must be in 1..4");
  const Real nu = 1.0, eta = 10.0;
  FourNodeReference ref;
  ref.q = q;
  ref.regime = regime;

  // node 4 mirrors node 1 under the network's 1<->4 symmetry
  const int qq = (q == 4) ? 1 : q;
  if (regime == Regime::SmallDamping) {
    switch (qq) {
      case 1:
        ref = {q, regime, 1.0, 9.0 / 4.0, std::sqrt(2.0), 2.0, 0.5,
               {q == 4 ? 1 : 4}, 0, 0, 0};
        break;
      case 2:
        ref = {q, regime, 9.0, 81.0 / 4.0, 2.0 / std::sqrt(3.0), std::sqrt(5.0), 1.0 / 12.0,
               {1, 3, 4}, 0, 0, 0};
        break;
      case 3:
        ref = {q, regime, 4.0, 9.0, std::sqrt(1.5), std::sqrt(2.0), 1.0 / 6.0,
               {1, 4}, 0, 0, 0};
        break;
    }
  } else {
    switch (qq) {
      case 1:
        ref = {q, regime, 3.0, 27.0 / 4.0, 1.0, std::sqrt(3.0), 1.0 / 3.0,
               q == 4 ? std::vector<int>{1, 2} : std::vector<int>{2, 4}, 0, 0, 0};
        break;
      case 2:
        ref = {q, regime, 4.0, 9.0, 1.0, 2.0, 1.0 / 4.0, {1, 3, 4}, 0, 0, 0};
        break;
      case 3:
        ref = {q, regime, 2.0, 9.0 / 2.0, 1.0, std::sqrt(2.0), 1.0 / 2.0, {2}, 0, 0, 0};
        break;
    }
  }

  const Real p2 = 1.0 / (ref.amp_sn * ref.amp_sn);
  ref.lin = ref.agg_scale / 2.0;
  ref.cub = p2 * p2 * eta / 8.0;
  ref.quint = p2 * p2 * p2 * eta / 16.0;
  (void)nu;
  return ref;
}

std::pair<Real, Real> FourNodeReference::nullcline_squared(Real zeta) const {
  const Real eta = 10.0;
  const Real nu = 1.0;
  const Real p2 = 1.0 / (amp_sn * amp_sn);
  const Real disc =
      (p2 * (8.0 * nu + eta) - 8.0 * agg_scale * zeta) / (p2 * p2 * p2 * eta);
  const Real s = disc >= 0 ? std::sqrt(disc) : std::numeric_limits<Real>::quiet_NaN();
  return {1.0 / p2 - s, 1.0 / p2 + s};
}

std::pair<Real, Real> epsilon_max_estimate(const NetworkModel& model, const ModalBasis& basis) {
  const int mode = dominant_mode(basis, model.q);
  const Real p2 = basis.modes(model.q - 1, mode - 1) * basis.modes(model.q - 1, mode - 1);
  const Real kqq = model.stiffness(model.q - 1, model.q - 1);
  const Real eps_intersection =
      std::sqrt((kqq - 1.0) * (1.0 - p2) / (kqq * p2)) / (model.nu + model.eta / 8.0);
  return {eps_intersection, eps_intersection / 2.0};
}

}  // namespace hysnet
