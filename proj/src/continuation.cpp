#include "hysnet/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "hysnet/ode.hpp"
#include "hysnet/slow_flow.hpp"

namespace hysnet {

namespace {

Mat fd_jacobian(const std::function<Vec(const Vec&)>& residual, const Vec& x, Real step) {
  const Index n = x.size();
  const Vec r0 = residual(x);
  Mat jac(r0.size(), n);
  for (Index i = 0; i < n; ++i) {
    const Real h = step * std::max(Real(1), std::abs(x[i]));
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    jac.col(i) = (residual(xp) - residual(xm)) / (2 * h);
  }
  return jac;
}

}  // namespace

NewtonResult try_newton_corrector(const std::function<Vec(const Vec&)>& residual,
                                  const Vec& guess, const NewtonOptions& opt) {
  NewtonResult result;
  result.x = guess;
  for (int it = 0; it < opt.max_iter; ++it) {
    const Vec r = residual(result.x);
    result.residual_norm = r.norm();
    result.iterations = it;
    if (result.residual_norm <= opt.tol) {
      result.converged = true;
      return result;
    }
    const Mat jac = fd_jacobian(residual, result.x, opt.fd_step);
    Eigen::PartialPivLU<Mat> lu(jac);
    result.condition_estimate = lu.rcond();
    if (!(result.condition_estimate > 1e-15)) return result;  // singular Jacobian
    const Vec dx = lu.solve(r);
    if (!dx.allFinite()) return result;
    result.x -= dx;
  }
  const Vec r = residual(result.x);
  result.residual_norm = r.norm();
  result.iterations = opt.max_iter;
  result.converged = result.residual_norm <= opt.tol;
  return result;
}

Vec newton_corrector(const std::function<Vec(const Vec&)>& residual, const Vec& guess,
                     const NewtonOptions& opt) {
  const NewtonResult result = try_newton_corrector(residual, guess, opt);
  if (!result.converged)
    throw Error(ErrorCode::NoConvergence,
                "newton corrector failed: residual " + std::to_string(result.residual_norm) +
                    ", rcond " + std::to_string(result.condition_estimate));
  return result.x;
}

DampingState damping_for(const ParameterSpec& spec, Real mu, const NetworkModel& model) {
  DampingState d;
  d.regime = Regime::SmallDamping;  // plain zeta_k for all sweeps
  d.zetas = spec.pinned.size() == model.n ? spec.pinned : Vec::Zero(model.n);
  if (spec.kind == ParameterSpec::Kind::Uniform) {
    for (int k = 0; k < model.n; ++k)
      if (k != model.q - 1) d.zetas[k] = mu;
  } else {
    if (spec.node < 1 || spec.node > model.n)
      throw Error(ErrorCode::InvalidArgument, "free node out of range");
    d.zetas[spec.node - 1] = mu;
  }
  return d;
}

namespace {

struct EigenSummary {
  int unstable_pairs_total;  // eigenvalues with positive real part
  Real max_real;
  std::complex<Real> closest_pair;  // eigenvalue with smallest |Re|, Im > 0
};

EigenSummary equilibrium_eigs(const NetworkModel& model, const ParameterSpec& spec, Real mu) {
  const DampingState d = damping_for(spec, mu, model);
  const Mat a = first_order_matrix(model, d);
  const Eigen::EigenSolver<Mat> es(a);
  EigenSummary s{0, -1e300, {0, 0}};
  Real best = 1e300;
  for (Index i = 0; i < a.rows(); ++i) {
    const auto ev = es.eigenvalues()[i];
    if (ev.real() > 0) ++s.unstable_pairs_total;
    s.max_real = std::max(s.max_real, ev.real());
    if (ev.imag() > 0 && std::abs(ev.real()) < best) {
      best = std::abs(ev.real());
      s.closest_pair = ev;
    }
  }
  return s;
}

}  // namespace

Branch continue_equilibria(const NetworkModel& model, const ParameterSpec& spec, Real mu_lo,
                           Real mu_hi, int grid_points) {
  if (!(mu_hi > mu_lo) || mu_lo <= 0)
    throw Error(ErrorCode::InvalidArgument, "parameter range must satisfy 0 < mu_lo < mu_hi");
  Branch branch;
  const bool log_grid = mu_hi / mu_lo > 50.0;
  std::vector<Real> grid(static_cast<size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    const Real x = static_cast<Real>(i) / (grid_points - 1);
    grid[static_cast<size_t>(i)] =
        log_grid ? mu_lo * std::pow(mu_hi / mu_lo, x) : mu_lo + (mu_hi - mu_lo) * x;
  }

  int prev_unstable = -1;
  for (size_t i = 0; i < grid.size(); ++i) {
    const EigenSummary s = equilibrium_eigs(model, spec, grid[i]);
    BranchPoint pt;
    pt.parameter = grid[i];
    pt.state = Vec::Zero(2 * model.n);
    pt.max_displacement = Vec::Zero(model.n);
    pt.stable = s.max_real < 0;
    branch.points.push_back(std::move(pt));

    if (prev_unstable >= 0 && s.unstable_pairs_total != prev_unstable) {
      Real lo = grid[i - 1], hi = grid[i];
      int lo_count = prev_unstable;
      while (hi - lo > 1e-8 * std::max(Real(1), hi)) {
        const Real mid = 0.5 * (lo + hi);
        const int mid_count = equilibrium_eigs(model, spec, mid).unstable_pairs_total;
        if (mid_count == lo_count)
          lo = mid;
        else
          hi = mid;
      }
      const Real mu_star = 0.5 * (lo + hi);
      const EigenSummary at = equilibrium_eigs(model, spec, mu_star);
      BifurcationPoint ev;
      ev.kind = BifurcationPoint::Kind::Hopf;
      ev.parameter = mu_star;
      ev.state = Vec::Zero(2 * model.n);
      ev.frequency = std::abs(at.closest_pair.imag());
      ev.unstable_before = prev_unstable;
      ev.unstable_after = s.unstable_pairs_total;
      branch.events.push_back(std::move(ev));
    }
    prev_unstable = s.unstable_pairs_total;
  }
  return branch;
}

Vec flow_map(const NetworkModel& model, const DampingState& d, const Vec& y0, Real period,
             int steps) {
  const int n = model.n;
  const auto rhs = [&](Real, const Vec& y) {
    const Vec c = damping_coefficients(y.head(n), d, model);
    return mechanical_rhs(y.head(n), y.segment(n, n), model, c, Vec::Zero(n));
  };
  Vec y = y0;
  const Real dt = period / steps;
  for (int i = 0; i < steps; ++i) y = rk4_step(rhs, i * dt, y, dt);
  return y;
}

PeriodicSeed seed_periodic_orbit(const NetworkModel& model, const ParameterSpec& spec,
                                 const BifurcationPoint& hopf, Real a0) {
  if (!(a0 > 0)) throw Error(ErrorCode::SeedFailure, "seed amplitude must be positive");
  const int n = model.n;
  const DampingState d = damping_for(spec, hopf.parameter, model);
  const Eigen::EigenSolver<Mat> es(first_order_matrix(model, d));

  // crossing pair: near-zero real part, Im closest to the recorded frequency
  int best = -1;
  Real best_score = 1e300;
  for (Index i = 0; i < 2 * n; ++i) {
    const auto ev = es.eigenvalues()[i];
    if (ev.imag() <= 0) continue;
    const Real score = std::abs(ev.imag() - hopf.frequency) + std::abs(ev.real());
    if (score < best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw Error(ErrorCode::SeedFailure, "no complex crossing pair at the Hopf point");
  const std::complex<Real> lambda = es.eigenvalues()[best];
  CVec w = es.eigenvectors().col(best);

  // rotate so the anchored velocity component is zero at t = 0
  int anchor = model.q;
  if (std::abs(w[n + model.q - 1]) < 1e-8 * w.norm()) {
    Index imax;
    w.tail(n).cwiseAbs().maxCoeff(&imax);
    anchor = static_cast<int>(imax) + 1;
  }
  const std::complex<Real> wv = w[n + anchor - 1];
  w *= std::complex<Real>(std::cos(kPi / 2 - std::arg(wv)), std::sin(kPi / 2 - std::arg(wv)));

  Vec y0 = w.real();
  const Real scale = y0.head(n).cwiseAbs().maxCoeff();
  if (scale < 1e-12) throw Error(ErrorCode::SeedFailure, "degenerate eigenvector");
  y0 *= a0 / scale;

  Index amp_anchor;
  y0.head(n).cwiseAbs().maxCoeff(&amp_anchor);

  PeriodicSeed seed;
  seed.state = y0;
  seed.period = 2.0 * kPi / std::abs(lambda.imag());
  seed.parameter = hopf.parameter;
  seed.phase_anchor = anchor;
  seed.amplitude = std::abs(y0[amp_anchor]);
  seed.amp_anchor = static_cast<int>(amp_anchor) + 1;
  return seed;
}

namespace {

struct ShootingContext {
  const NetworkModel& model;
  const ParameterSpec& spec;
  int steps;
  int phase_anchor;  // 1-based

  // unknown layout: [y0 (2n), T, mu]
  Vec flow_of(const Vec& x) const {
    const int n2 = 2 * model.n;
    const DampingState d = damping_for(spec, x[n2 + 1], model);
    return flow_map(model, d, x.head(n2), x[n2], steps);
  }

  Vec base_residual(const Vec& x) const {
    const int n2 = 2 * model.n;
    Vec r(n2 + 1);
    r.head(n2) = flow_of(x) - x.head(n2);
    r[n2] = x[model.n + phase_anchor - 1];  // anchored velocity zero at t = 0
    return r;
  }
};

Vec max_displacement_along(const NetworkModel& model, const DampingState& d, const Vec& y0,
                           Real period, int steps) {
  const int n = model.n;
  const auto rhs = [&](Real, const Vec& y) {
    const Vec c = damping_coefficients(y.head(n), d, model);
    return mechanical_rhs(y.head(n), y.segment(n, n), model, c, Vec::Zero(n));
  };
  Vec y = y0;
  Vec peak = y0.head(n).cwiseAbs();
  const Real dt = period / steps;
  for (int i = 0; i < steps; ++i) {
    y = rk4_step(rhs, i * dt, y, dt);
    peak = peak.cwiseMax(y.head(n).cwiseAbs());
  }
  return peak;
}

Vec floquet_moduli(const ShootingContext& ctx, const Vec& x) {
  const int n2 = 2 * ctx.model.n;
  const Vec base = ctx.flow_of(x);
  Mat monodromy(n2, n2);
  for (int i = 0; i < n2; ++i) {
    Vec xp = x;
    const Real h = 1e-7 * std::max(Real(1), std::abs(x[i]));
    xp[i] += h;
    monodromy.col(i) = (ctx.flow_of(xp) - base) / h;
  }
  const Eigen::EigenSolver<Mat> es(monodromy);
  Vec moduli = es.eigenvalues().cwiseAbs();
  std::sort(moduli.data(), moduli.data() + moduli.size(), std::greater<Real>());
  return moduli;
}

bool orbit_stable(const Vec& moduli) {
  // discard the multiplier closest to +1 (trivial along-flow one), then
  // require the rest inside the unit circle
  Index trivial = 0;
  Real best = 1e300;
  for (Index i = 0; i < moduli.size(); ++i) {
    if (std::abs(moduli[i] - 1.0) < best) {
      best = std::abs(moduli[i] - 1.0);
      trivial = i;
    }
  }
  for (Index i = 0; i < moduli.size(); ++i) {
    if (i == trivial) continue;
    if (moduli[i] > 1.0 + 1e-3) return false;
  }
  return true;
}

}  // namespace

Branch continue_periodic(const NetworkModel& model, const ParameterSpec& spec,
                         const PeriodicSeed& seed, Real mu_lo, Real mu_hi,
                         const PeriodicOptions& opt) {
  Branch branch;
  const int n = model.n;
  const int n2 = 2 * n;
  const int dim = n2 + 2;
  ShootingContext ctx{model, spec, opt.steps_per_period, seed.phase_anchor};

  Vec weights = Vec::Ones(dim);
  weights[n2 + 1] = opt.parameter_weight;

  // first point: amplitude-anchored corrector (mu free) to step off the
  // trivial branch without collapsing onto it
  Vec x(dim);
  x.head(n2) = seed.state;
  x[n2] = seed.period;
  x[n2 + 1] = seed.parameter;
  {
    const int amp_idx = seed.amp_anchor - 1;
    // step off the trivial branch at a finite amplitude; at the seed's own
    // a0 the parameter column of the shooting Jacobian is O(a0 eps T) and
    // drowns in differencing noise
    if (std::abs(x[amp_idx]) < 0.05)
      x.head(n2) *= 0.05 / std::abs(x[amp_idx]);
    const Real a0 = x[amp_idx];
    const auto first_residual = [&](const Vec& xx) {
      Vec r(dim);
      r.head(n2 + 1) = ctx.base_residual(xx);
      r[n2 + 1] = xx[amp_idx] - a0;
      return r;
    };
    const NewtonResult res = try_newton_corrector(first_residual, x, opt.newton);
    if (!res.converged)
      throw Error(ErrorCode::SeedFailure, "first orbit correction failed (residual " +
                                              std::to_string(res.residual_norm) + ")");
    x = res.x;
  }

  const auto record_point = [&](const Vec& xx) {
    BranchPoint pt;
    pt.parameter = xx[n2 + 1];
    pt.state = xx.head(n2);
    pt.period = xx[n2];
    const DampingState d = damping_for(spec, pt.parameter, model);
    pt.max_displacement =
        max_displacement_along(model, d, pt.state, pt.period, opt.steps_per_period);
    pt.multiplier_moduli = floquet_moduli(ctx, xx);
    pt.stable = orbit_stable(pt.multiplier_moduli);
    branch.points.push_back(std::move(pt));
  };
  record_point(x);

  // initial tangent: away from the Hopf point (amplitude grows)
  Vec hopf_x = Vec::Zero(dim);
  hopf_x[n2] = seed.period;
  hopf_x[n2 + 1] = seed.parameter;
  Vec tangent = x - hopf_x;
  {
    const Real norm = std::sqrt(tangent.cwiseProduct(weights).squaredNorm());
    if (norm < 1e-14) throw Error(ErrorCode::SeedFailure, "degenerate initial tangent");
    tangent /= norm;
  }

  Real ds = opt.ds0;
  Vec x_prev = x;
  int fold_count = 0;

  while (static_cast<int>(branch.points.size()) < opt.max_points) {
    const Vec x_pred = x + ds * tangent;
    const auto pac_residual = [&](const Vec& xx) {
      Vec r(dim);
      r.head(n2 + 1) = ctx.base_residual(xx);
      r[n2 + 1] = (xx - x_pred).cwiseProduct(weights).dot(tangent.cwiseProduct(weights));
      return r;
    };
    const NewtonResult res = try_newton_corrector(pac_residual, x_pred, opt.newton);
    if (!res.converged) {
      ds *= 0.5;
      if (ds < opt.ds_min) {
        branch.stalled = true;
        break;
      }
      continue;
    }

    x_prev = x;
    x = res.x;
    record_point(x);

    Vec new_tangent = x - x_prev;
    const Real norm = std::sqrt(new_tangent.cwiseProduct(weights).squaredNorm());
    if (norm > 1e-14) new_tangent /= norm;
    // fold: the parameter component of the tangent flips sign
    const Real dmu_old = tangent[n2 + 1];
    const Real dmu_new = new_tangent[n2 + 1];
    if (dmu_old * dmu_new < 0 && branch.points.size() >= 3) {
      const auto& p3 = branch.points;
      const size_t m = p3.size();
      // quadratic extremum through the last three parameter values
      const Real m0 = p3[m - 3].parameter, m1 = p3[m - 2].parameter, m2 = p3[m - 1].parameter;
      const Real denom = (m0 - 2 * m1 + m2);
      Real mu_star = m1;
      if (std::abs(denom) > 1e-30) mu_star = m1 - 0.125 * (m2 - m0) * (m2 - m0) / denom;
      BifurcationPoint ev;
      ev.kind = BifurcationPoint::Kind::SaddleNode;
      ev.parameter = mu_star;
      ev.state = p3[m - 2].state;
      ev.frequency = 2.0 * kPi / p3[m - 2].period;
      branch.events.push_back(std::move(ev));
      ++fold_count;
      if (opt.stop_after_fold && fold_count >= 1 &&
          static_cast<int>(branch.points.size()) > 6) {
        tangent = new_tangent;
        break;
      }
    }
    tangent = new_tangent;

    if (res.iterations <= 4)
      ds = std::min(ds * 1.4, opt.ds_max);
    else if (res.iterations > 8)
      ds = std::max(ds * 0.6, opt.ds_min);

    const Real mu_now = x[n2 + 1];
    if (mu_now < mu_lo || mu_now > mu_hi) break;
    if (opt.amplitude_cap > 0 &&
        branch.points.back().max_displacement.maxCoeff() > opt.amplitude_cap)
      break;
    if (x[n2] <= 0) {
      branch.stalled = true;
      break;
    }
  }
  return branch;
}

TwoParameterMap two_parameter_map(const NetworkModel& base, const std::vector<Real>& eps_grid,
                                  const ParameterSpec& spec, Real mu_lo, Real mu_hi) {
  TwoParameterMap map;
  map.eps_grid = eps_grid;

  // analytic asymptotes from the slow-flow formulas
  {
    const ModalBasis basis = modal_decompose(base);
    const SlowFlowModel small = make_small_damping_model(basis, base);
    const BifurcationValues bv = bifurcation_values(small);
    map.mu_hb_small = bv.zeta_hb / small.weight_sum;
    map.mu_sn_small = bv.zeta_sn / small.weight_sum;
    const Real kqq = base.stiffness(base.q - 1, base.q - 1);
    map.c_hb_large = (kqq - 1.0) / (kqq * base.nu);
    map.c_sn_large = (kqq - 1.0) / (kqq * (base.nu + base.eta / 8.0));
  }

  for (const Real eps : eps_grid) {
    NetworkModel model = base;
    model.epsilon = eps;
    try {
      const Branch eq = continue_equilibria(model, spec, mu_lo, mu_hi);
      for (const auto& ev : eq.events)
        map.hopf.push_back({eps, ev.parameter, ev.frequency});
      for (const auto& ev : eq.events) {
        try {
          const PeriodicSeed seed = seed_periodic_orbit(model, spec, ev);
          PeriodicOptions opt;
          opt.stop_after_fold = true;
          opt.parameter_weight = 1.0 / std::max(Real(1), std::abs(ev.parameter));
          opt.ds_max = opt.parameter_weight < 1.0 ? 0.75 : 0.25;
          opt.amplitude_cap = 10.0;
          const Branch po =
              continue_periodic(model, spec, seed, mu_lo * 0.5, mu_hi * 1.05, opt);
          for (const auto& pev : po.events)
            if (pev.kind == BifurcationPoint::Kind::SaddleNode)
              map.saddle_node.push_back({eps, pev.parameter, pev.frequency});
        } catch (const Error& e) {
          map.gaps.push_back("eps " + std::to_string(eps) + " hopf " +
                             std::to_string(ev.parameter) + ": " + e.what());
        }
      }
    } catch (const Error& e) {
      map.gaps.push_back("eps " + std::to_string(eps) + ": " + e.what());
    }
  }
  return map;
}

}  // namespace hysnet
