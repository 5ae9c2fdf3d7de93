#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hysnet/network.hpp"
#include "hysnet/types.hpp"

namespace hysnet {

struct NewtonOptions {
  Real tol = 1e-9;
  int max_iter = 25;
  Real fd_step = 1e-6;  // scaled by max(1, |x_i|) per column
};

struct NewtonResult {
  Vec x;
  bool converged = false;
  int iterations = 0;
  Real residual_norm = 0.0;
  Real condition_estimate = 0.0;  // reciprocal condition of the last Jacobian
};

/// Damped-free Newton with central finite-difference Jacobian.
NewtonResult try_newton_corrector(const std::function<Vec(const Vec&)>& residual,
                                  const Vec& guess, const NewtonOptions& opt = {});

/// As above but throws NoConvergence (carrying the condition estimate in the
/// message) when the iteration fails.
Vec newton_corrector(const std::function<Vec(const Vec&)>& residual, const Vec& guess,
                     const NewtonOptions& opt = {});

/// Maps the free scalar mu to a per-node damping vector. The paper's sweeps
/// set zeta_k = mu uniformly; pinned single-node variants cover the
/// mode-specific contours.
struct ParameterSpec {
  enum class Kind { Uniform, SingleNode } kind = Kind::Uniform;
  int node = 0;  // 1-based, SingleNode only
  Vec pinned;    // values for the non-free nodes (SingleNode); may be empty for Uniform
};

/// Continuation always works with plain zeta_k (the large-damping window is
/// reached by letting mu grow, not by rescaling).
DampingState damping_for(const ParameterSpec& spec, Real mu, const NetworkModel& model);

struct BifurcationPoint {
  enum class Kind { Hopf, SaddleNode } kind;
  Real parameter = 0.0;
  Vec state;
  Real frequency = 0.0;  // Hopf: |Im| of the crossing pair; SN: 2 pi / T
  int unstable_before = 0;
  int unstable_after = 0;
};

struct BranchPoint {
  Real parameter = 0.0;
  Vec state;              // (u0, v0) on the orbit; zeros for the equilibrium
  Real period = 0.0;      // 0 on equilibrium branches
  Vec max_displacement;   // per-node max |u_k(t)| along the orbit
  bool stable = false;
  Vec multiplier_moduli;  // |Floquet|, descending (periodic branches)
};

struct Branch {
  std::vector<BranchPoint> points;
  std::vector<BifurcationPoint> events;
  bool stalled = false;
};

/// Trivial-equilibrium branch over [mu_lo, mu_hi]: eigenvalues of the 2N x 2N
/// linearization on a grid, Hopf crossings bisected to 1e-8 relative.
Branch continue_equilibria(const NetworkModel& model, const ParameterSpec& spec, Real mu_lo,
                           Real mu_hi, int grid_points = 200);

struct PeriodicSeed {
  Vec state;       // 2N initial condition
  Real period;
  Real parameter;
  int phase_anchor;  // 1-based node whose velocity is pinned to zero at t = 0
  Real amplitude;    // seed amplitude a0
  int amp_anchor;    // 1-based node carrying the first-point amplitude condition
};

/// Small loop along the crossing eigenpair at a Hopf point.
PeriodicSeed seed_periodic_orbit(const NetworkModel& model, const ParameterSpec& spec,
                                 const BifurcationPoint& hopf, Real a0 = 1e-3);

struct PeriodicOptions {
  Real ds0 = 5e-3;
  Real ds_min = 1e-8;
  Real ds_max = 0.25;
  int max_points = 400;
  int steps_per_period = 256;
  Real parameter_weight = 1.0;  // scales the parameter in the arclength norm
  Real amplitude_cap = 0.0;     // stop when max displacement exceeds this (0 = off)
  bool stop_after_fold = false;
  NewtonOptions newton{1e-9, 12, 1e-7};
};

/// Pseudo-arclength continuation of periodic orbits by single shooting.
/// Unknowns (y0, T, mu); phase anchor from the seed; stability from the
/// finite-difference monodromy; folds detected from the tangent's parameter
/// component.
Branch continue_periodic(const NetworkModel& model, const ParameterSpec& spec,
                         const PeriodicSeed& seed, Real mu_lo, Real mu_hi,
                         const PeriodicOptions& opt = {});

/// Flow of the fixed-damping network over [0, T] (fixed-step RK4).
Vec flow_map(const NetworkModel& model, const DampingState& d, const Vec& y0, Real period,
             int steps);

struct TwoParameterMap {
  struct CurvePoint {
    Real eps, mu, freq;
  };
  std::vector<Real> eps_grid;
  std::vector<CurvePoint> hopf;
  std::vector<CurvePoint> saddle_node;
  // analytic asymptotes: horizontal values and the c/eps^2 coefficients
  Real mu_hb_small = 0.0, mu_sn_small = 0.0;
  Real c_hb_large = 0.0, c_sn_large = 0.0;
  std::vector<std::string> gaps;  // per-eps failures, recorded not fatal
};

TwoParameterMap two_parameter_map(const NetworkModel& base, const std::vector<Real>& eps_grid,
                                  const ParameterSpec& spec, Real mu_lo, Real mu_hi);

}  // namespace hysnet
