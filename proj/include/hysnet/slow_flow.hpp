#pragma once

#include <utility>
#include <vector>

#include "hysnet/network.hpp"
#include "hysnet/types.hpp"

namespace hysnet {

/// Coefficient set of the averaged amplitude/damping dynamics
///   A'    = (1/2)(p^2 nu - zeta) A + (p^4 eta/8) A^3 - (p^6 eta/16) A^5
///   zeta' = tau^-1 (-zeta + delta + p^2 nu + p^4 eta A^2/8)
/// on the slow time scale eps*t, where zeta is the weighted aggregate
/// sum_k w_k zeta_k. In the large-damping regime p = 1, the carrier is
/// sqrt(K_QQ) and the weights live on the neighbors of Q.
struct SlowFlowModel {
  Regime regime = Regime::SmallDamping;
  Real p = 1.0;      // |P_{Q,I}| (small) or 1 (large)
  Real nu = 0.0;
  Real eta = 0.0;
  Real epsilon = 0.0;
  Real omega = 1.0;  // carrier: omega_I or sqrt(K_QQ)
  int q = 1;
  int mode_index = 0;  // I, 1-based (small regime only)
  Vec mode;            // P_{.,I} (small) or e_Q (large)
  Vec weights;         // aggregation weights, entry q-1 is zero
  Real weight_sum = 0.0;

  Real aggregate(const Vec& zetas) const {
    Real s = 0;
    for (Index k = 0; k < zetas.size(); ++k) s += weights[k] * zetas[k];
    return s;
  }
};

struct BifurcationValues {
  Real zeta_hb;  // Hopf: aggregate damping where the trivial state destabilizes
  Real zeta_sn;  // fold of the periodic branch
  Real amp_sn;   // amplitude at the fold
};

struct CoupledEquilibrium {
  Real zeta;
  Real amp;
  enum class Stability { Stable, Unstable, Saddle } stability;
};

SlowFlowModel make_small_damping_model(const ModalBasis& basis, const NetworkModel& model);
SlowFlowModel make_large_damping_model(const NetworkModel& model);

Real amplitude_rhs(const SlowFlowModel& sf, Real amp, Real zeta_agg);

/// Nonnegative equilibria of the amplitude law at fixed aggregate damping:
/// {0} plus the real positive roots of the biquadratic. Closed form, no
/// iteration; an empty nontrivial set simply means the fold has passed.
std::vector<Real> nullcline(const SlowFlowModel& sf, Real zeta_agg);

BifurcationValues bifurcation_values(const SlowFlowModel& sf);

RateLawParams rate_law_params(const SlowFlowModel& sf, Real delta, Real tau);

/// Per-node slow-time rates zeta_k'; entry q-1 is zero.
Vec damping_rhs(const SlowFlowModel& sf, const Vec& zetas, const Vec& amps, Real delta,
                Real tau);

/// Planar coupled (A, zeta) vector field in slow time.
Vec2 planar_rhs(const SlowFlowModel& sf, const Vec2& state, Real delta, Real tau);

/// Equilibria of the planar flow: the trivial one plus up to two on the
/// middle nullcline branch. The trivial equilibrium is always stable, the
/// lower-amplitude one a saddle, the upper stable iff tau < 1/(2 delta).
std::vector<CoupledEquilibrium> coupled_equilibria(const SlowFlowModel& sf, Real delta,
                                                   Real tau);

/// Forced slow dynamics (A', phi') with the aggregate pinned at zeta_HB + delta.
/// Throws at the A = 0 phase singularity; start bursts from the linearized
/// growth law instead.
std::pair<Real, Real> forced_amplitude_rhs(const SlowFlowModel& sf, Real amp, Real phi,
                                           const Vec& f, Real delta);

/// Amplitude the burst must exceed at zeta_HB + delta; the unstable nullcline
/// branch value. Throws NoThreshold when 8 delta >= p^2 eta.
Real trigger_threshold(const SlowFlowModel& sf, Real delta);

enum class TriggerMethod { ClosedForm, Integrate };

/// Minimum burst duration in fast time units. ClosedForm evaluates
/// 2 omega Abar / (eps |sum_i P_{i,I} f_i|); Integrate refines by integrating
/// the phase-locked amplitude law from rest to the threshold.
Real required_trigger_time(const SlowFlowModel& sf, const Vec& f, Real delta,
                           TriggerMethod method);

struct TriggerPlan {
  Vec f;
  Real delta;
  Real threshold;
  Real t_req_closed_form;
  Real t_req_integrated;
};

TriggerPlan plan_trigger(const SlowFlowModel& sf, const Vec& f, Real delta);

/// One branch of the saddle's stable manifold (the separatrix), by backward
/// integration from a 1e-6 offset along the stable eigenvector, oriented
/// toward increasing amplitude. Points are (zeta, A).
std::vector<Vec2> stable_manifold_branch(const SlowFlowModel& sf, Real delta, Real tau,
                                         Real arc_budget);

/// Closed-form constants for the 4-node example network (nu = 1, eta = 10),
/// in the per-section normalization where the aggregate is a plain sum of
/// the contributing nodes' damping values.
struct FourNodeReference {
  int q;
  Regime regime;
  Real zeta_hb;
  Real zeta_sn;
  Real amp_sn;
  Real omega;
  Real agg_scale;  // weighted aggregate = agg_scale * paper aggregate
  std::vector<int> contributing;  // 1-based nodes entering the aggregate
  Real lin;    // amplitude law A' = lin (zeta_hb - zeta) A + cub A^3 - quint A^5
  Real cub;
  Real quint;

  std::pair<Real, Real> nullcline_squared(Real zeta) const;
};

FourNodeReference fournode_reference(int q, Regime regime);

/// Largest damping scale supporting hysteresis, from the intersection of the
/// small- and large-damping fold asymptotes; the estimate halves the
/// intersection value.
std::pair<Real, Real> epsilon_max_estimate(const NetworkModel& model, const ModalBasis& basis);

}  // namespace hysnet
