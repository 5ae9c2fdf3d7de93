#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "hysnet/network.hpp"
#include "hysnet/slow_flow.hpp"
#include "hysnet/types.hpp"

namespace hysnet {

/// Fixed-step ring of (u, u') samples backing the delay-integral amplitude
/// estimators. Sample j lives at time j*dt; queries before t = 0 return the
/// declared initial history u = 0. Cubic Hermite interpolation between
/// samples.
class HistoryBuffer {
 public:
  HistoryBuffer(int n_nodes, Real dt, Real window);

  /// Appends the sample for the next time index (newest + 1).
  void push(const Vec& u, const Vec& v);

  Vec displacement(Real s) const;
  Real displacement_at(Real s, int node) const;  // 1-based node

  Real dt() const { return dt_; }
  Real window() const { return window_; }
  long newest_index() const { return newest_; }

 private:
  int n_nodes_;
  Real dt_;
  Real window_;
  int capacity_;
  long newest_ = -1;
  std::vector<Vec> u_, v_;

  void hermite_weights(Real s, long& j0, Real& h00, Real& h10, Real& h01, Real& h11) const;
};

/// Four-point trapezoidal projection of the trailing-period signal onto the
/// carrier. Small regime: net interaction force L_k.u normalized by
/// P_{k,I}(w_I^2-1); zero at displacement nodes. Large regime: u_Q itself,
/// nonzero only for neighbors of Q.
Vec estimate_amplitudes(const HistoryBuffer& history, Real t, const NetworkModel& model,
                        const SlowFlowModel& sf);
Real estimate_amplitude(const HistoryBuffer& history, Real t, int node,
                        const NetworkModel& model, const SlowFlowModel& sf);

struct BurstConfig {
  Vec f;                    // per-node amplitude in units of epsilon
  Real omega = 0.0;         // 0: use the regime carrier
  Real slow_duration = 1.0; // burst lasts eps*t in [0, slow_duration]
};

struct ScenarioConfig {
  Real delta = 0.1;
  Real tau = 20.0;
  BurstConfig burst;
  Real noise = 0.0;          // uniform [-noise, noise] on u(0), once, seeded
  Real dt = 0.0;             // 0: T/100 of the active carrier
  Real t_end_slow = 80.0;    // horizon in slow time units
  int sample_every = 50;
  std::uint64_t seed = 0;
};

enum class Outcome { Quiescent, Hysteretic, PersistentOscillation };

struct ClassifyThresholds {
  Real activation = 0.0;           // nodal estimate that counts as ignition
  Real quiescence_fraction = 0.05; // of the post-burst peak
  Real zeta_band = 0.0;            // allowed |zeta_agg - rest| at the end
  Real rest_aggregate = 0.0;
};

struct TraceRecord {
  Real t;
  Vec u, v, zetas, amps;
};

struct SimulationTrace {
  std::vector<TraceRecord> records;
  std::vector<Real> zeta_aggregate;  // per record
  Real burst_end = 0.0;
  Real dt = 0.0;
  int sample_every = 1;
  Outcome outcome = Outcome::Quiescent;
  ClassifyThresholds thresholds;
  bool diverged = false;
  Real diverged_time = 0.0;
};

const char* outcome_name(Outcome o);

/// Excitation vector at fast time t: eps * f * sin(omega_c t) inside the
/// burst window, zero after.
Vec excitation(Real t, const ScenarioConfig& config, const NetworkModel& model, Real carrier);

/// One RK4 step of the coupled (u, u', zeta) system with the delayed
/// estimates frozen across the step. Throws IntegrationDiverged on
/// non-finite output.
Vec simulation_step(Real t, Real dt, const Vec& state, const NetworkModel& model,
                    const RateLawParams& law, const Vec& frozen_amps,
                    const std::function<Vec(Real)>& excitation_at);

SimulationTrace run_scenario(const NetworkModel& model, const ScenarioConfig& config);

Outcome classify_trace(const SimulationTrace& trace, const ClassifyThresholds& thresholds);

/// Sliding one-period projection magnitude |<u_k, e^{j w t}>| computed
/// densely from the recorded samples (diagnostic; the 4-point estimator is
/// the plant). Requires the trace sampling to resolve the period.
std::vector<std::pair<Real, Real>> project_modal_amplitude(const SimulationTrace& trace,
                                                           Real omega, int node);

}  // namespace hysnet
