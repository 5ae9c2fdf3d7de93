#include "hysnet/simulator.hpp"

#include <cmath>
#include <complex>
#include <random>

#include "hysnet/ode.hpp"

namespace hysnet {

HistoryBuffer::HistoryBuffer(int n_nodes, Real dt, Real window)
    : n_nodes_(n_nodes), dt_(dt), window_(window) {
  capacity_ = static_cast<int>(std::ceil(window / dt)) + 8;
  u_.assign(static_cast<size_t>(capacity_), Vec::Zero(n_nodes));
  v_.assign(static_cast<size_t>(capacity_), Vec::Zero(n_nodes));
}

void HistoryBuffer::push(const Vec& u, const Vec& v) {
  ++newest_;
  u_[static_cast<size_t>(newest_ % capacity_)] = u;
  v_[static_cast<size_t>(newest_ % capacity_)] = v;
}

void HistoryBuffer::hermite_weights(Real s, long& j0, Real& h00, Real& h10, Real& h01,
                                    Real& h11) const {
  j0 = static_cast<long>(std::floor(s / dt_));
  if (j0 < newest_ - capacity_ + 1) j0 = newest_ - capacity_ + 1;  // clamp to oldest
  const Real x = s / dt_ - static_cast<Real>(j0);
  const Real x2 = x * x;
  h00 = (1 + 2 * x) * (1 - x) * (1 - x);
  h10 = x * (1 - x) * (1 - x);
  h01 = x2 * (3 - 2 * x);
  h11 = x2 * (x - 1);
}

Vec HistoryBuffer::displacement(Real s) const {
  if (s <= 0.0 || newest_ < 0) return Vec::Zero(n_nodes_);
  if (s >= static_cast<Real>(newest_) * dt_) return u_[static_cast<size_t>(newest_ % capacity_)];
  long j0;
  Real h00, h10, h01, h11;
  hermite_weights(s, j0, h00, h10, h01, h11);
  const auto& u0 = u_[static_cast<size_t>(j0 % capacity_)];
  const auto& u1 = u_[static_cast<size_t>((j0 + 1) % capacity_)];
  const auto& v0 = v_[static_cast<size_t>(j0 % capacity_)];
  const auto& v1 = v_[static_cast<size_t>((j0 + 1) % capacity_)];
  return h00 * u0 + h10 * dt_ * v0 + h01 * u1 + h11 * dt_ * v1;
}

Real HistoryBuffer::displacement_at(Real s, int node) const {
  if (s <= 0.0 || newest_ < 0) return 0.0;
  const Index k = node - 1;
  if (s >= static_cast<Real>(newest_) * dt_) return u_[static_cast<size_t>(newest_ % capacity_)][k];
  long j0;
  Real h00, h10, h01, h11;
  hermite_weights(s, j0, h00, h10, h01, h11);
  return h00 * u_[static_cast<size_t>(j0 % capacity_)][k] +
         h10 * dt_ * v_[static_cast<size_t>(j0 % capacity_)][k] +
         h01 * u_[static_cast<size_t>((j0 + 1) % capacity_)][k] +
         h11 * dt_ * v_[static_cast<size_t>((j0 + 1) % capacity_)][k];
}

namespace {

// 4 evenly spaced nodes on [t - window, t], trapezoidal weights
struct QuadratureNodes {
  Real s[4];
  Real w[4];
};

QuadratureNodes trailing_window_nodes(Real t, Real window) {
  const Real h = window / 3.0;
  return {{t - window, t - 2 * h, t - h, t}, {h / 2, h, h, h / 2}};
}

}  // namespace

Vec estimate_amplitudes(const HistoryBuffer& history, Real t, const NetworkModel& model,
                        const SlowFlowModel& sf) {
  const int n = model.n;
  Vec amps = Vec::Zero(n);
  const Real w = sf.omega;
  const auto quad = trailing_window_nodes(t, 2.0 * kPi / w);

  if (sf.regime == Regime::SmallDamping) {
    CVec acc = CVec::Zero(n);
    for (int m = 0; m < 4; ++m) {
      const Vec us = history.displacement(quad.s[m]);
      const Vec force = model.laplacian * us;
      const std::complex<Real> phase(std::cos(w * quad.s[m]), std::sin(w * quad.s[m]));
      acc += quad.w[m] * phase * force;
    }
    const Real norm = w / (kPi * (w * w - 1.0));
    for (int k = 0; k < n; ++k) {
      if (std::abs(sf.mode[k]) <= 1e-12) continue;  // displacement node
      amps[k] = std::abs(acc[k]) * std::abs(norm / sf.mode[k]);
    }
  } else {
    std::complex<Real> acc = 0;
    for (int m = 0; m < 4; ++m) {
      const Real uq = history.displacement_at(quad.s[m], model.q);
      const std::complex<Real> phase(std::cos(w * quad.s[m]), std::sin(w * quad.s[m]));
      acc += quad.w[m] * phase * uq;
    }
    const Real value = std::abs(acc) * w / kPi;
    for (int k = 0; k < n; ++k) {
      if (k == model.q - 1) continue;
      if (model.adjacency(k, model.q - 1) > 0) amps[k] = value;
    }
  }
  return amps;
}

Real estimate_amplitude(const HistoryBuffer& history, Real t, int node,
                        const NetworkModel& model, const SlowFlowModel& sf) {
  return estimate_amplitudes(history, t, model, sf)[node - 1];
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Quiescent: return "Quiescent";
    case Outcome::Hysteretic: return "Hysteretic";
    case Outcome::PersistentOscillation: return "PersistentOscillation";
  }
  return "?";
}

Vec excitation(Real t, const ScenarioConfig& config, const NetworkModel& model, Real carrier) {
  const Real omega_c = config.burst.omega > 0 ? config.burst.omega : carrier;
  if (t > config.burst.slow_duration / model.epsilon || config.burst.f.size() == 0)
    return Vec::Zero(model.n);
  return model.epsilon * std::sin(omega_c * t) * config.burst.f;
}

Vec simulation_step(Real t, Real dt, const Vec& state, const NetworkModel& model,
                    const RateLawParams& law, const Vec& frozen_amps,
                    const std::function<Vec(Real)>& excitation_at) {
  const auto rhs = [&](Real ts, const Vec& y) {
    return full_rhs(ts, y, model, law, excitation_at(ts), frozen_amps);
  };
  Vec next = rk4_step(rhs, t, state, dt);
  if (!next.allFinite())
    throw Error(ErrorCode::IntegrationDiverged,
                "state became non-finite near t = " + std::to_string(t));
  return next;
}

SimulationTrace run_scenario(const NetworkModel& model, const ScenarioConfig& config) {
  const int n = model.n;
  SlowFlowModel sf;
  if (model.regime == Regime::SmallDamping) {
    const ModalBasis basis = modal_decompose(model);
    sf = make_small_damping_model(basis, model);
  } else {
    sf = make_large_damping_model(model);
  }
  const Real period = 2.0 * kPi / sf.omega;
  const Real dt = config.dt > 0 ? config.dt : period / 100.0;
  if (dt > period / 40.0)
    throw Error(ErrorCode::InvalidArgument, "dt must be at most a fortieth of the carrier period");
  if (config.burst.f.size() != 0 && config.burst.f.size() != n)
    throw Error(ErrorCode::InvalidArgument, "burst amplitude vector length mismatch");

  const RateLawParams law = rate_law_params(sf, config.delta, config.tau);
  const Real rest = rate_target(law, 0.0);

  Vec state = Vec::Zero(3 * n);
  state.tail(n).setConstant(rest);
  if (config.noise > 0) {
    std::mt19937_64 rng(config.seed);
    for (int k = 0; k < n; ++k) {
      // top 53 bits -> [0,1); avoids distribution implementation differences
      const Real r01 = static_cast<Real>(rng() >> 11) * 0x1.0p-53;
      state[k] += config.noise * (2.0 * r01 - 1.0);
    }
  }

  HistoryBuffer history(n, dt, 2.0 * kPi / sf.omega);
  const auto exc = [&](Real ts) { return excitation(ts, config, model, sf.omega); };

  SimulationTrace trace;
  trace.burst_end = config.burst.slow_duration / model.epsilon;
  trace.dt = dt;
  trace.sample_every = config.sample_every;

  ClassifyThresholds th;
  th.rest_aggregate = sf.p * sf.p * sf.nu + config.delta;
  th.zeta_band = 2.0 * config.delta;
  try {
    th.activation = 1.2 * trigger_threshold(sf, config.delta);
  } catch (const Error&) {
    th.activation = 0.6 * bifurcation_values(sf).amp_sn;  // window absent; fall back
  }
  trace.thresholds = th;

  const long n_steps = static_cast<long>(std::ceil(config.t_end_slow / model.epsilon / dt));
  for (long step_index = 0; step_index <= n_steps; ++step_index) {
    const Real t = static_cast<Real>(step_index) * dt;
    history.push(state.head(n), state.segment(n, n));
    const Vec amps = estimate_amplitudes(history, t, model, sf);

    if (step_index % config.sample_every == 0) {
      TraceRecord rec;
      rec.t = t;
      rec.u = state.head(n);
      rec.v = state.segment(n, n);
      rec.zetas = state.tail(n);
      rec.amps = amps;
      trace.zeta_aggregate.push_back(sf.aggregate(rec.zetas));
      trace.records.push_back(std::move(rec));
    }
    if (step_index == n_steps) break;

    try {
      state = simulation_step(t, dt, state, model, law, amps, exc);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::IntegrationDiverged) throw;
      trace.diverged = true;
      trace.diverged_time = t;
      break;
    }
  }

  trace.outcome = classify_trace(trace, th);
  return trace;
}

Outcome classify_trace(const SimulationTrace& trace, const ClassifyThresholds& thresholds) {
  if (trace.records.empty()) return Outcome::Quiescent;
  Real peak = 0.0;
  for (size_t i = 0; i < trace.records.size(); ++i) {
    const auto& rec = trace.records[i];
    if (rec.t <= trace.burst_end) continue;
    peak = std::max(peak, rec.amps.maxCoeff());
  }
  if (peak <= thresholds.activation) return Outcome::Quiescent;

  const auto& last = trace.records.back();
  const bool amp_returned = last.amps.maxCoeff() < thresholds.quiescence_fraction * peak;
  const bool zeta_returned =
      std::abs(trace.zeta_aggregate.back() - thresholds.rest_aggregate) <= thresholds.zeta_band;
  return (amp_returned && zeta_returned) ? Outcome::Hysteretic : Outcome::PersistentOscillation;
}

std::vector<std::pair<Real, Real>> project_modal_amplitude(const SimulationTrace& trace,
                                                           Real omega, int node) {
  std::vector<std::pair<Real, Real>> out;
  const Real period = 2.0 * kPi / omega;
  const auto& recs = trace.records;
  const Index k = node - 1;
  for (size_t i = 0; i < recs.size(); ++i) {
    const Real t = recs[i].t;
    if (t < period) continue;
    // trapezoid over the records inside [t - period, t]
    std::complex<Real> acc = 0;
    size_t j = i;
    while (j > 0 && recs[j - 1].t >= t - period) --j;
    for (size_t m = j; m < i; ++m) {
      const Real dt = recs[m + 1].t - recs[m].t;
      const std::complex<Real> pa(std::cos(omega * recs[m].t), std::sin(omega * recs[m].t));
      const std::complex<Real> pb(std::cos(omega * recs[m + 1].t),
                                  std::sin(omega * recs[m + 1].t));
      acc += 0.5 * dt * (pa * recs[m].u[k] + pb * recs[m + 1].u[k]);
    }
    out.emplace_back(t, std::abs(acc) * omega / kPi);
  }
  return out;
}

}  // namespace hysnet
