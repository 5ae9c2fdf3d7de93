#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hysnet/continuation.hpp"
#include "hysnet/network.hpp"
#include "hysnet/simulator.hpp"
#include "hysnet/slow_flow.hpp"
#include "hysnet/types.hpp"

namespace hysnet {

using Json = nlohmann::json;

std::string format_real(Real value);  // 17 significant digits, round-trip safe

// ---- configuration -------------------------------------------------------

/// Strict parse: unknown keys rejected, defaults filled. Throws
/// InvalidArgument with a path-qualified message.
NetworkModel parse_network_json(const Json& j);

/// Accepts a file path or "builtin:fournode" / "builtin:fifteennode".
NetworkModel load_network(const std::string& ref);

Json builtin_network_json(const std::string& name);

struct ResolvedScenario {
  NetworkModel model;
  ScenarioConfig config;
  Json resolved;  // config with all defaults materialized
};

ResolvedScenario parse_scenario_json(const Json& j);
ResolvedScenario load_scenario(const std::string& path);

/// Parameter spec from a string ("mu" for uniform, "zeta<k>" for a single
/// node) plus optional pinned values from the scenario JSON.
ParameterSpec parse_parameter_spec(const std::string& text, const Json& pinned,
                                   const NetworkModel& model);

// ---- outputs --------------------------------------------------------------

void write_trace_csv(const std::string& path, const SimulationTrace& trace);
void write_trace_sidecar(const std::string& path, const SimulationTrace& trace);

void write_branch_csv(const std::string& path, const Branch& branch, int n_nodes);
Branch read_branch_csv(const std::string& path, int n_nodes);

struct EventRow {
  std::string kind;
  Real eps, mu, freq;
};
void write_events_csv(const std::string& path, const std::vector<EventRow>& rows);

void write_nullcline_csv(const std::string& path, const SlowFlowModel& sf, Real zeta_lo,
                         Real zeta_hi, int samples);
void write_bifurcation_csv(const std::string& path, const SlowFlowModel& sf);
void write_equilibria_csv(const std::string& path, const SlowFlowModel& sf, Real delta,
                          Real tau);
void write_trigger_csv(const std::string& path, const TriggerPlan& plan);

struct DesignRow {
  int q = 0;
  int mode = 0;
  Real omega = 0;
  Real zeta_hb = 0;
  Real zeta_sn = 0;
  Real eps_intersection = 0;
  Real eps_max = 0;
  Real t_req_ref = 0;  // f = e_Q, delta = 0.1, eps = 1; inf when no threshold
  std::string flags;
};

/// One row per candidate placement of the nonlinear node, ranked by the
/// hysteresis headroom estimate (ties by trigger time). Per-Q degeneracies
/// land in the flags column instead of aborting the table.
std::vector<DesignRow> design_report(const NetworkModel& base);
void write_design_csv(const std::string& path, const std::vector<DesignRow>& rows);

void write_manifest(const std::string& path, const std::string& subcommand,
                    const Json& resolved_config, std::uint64_t seed,
                    const std::vector<std::string>& outputs);

/// Phase portrait + time history of a finished scenario as a standalone SVG.
void write_scenario_svg(const std::string& path, const SimulationTrace& trace,
                        const NetworkModel& model, int q);

}  // namespace hysnet
