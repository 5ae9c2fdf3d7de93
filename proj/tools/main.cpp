#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hysnet/continuation.hpp"
#include "hysnet/io.hpp"
#include "hysnet/network.hpp"
#include "hysnet/simulator.hpp"
#include "hysnet/slow_flow.hpp"

namespace fs = std::filesystem;
using namespace hysnet;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::pair<Real, Real> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "--range expects a:b");
  return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

std::vector<Real> parse_eps_grid(const std::string& text) {
  // a:b:n, geometric when b/a > 20
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "--eps-grid expects a:b:n");
  const Real a = std::stod(text.substr(0, c1));
  const Real b = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
  const int n = std::stoi(text.substr(c2 + 1));
  if (n < 1 || a <= 0 || b < a)
    throw Error(ErrorCode::InvalidArgument, "--eps-grid expects 0 < a <= b and n >= 1");
  std::vector<Real> grid;
  for (int i = 0; i < n; ++i) {
    const Real x = n == 1 ? 0.0 : static_cast<Real>(i) / (n - 1);
    grid.push_back(b / a > 20 ? a * std::pow(b / a, x) : a + (b - a) * x);
  }
  return grid;
}

SlowFlowModel slow_flow_for(const NetworkModel& model) {
  if (model.regime == Regime::SmallDamping)
    return make_small_damping_model(modal_decompose(model), model);
  return make_large_damping_model(model);
}

std::string join(const fs::path& dir, const std::string& name) {
  return (dir / name).string();
}

int run_simulate(const std::string& config_path, const std::string& out_path,
                 const std::string& out_dir, int sample_every, std::uint64_t seed,
                 bool seed_set, const std::string& svg_path) {
  ResolvedScenario scenario = load_scenario(config_path);
  if (sample_every > 0) scenario.config.sample_every = sample_every;
  if (seed_set) scenario.config.seed = seed;
  scenario.resolved["sample_every"] = scenario.config.sample_every;
  scenario.resolved["seed"] = scenario.config.seed;

  const SimulationTrace trace = run_scenario(scenario.model, scenario.config);

  const fs::path out = out_path.empty() ? fs::path(out_dir) / "trace.csv" : fs::path(out_path);
  write_trace_csv(out.string(), trace);
  write_trace_sidecar(out.string() + ".json", trace);
  std::vector<std::string> outputs{out.string(), out.string() + ".json"};
  if (!svg_path.empty()) {
    write_scenario_svg(svg_path, trace, scenario.model, scenario.model.q);
    outputs.push_back(svg_path);
  }
  write_manifest(out.string() + ".manifest.json", "simulate", scenario.resolved,
                 scenario.config.seed, outputs);
  std::cout << "outcome: " << outcome_name(trace.outcome) << "\n";
  return trace.diverged ? kExitNumerical : 0;
}

int run_slowflow(const std::string& config_path, const std::string& out_dir) {
  ResolvedScenario scenario = load_scenario(config_path);
  const SlowFlowModel sf = slow_flow_for(scenario.model);
  const BifurcationValues bv = bifurcation_values(sf);
  fs::create_directories(out_dir);

  write_nullcline_csv(join(out_dir, "nullcline.csv"), sf, 0.0, bv.zeta_sn * 1.2, 241);
  write_bifurcation_csv(join(out_dir, "bifurcation.csv"), sf);
  write_equilibria_csv(join(out_dir, "equilibria.csv"), sf, scenario.config.delta,
                       scenario.config.tau);
  std::vector<std::string> outputs{join(out_dir, "nullcline.csv"),
                                   join(out_dir, "bifurcation.csv"),
                                   join(out_dir, "equilibria.csv")};
  if (scenario.config.burst.f.size() > 0) {
    const TriggerPlan plan = plan_trigger(sf, scenario.config.burst.f, scenario.config.delta);
    write_trigger_csv(join(out_dir, "trigger.csv"), plan);
    outputs.push_back(join(out_dir, "trigger.csv"));
  }
  write_manifest(join(out_dir, "slowflow.manifest.json"), "slowflow", scenario.resolved,
                 scenario.config.seed, outputs);
  return 0;
}

int run_bifurcate(const std::string& config_path, const std::string& free_spec,
                  const std::string& range_text, const std::string& out_dir) {
  ResolvedScenario scenario = load_scenario(config_path);
  const auto [mu_lo, mu_hi] = parse_range(range_text);

  std::ifstream cfg_in(config_path);
  Json raw;
  cfg_in >> raw;
  const Json pinned = raw.value("pinned", Json());
  // pinned damping is accepted at the top level of bifurcation configs
  const ParameterSpec spec = parse_parameter_spec(free_spec, pinned, scenario.model);

  fs::create_directories(out_dir);
  const Branch eq = continue_equilibria(scenario.model, spec, mu_lo, mu_hi);
  write_branch_csv(join(out_dir, "equilibrium_branch.csv"), eq, scenario.model.n);

  std::vector<EventRow> events;
  for (const auto& ev : eq.events)
    events.push_back({"hopf", scenario.model.epsilon, ev.parameter, ev.frequency});

  int branch_index = 0;
  std::vector<std::string> outputs{join(out_dir, "equilibrium_branch.csv")};
  for (const auto& ev : eq.events) {
    try {
      const PeriodicSeed seed = seed_periodic_orbit(scenario.model, spec, ev);
      PeriodicOptions opt;
      opt.parameter_weight = 1.0 / std::max(Real(1), std::abs(ev.parameter));
      opt.amplitude_cap = 10.0;
      const Branch po = continue_periodic(scenario.model, spec, seed, mu_lo, mu_hi, opt);
      const std::string name = "periodic_branch_" + std::to_string(++branch_index) + ".csv";
      write_branch_csv(join(out_dir, name), po, scenario.model.n);
      outputs.push_back(join(out_dir, name));
      for (const auto& pev : po.events)
        events.push_back({"saddle-node", scenario.model.epsilon, pev.parameter, pev.frequency});
    } catch (const Error& e) {
      std::cerr << "periodic branch from mu = " << ev.parameter << " failed: " << e.what()
                << "\n";
    }
  }
  write_events_csv(join(out_dir, "events.csv"), events);
  outputs.push_back(join(out_dir, "events.csv"));
  write_manifest(join(out_dir, "bifurcate.manifest.json"), "bifurcate", scenario.resolved,
                 scenario.config.seed, outputs);
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& free_spec,
              const std::string& range_text, const std::string& eps_grid_text,
              const std::string& out_dir) {
  ResolvedScenario scenario = load_scenario(config_path);
  const auto [mu_lo, mu_hi] = parse_range(range_text);
  const std::vector<Real> eps_grid = parse_eps_grid(eps_grid_text);
  std::ifstream cfg_in(config_path);
  Json raw;
  cfg_in >> raw;
  const ParameterSpec spec =
      parse_parameter_spec(free_spec, raw.value("pinned", Json()), scenario.model);

  const TwoParameterMap map =
      two_parameter_map(scenario.model, eps_grid, spec, mu_lo, mu_hi);

  fs::create_directories(out_dir);
  std::vector<EventRow> events;
  for (const auto& p : map.hopf) events.push_back({"hopf", p.eps, p.mu, p.freq});
  for (const auto& p : map.saddle_node) events.push_back({"saddle-node", p.eps, p.mu, p.freq});
  write_events_csv(join(out_dir, "sweep_events.csv"), events);

  {
    std::ofstream out(join(out_dir, "asymptotes.csv"));
    out << "mu_hb_small,mu_sn_small,c_hb_large,c_sn_large\n";
    out << format_real(map.mu_hb_small) << "," << format_real(map.mu_sn_small) << ","
        << format_real(map.c_hb_large) << "," << format_real(map.c_sn_large) << "\n";
  }
  for (const auto& gap : map.gaps) std::cerr << "gap: " << gap << "\n";
  write_manifest(join(out_dir, "sweep.manifest.json"), "sweep", scenario.resolved,
                 scenario.config.seed,
                 {join(out_dir, "sweep_events.csv"), join(out_dir, "asymptotes.csv")});
  return 0;
}

int run_trigger(const std::string& config_path, const std::string& out_path, Real f_lo,
                Real f_hi, int count) {
  ResolvedScenario scenario = load_scenario(config_path);
  const SlowFlowModel sf = slow_flow_for(scenario.model);
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + out_path);
  out << "f,t_req_closed_form,t_req_integrated\n";
  for (int i = 0; i < count; ++i) {
    const Real f1 = f_lo + (f_hi - f_lo) * i / std::max(1, count - 1);
    Vec f = Vec::Zero(scenario.model.n);
    f[scenario.model.q - 1] = f1;
    out << format_real(f1) << ","
        << format_real(required_trigger_time(sf, f, scenario.config.delta,
                                             TriggerMethod::ClosedForm))
        << ","
        << format_real(required_trigger_time(sf, f, scenario.config.delta,
                                             TriggerMethod::Integrate))
        << "\n";
  }
  write_manifest(out_path + ".manifest.json", "trigger", scenario.resolved,
                 scenario.config.seed, {out_path});
  return 0;
}

int run_design(const std::string& network_ref, const std::string& out_path) {
  const NetworkModel model = load_network(network_ref);
  const auto rows = design_report(model);
  write_design_csv(out_path, rows);
  write_manifest(out_path + ".manifest.json", "design", Json{{"network", network_ref}}, 0,
                 {out_path});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hysnet: oscillator-network hysteretic sensor design toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, out_dir = ".", svg_path, free_spec = "mu";
  std::string range_text = "0.1:10", eps_grid_text, network_ref;
  int sample_every = 0, trig_count = 11;
  std::uint64_t seed = 0;
  bool seed_set = false;
  Real f_lo = 0.5, f_hi = 3.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON scenario config")->required();
    sub->add_option("--out-dir", out_dir, "output directory");
  };

  auto* simulate = app.add_subcommand("simulate", "integrate a triggered scenario");
  add_common(simulate);
  simulate->add_option("--out", out_path, "trace CSV path");
  simulate->add_option("--sample-every", sample_every, "record every n-th step");
  simulate->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) {
    seed_set = true;
  });
  simulate->add_option("--svg", svg_path, "phase/time-history SVG path");

  auto* slowflow = app.add_subcommand("slowflow", "emit slow-flow tables");
  add_common(slowflow);

  auto* bifurcate = app.add_subcommand("bifurcate", "one-parameter continuation");
  add_common(bifurcate);
  bifurcate->add_option("--free", free_spec, "free parameter: mu or zeta<k>");
  bifurcate->add_option("--range", range_text, "parameter range a:b")->required();

  auto* sweep = app.add_subcommand("sweep", "two-parameter (eps, mu) map");
  add_common(sweep);
  sweep->add_option("--free", free_spec, "free parameter: mu or zeta<k>");
  sweep->add_option("--range", range_text, "parameter range a:b")->required();
  sweep->add_option("--eps-grid", eps_grid_text, "epsilon grid a:b:n")->required();

  auto* trigger = app.add_subcommand("trigger", "required burst duration curve");
  add_common(trigger);
  trigger->add_option("--out", out_path, "output CSV path");
  trigger->add_option("--fmin", f_lo, "smallest forcing amplitude");
  trigger->add_option("--fmax", f_hi, "largest forcing amplitude");
  trigger->add_option("--n", trig_count, "number of samples");

  auto* design = app.add_subcommand("design", "rank nonlinear-node placements");
  design->add_option("--network", network_ref, "network JSON path or builtin:<name>")
      ->required();
  design->add_option("--out", out_path, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return run_simulate(config_path, out_path, out_dir, sample_every, seed, seed_set,
                          svg_path);
    if (slowflow->parsed()) return run_slowflow(config_path, out_dir);
    if (bifurcate->parsed()) return run_bifurcate(config_path, free_spec, range_text, out_dir);
    if (sweep->parsed())
      return run_sweep(config_path, free_spec, range_text, eps_grid_text, out_dir);
    if (trigger->parsed())
      return run_trigger(config_path, out_path.empty() ? "trigger.csv" : out_path, f_lo, f_hi,
                         trig_count);
    if (design->parsed())
      return run_design(network_ref, out_path.empty() ? "design.csv" : out_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::InvalidArgument:
      case ErrorCode::IoError:
        return kExitValidation;
      default:
        return kExitNumerical;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
