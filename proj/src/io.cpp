#include "hysnet/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace hysnet {

std::string format_real(Real value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

void check_keys(const Json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw Error(ErrorCode::InvalidArgument, where + ": unknown key '" + it.key() + "'");
  }
}

Real require_positive(const Json& j, const std::string& key, Real fallback,
                      const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Real v = j.at(key).get<Real>();
  if (!(v > 0))
    throw Error(ErrorCode::InvalidArgument, where + "." + key + ": must be positive");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open for writing: " + path);
  return out;
}

}  // namespace

NetworkModel parse_network_json(const Json& j) {
  check_keys(j, {"n", "edges", "Q", "nu", "eta", "epsilon", "regime"}, "network");
  if (!j.contains("n")) throw Error(ErrorCode::InvalidArgument, "network.n: missing");
  if (!j.contains("Q")) throw Error(ErrorCode::InvalidArgument, "network.Q: missing");
  if (!j.contains("edges")) throw Error(ErrorCode::InvalidArgument, "network.edges: missing");
  const int n = j.at("n").get<int>();
  const int q = j.at("Q").get<int>();
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2)
      throw Error(ErrorCode::InvalidArgument, "network.edges: entries must be [i, j] pairs");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  const Real nu = require_positive(j, "nu", 1.0, "network");
  const Real eta = require_positive(j, "eta", 10.0, "network");
  const Real epsilon = require_positive(j, "epsilon", 0.01, "network");
  Regime regime = Regime::SmallDamping;
  if (j.contains("regime")) {
    const std::string r = j.at("regime").get<std::string>();
    if (r == "small")
      regime = Regime::SmallDamping;
    else if (r == "large")
      regime = Regime::LargeDamping;
    else
      throw Error(ErrorCode::InvalidArgument, "network.regime: must be \"small\" or \"large\"");
  }
  return build_network(n, edges, q, nu, eta, epsilon, regime);
}

Json builtin_network_json(const std::string& name) {
  if (name == "fournode") {
    return Json{{"n", 4},
                {"edges", Json::array({{1, 2}, {1, 4}, {2, 3}, {2, 4}})},
                {"Q", 1},
                {"nu", 1.0},
                {"eta", 10.0},
                {"epsilon", 0.01},
                {"regime", "small"}};
  }
  if (name == "fifteennode") {
    return Json{
        {"n", 15},
        {"edges",
         Json::array({{1, 5},  {1, 8},  {2, 7},   {2, 11},  {3, 7},   {3, 8},   {3, 9},
                      {3, 11}, {3, 12}, {3, 14},  {4, 6},   {4, 8},   {4, 10},  {4, 11},
                      {4, 12}, {4, 13}, {4, 14},  {4, 15},  {5, 6},   {5, 7},   {5, 11},
                      {5, 15}, {6, 7},  {6, 9},   {6, 10},  {6, 15},  {7, 12},  {7, 14},
                      {9, 15}, {10, 13}, {10, 15}, {11, 15}, {12, 14}, {12, 15}, {13, 14},
                      {13, 15}})},
        {"Q", 1},
        {"nu", 1.0},
        {"eta", 10.0},
        {"epsilon", 0.01},
        {"regime", "small"}};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown builtin network: " + name);
}

NetworkModel load_network(const std::string& ref) {
  if (ref.rfind("builtin:", 0) == 0)
    return parse_network_json(builtin_network_json(ref.substr(8)));
  std::ifstream in(ref);
  if (!in) throw Error(ErrorCode::IoError, "cannot open network file: " + ref);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, ref + ": " + e.what());
  }
  return parse_network_json(j);
}

ResolvedScenario parse_scenario_json(const Json& j) {
  check_keys(j,
             {"network", "delta", "tau", "burst", "noise", "dt", "t_end_slow", "sample_every",
              "seed"},
             "scenario");
  ResolvedScenario out;
  if (!j.contains("network"))
    throw Error(ErrorCode::InvalidArgument, "scenario.network: missing");
  Json network_json;
  if (j.at("network").is_string()) {
    const std::string ref = j.at("network").get<std::string>();
    out.model = load_network(ref);
    network_json = ref.rfind("builtin:", 0) == 0 ? builtin_network_json(ref.substr(8))
                                                 : Json(ref);
  } else {
    out.model = parse_network_json(j.at("network"));
    network_json = j.at("network");
  }

  ScenarioConfig& cfg = out.config;
  cfg.delta = require_positive(j, "delta", 0.1, "scenario");
  cfg.tau = require_positive(j, "tau", 20.0, "scenario");
  if (j.contains("noise")) {
    cfg.noise = j.at("noise").get<Real>();
    if (cfg.noise < 0)
      throw Error(ErrorCode::InvalidArgument, "scenario.noise: must be nonnegative");
  }
  if (j.contains("dt")) cfg.dt = require_positive(j, "dt", 0.0, "scenario");
  cfg.t_end_slow = require_positive(j, "t_end_slow", 80.0, "scenario");
  if (j.contains("sample_every")) {
    cfg.sample_every = j.at("sample_every").get<int>();
    if (cfg.sample_every < 1)
      throw Error(ErrorCode::InvalidArgument, "scenario.sample_every: must be >= 1");
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

  if (j.contains("burst")) {
    const Json& b = j.at("burst");
    check_keys(b, {"node", "amplitude", "f", "omega", "slow_duration"}, "scenario.burst");
    if (b.contains("f")) {
      const auto vals = b.at("f").get<std::vector<Real>>();
      if (static_cast<int>(vals.size()) != out.model.n)
        throw Error(ErrorCode::InvalidArgument, "scenario.burst.f: expected n entries");
      cfg.burst.f = Eigen::Map<const Vec>(vals.data(), vals.size());
    } else {
      if (!b.contains("node") || !b.contains("amplitude"))
        throw Error(ErrorCode::InvalidArgument,
                    "scenario.burst: need either f or node+amplitude");
      const int node = b.at("node").get<int>();
      if (node < 1 || node > out.model.n)
        throw Error(ErrorCode::InvalidArgument, "scenario.burst.node: out of range");
      cfg.burst.f = Vec::Zero(out.model.n);
      cfg.burst.f[node - 1] = b.at("amplitude").get<Real>();
    }
    if (b.contains("omega")) cfg.burst.omega = require_positive(b, "omega", 0.0, "scenario.burst");
    cfg.burst.slow_duration =
        require_positive(b, "slow_duration", 1.0, "scenario.burst");
  }

  // echo with defaults materialized
  out.resolved = Json{{"network", network_json},
                      {"delta", cfg.delta},
                      {"tau", cfg.tau},
                      {"noise", cfg.noise},
                      {"dt", cfg.dt},
                      {"t_end_slow", cfg.t_end_slow},
                      {"sample_every", cfg.sample_every},
                      {"seed", cfg.seed}};
  if (cfg.burst.f.size() > 0) {
    std::vector<Real> fv(cfg.burst.f.data(), cfg.burst.f.data() + cfg.burst.f.size());
    out.resolved["burst"] =
        Json{{"f", fv}, {"omega", cfg.burst.omega}, {"slow_duration", cfg.burst.slow_duration}};
  }
  return out;
}

ResolvedScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
  return parse_scenario_json(j);
}

ParameterSpec parse_parameter_spec(const std::string& text, const Json& pinned,
                                   const NetworkModel& model) {
  ParameterSpec spec;
  if (text == "mu" || text.empty()) {
    spec.kind = ParameterSpec::Kind::Uniform;
  } else if (text.rfind("zeta", 0) == 0) {
    spec.kind = ParameterSpec::Kind::SingleNode;
    try {
      spec.node = std::stoi(text.substr(4));
    } catch (...) {
      throw Error(ErrorCode::InvalidArgument, "free parameter: expected 'mu' or 'zeta<k>'");
    }
    if (spec.node < 1 || spec.node > model.n)
      throw Error(ErrorCode::InvalidArgument, "free parameter node out of range");
  } else {
    throw Error(ErrorCode::InvalidArgument, "free parameter: expected 'mu' or 'zeta<k>'");
  }
  spec.pinned = Vec::Zero(model.n);
  if (!pinned.is_null()) {
    for (auto it = pinned.begin(); it != pinned.end(); ++it) {
      const int node = std::stoi(it.key());
      if (node < 1 || node > model.n)
        throw Error(ErrorCode::InvalidArgument, "pinned node out of range: " + it.key());
      spec.pinned[node - 1] = it.value().get<Real>();
    }
  }
  return spec;
}

// ---- CSV ------------------------------------------------------------------

void write_trace_csv(const std::string& path, const SimulationTrace& trace) {
  auto out = open_out(path);
  const int n = trace.records.empty() ? 0 : static_cast<int>(trace.records.front().u.size());
  out << "t";
  for (int k = 1; k <= n; ++k) out << ",u_" << k;
  for (int k = 1; k <= n; ++k) out << ",v_" << k;
  for (int k = 1; k <= n; ++k) out << ",zeta_" << k;
  for (int k = 1; k <= n; ++k) out << ",A_" << k;
  out << "\n";
  for (const auto& rec : trace.records) {
    out << format_real(rec.t);
    for (int k = 0; k < n; ++k) out << "," << format_real(rec.u[k]);
    for (int k = 0; k < n; ++k) out << "," << format_real(rec.v[k]);
    for (int k = 0; k < n; ++k) out << "," << format_real(rec.zetas[k]);
    for (int k = 0; k < n; ++k) out << "," << format_real(rec.amps[k]);
    out << "\n";
  }
}

void write_trace_sidecar(const std::string& path, const SimulationTrace& trace) {
  auto out = open_out(path);
  Json j{{"outcome", outcome_name(trace.outcome)},
         {"burst_end", trace.burst_end},
         {"diverged", trace.diverged},
         {"thresholds",
          Json{{"activation", trace.thresholds.activation},
               {"quiescence_fraction", trace.thresholds.quiescence_fraction},
               {"zeta_band", trace.thresholds.zeta_band},
               {"rest_aggregate", trace.thresholds.rest_aggregate}}}};
  if (trace.diverged) j["diverged_time"] = trace.diverged_time;
  out << j.dump(2) << "\n";
}

void write_branch_csv(const std::string& path, const Branch& branch, int n_nodes) {
  auto out = open_out(path);
  out << "param";
  for (int k = 1; k <= n_nodes; ++k) out << ",max_u_" << k;
  out << ",period,stable,event\n";
  // mark the point closest to each event with the event kind
  std::vector<std::string> marks(branch.points.size());
  for (const auto& ev : branch.events) {
    size_t best = 0;
    Real dist = std::numeric_limits<Real>::max();
    for (size_t i = 0; i < branch.points.size(); ++i) {
      const Real d = std::abs(branch.points[i].parameter - ev.parameter);
      if (d < dist) {
        dist = d;
        best = i;
      }
    }
    if (!branch.points.empty())
      marks[best] = ev.kind == BifurcationPoint::Kind::Hopf ? "hopf" : "saddle-node";
  }
  for (size_t i = 0; i < branch.points.size(); ++i) {
    const auto& pt = branch.points[i];
    out << format_real(pt.parameter);
    for (int k = 0; k < n_nodes; ++k)
      out << "," << format_real(pt.max_displacement.size() > k ? pt.max_displacement[k] : 0.0);
    out << "," << format_real(pt.period) << "," << (pt.stable ? 1 : 0) << "," << marks[i]
        << "\n";
  }
}

Branch read_branch_csv(const std::string& path, int n_nodes) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open branch CSV: " + path);
  Branch branch;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    BranchPoint pt;
    std::getline(ss, field, ',');
    pt.parameter = std::stod(field);
    pt.max_displacement = Vec::Zero(n_nodes);
    for (int k = 0; k < n_nodes; ++k) {
      std::getline(ss, field, ',');
      pt.max_displacement[k] = std::stod(field);
    }
    std::getline(ss, field, ',');
    pt.period = std::stod(field);
    std::getline(ss, field, ',');
    pt.stable = field == "1";
    branch.points.push_back(std::move(pt));
  }
  return branch;
}

void write_events_csv(const std::string& path, const std::vector<EventRow>& rows) {
  auto out = open_out(path);
  out << "kind,eps,mu,freq\n";
  for (const auto& r : rows)
    out << r.kind << "," << format_real(r.eps) << "," << format_real(r.mu) << ","
        << format_real(r.freq) << "\n";
}

void write_nullcline_csv(const std::string& path, const SlowFlowModel& sf, Real zeta_lo,
                         Real zeta_hi, int samples) {
  auto out = open_out(path);
  out << "zeta,amp_lower,amp_upper\n";
  for (int i = 0; i < samples; ++i) {
    const Real z = zeta_lo + (zeta_hi - zeta_lo) * i / (samples - 1);
    const auto roots = nullcline(sf, z);
    const Real lo = roots.size() > 1 ? roots[1] : std::numeric_limits<Real>::quiet_NaN();
    const Real hi = roots.size() > 2 ? roots[2]
                                     : (roots.size() > 1 ? roots[1]
                                                         : std::numeric_limits<Real>::quiet_NaN());
    out << format_real(z) << "," << format_real(lo) << "," << format_real(hi) << "\n";
  }
}

void write_bifurcation_csv(const std::string& path, const SlowFlowModel& sf) {
  auto out = open_out(path);
  const BifurcationValues bv = bifurcation_values(sf);
  out << "zeta_hb,zeta_sn,amp_sn,omega\n";
  out << format_real(bv.zeta_hb) << "," << format_real(bv.zeta_sn) << ","
      << format_real(bv.amp_sn) << "," << format_real(sf.omega) << "\n";
}

void write_equilibria_csv(const std::string& path, const SlowFlowModel& sf, Real delta,
                          Real tau) {
  auto out = open_out(path);
  out << "zeta,amp,stability\n";
  for (const auto& e : coupled_equilibria(sf, delta, tau)) {
    const char* s = e.stability == CoupledEquilibrium::Stability::Stable     ? "stable"
                    : e.stability == CoupledEquilibrium::Stability::Unstable ? "unstable"
                                                                             : "saddle";
    out << format_real(e.zeta) << "," << format_real(e.amp) << "," << s << "\n";
  }
}

void write_trigger_csv(const std::string& path, const TriggerPlan& plan) {
  auto out = open_out(path);
  out << "delta,threshold,t_req_closed_form,t_req_integrated\n";
  out << format_real(plan.delta) << "," << format_real(plan.threshold) << ","
      << format_real(plan.t_req_closed_form) << "," << format_real(plan.t_req_integrated)
      << "\n";
}

std::vector<DesignRow> design_report(const NetworkModel& base) {
  std::vector<DesignRow> rows;
  for (int q = 1; q <= base.n; ++q) {
    DesignRow row;
    row.q = q;
    NetworkModel model = base;
    model.q = q;
    try {
      const ModalBasis basis = modal_decompose(model);
      const SlowFlowModel sf = make_small_damping_model(basis, model);
      row.mode = sf.mode_index;
      row.omega = sf.omega;
      const BifurcationValues bv = bifurcation_values(sf);
      row.zeta_hb = bv.zeta_hb;
      row.zeta_sn = bv.zeta_sn;
      const auto [eps_int, eps_max] = epsilon_max_estimate(model, basis);
      row.eps_intersection = eps_int;
      row.eps_max = eps_max;
      for (int k = 0; k < model.n; ++k) {
        if (k != q - 1 && std::abs(sf.mode[k]) <= 1e-12) {
          row.flags = "displacement-nodes";
          break;
        }
      }
      Vec f = Vec::Zero(model.n);
      f[q - 1] = 1.0;
      SlowFlowModel sf_ref = sf;
      sf_ref.epsilon = 1.0;  // reference forcing: unit eps
      try {
        row.t_req_ref =
            required_trigger_time(sf_ref, f, 0.1, TriggerMethod::ClosedForm);
      } catch (const Error&) {
        row.t_req_ref = std::numeric_limits<Real>::infinity();
        row.flags += row.flags.empty() ? "no-threshold" : "+no-threshold";
      }
    } catch (const Error& e) {
      row.flags = e.what();
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const DesignRow& a, const DesignRow& b) {
    if (a.eps_max != b.eps_max) return a.eps_max > b.eps_max;
    return a.t_req_ref < b.t_req_ref;
  });
  return rows;
}

void write_design_csv(const std::string& path, const std::vector<DesignRow>& rows) {
  auto out = open_out(path);
  out << "rank,Q,mode,omega,zeta_hb,zeta_sn,eps_intersection,eps_max,t_req_ref,flags\n";
  int rank = 1;
  for (const auto& r : rows) {
    out << rank++ << "," << r.q << "," << r.mode << "," << format_real(r.omega) << ","
        << format_real(r.zeta_hb) << "," << format_real(r.zeta_sn) << ","
        << format_real(r.eps_intersection) << "," << format_real(r.eps_max) << ","
        << format_real(r.t_req_ref) << "," << r.flags << "\n";
  }
}

void write_manifest(const std::string& path, const std::string& subcommand,
                    const Json& resolved_config, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
  auto out = open_out(path);
  Json j{{"tool", "hysnet"},
         {"version", "0.1.0"},
         {"subcommand", subcommand},
         {"seed", seed},
         {"config", resolved_config},
         {"outputs", outputs}};
  out << j.dump(2) << "\n";
}

// ---- SVG ------------------------------------------------------------------

namespace {

struct PlotBox {
  Real x0, y0, w, h;  // SVG user units
};

void svg_polyline(std::ostream& out, const PlotBox& box, const std::vector<Real>& xs,
                  const std::vector<Real>& ys, Real xmin, Real xmax, Real ymin, Real ymax,
                  const char* color) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
  for (size_t i = 0; i < xs.size(); ++i) {
    const Real px = box.x0 + (xs[i] - xmin) / (xmax - xmin) * box.w;
    const Real py = box.y0 + box.h - (ys[i] - ymin) / (ymax - ymin) * box.h;
    out << px << "," << py << " ";
  }
  out << "\"/>\n";
}

void svg_axes(std::ostream& out, const PlotBox& box, Real xmin, Real xmax, Real ymin,
              Real ymax, const std::string& xlabel, const std::string& ylabel,
              const std::string& title) {
  out << "<rect x=\"" << box.x0 << "\" y=\"" << box.y0 << "\" width=\"" << box.w
      << "\" height=\"" << box.h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const Real fx = box.x0 + box.w * i / 4.0;
    const Real vx = xmin + (xmax - xmin) * i / 4.0;
    out << "<line x1=\"" << fx << "\" y1=\"" << box.y0 + box.h << "\" x2=\"" << fx
        << "\" y2=\"" << box.y0 + box.h + 4 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fx << "\" y=\"" << box.y0 + box.h + 16
        << "\" font-size=\"9\" text-anchor=\"middle\">" << static_cast<float>(vx)
        << "</text>\n";
    const Real fy = box.y0 + box.h - box.h * i / 4.0;
    const Real vy = ymin + (ymax - ymin) * i / 4.0;
    out << "<line x1=\"" << box.x0 - 4 << "\" y1=\"" << fy << "\" x2=\"" << box.x0
        << "\" y2=\"" << fy << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << box.x0 - 6 << "\" y=\"" << fy + 3
        << "\" font-size=\"9\" text-anchor=\"end\">" << static_cast<float>(vy) << "</text>\n";
  }
  out << "<text x=\"" << box.x0 + box.w / 2 << "\" y=\"" << box.y0 + box.h + 30
      << "\" font-size=\"11\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  out << "<text x=\"" << box.x0 - 38 << "\" y=\"" << box.y0 + box.h / 2
      << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 " << box.x0 - 38
      << " " << box.y0 + box.h / 2 << ")\">" << ylabel << "</text>\n";
  out << "<text x=\"" << box.x0 + box.w / 2 << "\" y=\"" << box.y0 - 8
      << "\" font-size=\"12\" text-anchor=\"middle\">" << title << "</text>\n";
}

}  // namespace

void write_scenario_svg(const std::string& path, const SimulationTrace& trace,
                        const NetworkModel& model, int q) {
  auto out = open_out(path);
  std::vector<Real> ts, amps, zetas;
  for (size_t i = 0; i < trace.records.size(); ++i) {
    ts.push_back(trace.records[i].t * model.epsilon);
    amps.push_back(trace.records[i].amps[q - 1]);
    zetas.push_back(trace.zeta_aggregate[i]);
  }
  const auto [amin_it, amax_it] = std::minmax_element(amps.begin(), amps.end());
  const auto [zmin_it, zmax_it] = std::minmax_element(zetas.begin(), zetas.end());
  const Real apad = std::max(Real(0.05), (*amax_it - *amin_it) * 0.05);
  const Real zpad = std::max(Real(0.05), (*zmax_it - *zmin_it) * 0.05);
  const Real amin = *amin_it - apad, amax = *amax_it + apad;
  const Real zmin = *zmin_it - zpad, zmax = *zmax_it + zpad;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"640\" "
         "viewBox=\"0 0 480 640\">\n";
  const PlotBox phase{60, 30, 380, 240};
  svg_axes(out, phase, zmin, zmax, amin, amax, "zeta aggregate", "A_Q", "phase portrait");
  svg_polyline(out, phase, zetas, amps, zmin, zmax, amin, amax, "#c02020");

  const PlotBox hist{60, 350, 380, 240};
  const Real tmin = ts.front(), tmax = ts.back();
  const Real ymin = std::min(amin, zmin), ymax = std::max(amax, zmax);
  svg_axes(out, hist, tmin, tmax, ymin, ymax, "eps * t", "A_Q, zeta", "time history");
  svg_polyline(out, hist, ts, amps, tmin, tmax, ymin, ymax, "#2040c0");
  svg_polyline(out, hist, ts, zetas, tmin, tmax, ymin, ymax, "#c08020");
  out << "</svg>\n";
}

}  // namespace hysnet
