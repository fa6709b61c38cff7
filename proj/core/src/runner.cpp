#include "branchwave/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "branchwave/free_propagator.hpp"
#include "branchwave/geometry.hpp"
#include "branchwave/metricfield.hpp"
#include "branchwave/packets.hpp"
#include "branchwave/parallel.hpp"
#include "branchwave/scattering.hpp"
#include "branchwave/spectral.hpp"

namespace branchwave {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKinds = {"distance",  "evolve",        "transmit",   "same_sheet",
                                      "smatrix",   "multi_sheet",   "metric_report", "inj_bounds",
                                      "spectrum",  "phase_decay",   "convergence_sweep"};
const std::set<std::string> kSections = {"experiment", "name",     "geometry",  "packet",
                                         "stepper",    "metric",   "distance",  "spectrum",
                                         "decay",      "inj",      "multi_sheet", "convergence",
                                         "output"};

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); }

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    invalid(std::string("config is not valid JSON: ") + e.what());
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) invalid(std::string("section '") + key + "' must be an object");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(std::string("field '") + key + "' has the wrong type");
  }
}

std::vector<double> get_list(const json& j, const char* key, std::vector<double> fallback) {
  return get<std::vector<double>>(j, key, std::move(fallback));
}

std::string kind_of(const json& j) {
  if (!j.is_object()) invalid("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kSections.count(key)) invalid("unknown config section '" + key + "'");
  }
  const std::string kind = get<std::string>(j, "experiment", "");
  if (!kKinds.count(kind)) invalid("unknown experiment kind '" + kind + "'");
  return kind;
}

PacketSpec packet_of(const json& j) {
  const json& p = section(j, "packet");
  PacketSpec spec;
  spec.a = get(p, "a", spec.a);
  spec.s = get(p, "s", spec.s);
  spec.k = get(p, "k", spec.k);
  spec.eps = get(p, "eps", spec.eps);
  spec.validate();
  return spec;
}

std::optional<SurfaceFunction> surface_of(const json& j) {
  const json& m = section(j, "metric");
  const std::string family = get<std::string>(m, "family", "euclidean");
  SurfaceFunction f;
  if (family == "euclidean" || family == "none") {
    return std::nullopt;
  } else if (family == "gaussian_bump") {
    const auto c = get_list(m, "center", {0.0, 0.0});
    if (c.size() != 2) invalid("metric.center must have two entries");
    const double sigma = get(m, "sigma", 1.0);
    if (!(sigma > 0.0)) invalid("metric.sigma must be positive");
    f = gaussian_bump_surface(get(m, "amplitude", 1.0), sigma, {c[0], c[1]}, get(m, "sheet", -1));
  } else if (family == "paraboloid") {
    f = paraboloid_surface(get(m, "c", 1.0));
  } else if (family == "linear") {
    f = linear_surface(get(m, "ax", 0.0), get(m, "ay", 0.0));
  } else {
    invalid("unknown metric family '" + family + "'");
  }
  const double n = get(m, "n", 1.0);
  if (!(n > 0.0)) invalid("metric.n must be positive");
  if (n != 1.0) f = scaled_surface(f, 1.0 / n);
  return f;
}

MetricDomain domain_of(const json& j, int num_sheets) {
  const json& d = section(section(j, "metric"), "domain");
  MetricDomain dom;
  dom.radius = get(d, "radius", dom.radius);
  dom.pitch = get(d, "pitch", dom.pitch);
  dom.num_sheets = num_sheets;
  if (!(dom.radius > 0.0) || !(dom.pitch > 0.0)) invalid("metric.domain needs positive radius and pitch");
  return dom;
}

// Grid step, after the branch-point check.
double grid_step(const json& j, double fallback) {
  const double h = get(section(j, "geometry"), "h", fallback);
  if (!(h > 0.0)) invalid("geometry.h must be positive");
  check_branch_point_avoidance(h);
  return h;
}

ScatteringConfig scattering_of(const json& j) {
  const json& g = section(j, "geometry");
  const json& st = section(j, "stepper");
  ScatteringConfig cfg;
  cfg.h = grid_step(j, cfg.h);
  cfg.num_sheets = get(g, "n_sheets", cfg.num_sheets);
  if (g.contains("box")) {
    const auto b = get_list(g, "box", {});
    if (b.size() != 4) invalid("geometry.box must be [x_min, x_max, y_min, y_max]");
    cfg.box = {b[0], b[1], b[2], b[3]};
  } else if (g.contains("L")) {
    const double L = get(g, "L", 8.0);
    cfg.box = {-L, L, -L, L};
  }
  const std::string cut = get<std::string>(g, "cut_mode", "coupled");
  if (cut == "coupled") {
    cfg.cut_mode = CutMode::Coupled;
  } else if (cut == "decoupled") {
    cfg.cut_mode = CutMode::Decoupled;
  } else {
    invalid("geometry.cut_mode must be 'coupled' or 'decoupled'");
  }
  cfg.use_carrier = get(g, "carrier", cfg.use_carrier);
  cfg.stepper.dt = get(st, "dt", cfg.stepper.dt);
  cfg.stepper.solver_tol = get(st, "tol", cfg.stepper.solver_tol);
  cfg.stepper.max_iter = get(st, "max_iter", cfg.stepper.max_iter);
  cfg.T = get(st, "T", cfg.T);
  cfg.stride = get(st, "stride", cfg.stride);
  cfg.duhamel_substeps = get(st, "duhamel_substeps", cfg.duhamel_substeps);
  cfg.r_far = get(g, "r_far", cfg.r_far);
  cfg.with_s_entry = get(st, "s_entry", cfg.with_s_entry);
  cfg.run_backward = get(st, "backward", cfg.run_backward);
  cfg.duhamel_check = get(st, "duhamel_check", cfg.duhamel_check);
  cfg.metric = surface_of(j);
  cfg.validate();
  return cfg;
}

void require_resolution(const PacketSpec& spec, const ScatteringConfig& cfg) {
  const ResolutionCheck r = resolution_check(spec, cfg);
  if (!r.ok) {
    std::ostringstream os;
    os << "resolution rule: need h <= " << r.h_limit << " and dt <= " << r.dt_limit
       << " for momenta up to " << r.k_max << " (have h = " << cfg.h << ", dt = " << cfg.stepper.dt << ")";
    throw Error(ErrorKind::ResolutionViolation, os.str());
  }
}

bool is_scattering(const std::string& kind) {
  return kind == "evolve" || kind == "transmit" || kind == "same_sheet" || kind == "smatrix" ||
         kind == "multi_sheet";
}

std::vector<double> geometric(double a, double b, int n) {
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(a * std::pow(b / a, n > 1 ? double(k) / (n - 1) : 0.0));
  return out;
}

// Explicit list or [first, last, count] geometric spacing.
std::vector<double> times_of(const json& d, const char* key, double a, double b, int n) {
  if (!d.contains(key)) return geometric(a, b, n);
  const json& v = d.at(key);
  if (v.is_object()) {
    const double lo = get(v, "first", a), hi = get(v, "last", b);
    const int cnt = get(v, "count", n);
    if (!(lo > 0.0) || !(hi > lo) || cnt < 2) invalid(std::string("decay.") + key + " needs 0 < first < last, count >= 2");
    return geometric(lo, hi, cnt);
  }
  return get_list(d, key, {});
}

// ---------------------------------------------------------------------------
// Output helpers

class Output {
 public:
  Output(const RunOptions& opts) : dir_(opts.out_dir), opts_(opts) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + dir_ + ": " + ec.message());
  }

  std::ofstream open(const std::string& name, bool binary = false) {
    std::ofstream os(fs::path(dir_) / name, binary ? std::ios::binary : std::ios::out);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + (fs::path(dir_) / name).string());
    artifacts.push_back(name);
    return os;
  }

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& columns) {
    std::ofstream os = open(name);
    os << std::setprecision(17);
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << "\n";
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c][r];
      os << "\n";
    }
  }

  void log(const std::string& line) const {
    if (!opts_.quiet && opts_.log) *opts_.log << "[branchwave] " << line << "\n" << std::flush;
  }

  std::vector<std::string> artifacts;

 private:
  std::string dir_;
  const RunOptions& opts_;
};

struct Summary {
  json metrics = json::object();
  json units = json::object();
  json verdicts = json::object();
  json details = json::object();

  void metric(const std::string& key, double value, const std::string& unit) {
    metrics[key] = value;
    units[key] = unit;
  }
};

json packet_json(const PacketSpec& s) { return {{"a", s.a}, {"s", s.s}, {"k", s.k}, {"eps", s.eps}}; }

json masses_json(const ChannelMasses& m) {
  return {{"total", m.total}, {"far", m.far}, {"boundary", m.boundary}};
}

void write_series(Output& out, const std::string& name, const ChannelMassSeries& s) {
  std::ofstream os = out.open(name);
  s.write_csv(os);
}

// ---------------------------------------------------------------------------
// Experiments

void run_distance(const json& j, Summary& sum, Output& out) {
  const json& d = section(j, "distance");
  CoveringSpec cover;
  cover.num_sheets = get(section(j, "geometry"), "n_sheets", 2);
  cover.validate();
  std::vector<std::vector<double>> pairs;
  if (d.contains("pairs")) {
    pairs = get<std::vector<std::vector<double>>>(d, "pairs", {});
  } else {
    // Same planar point on two sheets: the geodesic wraps a branch point.
    for (double y : {0.5, 1.0, 2.0}) pairs.push_back({0.0, y, 0.0, 0.0, y, 1.0});
  }
  std::vector<double> idx, value, route;
  json rows = json::array();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    if (p.size() != 6) invalid("distance.pairs entries must be [x1, y1, sheet1, x2, y2, sheet2]");
    const SheetPoint a{p[0], p[1], static_cast<int>(p[2])}, b{p[3], p[4], static_cast<int>(p[5])};
    const DistanceResult r = geodesic_distance_detail(a, b, cover);
    rows.push_back({{"p1", {a.x, a.y, a.sheet}}, {"p2", {b.x, b.y, b.sheet}}, {"distance", r.value},
                    {"route", route_name(r.route)}, {"two_branch_tie", r.two_branch_tie}});
    idx.push_back(static_cast<double>(k));
    value.push_back(r.value);
    route.push_back(static_cast<double>(r.route));
  }
  sum.details["pairs"] = rows;
  sum.metric("pairs", static_cast<double>(pairs.size()), "count");
  if (!value.empty()) sum.metric("first_distance", value.front(), "length");
  out.csv("distances.csv", {"pair", "distance", "route"}, {idx, value, route});
}

void run_evolve(const json& j, Summary& sum, Output& out) {
  const PacketSpec spec = packet_of(j);
  const ScatteringConfig cfg = scattering_of(j);
  require_resolution(spec, cfg);
  const ScatteringSetup setup(cfg, cfg.carrier_for(spec));
  const PlanarField v0 = truncated_packet(spec, setup.plane, 0.0, setup.carrier);
  WaveField w0 = lift_to_cover(v0, setup.grid, 0);
  if (setup.H.is_metric()) w0 = to_flat(setup.H, w0);
  ChannelMassSeries series;
  Observer obs;
  obs.stride = cfg.stride;
  obs.callback = [&](int, double t, const WaveField& psi) { series.push(t, channel_masses(psi, cfg.r_far)); };
  BoundaryMonitor monitor = setup.monitor;
  monitor.throw_on_contamination = true;
  out.log("evolving " + std::to_string(setup.grid.size()) + " nodes for " + std::to_string(cfg.steps()) + " steps");
  const EvolveResult res = evolve(setup.H, w0, cfg.T, cfg.stepper, {obs}, monitor);
  sum.metric("nodes", static_cast<double>(setup.grid.size()), "count");
  sum.metric("steps", res.steps, "count");
  sum.metric("norm_drift", std::abs(res.final_norm / res.initial_norm - 1.0), "relative");
  sum.metric("max_boundary_mass", res.max_boundary_mass, "squared norm");
  sum.metric("solver_iterations", res.total_iterations, "count");
  sum.metric("max_solver_residual", res.max_residual, "relative");
  sum.details["final_masses"] = masses_json(channel_masses(res.final_state, cfg.r_far));
  write_series(out, "evolve_masses.csv", series);
  WaveField phys = setup.H.is_metric() ? from_flat(setup.H, res.final_state) : res.final_state;
  phys = envelope_to_physical(phys, setup.carrier, cfg.T);
  std::ofstream os = out.open("final_state.bin", true);
  write_snapshot(os, phys);
}

void run_transmit(const json& j, Summary& sum, Output& out) {
  const PacketSpec spec = packet_of(j);
  const ScatteringConfig cfg = scattering_of(j);
  out.log("transmission run, T = " + std::to_string(cfg.T));
  const TransmissionReport r = transmission_experiment(spec, cfg);
  const double eps = spec.eps;
  auto tail_max = [](const std::vector<double>& t, const std::vector<double>& v, double from) {
    double m = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
      if (std::abs(t[k]) >= from - 1e-12) m = std::max(m, v[k]);
    return m;
  };
  sum.metric("w0_norm", r.w0_norm, "L2 norm");
  sum.metric("t0_forward", r.t0_forward, "time");
  sum.metric("t0_backward", r.t0_backward, "time");
  sum.metric("residual_forward_final", r.residual_forward.back(), "fraction of |w0|");
  if (!r.residual_backward.empty())
    sum.metric("residual_backward_final", r.residual_backward.back(), "fraction of |w0|");
  sum.metric("residual_forward_window_max", tail_max(r.times_forward, r.residual_forward, 0.5 * cfg.T),
             "fraction of |w0|");
  sum.metric("far_fraction_upper", r.far_fraction_upper, "fraction of total mass");
  sum.metric("far_fraction_lower_backward", r.far_fraction_lower_backward, "fraction of total mass");
  sum.metric("forward_upper", r.projection.forward_upper, "norm ratio");
  sum.metric("forward_lower", r.projection.forward_lower, "norm ratio");
  sum.metric("backward_upper", r.projection.backward_upper, "norm ratio");
  sum.metric("backward_lower", r.projection.backward_lower, "norm ratio");
  sum.metric("norm_drift", r.norm_drift, "relative");
  sum.metric("max_boundary_mass", r.max_boundary_mass, "squared norm");
  sum.metric("max_pad_mass", r.max_pad_mass, "squared norm");
  double duh = 0.0;
  for (double d : r.duhamel_defect) duh = std::max(duh, d);
  sum.metric("max_duhamel_defect", duh, "fraction of |v0|");
  sum.metric("solver_iterations", r.solver_iterations, "count");
  if (r.s_entry) {
    sum.metric("s_entry_re", r.s_entry->overlap.real(), "dimensionless");
    sum.metric("s_entry_im", r.s_entry->overlap.imag(), "dimensionless");
    sum.metric("s_entry_defect", r.s_entry->defect, "dimensionless");
    sum.verdicts["s_entry_within_3eps"] = r.s_entry->defect <= 3.0 * eps;
  }
  sum.verdicts["forward_window"] = r.window_forward;
  sum.verdicts["backward_window"] = r.window_backward;
  sum.verdicts["far_field_upper"] = r.far_fraction_upper > 0.8;
  sum.verdicts["projection_forward"] =
      r.projection.forward_upper > 1.0 - eps && r.projection.forward_lower < eps;
  sum.verdicts["projection_backward"] =
      r.projection.backward_lower > 1.0 - eps && r.projection.backward_upper < eps;
  sum.details["packet"] = packet_json(spec);
  sum.details["carrier"] = r.carrier;
  out.csv("residual_forward.csv", {"t", "residual", "truncated_residual"},
          {r.times_forward, r.residual_forward, r.truncated_residual_forward});
  out.csv("residual_backward.csv", {"t", "residual", "truncated_residual"},
          {r.times_backward, r.residual_backward, r.truncated_residual_backward});
  write_series(out, "masses_forward.csv", r.forward);
  write_series(out, "masses_backward.csv", r.backward);
}

void run_same_sheet(const json& j, Summary& sum, Output& out) {
  PacketSpec spec = packet_of(j);
  if (!section(j, "packet").contains("k")) spec.k = 3.0;
  const ScatteringConfig cfg = scattering_of(j);
  const int launch = get(section(j, "packet"), "launch_sheet", 0);
  out.log("same-sheet run, k = " + std::to_string(spec.k));
  const SameSheetReport r = same_sheet_experiment(spec, cfg, launch);
  sum.metric("same_sheet_fraction", r.same_sheet_fraction, "fraction of far-field mass");
  sum.metric("residual", r.residual, "fraction of |w0|");
  sum.verdicts["same_sheet_at_least_0.9"] = r.same_sheet_fraction >= 0.9;
  sum.details["final_masses"] = masses_json(r.final_masses);
  sum.details["packet"] = packet_json(spec);
  write_series(out, "same_sheet_masses.csv", r.series);
}

json row_json(const TransmissionRow& r) {
  return {{"launch", r.launch}, {"far_fraction", r.far_fraction}, {"mass_fraction", r.mass_fraction},
          {"row_sum", r.row_sum}};
}

void write_rows(Output& out, const std::string& name, const std::vector<TransmissionRow>& rows) {
  std::ofstream os = out.open(name);
  os << std::setprecision(17) << "launch,sheet,far_fraction,mass_fraction\n";
  for (const auto& r : rows)
    for (std::size_t s = 0; s < r.far_fraction.size(); ++s)
      os << r.launch << "," << s << "," << r.far_fraction[s] << "," << r.mass_fraction[s] << "\n";
}

void run_smatrix(const json& j, Summary& sum, Output& out) {
  const PacketSpec spec = packet_of(j);
  const ScatteringConfig cfg = scattering_of(j);
  require_resolution(spec, cfg);
  const ScatteringSetup setup(cfg, cfg.carrier_for(spec));
  const PlanarField v0 = truncated_packet(spec, setup.plane, 0.0, setup.carrier);
  std::vector<TransmissionRow> rows;
  json jr = json::array();
  for (int L = 0; L < cfg.num_sheets; ++L) {
    out.log("transmission row for launch sheet " + std::to_string(L));
    rows.push_back(transmission_row(setup, v0, L, cfg.T, cfg.stepper));
    jr.push_back(row_json(rows.back()));
    for (int s = 0; s < cfg.num_sheets; ++s) {
      sum.metric("far_" + std::to_string(L) + "_" + std::to_string(s), rows.back().far_fraction[s],
                 "fraction of total mass");
      sum.metric("mass_" + std::to_string(L) + "_" + std::to_string(s), rows.back().mass_fraction[s],
                 "fraction of total mass");
    }
  }
  sum.details["rows"] = jr;
  write_rows(out, "smatrix_rows.csv", rows);
}

void run_multi_sheet(const json& j, Summary& sum, Output& out) {
  const PacketSpec spec = packet_of(j);
  const ScatteringConfig cfg = scattering_of(j);
  const json& m = section(j, "multi_sheet");
  const auto launches = get<std::vector<int>>(m, "launch_sheets", {0});
  const bool floor = get(m, "noise_floor", true);
  out.log("multi-sheet survey on " + std::to_string(cfg.num_sheets) + " sheets");
  const MultiSheetSurvey s = multi_sheet_survey(cfg.num_sheets, spec, cfg, launches, floor);
  json jr = json::array();
  for (const auto& r : s.rows) {
    jr.push_back(row_json(r));
    for (std::size_t k = 0; k < r.far_fraction.size(); ++k)
      sum.metric("far_" + std::to_string(r.launch) + "_" + std::to_string(k), r.far_fraction[k],
                 "fraction of total mass");
  }
  if (floor) {
    sum.metric("noise_floor", s.noise_floor, "fraction of total mass");
    sum.metric("decoupled_floor", s.decoupled_floor, "fraction of total mass");
    sum.metric("shifted_floor", s.shifted_floor, "fraction of total mass");
    for (const auto& r : s.rows) {
      const int nb = (r.launch + 1) % s.num_sheets;
      sum.verdicts["neighbor_above_floor_" + std::to_string(r.launch)] = r.far_fraction[nb] > s.noise_floor;
    }
  }
  sum.details["rows"] = jr;
  write_rows(out, "multi_sheet_rows.csv", s.rows);
}

void run_metric_report(const json& j, Summary& sum, Output& out) {
  const auto f = surface_of(j);
  if (!f) invalid("metric_report needs a metric family other than euclidean");
  const json& m = section(j, "metric");
  const int n = get(section(j, "geometry"), "n_sheets", 2);
  CoveringSpec cover;
  cover.num_sheets = n;
  cover.validate();
  const MetricDomain dom = domain_of(j, n);
  const double rho = get(m, "rho", 0.25), gamma = get(m, "gamma", 1.0), eps = get(m, "eps", 0.2);
  out.log("metric report for " + f->name);
  const AdmissibilityReport r = membership(*f, rho, gamma, eps, dom, cover);
  sum.metric("eta", r.eta, "dimensionless");
  sum.metric("sup_grad_sq", r.sup_grad_sq, "dimensionless");
  sum.metric("d_inf", r.d_inf, "dimensionless");
  sum.metric("d_1", r.d_1.value, "length^-2");
  sum.metric("d_1_interior", r.d_1.interior, "length^-2");
  sum.metric("d_1_tail", r.d_1.tail, "length^-2");
  sum.metric("curvature_bound", r.curvature_bound, "length^-2");
  sum.metric("c_f", r.c_f, "length");
  sum.metric("rho_max", r.rho_max, "dimensionless");
  sum.verdicts["member_r0"] = r.member_r0;
  sum.verdicts["member"] = r.member;
  sum.details["r0"] = r.r0_description;
  sum.details["failing"] = r.failing;
  sum.details["lower_confidence"] = r.lower_confidence;
  sum.details["d_1_branch_regular"] = r.d_1.branch_regular;
  std::vector<double> xs, ys, ss, K, dt;
  for (const auto& p : get<std::vector<std::vector<double>>>(m, "samples", {{0.0, 0.0, 0.0}})) {
    if (p.size() != 3) invalid("metric.samples entries must be [x, y, sheet]");
    const SheetPoint q{p[0], p[1], static_cast<int>(p[2])};
    xs.push_back(q.x);
    ys.push_back(q.y);
    ss.push_back(q.sheet);
    K.push_back(gauss_curvature(*f, q));
    dt.push_back(dtilde(*f, q));
  }
  out.csv("metric_samples.csv", {"x", "y", "sheet", "curvature", "dtilde"}, {xs, ys, ss, K, dt});
}

void run_inj_bounds(const json& j, Summary& sum, Output& out) {
  const json& d = section(j, "inj");
  const double beta = get(d, "beta", 0.0), gamma = get(d, "gamma", 1.0);
  sum.metric("inj_global", inj_bound_global(beta, gamma), "length");
  if (d.contains("eta")) {
    const BoundValue b = inj_bound_comparison(get(d, "eta", 1.0), get(d, "K", 0.0), get(d, "inj0", 1.0));
    sum.metric("inj_comparison", b.value, "length");
    sum.details["comparison_flagged"] = b.flagged;
  }
  sum.metric("cutoff_constant", cutoff_constant(), "dimensionless");
  const auto f = surface_of(j);
  if (!f) return;
  CoveringSpec cover;
  cover.num_sheets = get(section(j, "geometry"), "n_sheets", 2);
  cover.validate();
  std::vector<double> xs, ys, local, punct, covering;
  for (const auto& p : get<std::vector<std::vector<double>>>(d, "points", {{3.0, 0.0, 0.0}})) {
    if (p.size() != 3) invalid("inj.points entries must be [x, y, sheet]");
    const SheetPoint q{p[0], p[1], static_cast<int>(p[2])};
    xs.push_back(q.x);
    ys.push_back(q.y);
    local.push_back(inj_bound_local(*f, q).value);
    punct.push_back(inj_bound_punctured(*f, q).value);
    covering.push_back(inj_bound_covering(*f, q, cover).value);
  }
  sum.metric("covering_constant", covering_constant(*f), "length");
  out.csv("inj_bounds.csv", {"x", "y", "local", "punctured", "covering"}, {xs, ys, local, punct, covering});
}

struct SpectrumRun {
  std::vector<double> computed, oracle;
  double max_rel_error = 0.0;
};

SpectrumRun spectrum_at(double h, int count, double radius, int n) {
  const BranchedGrid disc = build_branched_disc(h, radius, n);
  const EigenResult e = branched_disc_eigenvalues(disc, count);
  SpectrumRun r;
  r.computed = e.values;
  for (const auto& lv : disc_spectrum_oracle(count, n)) {
    for (int m = 0; m < lv.multiplicity && static_cast<int>(r.oracle.size()) < count; ++m)
      r.oracle.push_back(lv.value / (radius * radius));
  }
  for (int k = 0; k < count; ++k)
    r.max_rel_error = std::max(r.max_rel_error, std::abs(r.computed[k] / r.oracle[k] - 1.0));
  return r;
}

void run_spectrum(const json& j, Summary& sum, Output& out) {
  const json& s = section(j, "spectrum");
  const double h = grid_step(j, 1.0 / 64.0);
  const int count = get(s, "count", 9);
  const double radius = get(s, "radius", 1.0);
  const int n = get(section(j, "geometry"), "n_sheets", 2);
  if (count < 1 || !(radius > 0.0)) invalid("spectrum needs count >= 1 and radius > 0");
  out.log("branched disc eigenvalues at h = " + std::to_string(h));
  const SpectrumRun r = spectrum_at(h, count, radius, n);
  sum.metric("max_rel_error", r.max_rel_error, "relative");
  sum.metric("lambda_1", r.computed.front(), "length^-2");
  sum.details["computed"] = r.computed;
  sum.details["oracle"] = r.oracle;
  std::vector<double> idx, err;
  for (int k = 0; k < count; ++k) {
    idx.push_back(k);
    err.push_back(r.computed[k] / r.oracle[k] - 1.0);
  }
  out.csv("spectrum.csv", {"index", "computed", "oracle", "rel_error"}, {idx, r.computed, r.oracle, err});
}

void run_phase_decay(const json& j, Summary& sum, Output& out) {
  PacketSpec spec = packet_of(j);
  const json& d = section(j, "decay");
  const auto tail_t = times_of(d, "tail_times", 8.0, 1000.0, 12);
  const auto point_t = times_of(d, "pointwise_times", 4.0, 250.0, 12);
  out.log("tail masses at " + std::to_string(tail_t.size()) + " times");
  const TailDecay td = tail_mass_decay(spec, tail_t);
  sum.metric("tail_slope", td.fit.slope, "d log mass / d log(1+st)");
  sum.metric("tail_decades", td.fit.decades, "decades of 1+st");
  sum.metric("tail_points", td.fit.points, "count");
  sum.metric("grad_tail_slope", td.grad_fit.slope, "d log mass / d log(1+st)");
  sum.metric("grad_tail_decades", td.grad_fit.decades, "decades of 1+st");
  sum.verdicts["s_at_least_2a"] = td.hypothesis_ok;
  sum.verdicts["tail_slope_le_-3"] = td.fit.slope <= -3.0 && td.fit.decades >= 1.5 && td.fit.points >= 8;
  sum.verdicts["grad_tail_slope_le_-3"] =
      td.grad_fit.slope <= -3.0 && td.grad_fit.decades >= 1.5 && td.grad_fit.points >= 8;
  out.csv("tail_decay.csv", {"t", "one_plus_st", "mass", "grad_mass"}, {td.times, td.st, td.mass, td.grad_mass});

  const PointwiseDecay pw = stationary_phase_pointwise(spec.profile_x(), 0.0, point_t, get(d, "offset", 1.0));
  sum.metric("pointwise_slope", pw.fit.slope, "d log|Psi| / d log(1+|x|+t)");
  sum.metric("pointwise_decades", pw.fit.decades, "decades of distance");
  sum.verdicts["pointwise_slope_le_-4"] = pw.fit.slope <= -4.0 && pw.fit.decades >= 1.5 && pw.fit.points >= 8;
  out.csv("pointwise_decay.csv", {"t", "x", "distance", "magnitude"}, {pw.times, pw.positions, pw.distance, pw.magnitude});

  const auto s_list = get_list(d, "localization_s", {});
  if (s_list.empty()) return;
  LocalizationConfig lc;
  const json& l = section(d, "localization");
  lc.h = get(l, "h", lc.h);
  lc.window = get(l, "window", lc.window);
  lc.time_tol = get(l, "time_tol", lc.time_tol);
  out.log("localization error for " + std::to_string(s_list.size()) + " values of s");
  const auto rows = localization_error_decay(spec, s_list, lc);
  std::vector<double> s, I, win, tail, slope;
  bool decreasing = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    s.push_back(rows[k].s);
    I.push_back(rows[k].integral);
    win.push_back(rows[k].window_integral);
    tail.push_back(rows[k].tail_integral);
    slope.push_back(rows[k].fit.slope);
    if (k > 0 && !(rows[k].integral < rows[k - 1].integral)) decreasing = false;
  }
  sum.metric("localization_last", I.back(), "time x L2 norm");
  sum.verdicts["localization_strictly_decreasing"] = decreasing;
  sum.verdicts["localization_below_eps_prime"] = I.back() < spec.eps_prime();
  out.csv("localization.csv", {"s", "integral", "window_integral", "tail_integral", "fit_slope"},
          {s, I, win, tail, slope});
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] < v[k - 1])) return false;
  return true;
}

void run_convergence(const json& j, Summary& sum, Output& out) {
  const json& c = section(j, "convergence");
  const std::string quantity = get<std::string>(c, "quantity", "spectrum");
  const auto values = get_list(c, "values", {});
  if (values.size() < 2) invalid("convergence.values needs at least two entries");
  std::vector<double> metric;
  if (quantity == "spectrum") {
    const json& s = section(j, "spectrum");
    const int count = get(s, "count", 9);
    for (double h : values) {
      check_branch_point_avoidance(h);
      out.log("spectrum at h = " + std::to_string(h));
      metric.push_back(spectrum_at(h, count, get(s, "radius", 1.0), get(section(j, "geometry"), "n_sheets", 2))
                           .max_rel_error);
    }
    sum.verdicts["error_decreasing"] = strictly_decreasing(metric);
    out.csv("convergence.csv", {"h", "max_rel_error"}, {values, metric});
  } else if (quantity == "cn_dt") {
    const PacketSpec spec = packet_of(j);
    ScatteringConfig cfg = scattering_of(j);
    std::vector<WaveField> finals;
    double boundary = 0.0;
    const ScatteringSetup setup(cfg, cfg.carrier_for(spec));
    const PlanarField v0 = truncated_packet(spec, setup.plane, 0.0, setup.carrier);
    WaveField w0 = lift_to_cover(v0, setup.grid, 0);
    if (setup.H.is_metric()) w0 = to_flat(setup.H, w0);
    for (double dt : values) {
      StepperConfig st = cfg.stepper;
      st.dt = dt;
      cfg.stepper = st;
      cfg.steps();
      out.log("Crank-Nicolson run with dt = " + std::to_string(dt));
      // Every run sees the same boundary effects, so they cancel in the differences.
      BoundaryMonitor monitor = setup.monitor;
      monitor.throw_on_contamination = false;
      const EvolveResult res = evolve(setup.H, w0, cfg.T, st, {}, monitor);
      boundary = std::max(boundary, res.max_boundary_mass);
      finals.push_back(res.final_state);
    }
    sum.metric("max_boundary_mass", boundary, "squared norm");
    std::vector<double> diff(values.size(), std::nan("")), ratio(values.size(), std::nan(""));
    for (std::size_t k = 1; k < finals.size(); ++k) {
      cvec d = finals[k].values;
      axpy(-1.0, finals[k - 1].values, d);
      diff[k] = setup.grid.h() * std::sqrt(norm_sq(d));
      if (k > 1) ratio[k] = diff[k - 1] / diff[k];
    }
    metric = diff;
    sum.metric("last_ratio", ratio.back(), "dimensionless");
    out.csv("convergence.csv", {"dt", "difference", "ratio"}, {values, diff, ratio});
  } else if (quantity == "transmit_h") {
    const PacketSpec spec = packet_of(j);
    const ScatteringConfig base = scattering_of(j);
    const double dt_per_h = base.stepper.dt / base.h;
    for (double h : values) {
      ScatteringConfig cfg = base;
      cfg.h = h;
      cfg.stepper.dt = dt_per_h * h;
      cfg.with_s_entry = false;
      cfg.run_backward = false;
      out.log("transmission residual at h = " + std::to_string(h));
      const TransmissionReport r = transmission_experiment(spec, cfg);
      metric.push_back(r.residual_forward.back());
    }
    sum.verdicts["residual_decreasing"] = strictly_decreasing(metric);
    out.csv("convergence.csv", {"h", "forward_residual"}, {values, metric});
  } else {
    invalid("convergence.quantity must be spectrum, cn_dt or transmit_h");
  }
  sum.details["quantity"] = quantity;
  sum.details["values"] = values;
  sum.details["metric"] = metric;
  sum.metric("last", metric.back(), quantity == "transmit_h" ? "fraction of |w0|" : "relative");
}

// Checks that do not need the experiment to run.
void validate_parsed(const json& j, const std::string& kind) {
  if (section(j, "geometry").contains("h")) grid_step(j, 1.0);
  if (is_scattering(kind)) {
    const PacketSpec spec = packet_of(j);
    const ScatteringConfig cfg = scattering_of(j);
    require_resolution(spec, cfg);
    if (kind == "same_sheet") {
      PacketSpec s = spec;
      if (!section(j, "packet").contains("k")) s.k = 3.0;
      check_cut_clearance(s);
    }
  } else if (kind == "phase_decay") {
    packet_of(j);
  } else if (kind == "metric_report") {
    if (!surface_of(j)) invalid("metric_report needs a metric family other than euclidean");
    domain_of(j, get(section(j, "geometry"), "n_sheets", 2));
  } else if (kind == "inj_bounds") {
    surface_of(j);
  }
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept { return is_validation_error(kind) ? 2 : 3; }

std::string read_text_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void validate_config(const std::string& config_text) {
  const json j = parse(config_text);
  validate_parsed(j, kind_of(j));
}

RunResult run_config(const std::string& config_text, const RunOptions& opts) {
  const json j = parse(config_text);
  const std::string kind = kind_of(j);
  validate_parsed(j, kind);
  set_threads(std::max(1, opts.threads));
  Output out(opts);
  Summary sum;
  out.log("experiment " + kind);
  if (kind == "distance") run_distance(j, sum, out);
  else if (kind == "evolve") run_evolve(j, sum, out);
  else if (kind == "transmit") run_transmit(j, sum, out);
  else if (kind == "same_sheet") run_same_sheet(j, sum, out);
  else if (kind == "smatrix") run_smatrix(j, sum, out);
  else if (kind == "multi_sheet") run_multi_sheet(j, sum, out);
  else if (kind == "metric_report") run_metric_report(j, sum, out);
  else if (kind == "inj_bounds") run_inj_bounds(j, sum, out);
  else if (kind == "spectrum") run_spectrum(j, sum, out);
  else if (kind == "phase_decay") run_phase_decay(j, sum, out);
  else run_convergence(j, sum, out);

  json doc;
  doc["schema"] = kSchema;
  doc["experiment"] = kind;
  if (j.contains("name")) doc["name"] = j.at("name");
  doc["config"] = j;
  doc["metrics"] = sum.metrics;
  doc["units"] = sum.units;
  doc["verdicts"] = sum.verdicts;
  doc["details"] = sum.details;
  doc["artifacts"] = out.artifacts;
  RunResult res;
  res.experiment = kind;
  res.summary_json = doc.dump(2);
  {
    std::ofstream os = out.open("summary.json");
    os << res.summary_json << "\n";
  }
  res.artifacts = out.artifacts;
  return res;
}

SweepResult run_sweep(const std::string& config_text, const std::string& parameter,
                      const std::vector<double>& values, const RunOptions& opts) {
  json base = parse(config_text);
  kind_of(base);
  if (values.empty()) invalid("sweep needs at least one value");
  std::string ptr = "/" + parameter;
  std::replace(ptr.begin(), ptr.end(), '.', '/');
  const json::json_pointer where(ptr);

  SweepResult result;
  std::vector<json> summaries(values.size());
  std::vector<std::string> errors(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    json cfg = base;
    cfg[where] = values[k];
    RunOptions o = opts;
    o.out_dir = (fs::path(opts.out_dir) / ("run_" + std::to_string(k))).string();
    try {
      summaries[k] = json::parse(run_config(cfg.dump(), o).summary_json);
    } catch (const Error& e) {
      errors[k] = e.what();
      if (result.failures++ == 0) result.first_error = e.kind();
    }
  }

  std::vector<std::string> columns;
  for (const auto& s : summaries) {
    if (!s.contains("metrics")) continue;
    for (const auto& [key, _] : s["metrics"].items())
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
  }
  fs::create_directories(opts.out_dir);
  std::ofstream csv(fs::path(opts.out_dir) / "sweep.csv");
  if (!csv) throw Error(ErrorKind::Io, "cannot write sweep.csv");
  csv << std::setprecision(17) << parameter;
  for (const auto& c : columns) csv << "," << c;
  csv << ",error\n";
  json trends = json::object();
  std::map<std::string, std::vector<double>> series;
  for (std::size_t k = 0; k < values.size(); ++k) {
    csv << values[k];
    for (const auto& c : columns) {
      csv << ",";
      const json& m = summaries[k].contains("metrics") ? summaries[k]["metrics"] : json::object();
      if (m.contains(c) && m[c].is_number()) {
        csv << m[c].get<double>();
        series[c].push_back(m[c].get<double>());
      }
    }
    std::string err = errors[k];
    std::replace(err.begin(), err.end(), ',', ';');
    csv << "," << err << "\n";
  }
  for (const auto& c : columns) {
    const auto& v = series[c];
    if (v.size() != values.size() || v.size() < 2) continue;
    bool dec = true, inc = true;
    for (std::size_t k = 1; k < v.size(); ++k) {
      dec = dec && v[k] < v[k - 1];
      inc = inc && v[k] > v[k - 1];
    }
    trends[c] = dec ? "strictly_decreasing" : inc ? "strictly_increasing" : "not_monotone";
  }
  json doc;
  doc["schema"] = kSchema;
  doc["experiment"] = "sweep";
  doc["base_experiment"] = base["experiment"];
  doc["parameter"] = parameter;
  doc["values"] = values;
  doc["trends"] = trends;
  doc["failures"] = result.failures;
  doc["errors"] = errors;
  doc["runs"] = summaries;
  result.summary_json = doc.dump(2);
  std::ofstream js(fs::path(opts.out_dir) / "sweep.json");
  js << result.summary_json << "\n";
  return result;
}

std::vector<std::string> export_grid(const std::string& config_text, const std::string& out_dir) {
  const json j = parse(config_text);
  kind_of(j);
  const ScatteringConfig cfg = scattering_of(j);
  RunOptions o;
  o.out_dir = out_dir;
  o.quiet = true;
  Output out(o);
  const bool has_packet = j.contains("packet");
  const double carrier = has_packet ? cfg.carrier_for(packet_of(j)) : 0.0;
  const ScatteringSetup setup(cfg, carrier);
  {
    std::ofstream os = out.open("grid_adjacency.csv");
    setup.grid.write_adjacency_csv(os);
  }
  if (has_packet) {
    const PlanarField v0 = truncated_packet(packet_of(j), setup.plane, 0.0, carrier);
    const WaveField w0 = envelope_to_physical(lift_to_cover(v0, setup.grid, 0), carrier, 0.0);
    std::ofstream os = out.open("initial_state.bin", true);
    write_snapshot(os, w0);
  }
  return out.artifacts;
}

}  // namespace branchwave
