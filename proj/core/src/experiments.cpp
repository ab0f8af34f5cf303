#include "iongate/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "iongate/crystal.hpp"
#include "iongate/version.hpp"

namespace iongate {

namespace {

using nlohmann::json;

std::string fmt_real(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<Real>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0) out += ",";
    out += fmt_real(values[k]);
  }
  return out;
}

void require_keys(const json& j, const char* section,
                  std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end()) {
      throw std::invalid_argument(std::string("unknown config key '") + item.key() +
                                  "' in section '" + section + "'");
    }
  }
}

std::vector<Real> real_list(const json& j, const char* key) {
  std::vector<Real> out;
  if (j.is_number()) {
    out.push_back(j.get<Real>());
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<Real>());
  } else {
    throw std::invalid_argument(std::string("config key '") + key +
                                "' must be a number or an array of numbers");
  }
  return out;
}

Frame frame_for(const LabParams& params) {
  return params.Omega_d > 0.0 ? Frame::dressed : Frame::bare;
}

VecXc spin_basis_state(int index) {
  VecXc spin = VecXc::Zero(4);
  spin[index] = 1.0;
  return spin;
}

std::string nbar_tag(Real nbar) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", nbar);
  std::string tag(buf);
  std::replace(tag.begin(), tag.end(), '.', 'p');
  return tag;
}

std::filesystem::path output_path(const ExperimentConfig& config, const std::string& name) {
  return std::filesystem::path(config.out_dir) / name;
}

Real ou_noise_amp(const OUParams& ou) { return 4.0 * std::sqrt(ou.c * ou.tau / 2.0); }

// Scan support shared by the gate pipelines: a reduced-cutoff system plus
// the evaluated optimum of the echoed Bell error.
struct ScanOutcome {
  Real t_gate_predicted = 0.0;
  Real dt = 0.0;
  GateTimeScan scan;
};

ScanOutcome find_gate_time(const ExperimentConfig& config, const LabParams& params,
                           BellKind kind) {
  const ChainModes modes = transverse_modes(params.num_ions, params.omega_x, params.omega_z);
  const SidebandCouplings couplings = sideband_couplings(params, modes);
  const EffectiveCouplings eff = compute_j_eff(couplings);

  const GateSystem sys = make_gate_system(params, config.numerics.scan_n_max, frame_for(params));
  ScanOutcome outcome;
  outcome.t_gate_predicted = eff.t_gate;
  outcome.dt = pick_dt(config, sys);
  const auto error_at = [&](Real t_f) {
    return echoed_bell_error(sys, ThermalSpec{0.0, config.thermal_mass_tolerance}, kind, t_f,
                             outcome.dt, nullptr, 1, config.numerics.threads);
  };
  const std::vector<Real> candidates =
      gate_time_candidates(eff.t_gate, couplings.delta[0], config.numerics.scan_halfwidth,
                           config.numerics.scan_points);
  outcome.scan = scan_gate_time(error_at, candidates);
  return outcome;
}

CsvTable base_table(const ExperimentConfig& config) {
  CsvTable table;
  table.metadata = config_metadata(config);
  return table;
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  if (!j.is_object()) throw std::invalid_argument("config root must be a JSON object");
  require_keys(j, "root",
               {"experiment", "params", "thermal", "drives_hz", "ou", "numerics", "out_dir",
                "full_scale"});

  ExperimentConfig config;
  if (j.contains("experiment")) {
    config.experiment = j.at("experiment").get<std::string>();
    static const char* known[] = {"fig2a_swap", "fig2b_thermal", "fig4a_coherence",
                                  "fig4b_noise", "channel_error", "modes", "jeff", "custom"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
          return config.experiment == k;
        }) == std::end(known)) {
      throw std::invalid_argument("unknown experiment name '" + config.experiment + "'");
    }
  }
  if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("full_scale")) config.full_scale = j.at("full_scale").get<bool>();

  if (j.contains("params")) {
    const json& p = j.at("params");
    require_keys(p, "params",
                 {"num_ions", "omega0_hz", "omega_x_hz", "omega_z_hz", "eta", "B0",
                  "delta_L_hz", "Omega_L_hz", "Omega_d_hz", "phi_L", "phi_d"});
    LabParams& lab = config.params;
    if (p.contains("num_ions")) lab.num_ions = p.at("num_ions").get<int>();
    if (p.contains("omega0_hz")) lab.omega0 = rad_from_hz(p.at("omega0_hz").get<Real>());
    if (p.contains("omega_x_hz")) lab.omega_x = rad_from_hz(p.at("omega_x_hz").get<Real>());
    if (p.contains("omega_z_hz")) lab.omega_z = rad_from_hz(p.at("omega_z_hz").get<Real>());
    if (p.contains("eta")) lab.eta = p.at("eta").get<Real>();
    if (p.contains("B0")) lab.B0 = p.at("B0").get<Real>();
    if (p.contains("delta_L_hz")) lab.delta_L = rad_from_hz(p.at("delta_L_hz").get<Real>());
    if (p.contains("Omega_L_hz")) lab.Omega_L = rad_from_hz(p.at("Omega_L_hz").get<Real>());
    if (p.contains("Omega_d_hz")) lab.Omega_d = rad_from_hz(p.at("Omega_d_hz").get<Real>());
    if (p.contains("phi_L")) lab.phi_L = p.at("phi_L").get<Real>();
    if (p.contains("phi_d")) lab.phi_d = p.at("phi_d").get<Real>();
    if (lab.num_ions < 2) throw std::invalid_argument("num_ions must be at least 2");
  }

  if (j.contains("thermal")) {
    const json& t = j.at("thermal");
    require_keys(t, "thermal", {"nbar", "mass_tolerance"});
    if (t.contains("nbar")) config.nbar_list = real_list(t.at("nbar"), "thermal.nbar");
    if (t.contains("mass_tolerance"))
      config.thermal_mass_tolerance = t.at("mass_tolerance").get<Real>();
    for (const Real nbar : config.nbar_list)
      if (nbar < 0.0) throw std::invalid_argument("thermal.nbar must be non-negative");
    if (!(config.thermal_mass_tolerance > 0.0 && config.thermal_mass_tolerance < 1.0))
      throw std::invalid_argument("thermal.mass_tolerance must lie in (0, 1)");
  }

  if (j.contains("drives_hz")) {
    config.drives_hz = real_list(j.at("drives_hz"), "drives_hz");
    for (const Real d : config.drives_hz)
      if (d < 0.0) throw std::invalid_argument("drives_hz must be non-negative");
  }

  if (j.contains("ou")) {
    const json& o = j.at("ou");
    require_keys(o, "ou", {"T2", "tau_ratio", "trajectories", "seed"});
    if (o.contains("T2")) config.ou.T2_list = real_list(o.at("T2"), "ou.T2");
    if (o.contains("tau_ratio")) config.ou.tau_ratio = o.at("tau_ratio").get<Real>();
    if (o.contains("trajectories")) config.ou.trajectories = o.at("trajectories").get<int>();
    if (o.contains("seed")) config.ou.seed = o.at("seed").get<std::uint64_t>();
    for (const Real t2 : config.ou.T2_list)
      if (!(t2 > 0.0)) throw std::invalid_argument("ou.T2 entries must be positive");
    if (!(config.ou.tau_ratio > 0.0 && config.ou.tau_ratio < 1.0))
      throw std::invalid_argument("ou.tau_ratio must lie in (0, 1)");
    if (config.ou.trajectories < 1)
      throw std::invalid_argument("ou.trajectories must be at least 1");
  }

  if (j.contains("numerics")) {
    const json& n = j.at("numerics");
    require_keys(n, "numerics",
                 {"dt", "n_max", "scan_n_max", "scan_points", "scan_halfwidth", "haar_states",
                  "haar_seed", "ramsey_trajectories", "threads"});
    NumericsBlock& num = config.numerics;
    if (n.contains("dt")) num.dt = n.at("dt").get<Real>();
    if (n.contains("n_max")) num.n_max = n.at("n_max").get<int>();
    if (n.contains("scan_n_max")) num.scan_n_max = n.at("scan_n_max").get<int>();
    if (n.contains("scan_points")) num.scan_points = n.at("scan_points").get<int>();
    if (n.contains("scan_halfwidth")) num.scan_halfwidth = n.at("scan_halfwidth").get<Real>();
    if (n.contains("haar_states")) num.haar_states = n.at("haar_states").get<int>();
    if (n.contains("haar_seed")) num.haar_seed = n.at("haar_seed").get<std::uint64_t>();
    if (n.contains("ramsey_trajectories"))
      num.ramsey_trajectories = n.at("ramsey_trajectories").get<int>();
    if (n.contains("threads")) num.threads = n.at("threads").get<int>();
    if (num.dt < 0.0) throw std::invalid_argument("numerics.dt must be non-negative");
    if (num.n_max < 0 || num.scan_n_max < 0)
      throw std::invalid_argument("Fock cutoffs must be non-negative");
    if (num.scan_points < 2) throw std::invalid_argument("numerics.scan_points must be >= 2");
    if (!(num.scan_halfwidth > 0.0 && num.scan_halfwidth <= 0.5))
      throw std::invalid_argument("numerics.scan_halfwidth must lie in (0, 0.5]");
    if (num.haar_states < 2) throw std::invalid_argument("numerics.haar_states must be >= 2");
    if (num.ramsey_trajectories < 2)
      throw std::invalid_argument("numerics.ramsey_trajectories must be >= 2");
    if (num.threads < 1) throw std::invalid_argument("numerics.threads must be >= 1");
  }

  if (config.full_scale) apply_full_scale(config);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void apply_full_scale(ExperimentConfig& config) {
  config.full_scale = true;
  config.numerics.n_max = std::max(config.numerics.n_max, 20);
  config.ou.trajectories = std::max(config.ou.trajectories, 5000);
  config.numerics.haar_states = std::max(config.numerics.haar_states, 1000);
  config.thermal_mass_tolerance = std::min(config.thermal_mass_tolerance, 1.0e-6);
  config.nbar_list = {0.0, 0.1, 1.0, 2.0, 4.0};
}

void write_csv(const CsvTable& table, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  for (const auto& [key, value] : table.metadata) out << "# " << key << " = " << value << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c > 0) out << ",";
    out << table.columns[c];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw std::invalid_argument("CSV row width does not match the header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << ",";
      out << fmt_real(row[c]);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::pair<std::string, std::string>> config_metadata(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, std::string>> meta;
  meta.emplace_back("version", version_string);
  meta.emplace_back("experiment", config.experiment);
  const LabParams& p = config.params;
  meta.emplace_back("num_ions", std::to_string(p.num_ions));
  meta.emplace_back("omega0_hz", fmt_real(hz_from_rad(p.omega0)));
  meta.emplace_back("omega_x_hz", fmt_real(hz_from_rad(p.omega_x)));
  meta.emplace_back("omega_z_hz", fmt_real(hz_from_rad(p.omega_z)));
  meta.emplace_back("eta", fmt_real(p.eta));
  meta.emplace_back("delta_L_hz", fmt_real(hz_from_rad(p.delta_L)));
  meta.emplace_back("Omega_L_hz", fmt_real(hz_from_rad(p.Omega_L)));
  meta.emplace_back("Omega_d_hz", fmt_real(hz_from_rad(p.Omega_d)));
  meta.emplace_back("phi_L", fmt_real(p.phi_L));
  meta.emplace_back("phi_d", fmt_real(p.phi_d));
  meta.emplace_back("nbar_list", fmt_list(config.nbar_list));
  meta.emplace_back("thermal_mass_tolerance", fmt_real(config.thermal_mass_tolerance));
  meta.emplace_back("drives_hz", fmt_list(config.drives_hz));
  meta.emplace_back("ou_T2_list", fmt_list(config.ou.T2_list));
  meta.emplace_back("ou_tau_ratio", fmt_real(config.ou.tau_ratio));
  meta.emplace_back("ou_trajectories", std::to_string(config.ou.trajectories));
  meta.emplace_back("ou_seed", std::to_string(config.ou.seed));
  meta.emplace_back("dt_config", fmt_real(config.numerics.dt));
  meta.emplace_back("n_max", std::to_string(config.numerics.n_max));
  meta.emplace_back("scan_n_max", std::to_string(config.numerics.scan_n_max));
  meta.emplace_back("scan_points", std::to_string(config.numerics.scan_points));
  meta.emplace_back("scan_halfwidth", fmt_real(config.numerics.scan_halfwidth));
  meta.emplace_back("haar_states", std::to_string(config.numerics.haar_states));
  meta.emplace_back("haar_seed", std::to_string(config.numerics.haar_seed));
  meta.emplace_back("ramsey_trajectories", std::to_string(config.numerics.ramsey_trajectories));
  meta.emplace_back("full_scale", config.full_scale ? "true" : "false");
  return meta;
}

Real pick_dt(const ExperimentConfig& config, const GateSystem& sys, Real noise_amp) {
  if (config.numerics.dt > 0.0) return config.numerics.dt;
  const Real dt = suggested_dt(sys, noise_amp);
  if (!std::isfinite(dt)) return 1.0e-7;  // free evolution: any step is exact
  return dt;
}

std::vector<Real> gate_time_candidates(Real t_gate, Real delta_com, Real halfwidth,
                                       int coarse_points) {
  if (!(t_gate > 0.0)) throw std::invalid_argument("t_gate must be positive");
  if (delta_com == 0.0) throw std::invalid_argument("delta_com must be nonzero");
  if (!(halfwidth > 0.0 && halfwidth <= 0.5))
    throw std::invalid_argument("halfwidth must lie in (0, 0.5]");
  if (coarse_points < 2) throw std::invalid_argument("need at least 2 coarse points");

  const Real lo = t_gate * (1.0 - halfwidth);
  const Real hi = t_gate * (1.0 + halfwidth);
  std::vector<Real> times;
  for (int k = 0; k < coarse_points; ++k)
    times.push_back(lo + (hi - lo) * static_cast<Real>(k) / (coarse_points - 1));

  // Phonon loops close jointly every 4 pi / delta_com (the detunings are
  // rationally related here through the echo's half-period doubling); the
  // error dips live on this comb.
  const Real period = 4.0 * pi / std::abs(delta_com);
  for (std::int64_t k = static_cast<std::int64_t>(std::ceil(lo / period));
       k * period <= hi; ++k) {
    times.push_back(static_cast<Real>(k) * period);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

GateTimeScan scan_gate_time(const std::function<Real(Real)>& error_at,
                            const std::vector<Real>& candidates, Real refine_halfwidth,
                            Real refine_step) {
  if (candidates.empty()) throw std::invalid_argument("need at least one scan candidate");
  if (!std::is_sorted(candidates.begin(), candidates.end()))
    throw std::invalid_argument("scan candidates must be sorted ascending");
  if (!(candidates.front() > 0.0))
    throw std::invalid_argument("scan candidates must be positive");
  if (refine_halfwidth > 0.0 && !(refine_step > 0.0))
    throw std::invalid_argument("refine_step must be positive");

  std::vector<std::pair<Real, Real>> pts;
  pts.reserve(candidates.size() + 32);
  for (const Real t : candidates) pts.emplace_back(t, error_at(t));

  auto best_it = std::min_element(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.second < b.second;
  });
  Real t_best = best_it->first;

  if (refine_halfwidth > 0.0) {
    const int half = static_cast<int>(std::round(refine_halfwidth / refine_step));
    for (int k = -half; k <= half; ++k) {
      const Real t = t_best + k * refine_step;
      if (!(t > 0.0)) continue;
      const bool seen = std::any_of(pts.begin(), pts.end(), [&](const auto& pt) {
        return std::abs(pt.first - t) < 0.01 * refine_step;
      });
      if (!seen) pts.emplace_back(t, error_at(t));
    }
  }

  std::sort(pts.begin(), pts.end());
  std::size_t k_best = 0;
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (pts[k].second < pts[k_best].second) k_best = k;

  // Parabolic polish through the bracketing samples; the vertex is
  // re-evaluated, never trusted from the fit.
  if (k_best > 0 && k_best + 1 < pts.size()) {
    const auto [t0, e0] = pts[k_best - 1];
    const auto [t1, e1] = pts[k_best];
    const auto [t2, e2] = pts[k_best + 1];
    const Real d1 = (e1 - e0) / (t1 - t0);
    const Real d2 = (e2 - e1) / (t2 - t1);
    const Real c2 = (d2 - d1) / (t2 - t0);
    if (c2 > 0.0) {
      const Real t_star = 0.5 * (t0 + t1) - d1 / (2.0 * c2);
      if (t_star > t0 && t_star < t2 && std::abs(t_star - t1) > 1e-15 * t1) {
        pts.emplace_back(t_star, error_at(t_star));
        std::sort(pts.begin(), pts.end());
      }
    }
  }

  GateTimeScan scan;
  scan.times.reserve(pts.size());
  scan.errors.reserve(pts.size());
  for (const auto& [t, e] : pts) {
    scan.times.push_back(t);
    scan.errors.push_back(e);
    if (e < scan.error_best) {
      scan.error_best = e;
      scan.t_best = t;
    }
  }
  return scan;
}

Real echoed_bell_error(const GateSystem& sys, const ThermalSpec& thermal, BellKind kind,
                       Real t_f, Real dt, const OUParams* ou, int trajectories, int threads,
                       Real* stderr_out) {
  PulseSchedule schedule;
  schedule.pulses.push_back(Pulse{0.5 * t_f, "ZZ"});

  ThermalRunOptions opt;
  opt.t_final = t_f;
  opt.dt = dt;
  opt.sample_times = {t_f};
  opt.ou = ou;
  opt.noise_trajectories = trajectories;
  opt.threads = threads;
  opt.keep_per_seed = stderr_out != nullptr && ou != nullptr;

  const SimResult result = evolve_thermal(spin_basis_state(bell_source_index(kind)), thermal,
                                          sys, schedule, opt);
  const VecXc target = bell_target(kind, sys.params.phi_d);
  const Real fidelity = (target.adjoint() * result.spin_rho[0] * target)(0, 0).real();

  if (stderr_out != nullptr) {
    *stderr_out = 0.0;
    if (ou != nullptr && result.per_seed.size() > 1) {
      const int n = static_cast<int>(result.per_seed.size());
      std::vector<Real> f(n);
      Real mean = 0.0;
      for (int s = 0; s < n; ++s) {
        f[s] = (target.adjoint() * result.per_seed[s][0] * target)(0, 0).real();
        mean += f[s];
      }
      mean /= n;
      Real var = 0.0;
      for (const Real v : f) var += (v - mean) * (v - mean);
      *stderr_out = std::sqrt(var / (static_cast<Real>(n) * (n - 1.0)));
    }
  }
  return 1.0 - fidelity;
}

SwapResult run_fig2a(const ExperimentConfig& config) {
  LabParams params = config.params;
  params.Omega_d = 0.0;  // undriven by definition of the experiment

  const ChainModes modes = transverse_modes(params.num_ions, params.omega_x, params.omega_z);
  const EffectiveCouplings eff = compute_j_eff(sideband_couplings(params, modes));
  const GateSystem sys = make_gate_system(params, config.numerics.n_max, Frame::bare);
  const Real dt = pick_dt(config, sys);

  SwapResult result;
  result.effective_swap_time = eff.t_gate;

  const int n_samples = 241;
  std::vector<Real> times(n_samples);
  const Real t_end = 1.05 * eff.t_gate;
  for (int k = 0; k < n_samples; ++k)
    times[k] = t_end * static_cast<Real>(k) / (n_samples - 1);
  times[0] = 0.0;

  for (const Real nbar : config.nbar_list) {
    ThermalRunOptions opt;
    opt.t_final = t_end;
    opt.dt = dt;
    opt.sample_times = times;
    opt.threads = config.numerics.threads;
    const SimResult sim =
        evolve_thermal(spin_basis_state(1), ThermalSpec{nbar, config.thermal_mass_tolerance},
                       sys, PulseSchedule{}, opt);

    SwapCurve curve;
    curve.nbar = nbar;
    curve.times = times;
    for (int k = 0; k < n_samples; ++k) {
      const VecX pop = sim.populations(k);
      curve.p10_exact.push_back(pop[1]);
      curve.p01_exact.push_back(pop[2]);
      const auto [p10, p01] = xy_swap_probabilities(eff, times[k]);
      curve.p10_eff.push_back(p10);
      curve.p01_eff.push_back(p01);
    }

    // First SWAP peak of the exact P01: grid max plus parabolic refinement
    // (reusing the scan-report machinery with the |01> projector target).
    const FidelityReport peak = bell_fidelity(sim.times, sim.spin_rho, spin_basis_state(2));
    curve.first_swap_time = peak.t_f_at_max;
    curve.p01_amp_at_swap = peak.bell_fidelity;

    CsvTable table = base_table(config);
    table.metadata.emplace_back("dt", fmt_real(dt));
    table.metadata.emplace_back("nbar", fmt_real(nbar));
    table.metadata.emplace_back("effective_swap_time", fmt_real(eff.t_gate));
    table.metadata.emplace_back("first_swap_time", fmt_real(curve.first_swap_time));
    table.metadata.emplace_back("p01_amp_at_swap", fmt_real(curve.p01_amp_at_swap));
    table.metadata.emplace_back("retained_mass", fmt_real(sim.meta.retained_mass));
    table.metadata.emplace_back("branches", std::to_string(sim.meta.num_branches));
    table.columns = {"t", "P10_exact", "P01_exact", "P10_eff", "P01_eff"};
    for (int k = 0; k < n_samples; ++k)
      table.rows.push_back({times[k], curve.p10_exact[k], curve.p01_exact[k],
                            curve.p10_eff[k], curve.p01_eff[k]});
    const std::string path = output_path(config, "fig2a_nbar" + nbar_tag(nbar) + ".csv").string();
    write_csv(table, path);
    result.csv_paths.push_back(path);
    result.curves.push_back(std::move(curve));
  }
  return result;
}

BellResult run_fig2b(const ExperimentConfig& config) {
  BellResult result;
  CsvTable table = base_table(config);
  table.columns = {"nbar", "Omega_d_hz", "bell_error"};

  for (const Real drive_hz : config.drives_hz) {
    LabParams params = config.params;
    params.Omega_d = rad_from_hz(drive_hz);

    const ScanOutcome scan = find_gate_time(config, params, BellKind::psi_minus);
    const GateSystem sys = make_gate_system(params, config.numerics.n_max, frame_for(params));
    const Real dt = pick_dt(config, sys);

    table.metadata.emplace_back("t_f_drive_" + nbar_tag(drive_hz), fmt_real(scan.scan.t_best));
    table.metadata.emplace_back("dt_drive_" + nbar_tag(drive_hz), fmt_real(dt));

    for (const Real nbar : config.nbar_list) {
      const Real error = echoed_bell_error(
          sys, ThermalSpec{nbar, config.thermal_mass_tolerance}, BellKind::psi_minus,
          scan.scan.t_best, dt, nullptr, 1, config.numerics.threads);
      result.points.push_back(BellPoint{nbar, params.Omega_d, error, scan.scan.t_best});
      table.rows.push_back({nbar, drive_hz, error});
    }
  }

  result.csv_path = output_path(config, "fig2b.csv").string();
  write_csv(table, result.csv_path);
  return result;
}

CoherenceResult run_fig4a(const ExperimentConfig& config) {
  if (config.ou.T2_list.empty()) throw std::invalid_argument("fig4a needs one ou.T2 entry");
  const Real T2 = config.ou.T2_list.front();
  const OUParams ou = ou_from_T2(T2, config.ou.tau_ratio, config.ou.seed);

  CoherenceResult result;
  result.configured_T2 = T2;

  const int n_samples = 61;
  const Real t_end = 2.5 * T2;
  result.times.resize(n_samples);
  for (int k = 0; k < n_samples; ++k)
    result.times[k] = t_end * static_cast<Real>(k) / (n_samples - 1);

  // Ramsey fast path: the qubit only accumulates the OU phase, sampled
  // exactly on the output grid.
  const int n_traj = config.numerics.ramsey_trajectories;
  std::vector<Complex> acc(n_samples, Complex(0.0, 0.0));
  for (int s = 0; s < n_traj; ++s) {
    OUPhaseTrajectory traj(ou, static_cast<std::uint64_t>(s));
    acc[0] += 1.0;
    for (int k = 1; k < n_samples; ++k) {
      traj.step(result.times[k] - result.times[k - 1]);
      acc[k] += std::exp(Complex(0.0, traj.phase()));
    }
  }
  result.coherence.resize(n_samples);
  result.analytic.resize(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    result.coherence[k] = std::abs(acc[k]) / static_cast<Real>(n_traj);
    result.analytic[k] = analytic_coherence(result.times[k], ou);
  }

  // Fit the exponential tail: -ln C is linear with slope 1/T2 once t >> tau.
  Real sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n_fit = 0;
  for (int k = 0; k < n_samples; ++k) {
    if (result.times[k] < 5.0 * ou.tau || result.coherence[k] < 0.05) continue;
    const Real x = result.times[k];
    const Real y = -std::log(result.coherence[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n_fit;
  }
  if (n_fit < 3) throw std::runtime_error("coherence decay fit has too few usable samples");
  const Real slope = (n_fit * sxy - sx * sy) / (n_fit * sxx - sx * sx);
  if (!(slope > 0.0)) throw std::runtime_error("coherence decay fit produced no decay");
  result.fitted_T2 = 1.0 / slope;

  CsvTable table = base_table(config);
  table.metadata.emplace_back("configured_T2", fmt_real(T2));
  table.metadata.emplace_back("tau", fmt_real(ou.tau));
  table.metadata.emplace_back("fitted_T2", fmt_real(result.fitted_T2));
  table.metadata.emplace_back("fit_samples", std::to_string(n_fit));
  table.columns = {"t", "coherence", "analytic"};
  for (int k = 0; k < n_samples; ++k)
    table.rows.push_back({result.times[k], result.coherence[k], result.analytic[k]});
  result.csv_path = output_path(config, "fig4a.csv").string();
  write_csv(table, result.csv_path);
  return result;
}

NoiseGateResult run_fig4b(const ExperimentConfig& config) {
  const LabParams& params = config.params;
  if (!(params.Omega_d > 0.0)) throw std::invalid_argument("fig4b needs a nonzero carrier drive");

  const ScanOutcome scan = find_gate_time(config, params, BellKind::phi_minus);
  const GateSystem sys = make_gate_system(params, config.numerics.n_max, frame_for(params));

  // One step size for the whole grid, guarded by the strongest noise.
  Real max_amp = 0.0;
  for (const Real T2 : config.ou.T2_list)
    max_amp = std::max(max_amp, ou_noise_amp(ou_from_T2(T2, config.ou.tau_ratio, 0)));
  const Real dt = pick_dt(config, sys, max_amp);

  NoiseGateResult result;
  result.t_f = scan.scan.t_best;
  const ThermalSpec thermal{config.nbar_list.front(), config.thermal_mass_tolerance};

  // Noiseless reference row.
  const Real ref_error = echoed_bell_error(sys, thermal, BellKind::phi_minus, result.t_f, dt,
                                           nullptr, 1, config.numerics.threads);
  result.points.push_back(
      NoiseGatePoint{std::numeric_limits<Real>::infinity(), ref_error, 0.0, 0});

  for (const Real T2 : config.ou.T2_list) {
    const OUParams ou = ou_from_T2(T2, config.ou.tau_ratio, config.ou.seed);
    Real stderr_error = 0.0;
    const Real error =
        echoed_bell_error(sys, thermal, BellKind::phi_minus, result.t_f, dt, &ou,
                          config.ou.trajectories, config.numerics.threads, &stderr_error);
    result.points.push_back(NoiseGatePoint{T2, error, stderr_error, config.ou.trajectories});
  }

  CsvTable table = base_table(config);
  table.metadata.emplace_back("t_f", fmt_real(result.t_f));
  table.metadata.emplace_back("dt", fmt_real(dt));
  table.metadata.emplace_back("nbar", fmt_real(thermal.nbar));
  table.columns = {"T2", "bell_error", "stderr", "trajectories"};
  for (const NoiseGatePoint& pt : result.points)
    table.rows.push_back(
        {pt.T2, pt.bell_error, pt.stderr_error, static_cast<Real>(pt.trajectories)});
  result.csv_path = output_path(config, "fig4b.csv").string();
  write_csv(table, result.csv_path);
  return result;
}

ChannelErrorResult run_channel_error(const ExperimentConfig& config) {
  const LabParams& params = config.params;
  const ScanOutcome scan = find_gate_time(config, params, BellKind::psi_minus);
  const GateSystem sys = make_gate_system(params, config.numerics.n_max, frame_for(params));
  // the midpoint echo pulse commutes with the gate generator, so the realized
  // unitary is (ZZ parity) x (ideal gate); the reference must carry the parity
  MatXc u_eff = ideal_gate(params.phi_d);
  u_eff.row(1) *= -1.0;
  u_eff.row(2) *= -1.0;

  ChannelErrorResult result;
  result.t_f = scan.scan.t_best;
  PulseSchedule schedule;
  schedule.pulses.push_back(Pulse{0.5 * result.t_f, "ZZ"});
  const ThermalSpec thermal{config.nbar_list.front(), config.thermal_mass_tolerance};

  Real max_amp = 0.0;
  for (const Real T2 : config.ou.T2_list)
    max_amp = std::max(max_amp, ou_noise_amp(ou_from_T2(T2, config.ou.tau_ratio, 0)));
  const Real dt = pick_dt(config, sys, max_amp);

  std::vector<Real> grid = {std::numeric_limits<Real>::infinity()};
  grid.insert(grid.end(), config.ou.T2_list.begin(), config.ou.T2_list.end());
  for (const Real T2 : grid) {
    ChannelRun run;
    if (std::isinf(T2)) {
      run = run_channel(sys, schedule, thermal, nullptr, 0, result.t_f, dt,
                        config.numerics.threads);
    } else {
      const OUParams ou = ou_from_T2(T2, config.ou.tau_ratio, config.ou.seed);
      run = run_channel(sys, schedule, thermal, &ou, config.ou.trajectories, result.t_f, dt,
                        config.numerics.threads);
    }
    ChannelErrorPoint pt;
    pt.T2 = T2;
    pt.f_e = entanglement_fidelity(run.tensor, u_eff);
    pt.eps_aa = 1.0 - channel_fidelity_from_entanglement(pt.f_e);
    const HaarEstimate haar = haar_average_fidelity(run.tensor, u_eff,
                                                    config.numerics.haar_states,
                                                    config.numerics.haar_seed);
    pt.eps_hm = 1.0 - haar.mean;
    pt.stderr_haar = haar.stderr_mean;
    result.points.push_back(pt);
  }

  CsvTable errors = base_table(config);
  errors.metadata.emplace_back("t_f", fmt_real(result.t_f));
  errors.metadata.emplace_back("dt", fmt_real(dt));
  errors.columns = {"T2", "eps_AA", "eps_HM", "stderr"};
  CsvTable fidelities = base_table(config);
  fidelities.metadata = errors.metadata;
  fidelities.columns = {"T2", "F_e", "F_channel", "haar_estimate", "stderr"};
  for (const ChannelErrorPoint& pt : result.points) {
    errors.rows.push_back({pt.T2, pt.eps_aa, pt.eps_hm, pt.stderr_haar});
    fidelities.rows.push_back({pt.T2, pt.f_e, channel_fidelity_from_entanglement(pt.f_e),
                               1.0 - pt.eps_hm, pt.stderr_haar});
  }
  result.error_csv_path = output_path(config, "channel_error.csv").string();
  result.fidelity_csv_path = output_path(config, "channel_fidelity.csv").string();
  write_csv(errors, result.error_csv_path);
  write_csv(fidelities, result.fidelity_csv_path);
  return result;
}

CsvTable modes_table(const ExperimentConfig& config) {
  const LabParams& p = config.params;
  const ChainModes modes = transverse_modes(p.num_ions, p.omega_x, p.omega_z);

  CsvTable table = base_table(config);
  for (int i = 0; i < modes.positions.size(); ++i)
    table.metadata.emplace_back("position_" + std::to_string(i),
                                fmt_real(modes.positions[i]));
  table.columns = {"mode", "omega_hz", "omega_over_omega_x"};
  for (int i = 0; i < p.num_ions; ++i) table.columns.push_back("M_" + std::to_string(i));
  for (int n = 0; n < modes.omega.size(); ++n) {
    std::vector<Real> row = {static_cast<Real>(n), hz_from_rad(modes.omega[n]),
                             modes.omega[n] / p.omega_x};
    for (int i = 0; i < p.num_ions; ++i) row.push_back(modes.M(i, n));
    table.rows.push_back(row);
  }
  return table;
}

CsvTable jeff_table(const ExperimentConfig& config) {
  const LabParams& p = config.params;
  const ChainModes modes = transverse_modes(p.num_ions, p.omega_x, p.omega_z);
  const SidebandCouplings couplings = sideband_couplings(p, modes);
  const EffectiveCouplings eff = compute_j_eff(couplings);

  CsvTable table = base_table(config);
  table.metadata.emplace_back("t_gate", fmt_real(eff.t_gate));
  table.metadata.emplace_back("force_to_detuning_ratio",
                              fmt_real(couplings.force_to_detuning_ratio()));
  table.columns = {"mode", "delta_hz", "eta_n", "F01_abs_hz", "B0_diag_hz"};
  for (int n = 0; n < couplings.delta.size(); ++n) {
    table.rows.push_back({static_cast<Real>(n), hz_from_rad(couplings.delta[n]),
                          couplings.eta_n[n], hz_from_rad(std::abs(couplings.F(0, n))),
                          hz_from_rad(std::abs(eff.B[0](n, n)))});
  }
  table.metadata.emplace_back("J12_hz", fmt_real(hz_from_rad(eff.J(0, 1))));
  table.metadata.emplace_back("J_tilde12_hz", fmt_real(hz_from_rad(eff.J_tilde(0, 1))));
  return table;
}

ConvergenceResult run_convergence(const ExperimentConfig& config) {
  const LabParams& params = config.params;
  const ScanOutcome scan = find_gate_time(config, params, BellKind::psi_minus);

  const auto observable = [&](Real dt, int n_max) {
    const GateSystem sys = make_gate_system(params, n_max, frame_for(params));
    return echoed_bell_error(sys, ThermalSpec{0.0, config.thermal_mass_tolerance},
                             BellKind::psi_minus, scan.scan.t_best, dt, nullptr, 1,
                             config.numerics.threads);
  };
  const GateSystem probe_sys =
      make_gate_system(params, config.numerics.n_max, frame_for(params));
  const Real dt = pick_dt(config, probe_sys);
  const ConvergenceReport report = convergence_probe(observable, dt, config.numerics.n_max);

  ConvergenceResult result;
  result.t_f = scan.scan.t_best;
  result.base_error = report.base;
  result.dt_drift = report.dt_drift();
  result.space_drift = report.space_drift();

  CsvTable table = base_table(config);
  table.metadata.emplace_back("t_f", fmt_real(result.t_f));
  table.metadata.emplace_back("dt_drift", fmt_real(result.dt_drift));
  table.metadata.emplace_back("space_drift", fmt_real(result.space_drift));
  table.columns = {"dt", "n_max", "bell_error"};
  table.rows.push_back({dt, static_cast<Real>(config.numerics.n_max), report.base});
  table.rows.push_back({0.5 * dt, static_cast<Real>(config.numerics.n_max), report.half_dt});
  table.rows.push_back(
      {dt, static_cast<Real>(config.numerics.n_max + 4), report.larger_space});
  result.csv_path = output_path(config, "convergence.csv").string();
  write_csv(table, result.csv_path);
  return result;
}

} // namespace iongate
