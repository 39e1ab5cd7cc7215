#pragma once

// Command-line front end. Exit codes: 0 success, 1 domain error
// (NoPhaseMatch, range, failed criteria), 2 usage or configuration error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spdc/acceptance.hpp"
#include "spdc/compensation.hpp"
#include "spdc/expsim.hpp"
#include "spdc/io.hpp"
#include "spdc/phasematch.hpp"
#include "spdc/scenario.hpp"

namespace spdc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kDefaultConfig = SPDC_CONFIG_DIR "/paper_fig1.json";

struct Options {
  std::string command;
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> records;
  unsigned workers = 1;
};

class Runner {
 public:
  Runner(const Options& opt, const scenario::Scenario& s, std::ostream& out)
      : opt_(opt), s_(s), out_(out), dir_(opt.out) {
    seed_ = opt.seed ? *opt.seed : s.seed.value_or(0);
  }

  int run() {
    const std::string& c = opt_.command;
    if (c == "index") return index();
    if (c == "pm") return pm();
    if (c == "spectrum") return spectrum();
    if (c == "phasemap") return phasemap();
    if (c == "optimize") return optimize();
    if (c == "visibility") return visibility();
    if (c == "simulate") return simulate();
    if (c == "analyze") return analyze();
    if (c == "scan-length") return scan_length();
    if (c == "repro") return repro();
    throw Error(ErrorKind::Config, "unknown subcommand '" + c + "'");
  }

 private:
  json header() const {
    json j;
    j["command"] = opt_.command;
    j["config"] = fs::path(opt_.config).filename().string();
    j["materials_version"] = s_.materials.version();
    j["seed"] = seed_;
    return j;
  }

  void emit_json(const std::string& name, const json& body) {
    json doc = header();
    doc.update(body);
    io::write_atomic(dir_ / name, doc.dump(2) + "\n");
    out_ << "wrote " << (dir_ / name).string() << "\n";
  }

  void emit_text(const std::string& name, const std::string& text) {
    io::write_atomic(dir_ / name, text);
    out_ << "wrote " << (dir_ / name).string() << "\n";
  }

  compensation::OpticalStack compensated_stack() const {
    const auto stack = s_.optical_stack();
    if (s_.compensators_given()) return stack;
    return compensation::optimize_compensators(stack).compensated;
  }

  compensation::OpticalStack bare_stack() const {
    auto stack = s_.optical_stack();
    stack.elements[*stack.pump_compensator].thickness_mm = 0.0;
    stack.elements[*stack.pair_compensator].thickness_mm = 0.0;
    return stack;
  }

  int index() {
    const auto& q = s_.index;
    const auto& m = s_.materials.get(q.material);
    const auto pol = q.extraordinary ? optics::Polarization::extraordinary(q.theta_deg)
                                     : optics::Polarization::ordinary();
    json j;
    j["material"] = m.name;
    j["material_source"] = m.source;
    j["wavelength_nm"] = q.wavelength_nm;
    j["polarization"] = q.extraordinary ? "extraordinary" : "ordinary";
    j["theta_deg"] = q.extraordinary ? json(q.theta_deg) : json(nullptr);
    j["n"] = optics::refractive_index(m, pol, q.wavelength_nm);
    j["dn_dlambda_per_nm"] = optics::index_derivative(m, pol, q.wavelength_nm);
    j["dn_dlambda_analytic_per_nm"] = optics::index_derivative_analytic(m, pol, q.wavelength_nm);
    j["group_index"] = optics::group_index(m, pol, q.wavelength_nm);
    if (q.extraordinary) {
      const double rho = optics::walkoff_angle(m, q.theta_deg, q.wavelength_nm);
      j["walkoff_rad"] = rho;
      j["length_mm"] = q.length_mm;
      j["lateral_displacement_mm"] = optics::lateral_displacement(rho, q.length_mm);
    }
    emit_json("index.json", j);
    return 0;
  }

  int pm() {
    const auto sol = phasematch::solve_signal_idler(s_.phasematch);
    const double lp = s_.phasematch.pump_center_nm;
    json j;
    j["theta_p_deg"] = s_.phasematch.theta_p_deg;
    j["pump_center_nm"] = lp;
    j["signal_nm"] = sol.signal_nm;
    j["idler_nm"] = sol.idler_nm;
    j["delta_k_per_mm"] = sol.residual_per_mm;
    j["energy_residual_per_nm"] = 1.0 / sol.signal_nm + 1.0 / sol.idler_nm - 1.0 / lp;
    j["degenerate"] = sol.degenerate;
    j["degeneracy_angle_deg"] = phasematch::solve_angle(s_.phasematch.material, lp, 2.0 * lp);
    emit_json("pm.json", j);
    out_ << "signal " << io::fmt(sol.signal_nm) << " nm, idler " << io::fmt(sol.idler_nm) << " nm\n";
    return 0;
  }

  int spectrum() {
    using phasematch::Arm;
    const auto sig = phasematch::spectrum_auto(s_.phasematch, Arm::Signal, s_.spectrum_step_nm, opt_.workers);
    const auto idl = phasematch::spectrum_auto(s_.phasematch, Arm::Idler, s_.spectrum_step_nm, opt_.workers);
    emit_text("spectrum_signal.csv", io::spectrum_csv(sig));
    emit_text("spectrum_idler.csv", io::spectrum_csv(idl));
    json j;
    j["pump_fwhm_nm"] = s_.phasematch.pump_fwhm_nm;
    j["length_mm"] = s_.phasematch.length_mm;
    j["signal"] = {{"fwhm_nm", sig.fwhm_nm}, {"center_nm", sig.center_nm}, {"peak_nm", sig.peak_nm}};
    j["idler"] = {{"fwhm_nm", idl.fwhm_nm}, {"center_nm", idl.center_nm}, {"peak_nm", idl.peak_nm}};
    emit_json("spectrum.json", j);
    return 0;
  }

  static json window_json(const compensation::SpectralWindow& w) {
    return {{"lambda_p_nm", {w.pump_lo(), w.pump_hi()}}, {"lambda_nm", {w.signal_lo(), w.signal_hi()}}};
  }

  int phasemap() {
    const auto window = compensation::default_window(s_.phasematch);
    const auto raw = compensation::phase_map(bare_stack(), window, s_.phasemap_points, opt_.workers);
    const auto flat = compensation::phase_map(compensated_stack(), window, s_.phasemap_points, opt_.workers);
    emit_text("phasemap_uncompensated.csv", io::phase_map_csv(raw));
    emit_text("phasemap_compensated.csv", io::phase_map_csv(flat));
    auto summary = [](const compensation::PhaseMap& m) {
      return json{{"peak_to_peak_rad", m.peak_to_peak},
                  {"grad_lambda_p_rad_per_nm", m.center_gradient.d_pump},
                  {"grad_lambda_rad_per_nm", m.center_gradient.d_signal}};
    };
    json j;
    j["window"] = window_json(window);
    j["uncompensated"] = summary(raw);
    j["compensated"] = summary(flat);
    j["peak_to_peak_ratio"] = raw.peak_to_peak / flat.peak_to_peak;
    emit_json("phasemap.json", j);
    return 0;
  }

  int optimize() {
    const auto sol = compensation::optimize_compensators(s_.optical_stack());
    const auto window = compensation::default_window(s_.phasematch);
    const auto flat = compensation::phase_map(sol.compensated, window, s_.phasemap_points, opt_.workers);
    json j;
    j["d_p_mm"] = sol.pump_mm;
    j["d_c_mm"] = sol.pair_mm;
    j["s_p"] = sol.pump_sign;
    j["s_c"] = sol.pair_sign;
    j["residual_grad"] = {{"lambda_p_rad_per_nm", sol.residual.d_pump},
                          {"lambda_rad_per_nm", sol.residual.d_signal}};
    j["center"] = {{"lambda_p_nm", sol.center_pump_nm}, {"lambda_nm", sol.center_signal_nm}};
    j["windowed_peak_to_peak_rad"] = flat.peak_to_peak;
    j["window"] = window_json(window);
    emit_json("optimize.json", j);
    out_ << "d_p = " << io::fmt(sol.pump_mm) << " mm (s_p = " << sol.pump_sign << "), d_c = "
         << io::fmt(sol.pair_mm) << " mm (s_c = " << sol.pair_sign << ")\n";
    return 0;
  }

  int visibility() {
    const auto window = compensation::default_window(s_.phasematch);
    const auto comp = compensated_stack();
    json j;
    j["window"] = window_json(window);
    j["d_p_mm"] = comp.pump_thickness();
    j["d_c_mm"] = comp.pair_thickness();
    j["compensated"] = compensation::predict_visibility(comp, window, s_.visibility_points);
    j["uncompensated"] = compensation::predict_visibility(bare_stack(), window, s_.visibility_points);
    emit_json("visibility.json", j);
    return 0;
  }

  static json source_json(const expsim::SourceParams& p) {
    return {{"pair_rate_per_mw", p.pair_rate_per_mw},
            {"state_visibility", p.state_visibility},
            {"state_phase_rad", p.state_phase_rad},
            {"state_model", p.state_model == expsim::StateModel::Werner ? "werner" : "dephasing"},
            {"coincidence_window_ns", p.coincidence_window_ns},
            {"arm_efficiency", {p.arm_efficiency(1), p.arm_efficiency(2)}}};
  }

  int simulate() {
    const auto& sim = s_.simulate;
    expsim::MeasurementSetting setting{sim.alpha_deg, sim.beta_deg, sim.duration_s};
    const auto rows = expsim::rates_vs_power(s_.source, sim.powers_mw, setting, seed_);
    emit_text("rates.csv", io::power_table_csv(rows));

    expsim::SourceParams p = s_.source;
    p.pump_power_mw = sim.correlation_power_mw;
    const auto rec = expsim::measure_correlations(p, sim.correlation_duration_s, expsim::derive_seed(seed_, 1000));
    json records = header();
    records["coincidence_window_ns"] = p.coincidence_window_ns;
    records["pump_power_mw"] = p.pump_power_mw;
    records["records"] = json::array({scenario::to_json(rec.hv_max, "hv_max"), scenario::to_json(rec.hv_min, "hv_min"),
                                      scenario::to_json(rec.d45_max, "d45_max"), scenario::to_json(rec.d45_min, "d45_min"),
                                      scenario::to_json(rec.open, "open")});
    io::write_atomic(dir_ / "records.json", records.dump(2) + "\n");
    out_ << "wrote " << (dir_ / "records.json").string() << "\n";

    json j;
    j["source"] = source_json(s_.source);
    j["run_seeds"] = json::array();
    for (const auto& r : rows) j["run_seeds"].push_back(r.seed);
    emit_json("simulate.json", j);
    return 0;
  }

  int analyze() {
    fs::path path = dir_ / "records.json";
    if (opt_.records) {
      path = *opt_.records;
    } else if (s_.records_file) {
      path = s_.config_path.parent_path() / *s_.records_file;
    }
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open records file '" + path.string() + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Config, "records file: " + std::string(e.what()));
    }
    expsim::CorrelationRecords rec;
    std::vector<std::uint64_t> seeds;
    try {
      for (const auto& r : doc.at("records")) {
        const std::string label = r.at("label").get<std::string>();
        auto parsed = scenario::record_from_json(r);
        seeds.push_back(parsed.seed);
        if (label == "hv_max") rec.hv_max = parsed;
        else if (label == "hv_min") rec.hv_min = parsed;
        else if (label == "d45_max") rec.d45_max = parsed;
        else if (label == "d45_min") rec.d45_min = parsed;
        else if (label == "open") rec.open = parsed;
        else throw Error(ErrorKind::Config, "records file: unknown label '" + label + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Config, "records file: " + std::string(e.what()));
    }
    const double window = doc.value("coincidence_window_ns", s_.source.coincidence_window_ns);
    const double det = 0.5 * (s_.source.detector_efficiency_1 + s_.source.detector_efficiency_2);
    const auto a = expsim::analyze_correlations(rec, window, det, s_.source.losses);
    json j;
    j["visibility_hv"] = {{"value", a.hv.value}, {"std_error", a.hv.std_error}};
    j["visibility_45"] = {{"value", a.d45.value}, {"std_error", a.d45.std_error}};
    j["fidelity_estimate"] = a.fidelity;
    j["fidelity_estimator"] = "(1 + V_HV + 2 V_45) / 4";
    j["coincidence_to_single"] = a.c_over_s;
    j["coupling_efficiency"] = a.coupling_efficiency;
    j["record_seeds"] = seeds;
    emit_json("analysis.json", j);
    out_ << "V_HV = " << io::fmt(a.hv.value) << " +- " << io::fmt(a.hv.std_error) << ", V_45 = "
         << io::fmt(a.d45.value) << " +- " << io::fmt(a.d45.std_error) << ", F = " << io::fmt(a.fidelity) << "\n";
    return 0;
  }

  int scan_length() {
    const auto scan = phasematch::bandwidth_scan(s_.phasematch, s_.scan_lengths_mm, phasematch::Arm::Signal, opt_.workers);
    emit_text("scan.csv", io::scan_csv(scan));
    json j;
    j["pump_fwhm_nm"] = s_.phasematch.pump_fwhm_nm;
    j["exponent"] = scan.exponent;
    j["rms_residual_log"] = scan.rms_residual;
    emit_json("scan.json", j);
    out_ << "FWHM ~ L^" << io::fmt(scan.exponent) << "\n";
    return 0;
  }

  int repro() {
    const auto results = acceptance::run_all(s_, seed_, opt_.workers);
    std::string table;
    bool all = true;
    for (const auto& r : results) {
      table += acceptance::format_line(r) + "\n";
      all = all && r.pass();
    }
    out_ << table;
    json j;
    j["criteria"] = acceptance::to_json(results);
    j["all_pass"] = all;
    emit_json("acceptance_report.json", j);
    emit_text("acceptance_report.txt", table);
    return all ? 0 : 1;
  }

  const Options& opt_;
  const scenario::Scenario& s_;
  std::ostream& out_;
  fs::path dir_;
  std::uint64_t seed_ = 0;
};

inline int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Design and analysis toolkit for two-crystal collinear SPDC sources"};
  app.require_subcommand(1, 1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"index", "refractive index, group index and walk-off of one material"},
      {"pm", "solve collinear signal/idler wavelengths"},
      {"spectrum", "simulated signal and idler spectra (CSV)"},
      {"phasemap", "relative-phase maps, uncompensated and compensated (CSV)"},
      {"optimize", "optimal compensator thicknesses (JSON)"},
      {"visibility", "spectrally averaged visibility prediction"},
      {"simulate", "Monte Carlo count rates and correlation records"},
      {"analyze", "visibilities, fidelity and coupling from correlation records"},
      {"scan-length", "bandwidth versus crystal length power-law fit"},
      {"repro", "run every reproduction criterion and write a report"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "scenario JSON file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "64-bit RNG seed (overrides the config)");
    sub->add_option("--workers", opt.workers, "worker threads for grid evaluation");
    if (name == "analyze") sub->add_option("--records", opt.records, "records JSON written by simulate");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return 2;
  }
  opt.command = app.get_subcommands().front()->get_name();
  if (opt.config.empty()) {
    if (opt.command != "repro") {
      err << "error: --config is required for '" << opt.command << "'\n" << app.help();
      return 2;
    }
    opt.config = kDefaultConfig;
  }
  if (opt.workers == 0) opt.workers = 1;

  try {
    const auto s = scenario::load(opt.config);
    fs::create_directories(opt.out);
    Runner runner(opt, s, out);
    return runner.run();
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.is_domain_error() ? 1 : 2;
  } catch (const fs::filesystem_error& e) {
    err << "ConfigError: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace spdc::cli
