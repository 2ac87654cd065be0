#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ztcsense/csv.hpp"
#include "ztcsense/errors.hpp"
#include "ztcsense/faults.hpp"
#include "ztcsense/monitor.hpp"
#include "ztcsense/netlist.hpp"
#include "ztcsense/sensor.hpp"

namespace fs = std::filesystem;
using namespace ztcsense;

namespace {

constexpr int kExitSolver = 2;
constexpr int kExitUsage = 64;
constexpr int kExitIo = 74;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
};

double value_or_throw(const std::string& text, const std::string& what) {
  const auto v = parse_value(text);
  if (!v) throw SpecError("bad " + what + " '" + text + "'");
  return *v;
}

Range parse_range(const std::string& text, const std::string& what) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() != 3) throw SpecError(what + " must be lo:hi:step, got '" + text + "'");
  Range r{value_or_throw(parts[0], what), value_or_throw(parts[1], what), value_or_throw(parts[2], what)};
  if (!(r.lo < r.hi) || !(r.step > 0.0)) throw SpecError(what + " needs lo < hi and step > 0");
  return r;
}

struct Output {
  fs::path dir;

  void write(const std::string& name, const std::string& text) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary);
    f << text;
    f.close();
    if (!f) throw IoError("cannot write " + path.string());
  }
};

std::string temp_label(double temp_c) {
  return format_number(temp_c) + " C";
}

struct Golden {
  SensorParams params = SensorParams::defaults();
  BiasSetting bias;
  Circuit circuit;
};

Golden calibrated(double i_target = 49e-6) {
  Golden g;
  g.bias = default_calibration(g.params, i_target);
  g.circuit = build_sensor(g.params, g.bias);
  return g;
}

int cmd_ztc(const Output& out, const std::optional<std::string>& vgs, const std::string& temps_text) {
  const auto params = SensorParams::defaults();
  const auto tr = parse_range(temps_text, "--temps");
  const auto temps = linear_grid(to_kelvin(tr.lo), to_kelvin(tr.hi), tr.step);
  std::vector<double> grid;
  if (vgs) {
    const auto vr = parse_range(*vgs, "--vgs");
    grid = linear_grid(vr.lo, vr.hi, vr.step);
  } else {
    grid = default_vgs_grid(params.nmos_card, temps);
  }
  const auto r = find_ztc(params.nmos_card, params.ptat.w_over_l(), grid, temps);
  out.write("ztc.csv", ztc_csv(r));
  const double t_mid = 0.5 * (temps.front() + temps.back());
  std::ostringstream s;
  s << "v_ztc_v: " << format_number(r.v_ztc) << "\n"
    << "spread_at_ztc_a: " << format_number(r.spread_at_ztc) << "\n"
    << "analytic_v_ztc_v: " << format_number(analytic_ztc(params.nmos_card, t_mid)) << "\n";
  out.write("ztc.txt", s.str());
  std::cout << s.str();
  return 0;
}

int cmd_calibrate(const Output& out, const std::string& target_text) {
  const double target = value_or_throw(target_text, "--target");
  const auto g = calibrated(target);
  nlohmann::ordered_json j;
  j["i_target_a"] = g.bias.i_target;
  j["vgs1_v"] = g.bias.vgs1;
  j["vgs2_v"] = g.bias.vgs2;
  j["divider_resistances_ohm"] = g.bias.divider_resistances;
  j["spread_a"] = g.bias.spread;
  j["spread_percent"] = 100.0 * g.bias.spread / g.bias.i_target;
  out.write("calibration.json", j.dump(2) + "\n");
  out.write("sensor_tt.cir", serialize_netlist(g.circuit));

  std::ostringstream s;
  s << "temp_c,i_adder_a\n";
  const auto temps = g.params.temperature_grid();
  const auto currents = adder_current_vs_temperature(g.circuit, g.params);
  for (std::size_t k = 0; k < temps.size(); ++k) {
    s << format_number(std::round(to_celsius(temps[k]) * 1e6) / 1e6) << "," << format_number(currents[k]) << "\n";
  }
  out.write("adder_vs_temp.csv", s.str());
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct RunArgs {
  std::string scenario = "golden";
  std::string corner = "tt";
  double temp_c = 27.0;
  std::string tstop = "20n";
  std::string dt = "1p";
  std::optional<std::string> i_ref;
};

int cmd_run(const Output& out, const RunArgs& a) {
  const auto scenario = parse_scenario(a.scenario);
  const auto corner = Corner::from_label(parse_corner(a.corner));
  const double tstop = value_or_throw(a.tstop, "--tstop");
  const double dt = value_or_throw(a.dt, "--dt");
  const double temp = to_kelvin(a.temp_c);
  if (!(tstop > 0.0) || !(dt > 0.0) || dt > tstop) throw SpecError("need 0 < dt <= tstop");

  const auto g = calibrated();
  const Circuit golden = apply_corner(g.circuit, corner);
  const GlitchSpec glitch;
  const Circuit attacked = apply_scenario(golden, scenario, glitch);

  double i_ref = 0.0;
  if (a.i_ref) {
    i_ref = value_or_throw(*a.i_ref, "--iref");
  } else {
    i_ref = adder_current(dc_operating_point(golden, temp));
  }
  const auto trace = transient(attacked, tstop, dt, temp, sensor_probes());

  TraceAnalysisOptions opts;
  if (scenario == Scenario::UnderpowerPtat || scenario == Scenario::UnderpowerCtat) {
    opts.fault_onset = glitch.t_start;
  } else {
    opts.fault_onset = 0.0;
  }
  const auto report = analyze_trace(trace, i_ref, opts);

  out.write("trace.csv", trace_csv(trace, &report));
  out.write("report.json", report_json(report) + "\n");
  std::ostringstream s;
  s << "scenario: " << to_string(scenario) << "\n"
    << "corner: " << to_string(corner.label) << "\n"
    << "temperature: " << temp_label(a.temp_c) << "\n"
    << "tstop_s: " << format_number(tstop) << "\n"
    << "dt_s: " << format_number(dt) << "\n"
    << "i_ref_a: " << format_number(i_ref) << "\n"
    << "verdict: " << to_string(report.verdict) << "\n"
    << "spike_magnitude: " << format_number(report.spike_magnitude) << "\n"
    << "residual_vibration: " << format_number(report.residual_vibration) << "\n"
    << "sustained_deviation: " << format_number(report.sustained_deviation) << "\n"
    << "detection_latency_s: "
    << (report.detection_latency ? format_number(*report.detection_latency) : std::string("none")) << "\n"
    << "static_power_w: " << format_number(power_estimate(attacked, dc_operating_point(attacked, temp)))
    << "\n";
  out.write("summary.txt", s.str());
  std::cout << s.str();
  return 0;
}

int cmd_pssr(const Output& out, const std::string& fmin, const std::string& fmax, int ppd) {
  const double lo = value_or_throw(fmin, "--fmin");
  const double hi = value_or_throw(fmax, "--fmax");
  const auto g = calibrated();
  const auto points = sensor_pssr(g.circuit, geometric_grid(lo, hi, ppd));
  out.write("pssr.csv", pssr_csv(points));
  double worst_1mhz = -1e300;
  for (const auto& [f, db] : points) {
    if (f <= 1e6 * (1.0 + 1e-12)) worst_1mhz = std::max(worst_1mhz, db);
  }
  std::cout << "points: " << points.size() << "\n";
  if (worst_1mhz > -1e300) std::cout << "worst_db_to_1mhz: " << format_number(worst_1mhz) << "\n";
  return 0;
}

int cmd_report(const Output& out, const std::string& which) {
  const auto g = calibrated();
  if (which == "corners") {
    const auto text = corner_table_csv(corner_table(g.params, g.bias));
    out.write("corner_table.csv", text);
    std::cout << text;
  } else {
    const auto text = trojan_table_csv(trojan_table(g.params, g.bias));
    out.write("trojan_table.csv", text);
    std::cout << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ztcsense: temperature-compensated current sensor simulator"};
  app.require_subcommand(1);
  std::string out_dir = ".";
  app.add_option("-o,--out", out_dir, "Output directory (ZTCSENSE_OUT overrides)");

  auto* ztc = app.add_subcommand("ztc", "Sweep a diode-connected device and locate the ZTC point");
  std::optional<std::string> vgs;
  std::string temps = "-40:125:5";
  ztc->add_option("--vgs", vgs, "VGS grid lo:hi:step in volts");
  ztc->add_option("--temps", temps, "Temperature grid lo:hi:step in C")->capture_default_str();

  auto* cal = app.add_subcommand("calibrate", "Calibrate both gate biases");
  std::string target = "49u";
  cal->add_option("--target", target, "Adder current target")->capture_default_str();

  auto* run = app.add_subcommand("run", "Transient run of one scenario");
  RunArgs ra;
  run->add_option("--scenario", ra.scenario,
                  "golden|underpower-ptat|underpower-ctat|trojan-armed|trojan-triggered")
      ->capture_default_str();
  run->add_option("--corner", ra.corner, "tt|ff|ss")->capture_default_str();
  run->add_option("--temp", ra.temp_c, "Temperature in C")->capture_default_str();
  run->add_option("--tstop", ra.tstop, "Stop time")->capture_default_str();
  run->add_option("--dt", ra.dt, "Time step")->capture_default_str();
  run->add_option("--iref", ra.i_ref, "Constant sigma reference current (default: golden at --temp)");

  auto* pssr = app.add_subcommand("pssr", "Supply rejection from VDD to the sum node");
  std::string fmin = "10";
  std::string fmax = "1e9";
  int ppd = 10;
  pssr->add_option("--fmin", fmin)->capture_default_str();
  pssr->add_option("--fmax", fmax)->capture_default_str();
  pssr->add_option("--points-per-decade", ppd)->capture_default_str()->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Corner or Trojan table");
  std::string which;
  report->add_option("table", which, "corners|trojan")->required()->check(CLI::IsMember({"corners", "trojan"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (const char* env = std::getenv("ZTCSENSE_OUT"); env && *env) out_dir = env;
  const Output out{out_dir};

  try {
    if (*ztc) return cmd_ztc(out, vgs, temps);
    if (*cal) return cmd_calibrate(out, target);
    if (*run) return cmd_run(out, ra);
    if (*pssr) return cmd_pssr(out, fmin, fmax, ppd);
    return cmd_report(out, which);
  } catch (const SpecError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}
