// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
// Usage: ztcsense_acceptance <path-to-ztcsense-cli>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ztcsense/errors.hpp"
#include "ztcsense/faults.hpp"
#include "ztcsense/monitor.hpp"
#include "ztcsense/netlist.hpp"
#include "ztcsense/sensor.hpp"

namespace fs = std::filesystem;
using namespace ztcsense;
namespace names = ztcsense::sensor_names;

namespace {

struct Result {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double g_max_kcl = 0.0;

OperatingPoint solve(const Circuit& c, double kelvin) {
  auto op = dc_operating_point(c, kelvin);
  g_max_kcl = std::max({g_max_kcl, op.max_kcl_residual, kcl_residual(c, op)});
  return op;
}

TransientTrace run_transient(const Circuit& c, double tstop, double dt, double kelvin) {
  auto tr = transient(c, tstop, dt, kelvin, sensor_probes());
  g_max_kcl = std::max(g_max_kcl, tr.max_kcl_residual);
  return tr;
}

struct Golden {
  SensorParams params = SensorParams::defaults();
  ZtcResult ztc;
  BiasSetting bias;
  Circuit circuit;
};

const Golden& golden() {
  static const Golden g = [] {
    Golden out;
    const auto temps = out.params.temperature_grid();
    out.ztc = find_ztc(out.params.nmos_card, out.params.ptat.w_over_l(),
                       default_vgs_grid(out.params.nmos_card, temps), temps);
    out.bias = calibrate_bias(out.params, out.ztc, 49e-6);
    out.circuit = build_sensor(out.params, out.bias);
    return out;
  }();
  return g;
}

double adder_at(const Circuit& c, double temp_c) { return adder_current(solve(c, to_kelvin(temp_c))); }

// 1: solver oracles. The KCL part is finalized after every other criterion ran.
void solver_oracles(Result& r) {
  {
    const auto c = parse_netlist("V1 in 0 DC 1\nR1 in out 1k\nR2 out 0 3k\n");
    const double v = solve(c, kNominalTemperature).voltage("out");
    r.detail << " divider_rel=" << std::abs(v - 0.75) / 0.75;
    r.require(std::abs(v - 0.75) <= 1e-12 * 0.75, "divider");
  }
  {
    ModelCard card;
    card.name = "nch";
    card.lambda = 0.0;
    Circuit c;
    c.add_model(card);
    c.add_voltage_source("V1", "vdd", "0", Waveform{1.8, {}, {}});
    c.add_resistor("R1", "vdd", "d", 10e3);
    c.add_mosfet("M1", "d", "d", "0", "0", "nch", 10e-6, 1e-6);
    const double a = 10e3 * card.kp * 10.0 / 2.0;
    const double over = 1.8 - card.vth0;
    const double expected = card.vth0 + 2.0 * over / (1.0 + std::sqrt(1.0 + 4.0 * a * over));
    const double v = solve(c, kNominalTemperature).voltage("d");
    r.detail << " diode_rel=" << std::abs(v - expected) / expected;
    r.require(std::abs(v - expected) <= 1e-9 * expected, "diode-connected NMOS");
  }
  Waveform step;
  step.pwl = {{0.0, 1.0}};
  step.ac_magnitude = 1.0;
  Circuit rc;
  rc.add_voltage_source("V1", "in", "0", step);
  rc.add_resistor("R1", "in", "out", 1e3);
  rc.add_capacitor("C1", "out", "0", 1e-9);
  {
    const double tau = 1e-6;
    const auto tr = transient(rc, 5e-6, 10e-9, kNominalTemperature, {{"out", Probe::Kind::NodeVoltage, "out"}});
    g_max_kcl = std::max(g_max_kcl, tr.max_kcl_residual);
    double worst = 0.0;
    for (std::size_t k = 1; k < tr.times.size(); ++k) {
      const double exact = 1.0 - std::exp(-tr.times[k] / tau);
      worst = std::max(worst, std::abs(tr.probe("out")[k] - exact) / exact);
    }
    r.detail << " rc_step_rel=" << worst;
    r.require(worst <= 1e-3, "RC transient");
  }
  {
    const double pole = 1.0 / (2.0 * std::numbers::pi * 1e3 * 1e-9);
    const auto s = ac_analysis(rc, solve(rc, kNominalTemperature), {pole}, "V1", "out");
    const double err = std::abs(s[0].transfer_magnitude - 1.0 / std::sqrt(2.0));
    r.detail << " rc_pole_err=" << err;
    r.require(err <= 1e-6, "RC pole");
  }
}

// 2: device-model properties.
void device_properties(Result& r) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> vth(0.3, 0.7), kp(5e-5, 5e-4), lam(0.0, 0.2), tcv(0.0, 3e-3),
      bex(1.0, 2.2), vgs(0.0, 1.8), vds(0.0, 1.8), temp(233.15, 398.15), wl(0.5, 20.0);
  double worst_seam = 0.0;
  double worst_gm = 0.0;
  double worst_gds = 0.0;
  const double h = 1e-7;
  int draws = 0;
  while (draws < 1000) {
    ModelCard c;
    c.vth0 = vth(rng);
    c.kp = kp(rng);
    c.lambda = lam(rng);
    c.tcv = tcv(rng);
    c.bex = bex(rng);
    const double t = temp(rng), g = vgs(rng), d = vds(rng) + 2 * h, ratio = wl(rng);
    const double vov = g - vth_at(c, t);
    if (vov < 10 * h || std::abs(d - vov) < 10 * h) continue;
    ++draws;
    const double below = mosfet_current(c, ratio, g, std::nextafter(vov, 0.0), t).id;
    const double at = mosfet_current(c, ratio, g, vov, t).id;
    worst_seam = std::max(worst_seam, std::abs(below - at) / at);
    const auto op = mosfet_current(c, ratio, g, d, t);
    const double gm_fd =
        (mosfet_current(c, ratio, g + h, d, t).id - mosfet_current(c, ratio, g - h, d, t).id) / (2 * h);
    const double gds_fd =
        (mosfet_current(c, ratio, g, d + h, t).id - mosfet_current(c, ratio, g, d - h, t).id) / (2 * h);
    worst_gm = std::max(worst_gm, std::abs(op.gm - gm_fd) / (std::abs(op.gm) + 1e-9));
    if (op.gds > 1e-9) worst_gds = std::max(worst_gds, std::abs(op.gds - gds_fd) / op.gds);
  }
  r.detail << " seam_rel=" << worst_seam << " gm_rel=" << worst_gm << " gds_rel=" << worst_gds;
  r.require(worst_seam < 1e-12, "triode/saturation continuity");
  r.require(worst_gm < 1e-5 && worst_gds < 1e-5, "derivatives");

  const ModelCard base;
  bool ordered = true;
  for (double t : {233.15, 300.15, 398.15}) {
    for (double g : {0.7, 1.0, 1.8}) {
      const double ff = mosfet_current(corner_card(base, Corner::fast()), 1.0, g, 1.0, t).id;
      const double tt = mosfet_current(base, 1.0, g, 1.0, t).id;
      const double ss = mosfet_current(corner_card(base, Corner::slow()), 1.0, g, 1.0, t).id;
      ordered = ordered && ff > tt && tt > ss;
    }
  }
  r.require(ordered, "corner ordering");
}

// 3: ZTC against the first-order closed form.
void ztc(Result& r) {
  const auto& g = golden();
  const auto& c = g.params.nmos_card;
  const double t_mid = (to_kelvin(-40.0) + to_kelvin(125.0)) / 2.0;
  const double oracle = c.vth0 - c.tcv * (t_mid - c.t_nom) + 2.0 * c.tcv * t_mid / c.bex;
  const double err = std::abs(g.ztc.v_ztc - oracle);
  r.detail << " v_ztc=" << g.ztc.v_ztc << " oracle=" << oracle << " err_mV=" << err * 1e3;
  r.require(err <= 5e-3, "within 5 mV");
  auto flat = c;
  flat.tcv = 0.0;
  const auto temps = g.params.temperature_grid();
  bool threw = false;
  try {
    (void)find_ztc(flat, 1.0, linear_grid(0.3, 1.5, 1e-3), temps);
  } catch (const NoZtcError&) {
    threw = true;
  }
  r.require(threw, "tcv = 0 gives NoZtcError");
}

// 4: flat adder current.
void flat_current(Result& r) {
  const auto& g = golden();
  const auto temps = g.params.temperature_grid();
  const auto probes = sensor_probes();
  std::vector<double> adder, ptat, ctat;
  for (double t : temps) {
    const auto op = solve(g.circuit, t);
    adder.push_back(adder_current(op));
    ptat.push_back(probe_value(op, probes[0]));
    ctat.push_back(probe_value(op, probes[1]));
  }
  const auto [lo, hi] = std::minmax_element(adder.begin(), adder.end());
  const double spread = (*hi - *lo) / 49e-6;
  r.detail << " spread=" << spread * 100 << "% range_uA=[" << *lo * 1e6 << "," << *hi * 1e6 << "]";
  r.require(spread <= 0.02, "spread <= 2 %");
  bool up = true, down = true;
  for (std::size_t k = 1; k < temps.size(); ++k) {
    up = up && ptat[k] > ptat[k - 1];
    down = down && ctat[k] < ctat[k - 1];
  }
  r.require(up, "I_PTAT strictly increasing");
  r.require(down, "I_CTAT strictly decreasing");
}

// 5: under-powering detection.
void underpower(Result& r) {
  const auto& g = golden();
  const GlitchSpec glitch;
  const double dt = 1e-12;
  const double i_ref = adder_at(g.circuit, 27.0);
  TraceAnalysisOptions opts;
  opts.fault_onset = glitch.t_start;
  const auto ptat = analyze_trace(
      run_transient(apply_underpower(g.circuit, Branch::Ptat, glitch), 20e-9, dt, kNominalTemperature),
      i_ref, opts);
  const auto ctat = analyze_trace(
      run_transient(apply_underpower(g.circuit, Branch::Ctat, glitch), 20e-9, dt, kNominalTemperature),
      i_ref, opts);
  r.detail << " ptat_spike=" << ptat.spike_magnitude << " ctat_spike=" << ctat.spike_magnitude
           << " ptat_verdict=" << to_string(ptat.verdict)
           << " latency_ps=" << (ptat.detection_latency ? *ptat.detection_latency * 1e12 : -1.0)
           << " residual=" << ptat.residual_vibration;
  r.require(ptat.spike_magnitude >= 1.0, "PTAT spike >= 100 %");
  r.require(ptat.verdict == Verdict::UnderPowerSuspected, "PTAT verdict");
  r.require(ptat.detection_latency && *ptat.detection_latency <= glitch.duration + 5 * dt, "latency");
  r.require(ctat.spike_magnitude < ptat.spike_magnitude, "CTAT spike smaller");
  r.require(ptat.residual_vibration > 0.0, "residual vibration");
}

// 6: Trojan detection.
void trojan(Result& r) {
  const auto& g = golden();
  const auto armed = apply_trojan(g.circuit, TrojanSpec{});
  const double i27 = adder_at(g.circuit, 27.0);
  const double armed_dev = std::abs(adder_at(armed, 27.0) - i27) / i27;

  TrojanSpec trig_spec;
  trig_spec.state = TrojanState::Triggered;
  const auto trig = apply_trojan(g.circuit, trig_spec);
  const double hot = to_kelvin(125.0);
  TraceAnalysisOptions opts;
  opts.fault_onset = 0.0;
  const auto rep = analyze_trace(run_transient(trig, 1e-9, 1e-12, hot), adder_at(g.circuit, 125.0), opts);

  const double reference[] = {45.35e-6, 42.02e-6, 37.51e-6};
  const double temps[] = {-40.0, 27.0, 125.0};
  double cells[3];
  bool within = true;
  for (int k = 0; k < 3; ++k) {
    cells[k] = adder_at(trig, temps[k]);
    within = within && std::abs(cells[k] - reference[k]) <= 0.15 * reference[k];
  }
  const auto det = detect_armed_trojan(solve(g.circuit, kNominalTemperature), solve(armed, kNominalTemperature));

  r.detail << " armed_dev=" << armed_dev * 100 << "% sustained_125C=" << rep.sustained_deviation
           << " triggered_uA=" << cells[0] * 1e6 << "/" << cells[1] * 1e6 << "/" << cells[2] * 1e6
           << " delta_i_uA=" << det.delta_i * 1e6;
  r.require(armed_dev < 0.02, "armed < 2 %");
  r.require(rep.sustained_deviation >= 0.15 && rep.verdict == Verdict::TrojanSuspected, "sustained |sigma|");
  r.require(cells[0] > cells[1] && cells[1] > cells[2], "triggered decreasing");
  r.require(within, "triggered within 15 % per cell");
  r.require(det.delta_i >= 5e-6 && det.detected, "detection delta_i");
}

// 7: corner table.
void corners(Result& r) {
  const auto& g = golden();
  const auto t = corner_table(g.params, g.bias);
  const auto& tt = t.percent[0];
  const auto& ff = t.percent[1];
  const auto& ss = t.percent[2];
  double tt_max = 0.0;
  for (double v : tt) tt_max = std::max(tt_max, std::abs(v));
  double largest = 0.0;
  for (const auto& row : t.percent) {
    for (double v : row) largest = std::max(largest, std::abs(v));
  }
  r.detail << " tt_max=" << tt_max << "% ss_m40=" << ss[0] << "% ff=";
  for (double v : ff) r.detail << v << ";";
  r.require(tt_max <= 3.0, "TT row <= 3 %");
  r.require(ss[0] > 0.0 && std::abs(ss[0]) == largest, "SS@-40 largest and positive");
  r.require(ss[0] >= 10.31 / 2.0 && ss[0] <= 10.31 * 2.0, "SS@-40 within factor 2");
  const bool signs = ff[0] < 0 && ff[1] < 0 && ff[2] > 0 && ff[3] > 0 && ff[4] > 0;
  bool mono = true;
  for (std::size_t k = 1; k < ff.size(); ++k) mono = mono && ff[k] > ff[k - 1];
  r.require(signs && mono, "FF row -,-,+,+,+ and increasing");
}

// 8: PSSR.
void pssr_check(Result& r) {
  r.require(pssr_db(1.0, 1.0) == 0.0 && pssr_db(1.0) == 0.0, "unity is 0 dB");
  r.require(pssr_db(1000.0, 1.0) == -60.0, "ratio 1000 is -60 dB");
  const auto& g = golden();
  const auto curve = sensor_pssr(g.circuit, geometric_grid(10.0, 1e10, 50));
  const double low = curve.front().second;
  double at_1k = 0.0;
  double worst_1m = -1e300;
  double best_1m = 1e300;
  std::size_t pole = curve.size();
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const auto [f, db] = curve[k];
    if (std::abs(f - 1e3) < 1e-6) at_1k = db;
    if (f <= 1e6 * (1 + 1e-12)) {
      worst_1m = std::max(worst_1m, db);
      best_1m = std::min(best_1m, db);
    }
    if (pole == curve.size() && db > low + 3.0) pole = k;
  }
  bool mono = pole < curve.size();
  for (std::size_t k = pole + 1; k < curve.size(); ++k) mono = mono && curve[k].second >= curve[k - 1].second;
  r.detail << " at_1kHz=" << at_1k << "dB range_to_1MHz=[" << best_1m << "," << worst_1m << "]dB"
           << " pole_Hz=" << (pole < curve.size() ? curve[pole].first : 0.0);
  r.require(at_1k <= -40.0, "1 kHz <= -40 dB");
  r.require(mono, "monotone degradation above the pole");
  r.require(best_1m >= -69.0 - 15.0 && worst_1m <= -69.0 + 15.0, "within 15 dB of -69 dB to 1 MHz");
}

// 9: static power.
void power(Result& r) {
  const auto& g = golden();
  const double p = power_estimate(g.circuit, solve(g.circuit, kNominalTemperature));
  r.detail << " power_uW=" << p * 1e6;
  r.require(p >= 10e-6 && p <= 200e-6, "10..200 uW");
}

Circuit random_circuit(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 12), node(0, 6), kind(0, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Circuit c;
  ModelCard n;
  n.name = "nch";
  n.vth0 = 0.3 + 0.4 * unit(rng);
  n.cgd = 1e-15 * unit(rng);
  c.add_model(n);
  ModelCard p = n;
  p.name = "pch";
  p.polarity = Polarity::P;
  c.add_model(p);
  auto nm = [&] {
    const int k = node(rng);
    return k == 0 ? std::string("0") : "x" + std::to_string(k);
  };
  const int devices = count(rng);
  for (int i = 0; i < devices; ++i) {
    const std::string id = std::to_string(i);
    switch (kind(rng)) {
      case 0:
        c.add_mosfet("M" + id, nm(), nm(), nm(), nm(), unit(rng) < 0.5 ? "nch" : "pch",
                     1e-6 * (0.1 + 50 * unit(rng)), 1e-6 * (0.18 + unit(rng)));
        break;
      case 1:
        c.add_resistor("R" + id, nm(), nm(), 1e6 * unit(rng) + 1.0);
        break;
      case 2:
        c.add_capacitor("C" + id, nm(), nm(), 1e-12 * unit(rng) + 1e-18);
        break;
      default: {
        Waveform w;
        w.dc = 3.0 * unit(rng) - 1.0;
        for (int k = 0, steps = static_cast<int>(4 * unit(rng)); k < steps; ++k) {
          w.pwl.push_back({k * 1e-10 * (1.0 + unit(rng)), 1.8 * unit(rng)});
        }
        c.add_voltage_source("V" + id, nm(), nm(), w);
      }
    }
  }
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

// 10: infrastructure.
void infrastructure(Result& r, const std::string& cli) {
  std::mt19937_64 rng(10);
  int equal = 0;
  for (int k = 0; k < 100; ++k) {
    const auto c = random_circuit(rng);
    if (parse_netlist(serialize_netlist(c)) == c) ++equal;
  }
  r.detail << " roundtrip=" << equal << "/100";
  r.require(equal == 100, "netlist round trip");

  const std::string alphabet = "MRCVmrcv.=()+-0123456789 \n\tpnukmegDCPWLACW=L=.MODELNMOSPMOS*";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1), len(0, 200);
  int fuzzed = 0;
  for (int k = 0; k < 5000; ++k) {
    std::string text;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) text.push_back(alphabet[pick(rng)]);
    try {
      (void)parse_netlist(text);
    } catch (const Error&) {
    }
    ++fuzzed;
  }
  r.detail << " fuzzed=" << fuzzed;

  if (cli.empty() || !fs::exists(cli)) {
    r.require(false, "CLI binary not found");
    return;
  }
  const auto base = fs::temp_directory_path() / "ztcsense_acceptance";
  fs::remove_all(base);
  const std::vector<std::string> commands = {
      "calibrate", "report corners", "report trojan", "pssr",
      "run --scenario underpower-ptat --temp 27 --tstop 3n",
      "run --scenario trojan-triggered --temp 125 --tstop 0.2n"};
  bool identical = true;
  int files = 0;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    fs::path dirs[2];
    for (int rep = 0; rep < 2; ++rep) {
      dirs[rep] = base / ("c" + std::to_string(k) + "_" + std::to_string(rep));
      const std::string line = "\"" + cli + "\" --out \"" + dirs[rep].string() + "\" " + commands[k] + " > \"" +
                               (base / "stdout.txt").string() + "\" 2>&1";
      fs::create_directories(base);
      if (std::system(line.c_str()) != 0) {
        r.require(false, "CLI failed: " + commands[k]);
        return;
      }
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      ++files;
      const auto other = dirs[1] / entry.path().filename();
      identical = identical && fs::exists(other) && slurp(entry.path()) == slurp(other);
    }
  }
  fs::remove_all(base);
  r.detail << " cli_files_compared=" << files;
  r.require(identical && files > 0, "CLI byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
  // Output directory must come from --out here.
  unsetenv("ZTCSENSE_OUT");
  const std::string cli = argc > 1 ? argv[1] : "";
  std::vector<std::pair<int, std::function<void(Result&)>>> criteria = {
      {1, solver_oracles},
      {2, device_properties},
      {3, ztc},
      {4, flat_current},
      {5, underpower},
      {6, trojan},
      {7, corners},
      {8, pssr_check},
      {9, power},
      {10, [&](Result& r) { infrastructure(r, cli); }},
  };
  std::vector<Result> results(criteria.size());
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    try {
      criteria[k].second(results[k]);
    } catch (const std::exception& e) {
      results[k].require(false, std::string("exception: ") + e.what());
    }
  }
  results[0].detail << " max_kcl_A=" << g_max_kcl;
  results[0].require(g_max_kcl < 1e-9, "KCL residual < 1 nA on every solution");

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const bool ok = results[k].pass;
    failed += ok ? 0 : 1;
    std::cout << "criterion " << criteria[k].first << ": " << (ok ? "PASS" : "FAIL") << results[k].detail.str()
              << "\n";
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? 0 : 1;
}
