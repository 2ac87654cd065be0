#include "ztcsense/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "ztcsense/errors.hpp"

namespace ztcsense {

namespace names = sensor_names;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZtcTolerance = 1e-4;   // V
constexpr double kBiasTolerance = 1e-4;  // V, outer vgs1 search
constexpr double kTapMargin = 1e-3;      // V, keeps taps strictly inside their dividers
constexpr double kSpreadBound = 0.02;    // of i_target

Geometry um(double width_um) { return Geometry{width_um * 1e-6, 1e-6}; }

double diode_current(const ModelCard& card, double w_over_l, double vgs, double temperature) {
  if (card.polarity == Polarity::N) return mosfet_current(card, w_over_l, vgs, vgs, temperature).id;
  return -mosfet_current(card, w_over_l, -vgs, -vgs, temperature).id;
}

double spread_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

template <class F>
double golden_section(F&& f, double a, double b, double tol) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

Circuit assemble(const SensorParams& p, const std::vector<double>& taps) {
  const double nominal = p.vdd;
  Circuit c;
  c.add_model(p.nmos_card);
  c.add_model(p.pmos_card);
  const std::string n = p.nmos_card.name;
  const std::string pm = p.pmos_card.name;
  auto mos = [&](const char* name, const char* d, const char* g, const char* s, const char* b,
                 const std::string& model, const Geometry& geo) {
    c.add_mosfet(name, d, g, s, b, model, geo.width, geo.length);
  };

  c.add_voltage_source(names::kSupply, names::kSupplyNode, "0", Waveform{nominal, {}, {}});
  c.add_voltage_source(names::kPtatSupply, names::kPtatPin, "0", Waveform{nominal, {}, {}});
  c.add_voltage_source(names::kCtatSupply, names::kCtatPin, "0", Waveform{nominal, {}, {}});

  mos(names::kRefP, "ref", "ref", names::kSupplyNode, names::kSupplyNode, pm, p.divider.reference_p);
  c.add_resistor(names::kRefResistor, "ref", "refn", p.divider.reference_resistance);
  mos(names::kRefN, "refn", "refn", "0", "0", n, p.divider.reference_n);
  mos(names::kMirrorPtat, names::kBiasNode, "ref", names::kSupplyNode, names::kSupplyNode, pm,
      p.divider.mirror_ptat);
  mos(names::kMirrorCtat, names::kCtatBiasNode, "ref", names::kSupplyNode, names::kSupplyNode, pm,
      p.divider.mirror_ctat);
  mos(names::kStackTop, names::kCtatBiasNode, names::kCtatBiasNode, "cmid", "0", n,
      p.divider.ctat_stack);
  mos(names::kStackBottom, "cmid", "cmid", "0", "0", n, p.divider.ctat_stack);

  mos(names::kDetectTop, names::kBiasNode, names::kBiasNode, "det", "0", n, p.detection);
  mos(names::kDetectBottom, "det", "det", "0", "0", n, p.detection);

  c.add_resistor(names::kPtatTapTop, names::kBiasNode, names::kPtatGate, taps[0]);
  c.add_resistor(names::kPtatTapBottom, names::kPtatGate, "0", taps[1]);
  c.add_resistor(names::kCtatTapTop, names::kCtatBiasNode, names::kCtatGate, taps[2]);
  c.add_resistor(names::kCtatTapBottom, names::kCtatGate, "0", taps[3]);
  if (p.ptat_gate_cap > 0.0) {
    c.add_capacitor("CGP", names::kPtatGate, names::kSupplyNode, p.ptat_gate_cap);
  }
  if (p.ctat_gate_cap > 0.0) {
    c.add_capacitor("CGC", names::kCtatGate, names::kSupplyNode, p.ctat_gate_cap);
  }

  mos(names::kPtat, names::kSumNode, names::kPtatGate, names::kPtatPin, names::kPtatPin, pm, p.ptat);
  mos(names::kCtat, names::kSumNode, names::kCtatGate, names::kCtatPin, names::kCtatPin, pm, p.ctat);
  c.add_voltage_source(names::kAdderMeter, names::kSumNode, names::kAdderNode, Waveform{0.0, {}, {}});
  mos(names::kAdder, names::kAdderNode, names::kAdderNode, "0", "0", n, p.adder);

  if (c.mosfet_count() != 11) {
    throw TopologyError("sensor netlist has " + std::to_string(c.mosfet_count()) +
                        " MOSFETs, expected 11");
  }
  return c;
}

std::vector<double> half_taps(const SensorParams& p) {
  const double rp = p.divider.ptat_tap_resistance / 2.0;
  const double rc = p.divider.ctat_tap_resistance / 2.0;
  return {rp, rp, rc, rc};
}

struct BiasNodes {
  double ptat = 0.0;
  double ctat = 0.0;
};

// Tap ratios leave the bias nodes untouched: each divider keeps its total resistance.
BiasNodes bias_nodes(const SensorParams& p) {
  const auto op = dc_operating_point(assemble(p, half_taps(p)), kNominalTemperature);
  return {op.voltage(names::kBiasNode), op.voltage(names::kCtatBiasNode)};
}

std::vector<double> taps_for(const SensorParams& p, const BiasNodes& nodes, double vgs1, double vgs2) {
  const double fp = (p.vdd - vgs1) / nodes.ptat;
  const double fc = (p.vdd - vgs2) / nodes.ctat;
  if (!(fp > 0.0 && fp < 1.0) || !(fc > 0.0 && fc < 1.0)) {
    throw CalibrationError("gate taps out of reach: vgs1 " + std::to_string(vgs1) + " V, vgs2 " +
                           std::to_string(vgs2) + " V",
                           kInf);
  }
  const double rp = p.divider.ptat_tap_resistance;
  const double rc = p.divider.ctat_tap_resistance;
  return {rp * (1.0 - fp), rp * fp, rc * (1.0 - fc), rc * fc};
}

class Calibrator {
 public:
  Calibrator(const SensorParams& params, double i_target)
      : p_(params), target_(i_target), nodes_(bias_nodes(params)) {}

  const BiasNodes& nodes() const { return nodes_; }

  /// Holds the PTAT tap resistors fixed; vgs1 arguments are then ignored.
  void pin_ptat_taps(double top, double bottom) { pinned_ = {top, bottom}; }

  std::vector<double> taps(double vgs1, double vgs2) const {
    if (!pinned_) return taps_for(p_, nodes_, vgs1, vgs2);
    auto t = taps_for(p_, nodes_, p_.vdd - 0.5 * nodes_.ptat, vgs2);
    t[0] = pinned_->first;
    t[1] = pinned_->second;
    return t;
  }

  double i27(double vgs1, double vgs2) {
    const auto c = assemble(p_, taps(vgs1, vgs2));
    auto op = dc_operating_point(c, kNominalTemperature, seed_ ? &*seed_ : nullptr);
    const double i = adder_current(op);
    seed_ = std::move(op);
    return i;
  }

  // vgs2 in [lo, hi] with i27 = target; adder current rises with vgs2.
  std::optional<double> solve_vgs2(double vgs1, double lo, double hi) {
    double flo = i27(vgs1, lo) - target_;
    double fhi = i27(vgs1, hi) - target_;
    if (flo > 0.0 || fhi < 0.0) return std::nullopt;
    for (int k = 0; k < 100 && hi - lo > 1e-9; ++k) {
      const double mid = 0.5 * (lo + hi);
      const double f = i27(vgs1, mid) - target_;
      if (std::abs(f) <= 1e-6 * target_) return mid;
      if (f < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  double spread(double vgs1, double vgs2) {
    const auto c = assemble(p_, taps(vgs1, vgs2));
    return spread_of(adder_current_vs_temperature(c, p_));
  }

 private:
  const SensorParams& p_;
  double target_;
  BiasNodes nodes_;
  std::optional<std::pair<double, double>> pinned_;
  std::optional<OperatingPoint> seed_;
};

}  // namespace

SensorParams SensorParams::defaults() {
  SensorParams p;
  p.nmos_card.name = "nch";
  p.nmos_card.polarity = Polarity::N;
  p.nmos_card.kp = 3e-4;
  p.nmos_card.cgs = 5e-15;
  p.nmos_card.cgd = 1e-15;
  p.pmos_card = p.nmos_card;
  p.pmos_card.name = "pch";
  p.pmos_card.polarity = Polarity::P;
  p.pmos_card.kp = 1e-4;

  p.ptat = um(0.336);
  p.ctat = um(0.603);
  p.adder = um(300.0);
  p.detection = um(15.1);
  p.divider.reference_p = um(1.63);
  p.divider.reference_n = um(100.0);
  p.divider.mirror_ptat = um(13.0);
  p.divider.mirror_ctat = um(0.618);
  p.divider.ctat_stack = um(1.5);
  p.divider.reference_resistance = 319e3;
  p.divider.ptat_tap_resistance = 5e6;
  p.divider.ctat_tap_resistance = 5e6;
  return p;
}

void SensorParams::validate() const {
  auto fail = [](const std::string& what) { throw SpecError("sensor parameters: " + what); };
  if (!(vdd > 0.0)) fail("vdd must be positive");
  if (nmos_card.polarity != Polarity::N) fail("nmos_card must be N-channel");
  if (pmos_card.polarity != Polarity::P) fail("pmos_card must be P-channel");
  if (nmos_card.name.empty() || pmos_card.name.empty() || nmos_card.name == pmos_card.name) {
    fail("model cards need distinct, non-empty names");
  }
  try {
    ztcsense::validate(nmos_card);
    ztcsense::validate(pmos_card);
  } catch (const SemanticError& e) {
    fail(e.what());
  }
  const Geometry* geos[] = {&ptat, &ctat, &adder, &detection, &divider.reference_p,
                            &divider.reference_n, &divider.mirror_ptat, &divider.mirror_ctat,
                            &divider.ctat_stack};
  for (const auto* g : geos) {
    if (!(g->width > 0.0) || !(g->length > 0.0)) fail("geometries must be positive");
  }
  if (!(divider.reference_resistance > 0.0) || !(divider.ptat_tap_resistance > 0.0) ||
      !(divider.ctat_tap_resistance > 0.0)) {
    fail("divider resistances must be positive");
  }
  if (!(ptat_gate_cap >= 0.0) || !(ctat_gate_cap >= 0.0)) fail("gate caps must be non-negative");
  if (!(t_min_c < t_max_c)) fail("temperature range low must be below high");
  if (!(t_step_c > 0.0)) fail("temperature step must be positive");
}

std::vector<double> SensorParams::temperature_grid() const {
  return linear_grid(to_kelvin(t_min_c), to_kelvin(t_max_c), t_step_c);
}

SensorParams SensorParams::at_corner(const Corner& corner) const {
  SensorParams p = *this;
  p.nmos_card = corner_card(nmos_card, corner);
  p.pmos_card = corner_card(pmos_card, corner);
  return p;
}

double analytic_ztc(const ModelCard& card, double temperature) {
  return vth_at(card, temperature) + 2.0 * card.tcv * temperature / card.bex;
}

std::vector<double> default_vgs_grid(const ModelCard& card, const std::vector<double>& temp_grid) {
  if (temp_grid.empty()) throw SpecError("empty temperature grid");
  const auto [tlo, thi] = std::minmax_element(temp_grid.begin(), temp_grid.end());
  return linear_grid(vth_at(card, *thi), vth_at(card, *tlo) + 0.8, 1e-3);
}

ZtcResult find_ztc(const ModelCard& card, double w_over_l, const std::vector<double>& vgs_grid,
                   const std::vector<double>& temp_grid) {
  validate(card);
  if (!(w_over_l > 0.0)) throw SpecError("find_ztc: W/L must be positive");
  if (temp_grid.size() < 3) throw SpecError("find_ztc: need at least 3 temperatures");
  if (vgs_grid.size() < 3) throw SpecError("find_ztc: need at least 3 VGS points");
  {
    const auto [tlo, thi] = std::minmax_element(temp_grid.begin(), temp_grid.end());
    const auto [vlo, vhi] = std::minmax_element(vgs_grid.begin(), vgs_grid.end());
    if (*vlo > vth_at(card, *thi) + 1e-9 || *vhi < vth_at(card, *tlo) + 0.6 - 1e-9) {
      throw SpecError("find_ztc: VGS grid must span [Vth(maxT), Vth(minT) + 0.6 V]");
    }
  }

  // Points where the device is off at some temperature have a trivially small
  // spread and are excluded.
  auto spread_at = [&](double vgs) {
    std::vector<double> ids;
    ids.reserve(temp_grid.size());
    for (double t : temp_grid) {
      const double id = diode_current(card, w_over_l, vgs, t);
      if (!(id > 0.0)) return kInf;
      ids.push_back(id);
    }
    return spread_of(ids);
  };

  ZtcResult r;
  r.vgs_grid = vgs_grid;
  r.temp_grid = temp_grid;
  r.grid_spread.reserve(vgs_grid.size());
  for (double v : vgs_grid) r.grid_spread.push_back(spread_at(v));

  const auto best = static_cast<std::size_t>(
      std::min_element(r.grid_spread.begin(), r.grid_spread.end()) - r.grid_spread.begin());
  const bool finite = std::isfinite(r.grid_spread[best]);
  const bool edge = best == 0 || best + 1 == vgs_grid.size() || !std::isfinite(r.grid_spread[best - 1]);
  if (!finite || edge) {
    throw NoZtcError("drain-current spread is monotone over the VGS grid; no ZTC point");
  }

  const double lo = std::min(vgs_grid[best - 1], vgs_grid[best + 1]);
  const double hi = std::max(vgs_grid[best - 1], vgs_grid[best + 1]);
  const double v = golden_section(spread_at, lo, hi, kZtcTolerance);
  const double s = spread_at(v);
  if (s <= r.grid_spread[best]) {
    r.v_ztc = v;
    r.spread_at_ztc = s;
  } else {
    r.v_ztc = vgs_grid[best];
    r.spread_at_ztc = r.grid_spread[best];
  }
  return r;
}

std::vector<double> realize_dividers(const SensorParams& params, double vgs1, double vgs2) {
  params.validate();
  return taps_for(params, bias_nodes(params), vgs1, vgs2);
}

Circuit build_sensor(const SensorParams& params, const BiasSetting& bias) {
  params.validate();
  if (bias.divider_resistances.empty()) {
    return assemble(params, realize_dividers(params, bias.vgs1, bias.vgs2));
  }
  if (bias.divider_resistances.size() != 4) {
    throw TopologyError("divider_resistances needs 4 values, got " +
                        std::to_string(bias.divider_resistances.size()));
  }
  for (double r : bias.divider_resistances) {
    if (!(r > 0.0)) throw SpecError("divider resistances must be positive");
  }
  return assemble(params, bias.divider_resistances);
}

std::vector<Probe> sensor_probes() {
  return {
      {names::kProbePtat, Probe::Kind::DeviceCurrent, names::kPtat, -1.0},
      {names::kProbeCtat, Probe::Kind::DeviceCurrent, names::kCtat, -1.0},
      {names::kProbeAdder, Probe::Kind::DeviceCurrent, names::kAdderMeter, 1.0},
      {names::kProbeDetect, Probe::Kind::DeviceCurrent, names::kDetectTop, 1.0},
      {names::kProbeDetectVoltage, Probe::Kind::NodeVoltage, names::kBiasNode, 1.0},
  };
}

double adder_current(const OperatingPoint& op) { return op.current(names::kAdderMeter); }

std::vector<double> adder_current_vs_temperature(const Circuit& sensor, const SensorParams& params) {
  const auto sweep = dc_sweep(sensor, SweepKnob::temperature(), params.temperature_grid(), kNominalTemperature);
  std::vector<double> out;
  out.reserve(sweep.points.size());
  for (const auto& op : sweep.points) out.push_back(adder_current(op));
  return out;
}

BiasSetting calibrate_bias(const SensorParams& params, const ZtcResult& ztc, double i_target) {
  params.validate();
  if (!(i_target > 0.0)) throw SpecError("i_target must be positive");
  Calibrator cal(params, i_target);
  const auto& nodes = cal.nodes();

  const double lo1 = params.vdd - nodes.ptat + kTapMargin;
  const double hi1 = std::min(ztc.v_ztc, params.vdd - kTapMargin);
  const double lo2 = std::max(ztc.v_ztc, params.vdd - nodes.ctat + kTapMargin);
  const double hi2 = params.vdd - kTapMargin;
  if (!(lo1 < hi1) || !(lo2 < hi2)) {
    throw CalibrationError("bias nodes cannot place the gate taps on both sides of V_ZTC", kInf);
  }

  BiasSetting best;
  best.i_target = i_target;
  best.spread = kInf;
  auto objective = [&](double vgs1) {
    const auto vgs2 = cal.solve_vgs2(vgs1, lo2, hi2);
    if (!vgs2) return kInf;
    const double s = cal.spread(vgs1, *vgs2);
    if (s < best.spread) {
      best.vgs1 = vgs1;
      best.vgs2 = *vgs2;
      best.spread = s;
    }
    return s;
  };

  // Coarse scan brackets the minimum, golden section refines it.
  constexpr int kScan = 16;
  std::vector<double> scan(kScan + 1);
  std::vector<double> cost(kScan + 1);
  for (int k = 0; k <= kScan; ++k) {
    scan[k] = lo1 + (hi1 - lo1) * k / kScan;
    cost[k] = objective(scan[k]);
  }
  const int at = static_cast<int>(std::min_element(cost.begin(), cost.end()) - cost.begin());
  if (!std::isfinite(cost[at])) {
    throw CalibrationError("no bias pair reaches i_target = " + std::to_string(i_target) + " A", kInf);
  }
  golden_section(objective, scan[std::max(at - 1, 0)], scan[std::min(at + 1, kScan)], kBiasTolerance);

  best.divider_resistances = taps_for(params, nodes, best.vgs1, best.vgs2);
  if (best.spread > kSpreadBound * i_target) {
    throw CalibrationError("best spread " + std::to_string(best.spread / i_target * 100.0) +
                           " % of i_target at vgs1 " + std::to_string(best.vgs1) + " V, vgs2 " +
                           std::to_string(best.vgs2) + " V exceeds 2 %",
                           best.spread);
  }
  return best;
}

BiasSetting trim_bias(const SensorParams& params, const BiasSetting& bias, double i_target) {
  params.validate();
  if (!(i_target > 0.0)) throw SpecError("i_target must be positive");
  const auto base = bias.divider_resistances.empty()
                        ? realize_dividers(params, bias.vgs1, bias.vgs2)
                        : bias.divider_resistances;
  if (base.size() != 4) throw TopologyError("divider_resistances needs 4 values");
  Calibrator cal(params, i_target);
  cal.pin_ptat_taps(base[0], base[1]);
  const double lo2 = params.vdd - cal.nodes().ctat + kTapMargin;
  const double hi2 = params.vdd - kTapMargin;
  const auto vgs2 = cal.solve_vgs2(bias.vgs1, lo2, hi2);
  if (!vgs2) throw CalibrationError("trim cannot reach i_target with the PTAT tap fixed", kInf);
  BiasSetting out = bias;
  out.vgs1 = params.vdd - cal.nodes().ptat * base[1] / (base[0] + base[1]);
  out.vgs2 = *vgs2;
  out.i_target = i_target;
  out.divider_resistances = cal.taps(out.vgs1, out.vgs2);
  out.spread = cal.spread(out.vgs1, out.vgs2);
  return out;
}

BiasSetting default_calibration(const SensorParams& params, double i_target) {
  const auto temps = params.temperature_grid();
  const auto ztc = find_ztc(params.nmos_card, params.ptat.w_over_l(),
                            default_vgs_grid(params.nmos_card, temps), temps);
  return calibrate_bias(params, ztc, i_target);
}

}  // namespace ztcsense
