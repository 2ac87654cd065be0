#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ztcsense/errors.hpp"
#include "ztcsense/sensor.hpp"

using namespace ztcsense;
namespace names = ztcsense::sensor_names;

namespace {

struct Calibrated {
  SensorParams params = SensorParams::defaults();
  ZtcResult ztc;
  BiasSetting bias;
  Circuit circuit;
};

const Calibrated& calibrated() {
  static const Calibrated c = [] {
    Calibrated out;
    const auto temps = out.params.temperature_grid();
    out.ztc = find_ztc(out.params.nmos_card, out.params.ptat.w_over_l(),
                       default_vgs_grid(out.params.nmos_card, temps), temps);
    out.bias = calibrate_bias(out.params, out.ztc, 49e-6);
    out.circuit = build_sensor(out.params, out.bias);
    return out;
  }();
  return c;
}

double diode_id(const ModelCard& card, double wl, double vgs, double t) {
  return mosfet_current(card, wl, vgs, vgs, t).id;
}

}  // namespace

TEST(FindZtc, MatchesAnalyticAtMidTemperature) {
  const auto p = SensorParams::defaults();
  const auto temps = p.temperature_grid();
  const auto r = find_ztc(p.nmos_card, p.ptat.w_over_l(), default_vgs_grid(p.nmos_card, temps), temps);
  const double t_mid = (to_kelvin(-40.0) + to_kelvin(125.0)) / 2.0;
  const auto& c = p.nmos_card;
  const double oracle = c.vth0 - c.tcv * (t_mid - c.t_nom) + 2.0 * c.tcv * t_mid / c.bex;
  EXPECT_NEAR(analytic_ztc(c, t_mid), oracle, 1e-12);
  EXPECT_NEAR(r.v_ztc, oracle, 5e-3);
  EXPECT_GE(r.v_ztc, r.vgs_grid.front());
  EXPECT_LE(r.v_ztc, r.vgs_grid.back());
}

TEST(FindZtc, ZeroThresholdDriftHasNoCrossing) {
  auto card = SensorParams::defaults().nmos_card;
  card.tcv = 0.0;
  const auto temps = linear_grid(to_kelvin(-40.0), to_kelvin(125.0), 5.0);
  EXPECT_THROW(find_ztc(card, 1.0, linear_grid(0.3, 1.5, 1e-3), temps), NoZtcError);
}

TEST(FindZtc, MinimalOverFiniteGrid) {
  const auto& r = calibrated().ztc;
  ASSERT_EQ(r.grid_spread.size(), r.vgs_grid.size());
  std::size_t finite = 0;
  for (double s : r.grid_spread) {
    if (!std::isfinite(s)) continue;
    ++finite;
    EXPECT_LE(r.spread_at_ztc, s);
  }
  EXPECT_GT(finite, r.grid_spread.size() / 2);
}

TEST(FindZtc, TemperatureOrderFlipsAcrossZtc) {
  const auto& r = calibrated().ztc;
  const auto& card = calibrated().params.nmos_card;
  const double t_lo = r.temp_grid.front();
  const double t_hi = r.temp_grid.back();
  const double below = r.v_ztc - 0.1;
  const double above = r.v_ztc + 0.1;
  EXPECT_GT(diode_id(card, 1.0, below, t_hi), diode_id(card, 1.0, below, t_lo));
  EXPECT_LT(diode_id(card, 1.0, above, t_hi), diode_id(card, 1.0, above, t_lo));
}

TEST(FindZtc, RejectsShortGrids) {
  const auto card = SensorParams::defaults().nmos_card;
  const auto temps = linear_grid(233.15, 398.15, 5.0);
  EXPECT_THROW(find_ztc(card, 1.0, linear_grid(0.5, 0.7, 1e-3), temps), SpecError);
  EXPECT_THROW(find_ztc(card, 1.0, default_vgs_grid(card, temps), {250.0, 300.0}), SpecError);
}

TEST(BuildSensor, ElevenMosfets) {
  EXPECT_EQ(calibrated().circuit.mosfet_count(), 11u);
  for (const char* n : {names::kSupply, names::kPtatSupply, names::kCtatSupply, names::kAdderMeter,
                        names::kPtat, names::kCtat, names::kAdder, names::kDetectTop,
                        names::kDetectBottom}) {
    EXPECT_TRUE(calibrated().circuit.device_index(n).has_value()) << n;
  }
}

TEST(BuildSensor, RejectsBadDividerList) {
  const auto& c = calibrated();
  BiasSetting b = c.bias;
  b.divider_resistances = {1e6, 1e6};
  EXPECT_THROW(build_sensor(c.params, b), TopologyError);
  b.divider_resistances = {1e6, -1.0, 1e6, 1e6};
  EXPECT_THROW(build_sensor(c.params, b), SpecError);
}

TEST(BuildSensor, AdderIsSumOfBranches) {
  const auto& c = calibrated();
  const auto probes = sensor_probes();
  for (double tc : {-40.0, 0.0, 27.0, 80.0, 125.0}) {
    const auto op = dc_operating_point(c.circuit, to_kelvin(tc));
    EXPECT_LT(op.max_kcl_residual, 1e-9);
    const double ip = probe_value(op, probes[0]);
    const double ic = probe_value(op, probes[1]);
    EXPECT_NEAR(adder_current(op), ip + ic, 1e-9) << tc;
    EXPECT_GT(ip, 0.0);
    EXPECT_GT(ic, 0.0);
  }
}

TEST(BuildSensor, HitsTargetAtRoomTemperature) {
  const auto op = dc_operating_point(calibrated().circuit, kNominalTemperature);
  EXPECT_NEAR(adder_current(op), 49e-6, 0.01 * 49e-6);
}

TEST(CalibrateBias, FlatWithinTwoPercent) {
  const auto& c = calibrated();
  const auto i = adder_current_vs_temperature(c.circuit, c.params);
  ASSERT_EQ(i.size(), 34u);
  const auto [lo, hi] = std::minmax_element(i.begin(), i.end());
  EXPECT_LE(*hi - *lo, 0.02 * 49e-6);
  EXPECT_NEAR(c.bias.spread, *hi - *lo, 1e-9);
}

TEST(CalibrateBias, BranchShapes) {
  const auto& c = calibrated();
  const auto sweep = dc_sweep(c.circuit, SweepKnob::temperature(), c.params.temperature_grid(),
                              kNominalTemperature);
  const auto probes = sensor_probes();
  for (std::size_t k = 1; k < sweep.points.size(); ++k) {
    EXPECT_GT(probe_value(sweep.points[k], probes[0]), probe_value(sweep.points[k - 1], probes[0])) << k;
    EXPECT_LT(probe_value(sweep.points[k], probes[1]), probe_value(sweep.points[k - 1], probes[1])) << k;
  }
}

TEST(CalibrateBias, BiasesStraddleZtc) {
  const auto& c = calibrated();
  EXPECT_LE(c.bias.vgs1, c.ztc.v_ztc);
  EXPECT_GE(c.bias.vgs2, c.ztc.v_ztc);
  ASSERT_EQ(c.bias.divider_resistances.size(), 4u);
  const auto op = dc_operating_point(c.circuit, kNominalTemperature);
  EXPECT_NEAR(c.params.vdd - op.voltage(names::kPtatGate), c.bias.vgs1, 1e-6);
  EXPECT_NEAR(c.params.vdd - op.voltage(names::kCtatGate), c.bias.vgs2, 1e-6);
}

TEST(CalibrateBias, SingleTemperatureHasZeroSpread) {
  auto p = SensorParams::defaults();
  p.t_min_c = 27.0;
  p.t_max_c = 28.0;
  p.t_step_c = 100.0;
  ASSERT_EQ(p.temperature_grid().size(), 1u);
  const auto b = calibrate_bias(p, calibrated().ztc, 49e-6);
  EXPECT_EQ(b.spread, 0.0);
  const auto op = dc_operating_point(build_sensor(p, b), kNominalTemperature);
  EXPECT_NEAR(adder_current(op), 49e-6, 1e-3 * 49e-6);
}

TEST(CalibrateBias, RejectsUnreachableTarget) {
  EXPECT_THROW(calibrate_bias(SensorParams::defaults(), calibrated().ztc, 5e-3), CalibrationError);
  EXPECT_THROW(calibrate_bias(SensorParams::defaults(), calibrated().ztc, -1.0), SpecError);
}

TEST(TrimBias, RestoresTargetUnderCorner) {
  const auto& c = calibrated();
  const auto ss = c.params.at_corner(Corner::slow());
  const auto t = trim_bias(ss, c.bias, 49e-6);
  EXPECT_EQ(t.divider_resistances[0], c.bias.divider_resistances[0]);
  EXPECT_EQ(t.divider_resistances[1], c.bias.divider_resistances[1]);
  const auto op = dc_operating_point(build_sensor(ss, t), kNominalTemperature);
  EXPECT_NEAR(adder_current(op), 49e-6, 0.01 * 49e-6);
}

TEST(SensorParams, Validation) {
  auto p = SensorParams::defaults();
  EXPECT_NO_THROW(p.validate());
  p.vdd = 0.0;
  EXPECT_THROW(p.validate(), SpecError);
  p = SensorParams::defaults();
  p.adder.width = 0.0;
  EXPECT_THROW(p.validate(), SpecError);
  p = SensorParams::defaults();
  p.t_max_c = p.t_min_c;
  EXPECT_THROW(p.validate(), SpecError);
}

// Exhaustive 200 x 200 search over (vgs1, vgs2). The bias-node voltages do not
// depend on the tap ratios, so each cell reduces to a scalar KCL solve at the
// sum node using the device equations directly.
TEST(CalibrateBias, GridOracle) {
  const auto& c = calibrated();
  const auto& p = c.params;
  const auto temps = p.temperature_grid();
  const auto sweep = dc_sweep(c.circuit, SweepKnob::temperature(), temps, kNominalTemperature);
  std::vector<double> vb(temps.size()), vc(temps.size());
  for (std::size_t k = 0; k < temps.size(); ++k) {
    vb[k] = sweep.points[k].voltage(names::kBiasNode);
    vc[k] = sweep.points[k].voltage(names::kCtatBiasNode);
  }
  const auto op27 = dc_operating_point(c.circuit, kNominalTemperature);
  const double vb27 = op27.voltage(names::kBiasNode);
  const double vc27 = op27.voltage(names::kCtatBiasNode);

  const auto& pc = p.pmos_card;
  const auto& nc = p.nmos_card;
  auto pmos = [&](double wl, double vg, double vd, double t) {
    return -mosfet_current(pc, wl, vg - p.vdd, vd - p.vdd, t).id;
  };
  auto adder = [&](double gp, double gc, double t) {
    double lo = 0.0;
    double hi = p.vdd;
    for (int it = 0; it < 60; ++it) {
      const double v = 0.5 * (lo + hi);
      const double net = pmos(p.ptat.w_over_l(), gp, v, t) + pmos(p.ctat.w_over_l(), gc, v, t) -
                         diode_id(nc, p.adder.w_over_l(), v, t);
      (net > 0.0 ? lo : hi) = v;
    }
    return diode_id(nc, p.adder.w_over_l(), 0.5 * (lo + hi), t);
  };

  const double lo1 = p.vdd - vb27 + 1e-3;
  const double hi1 = c.ztc.v_ztc;
  const double lo2 = std::max(c.ztc.v_ztc, p.vdd - vc27 + 1e-3);
  const double hi2 = p.vdd - 1e-3;
  constexpr int kN = 200;
  double grid_best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kN; ++i) {
    const double fp = (p.vdd - (lo1 + (hi1 - lo1) * i / (kN - 1))) / vb27;
    for (int j = 0; j < kN; ++j) {
      const double fc = (p.vdd - (lo2 + (hi2 - lo2) * j / (kN - 1))) / vc27;
      if (std::abs(adder(fp * vb27, fc * vc27, kNominalTemperature) - 49e-6) > 0.01 * 49e-6) continue;
      double mn = std::numeric_limits<double>::infinity();
      double mx = -mn;
      for (std::size_t k = 0; k < temps.size(); ++k) {
        const double ia = adder(fp * vb[k], fc * vc[k], temps[k]);
        mn = std::min(mn, ia);
        mx = std::max(mx, ia);
      }
      grid_best = std::min(grid_best, mx - mn);
    }
  }
  ASSERT_TRUE(std::isfinite(grid_best));
  EXPECT_LE(c.bias.spread, 1.05 * grid_best);
}

TEST(BuildSensor, ShippedNetlistMatches) {
  std::ifstream f(ZTCSENSE_DATA_DIR "/sensor_tt.cir");
  ASSERT_TRUE(f.good());
  std::stringstream text;
  text << f.rdbuf();
  EXPECT_EQ(parse_netlist(text.str()), calibrated().circuit);
  EXPECT_EQ(serialize_netlist(calibrated().circuit), text.str());
}
