#pragma once

#include <string>
#include <vector>

#include "ztcsense/devices.hpp"
#include "ztcsense/engine.hpp"
#include "ztcsense/netlist.hpp"

namespace ztcsense {

/// Element, node and probe names of the sensor netlist.
namespace sensor_names {
inline constexpr const char* kSupply = "VDD";        // bias and detection rail
inline constexpr const char* kPtatSupply = "VPTAT";  // PTAT branch supply pin
inline constexpr const char* kCtatSupply = "VCTAT";  // CTAT branch supply pin
inline constexpr const char* kAdderMeter = "VADD";   // 0 V ammeter in series with the adder

inline constexpr const char* kPtat = "MPTAT";
inline constexpr const char* kCtat = "MCTAT";
inline constexpr const char* kAdder = "MADD";
inline constexpr const char* kDetectTop = "MDET1";
inline constexpr const char* kDetectBottom = "MDET2";
inline constexpr const char* kRefP = "MREFP";
inline constexpr const char* kRefN = "MREFN";
inline constexpr const char* kMirrorPtat = "MMIRP";
inline constexpr const char* kMirrorCtat = "MMIRC";
inline constexpr const char* kStackTop = "MSTK1";
inline constexpr const char* kStackBottom = "MSTK2";

inline constexpr const char* kRefResistor = "RREF";
inline constexpr const char* kPtatTapTop = "RPT";
inline constexpr const char* kPtatTapBottom = "RPB";
inline constexpr const char* kCtatTapTop = "RCT";
inline constexpr const char* kCtatTapBottom = "RCB";

inline constexpr const char* kSupplyNode = "vdd";
inline constexpr const char* kPtatPin = "vptat";
inline constexpr const char* kCtatPin = "vctat";
inline constexpr const char* kBiasNode = "bias";    // PTAT bias node, loaded by the detection branch
inline constexpr const char* kCtatBiasNode = "cbias";
inline constexpr const char* kPtatGate = "gp";
inline constexpr const char* kCtatGate = "gc";
inline constexpr const char* kSumNode = "sum";
inline constexpr const char* kAdderNode = "add";

inline constexpr const char* kProbePtat = "I_PTAT";
inline constexpr const char* kProbeCtat = "I_CTAT";
inline constexpr const char* kProbeAdder = "I_adder";
inline constexpr const char* kProbeDetect = "I_det";
inline constexpr const char* kProbeDetectVoltage = "V_det";
}  // namespace sensor_names

/// W and L in metres.
struct Geometry {
  double width = 1e-6;
  double length = 1e-6;
  double w_over_l() const { return width / length; }
};

/// Bias network that produces both gate taps: a diode reference leg, two PMOS
/// mirrors and a two-diode stack for the CTAT side. The PTAT mirror feeds the
/// detection branch directly.
struct DividerChain {
  Geometry reference_p;
  Geometry reference_n;
  Geometry mirror_ptat;
  Geometry mirror_ctat;
  Geometry ctat_stack;  // both stack devices
  double reference_resistance = 319e3;
  double ptat_tap_resistance = 5e6;    // top plus bottom
  double ctat_tap_resistance = 5e6;    // top plus bottom
};

struct SensorParams {
  double vdd = 1.8;
  ModelCard nmos_card;
  ModelCard pmos_card;
  Geometry ptat;
  Geometry ctat;
  Geometry adder;
  Geometry detection;  // both detection-branch devices
  DividerChain divider;
  // Gate-to-bulk capacitance of the sensing PMOS; their n-well sits on VDD.
  double ptat_gate_cap = 0.0;    // F
  double ctat_gate_cap = 7e-15;  // F
  double t_min_c = -40.0;
  double t_max_c = 125.0;
  double t_step_c = 5.0;

  /// Shipped defaults that satisfy the calibration targets.
  static SensorParams defaults();
  /// Throws SpecError on an invalid field.
  void validate() const;
  /// Kelvin grid from t_min_c to t_max_c inclusive.
  std::vector<double> temperature_grid() const;
  /// Copy with both cards moved to `corner`.
  SensorParams at_corner(const Corner& corner) const;
};

struct ZtcResult {
  double v_ztc = 0.0;
  double spread_at_ztc = 0.0;       // amperes
  std::vector<double> vgs_grid;     // volts
  std::vector<double> temp_grid;    // kelvin
  std::vector<double> grid_spread;  // spread at each vgs_grid point
};

/// Gate biases of the two sensing devices at 27 C, as source-to-gate magnitudes.
struct BiasSetting {
  double vgs1 = 0.0;  // PTAT gate, at or below V_ZTC
  double vgs2 = 0.0;  // CTAT gate, at or above V_ZTC
  /// PTAT tap top, PTAT tap bottom, CTAT tap top, CTAT tap bottom. Empty means
  /// derive from vgs1/vgs2 at build time.
  std::vector<double> divider_resistances;
  double i_target = 49e-6;
  double spread = 0.0;  // max-min adder current over the calibration grid, amperes
};

/// Diode-connected sweep of `card` at `w_over_l`; the VGS minimizing the
/// across-temperature current spread, refined to 0.1 mV.
/// Throws NoZtcError when the spread has no interior minimum on the grid.
ZtcResult find_ztc(const ModelCard& card, double w_over_l, const std::vector<double>& vgs_grid,
                   const std::vector<double>& temp_grid);

/// First-order closed form Vth(T) + 2*tcv*T/bex.
double analytic_ztc(const ModelCard& card, double temperature);

/// Grid that satisfies find_ztc's span requirement for `card`.
std::vector<double> default_vgs_grid(const ModelCard& card, const std::vector<double>& temp_grid);

/// Tap resistances placing the PTAT gate at vdd - vgs1 and the CTAT gate at
/// vdd - vgs2 at 27 C. Throws CalibrationError when a tap is out of reach.
std::vector<double> realize_dividers(const SensorParams& params, double vgs1, double vgs2);

Circuit build_sensor(const SensorParams& params, const BiasSetting& bias);

/// I_PTAT, I_CTAT, I_adder, I_det and V_det.
std::vector<Probe> sensor_probes();

/// Adder current of a solved sensor operating point (current through the ammeter).
double adder_current(const OperatingPoint& op);

/// Adder current over params.temperature_grid().
std::vector<double> adder_current_vs_temperature(const Circuit& sensor, const SensorParams& params);

/// Nested search: golden section over vgs1 in the PTAT region, and for each
/// vgs1 a root-find on vgs2 so the 27 C adder current equals i_target.
/// Throws CalibrationError when the best spread exceeds 2 % of i_target.
BiasSetting calibrate_bias(const SensorParams& params, const ZtcResult& ztc, double i_target = 49e-6);

/// Keeps vgs1 and re-solves vgs2 so the 27 C adder current is i_target again
/// under `params` (a one-point room-temperature trim).
BiasSetting trim_bias(const SensorParams& params, const BiasSetting& bias, double i_target);

/// find_ztc on the N card plus calibrate_bias, with the shipped grids.
BiasSetting default_calibration(const SensorParams& params, double i_target = 49e-6);

}  // namespace ztcsense
