#pragma once

#include <string>
#include <string_view>

namespace ztcsense {

/// Nominal model temperature, 27 degC.
inline constexpr double kNominalTemperature = 300.15;
inline constexpr double kZeroCelsius = 273.15;
/// Temperature window accepted by the device equations.
inline constexpr double kMinTemperature = 200.0;
inline constexpr double kMaxTemperature = 450.0;

inline constexpr double to_kelvin(double celsius) noexcept { return celsius + kZeroCelsius; }
inline constexpr double to_celsius(double kelvin) noexcept { return kelvin - kZeroCelsius; }

enum class Polarity { N, P };

/// Level-1 MOSFET parameter set with linear threshold and power-law mobility
/// temperature dependence.
///
/// Values are stored in the n-channel frame: `vth0` is the threshold magnitude
/// for both polarities. The netlist front-end maps PMOS `VTO` (negative by
/// SPICE convention) onto this frame.
struct ModelCard {
  std::string name;
  Polarity polarity = Polarity::N;
  double vth0 = 0.45;    // V at t_nom
  double kp = 3e-4;      // A/V^2
  double lambda = 0.05;  // 1/V
  double tcv = 2e-3;     // V/K, threshold drop per kelvin
  double bex = 1.8;      // mobility exponent
  double cgs = 0.0;      // F
  double cgd = 0.0;      // F
  double t_nom = kNominalTemperature;

  bool operator==(const ModelCard&) const = default;
};

/// Throws SemanticError when a card violates its parameter invariants.
void validate(const ModelCard& card);

/// Threshold magnitude at `temperature` [K]. Throws RangeError outside the window.
double vth_at(const ModelCard& card, double temperature);

/// Transconductance factor kp * (T / t_nom)^-bex.
double kp_at(const ModelCard& card, double temperature);

struct MosfetOperatingPoint {
  double id = 0.0;   // A, drain to source
  double gm = 0.0;   // d id / d vgs
  double gds = 0.0;  // d id / d vds
};

/// Square-law drain current with channel-length modulation.
///
/// For P-channel cards the terminal voltages are given in the device's own sign
/// convention (negative when on); they are negated, evaluated in the n-frame and
/// the current negated back, so gm and gds keep their n-frame sign. `vds` must be
/// non-negative after that normalization. Bulk is assumed tied to source.
MosfetOperatingPoint mosfet_current(const ModelCard& card, double w_over_l, double vgs,
                                    double vds, double temperature);

/// Terminal-voltage evaluation used by the solver: handles source/drain swap
/// for reverse bias. `id` is the current entering the drain terminal, and the
/// partial derivatives are with respect to the drain, gate and source voltages.
struct MosfetStamp {
  double id = 0.0;
  double d_vd = 0.0;
  double d_vg = 0.0;
  double d_vs = 0.0;
};
MosfetStamp mosfet_stamp(const ModelCard& card, double w_over_l, double vd, double vg, double vs,
                         double temperature);

enum class CornerLabel { TT, FF, SS };

struct Corner {
  CornerLabel label = CornerLabel::TT;
  double dvth = 0.0;
  double kp_scale = 1.0;

  static Corner typical() { return {CornerLabel::TT, 0.0, 1.0}; }
  static Corner fast() { return {CornerLabel::FF, -0.04, 1.10}; }
  static Corner slow() { return {CornerLabel::SS, +0.04, 0.90}; }
  static Corner from_label(CornerLabel label);
};

std::string_view to_string(CornerLabel label);
/// Accepts tt/ff/ss in any case; throws SpecError otherwise.
CornerLabel parse_corner(std::string_view text);

/// Shifts the threshold and scales kp; every other field is kept.
ModelCard corner_card(const ModelCard& base, const Corner& corner);

}  // namespace ztcsense
