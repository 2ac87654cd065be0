#pragma once

#include <string_view>

#include "ztcsense/devices.hpp"
#include "ztcsense/netlist.hpp"
#include "ztcsense/waveform.hpp"

namespace ztcsense {

/// Supply dip on one branch pin. Times in seconds.
struct GlitchSpec {
  double v_nominal = 1.8;
  double v_glitch = 0.8;
  double t_start = 1e-9;
  double duration = 100e-12;
  double edge_time = 10e-12;

  /// Throws SpecError.
  void validate() const;
};

/// v_nominal, ramp to v_glitch over edge_time, hold, ramp back, all within `duration`.
Waveform glitch_waveform(const GlitchSpec& spec);

enum class Branch { Ptat, Ctat };

/// Copy of `sensor` whose target branch supply carries the glitch.
/// Throws TopologyError when the branch supply is missing.
Circuit apply_underpower(const Circuit& sensor, Branch target, const GlitchSpec& spec);

enum class TrojanState { Armed, Triggered };

struct TrojanSpec {
  TrojanState state = TrojanState::Armed;
  double delta_bias = 1.0;               // V added to the PTAT gate when triggered
  double leakage_conductance = 7.5e-6;   // S, bias node to ground

  void validate() const;
};

inline constexpr const char* kTrojanLeak = "RTROJ";
inline constexpr const char* kTrojanSource = "VTROJ";
inline constexpr const char* kTrojanGateNode = "gp_troj";

/// Armed: leakage from the PTAT bias node to ground. Triggered: also a series
/// source lifting the PTAT gate by delta_bias.
Circuit apply_trojan(const Circuit& sensor, const TrojanSpec& spec);

/// Every model card replaced by its corner version.
Circuit apply_corner(const Circuit& circuit, const Corner& corner);

enum class Scenario { Golden, UnderpowerPtat, UnderpowerCtat, TrojanArmed, TrojanTriggered };

/// golden, underpower-ptat, underpower-ctat, trojan-armed, trojan-triggered.
Scenario parse_scenario(std::string_view text);
std::string_view to_string(Scenario scenario);

Circuit apply_scenario(const Circuit& golden, Scenario scenario, const GlitchSpec& glitch = {},
                       const TrojanSpec& trojan = {});

}  // namespace ztcsense
