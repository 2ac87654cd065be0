#include "ztcsense/faults.hpp"

#include <cmath>
#include <string>

#include "ztcsense/errors.hpp"
#include "ztcsense/sensor.hpp"

namespace ztcsense {

namespace names = sensor_names;

void GlitchSpec::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(v_nominal) || !finite(v_glitch) || !finite(t_start) || !finite(duration) ||
      !finite(edge_time)) {
    throw SpecError("glitch: non-finite field");
  }
  if (!(v_glitch >= 0.0 && v_glitch < v_nominal)) {
    throw SpecError("glitch: need 0 <= v_glitch < v_nominal");
  }
  if (!(edge_time > 0.0)) throw SpecError("glitch: edge_time must be positive");
  if (!(duration > 2.0 * edge_time)) throw SpecError("glitch: duration must exceed two edges");
  if (!(t_start >= 0.0)) throw SpecError("glitch: t_start must be non-negative");
}

Waveform glitch_waveform(const GlitchSpec& spec) {
  spec.validate();
  Waveform w;
  w.dc = spec.v_nominal;
  const double t0 = spec.t_start;
  const double t3 = spec.t_start + spec.duration;
  w.pwl = {{t0, spec.v_nominal},
           {t0 + spec.edge_time, spec.v_glitch},
           {t3 - spec.edge_time, spec.v_glitch},
           {t3, spec.v_nominal}};
  return w;
}

Circuit apply_underpower(const Circuit& sensor, Branch target, const GlitchSpec& spec) {
  const char* source = target == Branch::Ptat ? names::kPtatSupply : names::kCtatSupply;
  if (!sensor.device_index(source)) {
    throw TopologyError(std::string("no branch supply '") + source + "' in circuit");
  }
  Circuit out = sensor;
  out.set_waveform(source, glitch_waveform(spec));
  return out;
}

void TrojanSpec::validate() const {
  if (!(delta_bias > 0.0) || !std::isfinite(delta_bias)) {
    throw SpecError("trojan: delta_bias must be positive");
  }
  if (!(leakage_conductance >= 0.0) || !std::isfinite(leakage_conductance)) {
    throw SpecError("trojan: leakage_conductance must be non-negative");
  }
}

Circuit apply_trojan(const Circuit& sensor, const TrojanSpec& spec) {
  spec.validate();
  if (!sensor.node_index(names::kBiasNode) || !sensor.node_index(names::kPtatGate) ||
      !sensor.device_index(names::kPtat)) {
    throw TopologyError("trojan target needs the PTAT bias node, PTAT gate and PTAT device");
  }
  Circuit out = sensor;
  if (spec.leakage_conductance > 0.0) {
    out.add_resistor(kTrojanLeak, names::kBiasNode, "0", 1.0 / spec.leakage_conductance);
  }
  if (spec.state == TrojanState::Triggered) {
    out.add_voltage_source(kTrojanSource, kTrojanGateNode, names::kPtatGate,
                           Waveform{spec.delta_bias, {}, {}});
    out.reconnect(names::kPtat, 1, kTrojanGateNode);
  }
  return out;
}

Circuit apply_corner(const Circuit& circuit, const Corner& corner) {
  Circuit out = circuit;
  for (const auto& [name, card] : circuit.model_cards()) out.set_model(corner_card(card, corner));
  return out;
}

Scenario parse_scenario(std::string_view text) {
  if (text == "golden") return Scenario::Golden;
  if (text == "underpower-ptat") return Scenario::UnderpowerPtat;
  if (text == "underpower-ctat") return Scenario::UnderpowerCtat;
  if (text == "trojan-armed") return Scenario::TrojanArmed;
  if (text == "trojan-triggered") return Scenario::TrojanTriggered;
  throw SpecError("unknown scenario '" + std::string(text) + "'");
}

std::string_view to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::UnderpowerPtat:
      return "underpower-ptat";
    case Scenario::UnderpowerCtat:
      return "underpower-ctat";
    case Scenario::TrojanArmed:
      return "trojan-armed";
    case Scenario::TrojanTriggered:
      return "trojan-triggered";
    case Scenario::Golden:
      break;
  }
  return "golden";
}

Circuit apply_scenario(const Circuit& golden, Scenario scenario, const GlitchSpec& glitch,
                       const TrojanSpec& trojan) {
  switch (scenario) {
    case Scenario::UnderpowerPtat:
      return apply_underpower(golden, Branch::Ptat, glitch);
    case Scenario::UnderpowerCtat:
      return apply_underpower(golden, Branch::Ctat, glitch);
    case Scenario::TrojanArmed: {
      auto spec = trojan;
      spec.state = TrojanState::Armed;
      return apply_trojan(golden, spec);
    }
    case Scenario::TrojanTriggered: {
      auto spec = trojan;
      spec.state = TrojanState::Triggered;
      return apply_trojan(golden, spec);
    }
    case Scenario::Golden:
      break;
  }
  return golden;
}

}  // namespace ztcsense
