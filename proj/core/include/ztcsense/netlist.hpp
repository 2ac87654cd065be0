#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ztcsense/devices.hpp"
#include "ztcsense/waveform.hpp"

namespace ztcsense {

enum class DeviceKind { Mosfet, Resistor, Capacitor, VoltageSource };

/// One netlist element. Terminal order follows the card syntax:
/// MOSFET (drain, gate, source, bulk), two-terminal elements (n1, n2),
/// voltage source (n+, n-).
struct Device {
  std::string name;
  DeviceKind kind = DeviceKind::Resistor;
  std::vector<std::string> terminals;
  std::string model;     // MOSFET only, lower case
  double width = 0.0;    // m, MOSFET only
  double length = 0.0;   // m, MOSFET only
  double value = 0.0;    // ohms or farads
  Waveform waveform;     // voltage source only

  bool operator==(const Device&) const = default;

  double w_over_l() const noexcept { return width / length; }
};

/// Validated device/node graph. Node names are lower case, node "0" is ground
/// and is always the first entry. Nodes appear in order of first reference.
class Circuit {
 public:
  Circuit();

  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const std::vector<Device>& devices() const noexcept { return devices_; }
  const std::map<std::string, ModelCard>& model_cards() const noexcept { return models_; }
  double temperature() const noexcept { return temperature_; }

  /// Index into nodes(); nullopt for an unknown name. "gnd" resolves to ground.
  std::optional<std::size_t> node_index(std::string_view name) const;
  /// Index into devices() by case-insensitive name.
  std::optional<std::size_t> device_index(std::string_view name) const;
  const Device& device(std::string_view name) const;
  const ModelCard& model_for(const Device& mosfet) const;

  std::size_t mosfet_count() const;

  // Mutators keep every invariant; they throw SemanticError on violation.
  void add_model(ModelCard card);
  void set_model(ModelCard card);  // replace an existing card
  void set_temperature(double kelvin);
  Device& add_device(Device device);
  void add_mosfet(std::string name, std::string drain, std::string gate, std::string source,
                  std::string bulk, std::string model, double width, double length);
  void add_resistor(std::string name, std::string n1, std::string n2, double ohms);
  void add_capacitor(std::string name, std::string n1, std::string n2, double farads);
  void add_voltage_source(std::string name, std::string positive, std::string negative,
                          Waveform waveform);
  void set_waveform(std::string_view source_name, Waveform waveform);
  /// Rewires one terminal of an existing device.
  void reconnect(std::string_view device_name, std::size_t terminal, std::string node);

  bool operator==(const Circuit&) const = default;

 private:
  std::string intern_node(std::string name);
  void validate_device(const Device& device) const;

  std::vector<std::string> nodes_;
  std::vector<Device> devices_;
  std::map<std::string, ModelCard> models_;
  double temperature_ = kNominalTemperature;
};

/// Canonical node spelling: lower case, "gnd" mapped to "0".
std::string canonical_node(std::string_view name);

/// Parses the SPICE-subset grammar:
///
///     M<name> <d> <g> <s> <b> <model> W=<val> L=<val>
///     R<name> <n1> <n2> <ohms>
///     C<name> <n1> <n2> <farads>
///     V<name> <n+> <n-> DC <volts> [PWL( t1 v1 ... )] [AC <mag>]
///     .MODEL <name> NMOS|PMOS ( VTO= KP= LAMBDA= TCV= BEX= CGS= CGD= )
///     .TEMP <celsius>
///     .END
///
/// `*` starts a comment line, `+` continues the previous statement. Models may
/// be declared after their first use. Throws SyntaxError or SemanticError.
Circuit parse_netlist(std::string_view text);

/// Emits text that parses back to an equal Circuit.
std::string serialize_netlist(const Circuit& circuit);

/// Resolves a numeric literal with an optional SI suffix (f p n u m k meg g t).
/// Returns nullopt when the text is not a valid value.
std::optional<double> parse_value(std::string_view text);

}  // namespace ztcsense
