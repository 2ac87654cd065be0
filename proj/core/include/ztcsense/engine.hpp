#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ztcsense/netlist.hpp"

namespace ztcsense {

/// Newton tolerances. Defaults are the pinned values every test relies on.
struct SolverOptions {
  double voltage_tolerance = 1e-6;  // V, max |dV| at convergence
  double current_tolerance = 1e-9;  // A, max KCL residual at convergence
  int max_iterations = 200;
  double max_voltage_step = 1.0;    // V, Newton update clamp
};

/// Solved DC state. Node voltages follow Circuit::nodes() (ground first);
/// branch currents follow Circuit::devices(): MOSFET drain current, resistor and
/// capacitor current n1->n2, source current entering the + terminal.
struct OperatingPoint {
  std::vector<std::string> node_names;
  std::vector<double> node_voltages;
  std::vector<std::string> device_names;
  std::vector<double> branch_currents;
  double temperature = 0.0;
  int newton_iterations = 0;
  double max_kcl_residual = 0.0;

  double voltage(std::string_view node) const;
  double current(std::string_view device) const;
};

OperatingPoint dc_operating_point(const Circuit& circuit, double temperature,
                                  const OperatingPoint* initial_guess = nullptr,
                                  const SolverOptions& options = {});

/// Largest KCL mismatch of `op` re-evaluated against `circuit` (DC, no gmin).
double kcl_residual(const Circuit& circuit, const OperatingPoint& op);

struct SweepKnob {
  enum class Kind { SourceValue, Temperature };
  Kind kind = Kind::Temperature;
  std::string source;  // for SourceValue

  static SweepKnob temperature() { return {Kind::Temperature, {}}; }
  static SweepKnob source_value(std::string name) { return {Kind::SourceValue, std::move(name)}; }
};

struct SweepResult {
  std::vector<double> knob_values;  // volts or kelvin
  std::vector<OperatingPoint> points;
};

/// One operating point per grid value, each seeded with the previous solution.
/// `temperature` is used for source sweeps. A ConvergenceError carries the grid
/// index in step().
SweepResult dc_sweep(const Circuit& circuit, const SweepKnob& knob, const std::vector<double>& grid,
                     double temperature, const SolverOptions& options = {});

/// Named quantity recorded along a transient run.
struct Probe {
  enum class Kind { DeviceCurrent, NodeVoltage };
  std::string name;
  Kind kind = Kind::DeviceCurrent;
  std::string target;  // device or node name
  double scale = 1.0;  // multiplies the recorded value, e.g. -1 for a PMOS drain current
};

/// Probe reading from a DC solution. Throws ProbeError for an unknown target.
double probe_value(const OperatingPoint& op, const Probe& probe);

struct TransientTrace {
  std::vector<double> times;
  double temperature = 0.0;
  std::vector<std::string> node_names;
  std::vector<std::string> device_names;
  std::vector<std::vector<double>> node_voltages;    // [step][node]
  std::vector<std::vector<double>> branch_currents;  // [step][device]
  std::vector<std::string> probe_names;
  std::vector<std::vector<double>> probe_series;     // [probe][step]
  double max_kcl_residual = 0.0;

  bool has_probe(std::string_view name) const;
  /// Throws ProbeError for an unknown probe name.
  const std::vector<double>& probe(std::string_view name) const;
  double time_step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

/// Fixed-step trapezoidal integration from the t = 0 operating point.
/// Throws StepSizeError when dt exceeds the shortest PWL segment.
TransientTrace transient(const Circuit& circuit, double t_stop, double dt, double temperature,
                         const std::vector<Probe>& probes = {}, const SolverOptions& options = {});

struct AcSample {
  double frequency = 0.0;
  double transfer_magnitude = 0.0;
};

/// Small-signal sweep linearized at `op`. The stimulus is the AC magnitude of
/// `input_source` (unity when the source has none); the result is
/// |V(output_node)| / stimulus. Throws SingularMatrixError.
std::vector<AcSample> ac_analysis(const Circuit& circuit, const OperatingPoint& op,
                                  const std::vector<double>& frequencies,
                                  std::string_view input_source, std::string_view output_node);

namespace detail {

/// DC residual and analytic Jacobian of the MNA system at `unknowns` (node
/// voltages without ground, then source branch currents). Exposed for tests.
struct MnaEvaluation {
  std::vector<double> residual;
  std::vector<std::vector<double>> jacobian;
};
std::size_t mna_size(const Circuit& circuit);
MnaEvaluation evaluate_mna(const Circuit& circuit, const std::vector<double>& unknowns,
                           double temperature);

}  // namespace detail

/// `points_per_decade` logarithmically spaced frequencies from f_min to f_max inclusive.
std::vector<double> geometric_grid(double f_min, double f_max, int points_per_decade);

/// Inclusive arithmetic grid lo, lo+step, ... , hi (within half a step).
std::vector<double> linear_grid(double lo, double hi, double step);

}  // namespace ztcsense
