#include "ztcsense/engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "ztcsense/errors.hpp"

namespace ztcsense {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kSourceTolerance = 1e-9;  // V, branch-equation residual
constexpr double kGminFloor = 1e-12;

struct CompiledDevice {
  DeviceKind kind;
  int a = -1, b = -1, c = -1;  // unknown indices, -1 = ground (MOSFET: d, g, s)
  const ModelCard* card = nullptr;
  double w_over_l = 0.0;
  double value = 0.0;
  const Waveform* waveform = nullptr;
  int row = -1;  // source branch-current unknown
};

struct CompiledCap {
  int a = -1, b = -1;
  double capacitance = 0.0;
  int device = -1;  // explicit capacitor device, -1 for MOSFET overlap caps
};

struct Compiled {
  int node_unknowns = 0;
  int size = 0;
  std::vector<CompiledDevice> devices;
  std::vector<CompiledCap> caps;
};

Compiled compile(const Circuit& circuit) {
  Compiled m;
  m.node_unknowns = static_cast<int>(circuit.nodes().size()) - 1;
  int next_row = m.node_unknowns;
  auto idx = [&](const std::string& node) {
    return static_cast<int>(*circuit.node_index(node)) - 1;
  };
  const auto& devices = circuit.devices();
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const Device& d = devices[i];
    CompiledDevice cd;
    cd.kind = d.kind;
    switch (d.kind) {
      case DeviceKind::Mosfet:
        cd.a = idx(d.terminals[0]);
        cd.b = idx(d.terminals[1]);
        cd.c = idx(d.terminals[2]);
        cd.card = &circuit.model_for(d);
        cd.w_over_l = d.w_over_l();
        if (cd.card->cgs > 0.0) m.caps.push_back({cd.b, cd.c, cd.card->cgs, -1});
        if (cd.card->cgd > 0.0) m.caps.push_back({cd.b, cd.a, cd.card->cgd, -1});
        break;
      case DeviceKind::Resistor:
        cd.a = idx(d.terminals[0]);
        cd.b = idx(d.terminals[1]);
        cd.value = 1.0 / d.value;
        break;
      case DeviceKind::Capacitor:
        cd.a = idx(d.terminals[0]);
        cd.b = idx(d.terminals[1]);
        cd.value = d.value;
        m.caps.push_back({cd.a, cd.b, d.value, static_cast<int>(i)});
        break;
      case DeviceKind::VoltageSource:
        cd.a = idx(d.terminals[0]);
        cd.b = idx(d.terminals[1]);
        cd.waveform = &d.waveform;
        cd.row = next_row++;
        break;
    }
    m.devices.push_back(cd);
  }
  m.size = next_row;
  return m;
}

/// Trapezoidal companion state of every capacitor.
struct CapState {
  std::vector<double> voltage;
  std::vector<double> current;
  double geq_per_farad = 0.0;  // 2 / dt
};

struct Context {
  double temperature = kNominalTemperature;
  bool time_domain = false;
  double time = 0.0;
  double source_scale = 1.0;
  double gmin = 0.0;
  const CapState* caps = nullptr;
};

inline double at(const Vec& x, int i) { return i < 0 ? 0.0 : x[i]; }

double source_value(const CompiledDevice& d, const Context& ctx) {
  const double v = ctx.time_domain ? d.waveform->value_at(ctx.time) : d.waveform->dc;
  return ctx.source_scale * v;
}

class Assembler {
 public:
  Assembler(const Compiled& m) : m_(m), f_(m.size), j_(m.size, m.size) {}

  void assemble(const Vec& x, const Context& ctx) {
    f_.setZero();
    j_.setZero();
    for (const auto& d : m_.devices) {
      switch (d.kind) {
        case DeviceKind::Resistor: {
          const double i = d.value * (at(x, d.a) - at(x, d.b));
          add_branch(d.a, d.b, i);
          add_conductance(d.a, d.b, d.value);
          break;
        }
        case DeviceKind::Capacitor:
          break;  // handled with the companion models below
        case DeviceKind::VoltageSource: {
          add_branch(d.a, d.b, x[d.row]);
          if (d.a >= 0) j_(d.a, d.row) += 1.0;
          if (d.b >= 0) j_(d.b, d.row) -= 1.0;
          f_[d.row] = at(x, d.a) - at(x, d.b) - source_value(d, ctx);
          if (d.a >= 0) j_(d.row, d.a) += 1.0;
          if (d.b >= 0) j_(d.row, d.b) -= 1.0;
          break;
        }
        case DeviceKind::Mosfet: {
          const auto st = mosfet_stamp(*d.card, d.w_over_l, at(x, d.a), at(x, d.b), at(x, d.c),
                                       ctx.temperature);
          add_branch(d.a, d.c, st.id);
          const int cols[3] = {d.a, d.b, d.c};
          const double grads[3] = {st.d_vd, st.d_vg, st.d_vs};
          for (int k = 0; k < 3; ++k) {
            if (cols[k] < 0) continue;
            if (d.a >= 0) j_(d.a, cols[k]) += grads[k];
            if (d.c >= 0) j_(d.c, cols[k]) -= grads[k];
          }
          break;
        }
      }
    }
    if (ctx.caps) {
      const auto& cs = *ctx.caps;
      for (std::size_t k = 0; k < m_.caps.size(); ++k) {
        const auto& c = m_.caps[k];
        const double geq = cs.geq_per_farad * c.capacitance;
        const double i = geq * (at(x, c.a) - at(x, c.b) - cs.voltage[k]) - cs.current[k];
        add_branch(c.a, c.b, i);
        add_conductance(c.a, c.b, geq);
      }
    }
    if (ctx.gmin > 0.0) {
      for (int n = 0; n < m_.node_unknowns; ++n) {
        f_[n] += ctx.gmin * x[n];
        j_(n, n) += ctx.gmin;
      }
    }
  }

  double kcl_residual() const {
    return m_.node_unknowns ? f_.head(m_.node_unknowns).cwiseAbs().maxCoeff() : 0.0;
  }
  double source_residual() const {
    const int ns = m_.size - m_.node_unknowns;
    return ns ? f_.tail(ns).cwiseAbs().maxCoeff() : 0.0;
  }

  const Vec& residual() const { return f_; }
  const Mat& jacobian() const { return j_; }

 private:
  void add_branch(int a, int b, double i) {
    if (a >= 0) f_[a] += i;
    if (b >= 0) f_[b] -= i;
  }
  void add_conductance(int a, int b, double g) {
    if (a >= 0) j_(a, a) += g;
    if (b >= 0) j_(b, b) += g;
    if (a >= 0 && b >= 0) {
      j_(a, b) -= g;
      j_(b, a) -= g;
    }
  }

  const Compiled& m_;
  Vec f_;
  Mat j_;
};

template <typename Lu>
bool lu_is_singular(const Lu& lu) {
  const auto diag = lu.matrixLU().diagonal().cwiseAbs();
  if (diag.size() == 0) return false;
  const double hi = diag.maxCoeff();
  const double lo = diag.minCoeff();
  return !(hi > 0.0) || !std::isfinite(hi) || lo <= hi * 1e-15;
}

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

NewtonOutcome newton(const Compiled& m, Vec& x, const Context& ctx, const SolverOptions& opt) {
  NewtonOutcome out;
  if (m.size == 0) {
    out.converged = true;
    return out;
  }
  Assembler as(m);
  Vec trial = x;
  double last_step = HUGE_VAL;
  for (int it = 0; it <= opt.max_iterations; ++it) {
    as.assemble(trial, ctx);
    out.iterations = it;
    out.residual = as.kcl_residual();
    if (!std::isfinite(out.residual)) return out;
    if (last_step < opt.voltage_tolerance && out.residual < opt.current_tolerance &&
        as.source_residual() < kSourceTolerance) {
      out.converged = true;
      x = trial;
      return out;
    }
    if (it == opt.max_iterations) break;
    Eigen::PartialPivLU<Mat> lu(as.jacobian());
    if (lu_is_singular(lu)) return out;
    Vec dx = lu.solve(-as.residual());
    if (!dx.allFinite()) return out;
    double step = m.node_unknowns ? dx.head(m.node_unknowns).cwiseAbs().maxCoeff() : 0.0;
    if (step > opt.max_voltage_step) {
      dx *= opt.max_voltage_step / step;
      step = HUGE_VAL;  // a clamped step never counts as converged
    }
    trial += dx;
    last_step = step;
  }
  return out;
}

/// Plain Newton, then gmin stepping, then source stepping.
NewtonOutcome solve_dc(const Compiled& m, Vec& x, Context ctx, const SolverOptions& opt) {
  Vec start = x;
  NewtonOutcome plain = newton(m, x, ctx, opt);
  if (plain.converged) return plain;
  int total = plain.iterations;

  // gmin stepping: 1e-3 S down to 1e-12 S in decades, then release.
  {
    Vec g = start;
    bool ok = true;
    for (int e = 3; e <= 12; ++e) {
      ctx.gmin = std::pow(10.0, -e);
      auto r = newton(m, g, ctx, opt);
      total += r.iterations;
      if (!r.converged) {
        ok = false;
        break;
      }
    }
    if (ok) {
      Vec released = g;
      ctx.gmin = 0.0;
      auto r = newton(m, released, ctx, opt);
      total += r.iterations;
      if (r.converged) {
        x = released;
        return {true, total, r.residual};
      }
      ctx.gmin = kGminFloor;
      x = g;
      return {true, total, r.residual};
    }
  }

  // Source stepping: 10 % increments with the gmin floor, then release.
  {
    Vec s = Vec::Zero(m.size);
    ctx.gmin = kGminFloor;
    bool ok = true;
    NewtonOutcome last;
    for (int k = 1; k <= 10; ++k) {
      ctx.source_scale = k / 10.0;
      last = newton(m, s, ctx, opt);
      total += last.iterations;
      if (!last.converged) {
        ok = false;
        break;
      }
    }
    if (ok) {
      Vec released = s;
      ctx.gmin = 0.0;
      auto r = newton(m, released, ctx, opt);
      total += r.iterations;
      x = r.converged ? released : s;
      return {true, total, r.residual};
    }
    return {false, total, last.residual};
  }
}

std::vector<double> branch_currents(const Compiled& m, const Vec& x, double temperature,
                                    const CapState* caps) {
  std::vector<double> out(m.devices.size(), 0.0);
  for (std::size_t i = 0; i < m.devices.size(); ++i) {
    const auto& d = m.devices[i];
    switch (d.kind) {
      case DeviceKind::Resistor:
        out[i] = d.value * (at(x, d.a) - at(x, d.b));
        break;
      case DeviceKind::Capacitor:
        break;
      case DeviceKind::VoltageSource:
        out[i] = x[d.row];
        break;
      case DeviceKind::Mosfet:
        out[i] = mosfet_stamp(*d.card, d.w_over_l, at(x, d.a), at(x, d.b), at(x, d.c), temperature).id;
        break;
    }
  }
  if (caps) {
    for (std::size_t k = 0; k < m.caps.size(); ++k) {
      if (m.caps[k].device >= 0) out[static_cast<std::size_t>(m.caps[k].device)] = caps->current[k];
    }
  }
  return out;
}

std::vector<double> node_voltages(const Compiled& m, const Vec& x) {
  std::vector<double> v(static_cast<std::size_t>(m.node_unknowns) + 1, 0.0);
  for (int n = 0; n < m.node_unknowns; ++n) v[static_cast<std::size_t>(n) + 1] = x[n];
  return v;
}

std::vector<std::string> device_names(const Circuit& c) {
  std::vector<std::string> names;
  for (const auto& d : c.devices()) names.push_back(d.name);
  return names;
}

Vec unknowns_from(const Compiled& m, const OperatingPoint& op) {
  Vec x = Vec::Zero(m.size);
  for (int n = 0; n < m.node_unknowns; ++n) x[n] = op.node_voltages[static_cast<std::size_t>(n) + 1];
  for (std::size_t i = 0; i < m.devices.size(); ++i) {
    if (m.devices[i].row >= 0) x[m.devices[i].row] = op.branch_currents[i];
  }
  return x;
}

double residual_at(const Compiled& m, const Vec& x, const Context& ctx) {
  if (m.size == 0) return 0.0;
  Assembler as(m);
  as.assemble(x, ctx);
  return as.kcl_residual();
}

OperatingPoint make_op(const Circuit& circuit, const Compiled& m, const Vec& x, double temperature,
                       int iterations, double residual) {
  OperatingPoint op;
  op.node_names = circuit.nodes();
  op.node_voltages = node_voltages(m, x);
  op.device_names = device_names(circuit);
  op.branch_currents = branch_currents(m, x, temperature, nullptr);
  op.temperature = temperature;
  op.newton_iterations = iterations;
  op.max_kcl_residual = residual;
  return op;
}

bool matches(const Compiled& m, const OperatingPoint& op) {
  return op.node_voltages.size() == static_cast<std::size_t>(m.node_unknowns) + 1 &&
         op.branch_currents.size() == m.devices.size();
}

void check_temperature_arg(double t) {
  if (!(t >= kMinTemperature && t <= kMaxTemperature)) {
    throw RangeError("analysis temperature " + std::to_string(t) + " K outside [200 K, 450 K]");
  }
}

}  // namespace

double OperatingPoint::voltage(std::string_view node) const {
  const std::string key = canonical_node(node);
  auto it = std::find(node_names.begin(), node_names.end(), key);
  if (it == node_names.end()) throw ProbeError("no node named '" + std::string(node) + "'");
  return node_voltages[static_cast<std::size_t>(it - node_names.begin())];
}

double OperatingPoint::current(std::string_view device) const {
  for (std::size_t i = 0; i < device_names.size(); ++i) {
    if (device_names[i].size() == device.size() &&
        std::equal(device.begin(), device.end(), device_names[i].begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
        })) {
      return branch_currents[i];
    }
  }
  throw ProbeError("no device named '" + std::string(device) + "'");
}

OperatingPoint dc_operating_point(const Circuit& circuit, double temperature,
                                  const OperatingPoint* initial_guess, const SolverOptions& options) {
  check_temperature_arg(temperature);
  const Compiled m = compile(circuit);
  Vec x = Vec::Zero(m.size);
  if (initial_guess && matches(m, *initial_guess)) x = unknowns_from(m, *initial_guess);
  Context ctx;
  ctx.temperature = temperature;
  auto r = solve_dc(m, x, ctx, options);
  if (!r.converged) throw ConvergenceError(r.iterations, r.residual, "DC operating point did not converge");
  Context plain;
  plain.temperature = temperature;
  return make_op(circuit, m, x, temperature, r.iterations, residual_at(m, x, plain));
}

double kcl_residual(const Circuit& circuit, const OperatingPoint& op) {
  const Compiled m = compile(circuit);
  if (!matches(m, op)) throw ProbeError("operating point does not belong to this circuit");
  Context ctx;
  ctx.temperature = op.temperature;
  return residual_at(m, unknowns_from(m, op), ctx);
}

SweepResult dc_sweep(const Circuit& circuit, const SweepKnob& knob, const std::vector<double>& grid,
                     double temperature, const SolverOptions& options) {
  SweepResult out;
  Circuit work = circuit;
  std::optional<OperatingPoint> previous;
  if (knob.kind == SweepKnob::Kind::SourceValue) {
    const auto idx = circuit.device_index(knob.source);
    if (!idx || circuit.devices()[*idx].kind != DeviceKind::VoltageSource) {
      throw TopologyError("sweep source '" + knob.source + "' not found");
    }
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double t = temperature;
    if (knob.kind == SweepKnob::Kind::SourceValue) {
      Waveform w = circuit.device(knob.source).waveform;
      w.dc = grid[k];
      work.set_waveform(knob.source, w);
    } else {
      t = grid[k];
    }
    try {
      previous = dc_operating_point(work, t, previous ? &*previous : nullptr, options);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(e.iterations(), e.residual(), "DC sweep failed at grid value " +
                                                              std::to_string(grid[k]),
                             static_cast<long>(k));
    }
    out.knob_values.push_back(grid[k]);
    out.points.push_back(*previous);
  }
  return out;
}

double probe_value(const OperatingPoint& op, const Probe& probe) {
  const double raw = probe.kind == Probe::Kind::NodeVoltage ? op.voltage(probe.target)
                                                            : op.current(probe.target);
  return probe.scale * raw;
}

bool TransientTrace::has_probe(std::string_view name) const {
  return std::find(probe_names.begin(), probe_names.end(), name) != probe_names.end();
}

const std::vector<double>& TransientTrace::probe(std::string_view name) const {
  auto it = std::find(probe_names.begin(), probe_names.end(), name);
  if (it == probe_names.end()) throw ProbeError("trace has no probe '" + std::string(name) + "'");
  return probe_series[static_cast<std::size_t>(it - probe_names.begin())];
}

TransientTrace transient(const Circuit& circuit, double t_stop, double dt, double temperature,
                         const std::vector<Probe>& probes, const SolverOptions& options) {
  check_temperature_arg(temperature);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw StepSizeError("time step must be positive");
  if (!(t_stop >= dt)) throw StepSizeError("stop time must be at least one time step");
  for (const auto& d : circuit.devices()) {
    if (d.kind != DeviceKind::VoltageSource) continue;
    if (auto seg = d.waveform.shortest_segment(); seg && dt > *seg * (1.0 + 1e-9)) {
      throw StepSizeError("time step exceeds the shortest PWL segment of source '" + d.name + "'");
    }
  }

  // Resolve probes up front so a bad name fails before any solving.
  struct ResolvedProbe {
    bool node;
    std::size_t index;
  };
  std::vector<ResolvedProbe> resolved;
  for (const auto& p : probes) {
    if (p.kind == Probe::Kind::NodeVoltage) {
      auto idx = circuit.node_index(p.target);
      if (!idx) throw ProbeError("probe '" + p.name + "': no node '" + p.target + "'");
      resolved.push_back({true, *idx});
    } else {
      auto idx = circuit.device_index(p.target);
      if (!idx) throw ProbeError("probe '" + p.name + "': no device '" + p.target + "'");
      resolved.push_back({false, *idx});
    }
  }

  const Compiled m = compile(circuit);
  const auto steps = static_cast<std::size_t>(std::llround(std::floor(t_stop / dt + 1e-9)));

  TransientTrace trace;
  trace.temperature = temperature;
  trace.node_names = circuit.nodes();
  trace.device_names = device_names(circuit);
  trace.times.reserve(steps + 1);
  trace.node_voltages.reserve(steps + 1);
  trace.branch_currents.reserve(steps + 1);

  // The first sample is the DC operating point (DC source levels).
  Context ctx;
  ctx.temperature = temperature;
  Vec x = Vec::Zero(m.size);
  auto r0 = solve_dc(m, x, ctx, options);
  if (!r0.converged) throw ConvergenceError(r0.iterations, r0.residual, "transient initial point", 0);
  double worst = residual_at(m, x, ctx);
  const Vec x0 = x;

  CapState caps;
  caps.voltage.resize(m.caps.size());
  caps.current.assign(m.caps.size(), 0.0);
  for (std::size_t k = 0; k < m.caps.size(); ++k) {
    caps.voltage[k] = at(x, m.caps[k].a) - at(x, m.caps[k].b);
  }

  ctx.time_domain = true;
  ctx.time = 0.0;
  const bool jump_at_start = std::any_of(m.devices.begin(), m.devices.end(), [](const CompiledDevice& d) {
    return d.kind == DeviceKind::VoltageSource && d.waveform->value_at(0.0) != d.waveform->dc;
  });
  if (jump_at_start && !m.caps.empty()) {
    // Sources step at t = 0+: capacitor voltages are continuous but their
    // currents jump. A vanishing backward-Euler step recovers those currents so
    // the trapezoidal history starts consistent.
    const double h = dt * 1e-6;
    caps.geq_per_farad = 1.0 / h;
    ctx.caps = &caps;
    Vec probe = x;
    auto r = newton(m, probe, ctx, options);
    if (!r.converged) throw ConvergenceError(r.iterations, r.residual, "transient start-up step", 0);
    for (std::size_t c = 0; c < m.caps.size(); ++c) {
      const double v = at(probe, m.caps[c].a) - at(probe, m.caps[c].b);
      caps.current[c] = m.caps[c].capacitance / h * (v - caps.voltage[c]);
    }
    x = probe;
  }
  caps.geq_per_farad = 2.0 / dt;

  trace.times.push_back(0.0);
  trace.node_voltages.push_back(node_voltages(m, x0));
  trace.branch_currents.push_back(branch_currents(m, x0, temperature, nullptr));

  ctx.caps = &caps;
  for (std::size_t k = 1; k <= steps; ++k) {
    ctx.time = static_cast<double>(k) * dt;
    auto r = newton(m, x, ctx, options);
    if (!r.converged) {
      throw ConvergenceError(r.iterations, r.residual, "transient step did not converge",
                             static_cast<long>(k));
    }
    worst = std::max(worst, r.residual);
    for (std::size_t c = 0; c < m.caps.size(); ++c) {
      const double v = at(x, m.caps[c].a) - at(x, m.caps[c].b);
      const double geq = caps.geq_per_farad * m.caps[c].capacitance;
      caps.current[c] = geq * (v - caps.voltage[c]) - caps.current[c];
      caps.voltage[c] = v;
    }
    trace.times.push_back(ctx.time);
    trace.node_voltages.push_back(node_voltages(m, x));
    trace.branch_currents.push_back(branch_currents(m, x, temperature, &caps));
  }
  trace.max_kcl_residual = worst;

  for (std::size_t p = 0; p < probes.size(); ++p) {
    trace.probe_names.push_back(probes[p].name);
    std::vector<double> series;
    series.reserve(trace.times.size());
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
      const double raw = resolved[p].node ? trace.node_voltages[k][resolved[p].index]
                                          : trace.branch_currents[k][resolved[p].index];
      series.push_back(probes[p].scale * raw);
    }
    trace.probe_series.push_back(std::move(series));
  }
  return trace;
}

std::vector<AcSample> ac_analysis(const Circuit& circuit, const OperatingPoint& op,
                                  const std::vector<double>& frequencies,
                                  std::string_view input_source, std::string_view output_node) {
  const Compiled m = compile(circuit);
  if (!matches(m, op)) throw ProbeError("operating point does not belong to this circuit");
  const auto src = circuit.device_index(input_source);
  if (!src || circuit.devices()[*src].kind != DeviceKind::VoltageSource) {
    throw TopologyError("AC input source '" + std::string(input_source) + "' not found");
  }
  const auto out_idx = circuit.node_index(output_node);
  if (!out_idx) throw ProbeError("AC output node '" + std::string(output_node) + "' not found");
  const double stimulus = circuit.devices()[*src].waveform.ac_magnitude.value_or(1.0);
  if (!(stimulus > 0.0)) throw DomainError("AC stimulus magnitude must be positive");

  Context ctx;
  ctx.temperature = op.temperature;
  Assembler as(m);
  as.assemble(unknowns_from(m, op), ctx);
  const Mat& g = as.jacobian();

  Mat c = Mat::Zero(m.size, m.size);
  for (const auto& cap : m.caps) {
    if (cap.a >= 0) c(cap.a, cap.a) += cap.capacitance;
    if (cap.b >= 0) c(cap.b, cap.b) += cap.capacitance;
    if (cap.a >= 0 && cap.b >= 0) {
      c(cap.a, cap.b) -= cap.capacitance;
      c(cap.b, cap.a) -= cap.capacitance;
    }
  }

  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(m.size);
  rhs[m.devices[*src].row] = stimulus;
  const int out = static_cast<int>(*out_idx) - 1;

  std::vector<AcSample> samples;
  samples.reserve(frequencies.size());
  for (double f : frequencies) {
    if (!(f > 0.0)) throw DomainError("AC frequency must be positive");
    const double omega = 2.0 * std::numbers::pi * f;
    Eigen::MatrixXcd a = g.cast<std::complex<double>>();
    a += std::complex<double>(0.0, omega) * c.cast<std::complex<double>>();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    if (lu_is_singular(lu)) {
      throw SingularMatrixError("linearized system is singular at " + std::to_string(f) + " Hz");
    }
    Eigen::VectorXcd sol = lu.solve(rhs);
    if (!sol.allFinite()) throw SingularMatrixError("linearized solve produced non-finite values");
    const double mag = out < 0 ? 0.0 : std::abs(sol[out]);
    samples.push_back({f, mag / stimulus});
  }
  return samples;
}

namespace detail {

std::size_t mna_size(const Circuit& circuit) { return static_cast<std::size_t>(compile(circuit).size); }

MnaEvaluation evaluate_mna(const Circuit& circuit, const std::vector<double>& unknowns,
                           double temperature) {
  const Compiled m = compile(circuit);
  if (unknowns.size() != static_cast<std::size_t>(m.size)) throw DomainError("unknown vector size mismatch");
  Vec x = Eigen::Map<const Vec>(unknowns.data(), m.size);
  Context ctx;
  ctx.temperature = temperature;
  Assembler as(m);
  as.assemble(x, ctx);
  MnaEvaluation out;
  out.residual.assign(as.residual().data(), as.residual().data() + m.size);
  out.jacobian.assign(static_cast<std::size_t>(m.size), std::vector<double>(static_cast<std::size_t>(m.size)));
  for (int r = 0; r < m.size; ++r)
    for (int c = 0; c < m.size; ++c) out.jacobian[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = as.jacobian()(r, c);
  return out;
}

}  // namespace detail

std::vector<double> geometric_grid(double f_min, double f_max, int points_per_decade) {
  if (!(f_min > 0.0) || !(f_max >= f_min) || points_per_decade <= 0) {
    throw DomainError("invalid frequency grid");
  }
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double f = f_min * std::pow(10.0, static_cast<double>(i) / points_per_decade);
    if (f >= f_max * (1.0 - 1e-12)) break;
    out.push_back(f);
  }
  out.push_back(f_max);
  return out;
}

std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw DomainError("invalid grid range");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 0.5));
  for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

}  // namespace ztcsense
