#include "ztcsense/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "json.hpp"
#include "ztcsense/errors.hpp"

namespace ztcsense {

namespace names = sensor_names;

double sigma(double i_realtime, double i_ref) {
  if (!(i_ref > 0.0)) throw DomainError("sigma: i_ref must be positive");
  return (i_realtime - i_ref) / i_ref;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::UnderPowerSuspected:
      return "UnderPowerSuspected";
    case Verdict::TrojanSuspected:
      return "TrojanSuspected";
    case Verdict::Anomalous:
      return "Anomalous";
    case Verdict::FaultFree:
      break;
  }
  return "FaultFree";
}

DetectionReport analyze_trace(const TransientTrace& trace, double i_ref,
                              const TraceAnalysisOptions& options) {
  if (!(i_ref > 0.0)) throw DomainError("analyze_trace: i_ref must be positive");
  const auto& current = trace.probe(names::kProbeAdder);
  const double thr = options.spike_threshold;

  DetectionReport r;
  r.threshold = thr;
  const std::size_t n = current.size();
  r.samples.reserve(n);
  std::optional<std::size_t> first;
  std::optional<std::size_t> last;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = sigma(current[k], i_ref);
    r.samples.push_back({trace.times[k], current[k], i_ref, s});
    r.spike_magnitude = std::max(r.spike_magnitude, std::abs(s));
    if (std::abs(s) > thr) {
      if (!first) first = k;
      last = k;
    }
  }
  if (n == 0) return r;

  const std::size_t tail = std::max<std::size_t>(1, n / 5);
  double acc = 0.0;
  for (std::size_t k = n - tail; k < n; ++k) acc += std::abs(r.samples[k].sigma);
  r.sustained_deviation = acc / static_cast<double>(tail);

  const std::size_t from = last ? *last + 1 : 0;
  if (from < n) {
    const auto [lo, hi] = std::minmax_element(
        r.samples.begin() + static_cast<std::ptrdiff_t>(from), r.samples.end(),
        [](const SigmaSample& a, const SigmaSample& b) { return a.sigma < b.sigma; });
    r.residual_vibration = hi->sigma - lo->sigma;
  }

  if (!first) {
    r.verdict = Verdict::FaultFree;
    return r;
  }
  r.detection_latency = std::max(0.0, trace.times[*first] - options.fault_onset.value_or(0.0));

  const std::size_t window = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, options.sustain_samples)));
  bool all_out = true;
  bool all_in = true;
  for (std::size_t k = n - window; k < n; ++k) {
    const bool out = std::abs(r.samples[k].sigma) > thr;
    all_out = all_out && out;
    all_in = all_in && !out;
  }
  if (all_out) {
    r.verdict = Verdict::TrojanSuspected;
  } else if (all_in) {
    r.verdict = Verdict::UnderPowerSuspected;
  } else {
    r.verdict = Verdict::Anomalous;
  }
  return r;
}

double pssr_db(double transfer_magnitude) {
  if (!(transfer_magnitude > 0.0) || !std::isfinite(transfer_magnitude)) {
    throw DomainError("pssr: transfer magnitude must be positive");
  }
  return 20.0 * std::log10(transfer_magnitude);
}

double pssr_db(double v_supply, double v_out) {
  if (!(v_supply > 0.0) || !(v_out > 0.0)) throw DomainError("pssr: ripple amplitudes must be positive");
  return -20.0 * std::log10(v_supply / v_out);
}

std::vector<std::pair<double, double>> pssr(const std::vector<AcSample>& samples) {
  std::vector<std::pair<double, double>> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.emplace_back(s.frequency, pssr_db(s.transfer_magnitude));
  return out;
}

std::vector<std::pair<double, double>> sensor_pssr(const Circuit& sensor,
                                                   const std::vector<double>& frequencies) {
  const auto op = dc_operating_point(sensor, kNominalTemperature);
  return pssr(ac_analysis(sensor, op, frequencies, names::kSupply, names::kSumNode));
}

ArmedTrojanCheck detect_armed_trojan(const OperatingPoint& golden, const OperatingPoint& suspect) {
  const Probe probe{names::kProbeDetect, Probe::Kind::DeviceCurrent, names::kDetectTop, 1.0};
  ArmedTrojanCheck r;
  r.delta_i = std::abs(probe_value(golden, probe) - probe_value(suspect, probe));
  r.detected = r.delta_i >= kArmedTrojanThreshold;
  return r;
}

namespace {

double solve_adder(const Circuit& c, double temp_c, const std::string& cell) {
  try {
    return adder_current(dc_operating_point(c, to_kelvin(temp_c)));
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(e.iterations(), e.residual(), cell + ": " + e.what(), e.step());
  }
}

std::string cell_name(std::string_view row, double temp_c) {
  return std::string(row) + " at " + std::to_string(temp_c) + " C";
}

}  // namespace

CornerTable corner_table(const SensorParams& params, const BiasSetting& bias,
                         const std::vector<double>& temps_c, bool retrim) {
  BiasSetting base = bias;
  if (base.divider_resistances.empty()) {
    base.divider_resistances = realize_dividers(params, bias.vgs1, bias.vgs2);
  }
  CornerTable t;
  t.temps_c = temps_c;
  t.corners = {CornerLabel::TT, CornerLabel::FF, CornerLabel::SS};
  const Circuit typical = build_sensor(params, base);
  t.i_ref = solve_adder(typical, to_celsius(kNominalTemperature), "TT reference");

  for (auto label : t.corners) {
    Circuit c = typical;
    if (label != CornerLabel::TT) {
      const auto p = params.at_corner(Corner::from_label(label));
      c = build_sensor(p, retrim ? trim_bias(p, base, t.i_ref) : base);
    }
    std::vector<double> row;
    row.reserve(temps_c.size());
    for (double tc : temps_c) {
      const double i = solve_adder(c, tc, cell_name(to_string(label), tc));
      row.push_back(100.0 * (i - t.i_ref) / t.i_ref);
    }
    t.percent.push_back(std::move(row));
  }
  return t;
}

TrojanTable trojan_table(const SensorParams& params, const BiasSetting& bias, const TrojanSpec& trojan,
                         const std::vector<double>& temps_c) {
  const Circuit golden = build_sensor(params, bias);
  auto spec = trojan;
  spec.state = TrojanState::Armed;
  const Circuit armed = apply_trojan(golden, spec);
  spec.state = TrojanState::Triggered;
  const Circuit triggered = apply_trojan(golden, spec);

  TrojanTable t;
  t.temps_c = temps_c;
  for (double tc : temps_c) {
    t.free.push_back(solve_adder(golden, tc, cell_name("free", tc)));
    t.armed.push_back(solve_adder(armed, tc, cell_name("armed", tc)));
    t.triggered.push_back(solve_adder(triggered, tc, cell_name("triggered", tc)));
  }
  return t;
}

double power_estimate(const Circuit& circuit, const OperatingPoint& op) {
  double total = 0.0;
  for (const auto& d : circuit.devices()) {
    if (d.kind != DeviceKind::VoltageSource) continue;
    const double v = op.voltage(d.terminals[0]) - op.voltage(d.terminals[1]);
    total += -v * op.current(d.name);
  }
  return total;
}

std::string report_json(const DetectionReport& report) {
  nlohmann::ordered_json j;
  j["verdict"] = std::string(to_string(report.verdict));
  j["spike_magnitude"] = report.spike_magnitude;
  j["residual_vibration"] = report.residual_vibration;
  j["sustained_deviation"] = report.sustained_deviation;
  if (report.detection_latency) {
    j["detection_latency_s"] = *report.detection_latency;
  } else {
    j["detection_latency_s"] = nullptr;
  }
  j["threshold"] = report.threshold;
  return j.dump(2);
}

}  // namespace ztcsense
