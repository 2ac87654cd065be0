#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ztcsense/engine.hpp"
#include "ztcsense/faults.hpp"
#include "ztcsense/sensor.hpp"

namespace ztcsense {

struct SigmaSample {
  double time = 0.0;
  double i_realtime = 0.0;
  double i_ref = 0.0;
  double sigma = 0.0;
};

/// (i_realtime - i_ref) / i_ref. Throws DomainError when i_ref <= 0.
double sigma(double i_realtime, double i_ref);

enum class Verdict { FaultFree, UnderPowerSuspected, TrojanSuspected, Anomalous };
std::string_view to_string(Verdict verdict);

struct DetectionReport {
  Verdict verdict = Verdict::FaultFree;
  double spike_magnitude = 0.0;      // max |sigma|
  double residual_vibration = 0.0;   // max - min of sigma after the last threshold crossing
  double sustained_deviation = 0.0;  // mean |sigma| over the final 20 % of samples
  std::optional<double> detection_latency;  // s, absent when FaultFree
  double threshold = 0.10;
  std::vector<SigmaSample> samples;
};

struct TraceAnalysisOptions {
  double spike_threshold = 0.10;
  int sustain_samples = 5;
  /// Fault onset in seconds; latency is measured from 0 when unset.
  std::optional<double> fault_onset;
};

/// Classifies the I_adder probe of `trace` against i_ref.
/// Throws ProbeError without an I_adder probe, DomainError when i_ref <= 0.
DetectionReport analyze_trace(const TransientTrace& trace, double i_ref,
                              const TraceAnalysisOptions& options = {});

/// 20*log10(|V_out / V_supply|). Throws DomainError on a non-positive magnitude.
double pssr_db(double transfer_magnitude);
/// -20*log10(v_supply / v_out), the ripple-ratio form.
double pssr_db(double v_supply, double v_out);
std::vector<std::pair<double, double>> pssr(const std::vector<AcSample>& samples);

/// Sensor PSSR from the VDD rail to the sum node at 27 C.
std::vector<std::pair<double, double>> sensor_pssr(const Circuit& sensor,
                                                   const std::vector<double>& frequencies);

struct ArmedTrojanCheck {
  double delta_i = 0.0;  // A
  bool detected = false;
};

inline constexpr double kArmedTrojanThreshold = 5e-6;

/// |I_det(golden) - I_det(suspect)| against 5 uA. Throws ProbeError when either
/// point lacks the detection branch.
ArmedTrojanCheck detect_armed_trojan(const OperatingPoint& golden, const OperatingPoint& suspect);

struct CornerTable {
  std::vector<double> temps_c;
  std::vector<CornerLabel> corners;
  std::vector<std::vector<double>> percent;  // [corner][temp]
  double i_ref = 0.0;                        // TT at 27 C, amperes
};

/// Percent change of I_adder vs TT at 27 C. Each corner is first re-trimmed at
/// 27 C on the CTAT tap (see trim_bias) unless `retrim` is false.
CornerTable corner_table(const SensorParams& params, const BiasSetting& bias,
                         const std::vector<double>& temps_c = {-40.0, 0.0, 40.0, 80.0, 125.0},
                         bool retrim = true);

struct TrojanTable {
  std::vector<double> temps_c;
  std::vector<double> free;       // A
  std::vector<double> armed;      // A
  std::vector<double> triggered;  // A
};

TrojanTable trojan_table(const SensorParams& params, const BiasSetting& bias,
                         const TrojanSpec& trojan = {},
                         const std::vector<double>& temps_c = {-40.0, 27.0, 125.0});

/// Total power delivered by the voltage sources at `op`.
double power_estimate(const Circuit& circuit, const OperatingPoint& op);

/// {verdict, spike_magnitude, residual_vibration, sustained_deviation, detection_latency_s, threshold}
std::string report_json(const DetectionReport& report);

}  // namespace ztcsense
