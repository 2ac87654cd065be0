#include "ztcsense/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <string_view>

namespace ztcsense {

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

void temperature_header(std::ostringstream& out, std::string_view first, const std::vector<double>& temps_c) {
  out << first;
  for (double t : temps_c) out << "," << format_number(t) << "C";
  out << "\n";
}

void row(std::ostringstream& out, std::string_view label, const std::vector<double>& values, double scale) {
  out << label;
  for (double v : values) out << "," << format_number(v * scale);
  out << "\n";
}

}  // namespace

std::string corner_table_csv(const CornerTable& table) {
  std::ostringstream out;
  temperature_header(out, "corner", table.temps_c);
  for (std::size_t r = 0; r < table.corners.size(); ++r) row(out, to_string(table.corners[r]), table.percent[r], 1.0);
  out << "# percent change vs TT at 27C, reference_ua=" << format_number(table.i_ref * 1e6) << "\n";
  return out.str();
}

std::string trojan_table_csv(const TrojanTable& table) {
  std::ostringstream out;
  temperature_header(out, "state", table.temps_c);
  row(out, "free", table.free, 1e6);
  row(out, "armed", table.armed, 1e6);
  row(out, "triggered", table.triggered, 1e6);
  return out.str();
}

std::string trace_csv(const TransientTrace& trace, const DetectionReport* report) {
  std::ostringstream out;
  out << "time_s,temp_c";
  for (const auto& name : trace.probe_names) out << "," << name;
  if (report) out << ",sigma";
  out << "\n";
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    out << format_number(trace.times[k]) << "," << format_number(std::round(to_celsius(trace.temperature) * 1e6) / 1e6);
    for (const auto& series : trace.probe_series) out << "," << format_number(series[k]);
    if (report) out << "," << format_number(report->samples[k].sigma);
    out << "\n";
  }
  return out.str();
}

std::string ztc_csv(const ZtcResult& ztc) {
  std::ostringstream out;
  out << "vgs_v,spread_a\n";
  for (std::size_t k = 0; k < ztc.vgs_grid.size(); ++k) {
    out << format_number(ztc.vgs_grid[k]) << "," << format_number(ztc.grid_spread[k]) << "\n";
  }
  return out.str();
}

std::string pssr_csv(const std::vector<std::pair<double, double>>& points) {
  std::ostringstream out;
  out << "frequency_hz,pssr_db\n";
  for (const auto& [f, db] : points) out << format_number(f) << "," << format_number(db) << "\n";
  return out.str();
}

}  // namespace ztcsense
