#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ztcsense/engine.hpp"
#include "ztcsense/monitor.hpp"
#include "ztcsense/sensor.hpp"

namespace ztcsense {

/// Shortest round-trip text, 17 significant digits at most.
std::string format_number(double value);

/// Header row then one row per corner; cells in percent. A trailing '#' line
/// records the reference current.
std::string corner_table_csv(const CornerTable& table);
/// Rows free, armed, triggered; adder current in uA per temperature column.
std::string trojan_table_csv(const TrojanTable& table);
/// time_s, temp_c, every probe, and sigma when a report is given.
std::string trace_csv(const TransientTrace& trace, const DetectionReport* report = nullptr);
std::string ztc_csv(const ZtcResult& ztc);
std::string pssr_csv(const std::vector<std::pair<double, double>>& points);

}  // namespace ztcsense
