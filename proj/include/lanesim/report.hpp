#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanesim/errors.hpp"
#include "lanesim/simloop.hpp"
#include "lanesim/version.hpp"

namespace lanesim {

using ordered_json = nlohmann::ordered_json;

inline ordered_json scenario_to_json(const ScenarioScore& s) {
  ordered_json j;
  j["label"] = s.label;
  j["sequences"] = s.sequences;
  j["frames"] = s.frames;
  j["recoveries"] = s.recoveries;
  j["duration_s"] = s.duration;
  j["autonomy"] = s.autonomy;
  j["mad_cm"] = s.mad_cm;
  j["mad_unbiased_cm"] = s.mad_unbiased_cm;
  return j;
}

inline ScenarioScore scenario_from_json(const ordered_json& j) {
  ScenarioScore s;
  s.label = j.at("label").get<std::string>();
  s.sequences = j.at("sequences").get<size_t>();
  s.frames = j.at("frames").get<size_t>();
  s.recoveries = j.at("recoveries").get<size_t>();
  s.duration = j.at("duration_s").get<double>();
  s.autonomy = j.at("autonomy").get<double>();
  s.mad_cm = j.at("mad_cm").get<double>();
  s.mad_unbiased_cm = j.at("mad_unbiased_cm").get<double>();
  return s;
}

inline ordered_json report_to_json(const AutonomyReport& r) {
  ordered_json j;
  j["tool_version"] = kVersion;
  j["controller"] = r.controller;
  j["recovery_threshold_m"] = r.recovery_threshold;
  j["recovery_time_s"] = r.recovery_time;
  j["dt_s"] = r.dt;
  j["seed"] = r.seed;
  j["scenarios"] = ordered_json::array();
  for (const auto& s : r.scenarios) j["scenarios"].push_back(scenario_to_json(s));
  j["overall"] = scenario_to_json(r.overall);
  j["warnings"] = r.warnings;
  return j;
}

inline AutonomyReport report_from_json(const ordered_json& j) {
  AutonomyReport r;
  r.controller = j.at("controller").get<std::string>();
  r.recovery_threshold = j.at("recovery_threshold_m").get<double>();
  r.recovery_time = j.at("recovery_time_s").get<double>();
  r.dt = j.at("dt_s").get<double>();
  r.seed = j.at("seed").get<uint64_t>();
  for (const auto& s : j.at("scenarios")) r.scenarios.push_back(scenario_from_json(s));
  r.overall = scenario_from_json(j.at("overall"));
  for (const auto& w : j.at("warnings")) r.warnings.push_back(w.get<std::string>());
  return r;
}

inline AutonomyReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path.string());
  ordered_json j;
  try {
    in >> j;
    return report_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed report " + path.string() + ": " + e.what());
  }
}

/// Per-scenario autonomy/MAD table; one row per report, so several
/// controllers can be compared side by side.
inline std::string render_report_table(const std::vector<AutonomyReport>& reports) {
  std::ostringstream out;
  std::vector<std::string> labels;
  for (const auto& r : reports)
    for (const auto& s : r.scenarios)
      if (std::find(labels.begin(), labels.end(), s.label) == labels.end())
        labels.push_back(s.label);
  labels.push_back("overall");

  size_t name_w = 12;
  for (const auto& r : reports) name_w = std::max(name_w, r.controller.size() + 2);

  out << std::left << std::setw(static_cast<int>(name_w)) << "controller";
  for (const auto& l : labels)
    out << "| " << std::left << std::setw(17) << l;
  out << "\n";
  out << std::setw(static_cast<int>(name_w)) << "";
  for (size_t i = 0; i < labels.size(); ++i)
    out << "| " << std::left << std::setw(8) << "aut%" << std::setw(9) << "mad_cm";
  out << "\n";
  out << std::string(name_w + labels.size() * 19, '-') << "\n";

  for (const auto& r : reports) {
    out << std::left << std::setw(static_cast<int>(name_w)) << r.controller;
    for (const auto& l : labels) {
      const ScenarioScore* found = nullptr;
      if (l == "overall") {
        found = &r.overall;
      } else {
        for (const auto& s : r.scenarios)
          if (s.label == l) found = &s;
      }
      if (found) {
        std::ostringstream a, m;
        a << std::fixed << std::setprecision(1) << 100.0 * found->autonomy;
        m << std::fixed << std::setprecision(1) << found->mad_cm;
        out << "| " << std::left << std::setw(8) << a.str() << std::setw(9) << m.str();
      } else {
        out << "| " << std::left << std::setw(8) << "-" << std::setw(9) << "-";
      }
    }
    out << "\n";
  }
  for (const auto& r : reports)
    for (const auto& w : r.warnings) out << "warning (" << r.controller << "): " << w << "\n";
  return out.str();
}

/// Per-frame trace: frame, lateral and heading offsets, human and controller
/// commands, recovery flag.
inline void write_trace_csv(const std::filesystem::path& path, const SequenceResult& res) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace " + path.string());
  out << "frame,de_m,dtheta_rad,delta_h_rad,delta_net_rad,recovery\n";
  for (size_t i = 0; i < res.abs_de.size(); ++i) {
    out << i << "," << ConfigDoc::format_double(res.de[i]) << ","
        << ConfigDoc::format_double(res.dtheta[i]) << ","
        << ConfigDoc::format_double(res.recorded[i]) << ","
        << ConfigDoc::format_double(res.predicted[i]) << "," << int(res.recovery[i]) << "\n";
  }
}

inline SequenceResult read_trace_csv(const std::filesystem::path& path, double dt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty trace " + path.string());
  SequenceResult res;
  res.dt = dt;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw DataError("malformed trace row in " + path.string());
    res.de.push_back(ConfigDoc::parse_double(cells[1], "de_m"));
    res.dtheta.push_back(ConfigDoc::parse_double(cells[2], "dtheta_rad"));
    res.recorded.push_back(ConfigDoc::parse_double(cells[3], "delta_h_rad"));
    res.predicted.push_back(ConfigDoc::parse_double(cells[4], "delta_net_rad"));
    res.recovery.push_back(cells[5] == "1" ? 1 : 0);
    res.abs_de.push_back(std::abs(res.de.back()));
    if (res.recovery.back()) ++res.recoveries;
  }
  res.frame_count = res.de.size();
  res.driving_time = static_cast<double>(res.frame_count) * dt;
  return res;
}

}  // namespace lanesim
