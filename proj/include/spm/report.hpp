#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace spm {

using Json = nlohmann::ordered_json;

struct Metric {
  std::string name;
  double value = 0;
  /// How the number was computed, e.g. "spectral", "quadrature", "lanczos", "probe-lower-bound".
  std::string route;
  std::string provenance;

  bool operator==(const Metric&) const = default;
};

struct Fit {
  double value = 0;
  double residual = 0;

  bool operator==(const Fit&) const = default;
};

struct CriterionResult {
  std::string id;
  bool pass = false;

  bool operator==(const CriterionResult&) const = default;
};

struct StudyReport {
  std::string scenario;
  Json inputs = Json::object();
  std::vector<Metric> metrics;
  std::vector<std::pair<std::string, Fit>> fits;
  std::vector<CriterionResult> criteria;

  void metric(std::string name, double value, std::string route, std::string provenance = {});
  void fit(std::string name, double value, double residual);
  void criterion(std::string id, bool pass);
  bool all_pass() const;
  /// Appends another report's rows, prefixing names.
  void merge(const StudyReport& other, const std::string& prefix);

  Json to_json() const;
  static StudyReport from_json(const Json& j);

  bool operator==(const StudyReport&) const;
};

enum class ReportFormat { Json, Csv };

void emit_report(const StudyReport& report, const std::filesystem::path& path, ReportFormat format);
std::string report_json_text(const StudyReport& report);
std::string report_csv_text(const StudyReport& report);

/// Least-squares line y = a + b x; returns (slope b, RMS residual).
std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace spm
