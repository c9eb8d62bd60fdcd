#include "spm/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "spm/error.hpp"

namespace spm {

void StudyReport::metric(std::string name, double value, std::string route, std::string provenance) {
  metrics.push_back({std::move(name), value, std::move(route), std::move(provenance)});
}

void StudyReport::fit(std::string name, double value, double residual) {
  fits.emplace_back(std::move(name), Fit{value, residual});
}

void StudyReport::criterion(std::string id, bool pass) { criteria.push_back({std::move(id), pass}); }

bool StudyReport::all_pass() const {
  for (const auto& c : criteria)
    if (!c.pass) return false;
  return true;
}

void StudyReport::merge(const StudyReport& other, const std::string& prefix) {
  for (const Metric& m : other.metrics) metrics.push_back({prefix + m.name, m.value, m.route, m.provenance});
  for (const auto& [name, f] : other.fits) fits.emplace_back(prefix + name, f);
  for (const auto& c : other.criteria) criteria.push_back({prefix + c.id, c.pass});
}

namespace {

Json number(double v) {
  if (std::isfinite(v)) return v;
  // JSON has no inf/nan; keep them readable and reversible
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double from_number(const Json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  return NAN;
}

}  // namespace

Json StudyReport::to_json() const {
  Json j;
  j["scenario"] = scenario;
  j["inputs"] = inputs;
  j["metrics"] = Json::array();
  for (const Metric& m : metrics)
    j["metrics"].push_back({{"name", m.name}, {"value", number(m.value)}, {"route", m.route}, {"provenance", m.provenance}});
  j["fits"] = Json::object();
  for (const auto& [name, f] : fits) j["fits"][name] = {{"value", number(f.value)}, {"residual", number(f.residual)}};
  j["criteria"] = Json::array();
  for (const auto& c : criteria) j["criteria"].push_back({{"id", c.id}, {"pass", c.pass}});
  return j;
}

StudyReport StudyReport::from_json(const Json& j) {
  StudyReport r;
  r.scenario = j.at("scenario").get<std::string>();
  r.inputs = j.at("inputs");
  for (const auto& m : j.at("metrics"))
    r.metrics.push_back({m.at("name").get<std::string>(), from_number(m.at("value")), m.at("route").get<std::string>(),
                         m.at("provenance").get<std::string>()});
  for (const auto& [name, f] : j.at("fits").items())
    r.fits.emplace_back(name, Fit{from_number(f.at("value")), from_number(f.at("residual"))});
  for (const auto& c : j.at("criteria")) r.criteria.push_back({c.at("id").get<std::string>(), c.at("pass").get<bool>()});
  return r;
}

bool StudyReport::operator==(const StudyReport& o) const {
  auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  if (scenario != o.scenario || inputs != o.inputs || criteria != o.criteria) return false;
  if (metrics.size() != o.metrics.size() || fits.size() != o.fits.size()) return false;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const Metric &a = metrics[i], &b = o.metrics[i];
    if (a.name != b.name || a.route != b.route || a.provenance != b.provenance || !same(a.value, b.value)) return false;
  }
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (fits[i].first != o.fits[i].first || !same(fits[i].second.value, o.fits[i].second.value) ||
        !same(fits[i].second.residual, o.fits[i].second.residual))
      return false;
  }
  return true;
}

std::string report_json_text(const StudyReport& report) { return report.to_json().dump(2) + "\n"; }

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_csv_text(const StudyReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "name,value,route,provenance\n";
  for (const Metric& m : report.metrics)
    os << csv_field(m.name) << ',' << m.value << ',' << csv_field(m.route) << ',' << csv_field(m.provenance) << '\n';
  return os.str();
}

void emit_report(const StudyReport& report, const std::filesystem::path& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << (format == ReportFormat::Json ? report_json_text(report) : report_csv_text(report));
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) fail(ErrorKind::InvalidArgument, "slope fit needs two or more points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0) fail(ErrorKind::InsufficientSpread, "slope fit abscissae coincide");
  const double b = sxy / sxx, a = my - b * mx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) rss += std::pow(y[i] - a - b * x[i], 2);
  return {b, std::sqrt(rss / n)};
}

}  // namespace spm
