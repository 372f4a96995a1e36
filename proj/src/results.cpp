#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "malab/error.hpp"
#include "malab/harness.hpp"

namespace malab::harness {

using Json = nlohmann::ordered_json;

void ResultRecord::set(const std::string& key, double value) {
  for (auto& [k, v] : metrics)
    if (k == key) {
      v = value;
      return;
    }
  metrics.emplace_back(key, value);
}

double ResultRecord::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

bool ResultRecord::has(const std::string& key) const {
  for (const auto& m : metrics)
    if (m.first == key) return true;
  return false;
}

namespace {

bool same_value(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

// JSON has no inf/nan; they travel as strings.
Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number(const Json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  fail(ErrorKind::InvalidArgument, "bad number in result JSON: " + s);
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

bool same_results(const ResultRecord& a, const ResultRecord& b) {
  if (a.scenario != b.scenario || a.parameters != b.parameters || a.seed != b.seed) return false;
  if (a.metrics.size() != b.metrics.size() || a.series.columns != b.series.columns) return false;
  for (std::size_t i = 0; i < a.metrics.size(); ++i)
    if (a.metrics[i].first != b.metrics[i].first || !same_value(a.metrics[i].second, b.metrics[i].second)) return false;
  if (a.series.rows.size() != b.series.rows.size()) return false;
  for (std::size_t r = 0; r < a.series.rows.size(); ++r) {
    if (a.series.rows[r].size() != b.series.rows[r].size()) return false;
    for (std::size_t c = 0; c < a.series.rows[r].size(); ++c)
      if (!same_value(a.series.rows[r][c], b.series.rows[r][c])) return false;
  }
  return true;
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  fail(ErrorKind::InvalidConfig, "format must be csv or json, got '" + name + "'");
}

std::string to_csv(const ResultRecord& record) {
  std::ostringstream os;
  os << "# scenario: " << record.scenario << "\n";
  os << "# seed: " << record.seed << "\n";
  for (const auto& [k, v] : record.parameters) os << "# param " << k << " = " << v << "\n";
  for (const auto& [k, v] : record.metrics) os << "# metric " << k << " = " << csv_number(v) << "\n";
  os << "# rows: " << record.series.rows.size() << "\n";
  for (std::size_t c = 0; c < record.series.columns.size(); ++c) os << (c ? "," : "") << record.series.columns[c];
  os << "\n";
  for (const auto& row : record.series.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_number(row[c]);
    os << "\n";
  }
  return os.str();
}

std::string to_json(const ResultRecord& record) {
  Json j;
  j["scenario"] = record.scenario;
  j["seed"] = record.seed;
  j["wall_seconds"] = record.wall_seconds;
  Json params = Json::object();
  for (const auto& [k, v] : record.parameters) params[k] = v;
  j["parameters"] = params;
  Json metrics = Json::object();
  for (const auto& [k, v] : record.metrics) metrics[k] = number(v);
  j["metrics"] = metrics;
  Json rows = Json::array();
  for (const auto& row : record.series.rows) {
    Json r = Json::array();
    for (double v : row) r.push_back(number(v));
    rows.push_back(r);
  }
  j["series"] = {{"columns", record.series.columns}, {"rows", rows}};
  return j.dump(2);
}

ResultRecord from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::InvalidArgument, std::string("result JSON does not parse: ") + e.what());
  }
  ResultRecord r;
  r.scenario = j.at("scenario").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  for (const auto& [k, v] : j.at("parameters").items()) r.parameters[k] = v.get<std::string>();
  for (const auto& [k, v] : j.at("metrics").items()) r.metrics.emplace_back(k, number(v));
  const auto& s = j.at("series");
  r.series.columns = s.at("columns").get<std::vector<std::string>>();
  for (const auto& row : s.at("rows")) {
    std::vector<double> values;
    for (const auto& v : row) values.push_back(number(v));
    r.series.rows.push_back(std::move(values));
  }
  return r;
}

void emit_results(const ResultRecord& record, Format format, const std::filesystem::path& path) {
  const std::string text = format == Format::Csv ? to_csv(record) : to_json(record);
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::Io, "write to " + path.string() + " failed");
}

}  // namespace malab::harness
