#include "report.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include "zplkit/errors.hpp"
#include "zplkit/io.hpp"

#ifndef ZPLKIT_VERSION
#define ZPLKIT_VERSION "0.0.0"
#endif

namespace zplkit::cli {

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(format_number(v).c_str(), nullptr);
}

void Report::set(const std::string& name, double value, double sigma) {
  parameters[name] = number(value);
  uncertainties[name] = number(sigma);
}

void Report::set_fixed(const std::string& name, double value) {
  parameters[name] = number(value);
  uncertainties[name] = 0.0;
}

Json Report::to_json(bool timestamp) const {
  Json j;
  j["command"] = command;
  j["version"] = ZPLKIT_VERSION;
  if (timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["timestamp"] = buf;
  }
  j["inputs"] = inputs;
  j["status"] = status;
  j["message"] = message;
  j["parameters"] = parameters;
  j["uncertainties"] = uncertainties;
  j["residual_norm"] = has_residual ? number(residual_norm) : Json(nullptr);
  j["iterations"] = iterations;
  j["derived"] = derived;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

std::map<std::string, double> read_report_parameters(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.contains("parameters") || !j["parameters"].is_object()) {
    throw ParseError(path.string() + ": report has no 'parameters' object");
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : j["parameters"].items()) {
    if (v.is_number()) out[k] = v.get<double>();
  }
  return out;
}

}  // namespace zplkit::cli
