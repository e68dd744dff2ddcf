#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

namespace zplkit::cli {

using Json = nlohmann::ordered_json;

/// JSON number rounded to 9 significant digits; null for non-finite values.
Json number(double v);

/// One command's result. Keys keep insertion order so output is stable.
struct Report {
  std::string command;
  Json inputs = Json::object();
  Json parameters = Json::object();
  Json uncertainties = Json::object();
  std::string status = "invalid";
  double residual_norm = 0.0;
  bool has_residual = false;
  int iterations = 0;
  std::string message;
  Json derived = Json::object();
  Json extra = Json::object();  ///< command-specific top-level sections

  void set(const std::string& name, double value, double sigma);
  void set_fixed(const std::string& name, double value);

  Json to_json(bool timestamp) const;
};

/// Reads the "parameters" object of a previously written report.
std::map<std::string, double> read_report_parameters(const std::filesystem::path& path);

}  // namespace zplkit::cli
