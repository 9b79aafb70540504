#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace jde {

/// Numeric table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  bool has(const std::string& name) const;
  /// Throws ConfigError if the column is missing.
  std::size_t index(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
  std::vector<double> column(std::size_t i) const;
};

/// 9 significant digits; integral values print without a decimal point.
std::string format_number(double v);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// Throws ConfigError for unreadable or malformed files.
CsvTable read_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

/// "5", "7.5", "-2": compact text for file-name tags.
std::string number_tag(double v);

}  // namespace jde
