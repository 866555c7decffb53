#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace aggmark {

/// General format with 17 significant digits (round-trips every double), '.'
/// decimal separator, independent of the locale. Zero prints as "0".
std::string format_number(double v);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// CSV table preceded by a `# config_hash=<hash>` comment line.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& data() const { return rows_; }

  void write(std::ostream& os, const std::string& config_hash) const;
  void write_file(const std::string& path, const std::string& config_hash) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace aggmark
