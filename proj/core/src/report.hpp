#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace heislab::detail {

// Fixed-precision formatting shared by every CSV and JSON number so that runs
// are byte-comparable.
std::string fmt_num(double v);
std::string fmt_int(std::int64_t v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  // Throws std::logic_error when the row width differs from the header.
  void add(std::vector<std::string> row);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

}  // namespace heislab::detail
