#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace calabi {

/// "%.14e": 15 significant digits, the fixed format of every emitted number.
std::string format_number(double v);

/// CSV with a header row and LF line endings. Non-finite values are written
/// as nan / inf / -inf.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> header);
  void row(const std::vector<double>& values);
  void row(const std::string& first, const std::vector<std::string>& rest);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

void ensure_directory(const std::string& path);

}  // namespace calabi
