#pragma once

#include <string>
#include <vector>

namespace l2c {

/// Numeric table with a header row. NaN is written as an empty cell and read back as NaN.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

/// Shortest round-trip representation; "nan"/"inf" for non-finite values.
std::string format_double(double v);

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace l2c
