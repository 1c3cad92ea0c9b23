#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace lqmfg {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

/// Writes a CSV row of numbers.
class CsvRow {
 public:
  explicit CsvRow(std::ostream& out) : out_(out) {}
  ~CsvRow() { out_ << '\n'; }
  CsvRow(const CsvRow&) = delete;
  CsvRow& operator=(const CsvRow&) = delete;

  CsvRow& operator<<(double value);
  CsvRow& operator<<(std::string_view text);

 private:
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace lqmfg
