#include "lqmfg/csv.hpp"

#include <charconv>
#include <cmath>

namespace lqmfg {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

CsvRow& CsvRow::operator<<(double value) {
  if (!first_) out_ << ',';
  first_ = false;
  out_ << format_double(value);
  return *this;
}

CsvRow& CsvRow::operator<<(std::string_view text) {
  if (!first_) out_ << ',';
  first_ = false;
  out_ << text;
  return *this;
}

}  // namespace lqmfg
