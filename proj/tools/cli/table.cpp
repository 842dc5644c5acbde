#include "table.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace dtrack::cli {
namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string to_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return quote(std::get<std::string>(c));
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void Table::write_csv(std::ostream& os) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << quote(columns_[i]);
  os << "\r\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << to_text(row[i]);
    os << "\r\n";
  }
}

void Table::write_json(std::ostream& os) const {
  // Numbers are emitted as text so the digits match the CSV exactly.
  os << "[";
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    os << (r ? ",\n " : "\n ") << "{";
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      os << (i ? ", " : "") << nlohmann::json(columns_[i]).dump() << ": ";
      const Cell& c = rows_[r][i];
      if (const auto* d = std::get_if<double>(&c))
        os << (std::isfinite(*d) ? format_double(*d) : "null");
      else if (const auto* n = std::get_if<std::int64_t>(&c))
        os << *n;
      else
        os << nlohmann::json(std::get<std::string>(c)).dump();
    }
    os << "}";
  }
  os << "\n]\n";
}

}  // namespace dtrack::cli
