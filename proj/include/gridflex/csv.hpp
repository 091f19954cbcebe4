#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gridflex/error.hpp"

namespace gridflex::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

/// Parses a decimal number with '.' as separator. Empty cells are absent.
inline std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || end != cell.data() + cell.size()) return std::nullopt;
  return value;
}

/// Shortest representation that parses back to the identical double.
inline std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (value == 0.0) return "0";  // folds -0
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

class Table {
 public:
  Table() = default;
  Table(std::string source, std::vector<std::string> header, std::vector<std::vector<std::string>> rows)
      : source_(std::move(source)), header_(std::move(header)), rows_(std::move(rows)) {}

  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }
  std::size_t row_count() const { return rows_.size(); }

  std::optional<std::size_t> find(std::string_view column) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (header_[i] == column) return i;
    }
    return std::nullopt;
  }

  bool has(std::string_view column) const { return find(column).has_value(); }

  std::size_t index(std::string_view column) const {
    if (auto i = find(column)) return *i;
    throw Error(ErrorKind::ColumnMissing, std::string(column) + " in " + source_);
  }

  const std::string& cell(std::size_t row, std::size_t column) const { return rows_[row][column]; }

  /// Numeric column. Empty or malformed cells become NaN so validation can
  /// report them by row instead of failing on the first one.
  std::vector<double> numbers(std::string_view column) const {
    const auto c = index(column);
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_) {
      out.push_back(parse_number(row[c]).value_or(std::nan("")));
    }
    return out;
  }

  std::vector<std::string> strings(std::string_view column) const {
    const auto c = index(column);
    std::vector<std::string> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_) out.push_back(row[c]);
    return out;
  }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline Table parse(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, source + " has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_line(line);
  std::vector<std::vector<std::string>> rows;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::ParseError, source + " line " + std::to_string(line_number) + " has " +
                                             std::to_string(cells.size()) + " cells, header has " +
                                             std::to_string(header.size()));
    }
    rows.push_back(std::move(cells));
  }
  return Table(source, std::move(header), std::move(rows));
}

inline Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  return parse(in, path.string());
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& names) { row(names); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_number(values[i]);
    }
    out_ << '\n';
  }

 private:
  std::ostream& out_;
};

}  // namespace gridflex::csv
