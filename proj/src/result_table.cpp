// SPDX-License-Identifier: Apache-2.0
#include "tdsl/result_table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tdsl/error.hpp"

namespace tdsl {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Construction: return "construction";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Decomposition: return "decomposition";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::Parse: return "parse";
  }
  return "unknown";
}

namespace {

// Quotes a field only when it would otherwise break the row.
std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_cell(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) {
    if (std::isnan(*d)) return "nan";
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  return quote(std::get<std::string>(cell));
}

ResultTable::ResultTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  require(!columns_.empty(), ErrorKind::InvalidInput, "result table needs at least one column");
}

void ResultTable::add_row(std::vector<Cell> row) {
  require(row.size() == columns_.size(), ErrorKind::InvalidInput,
          "row has " + std::to_string(row.size()) + " cells, table has " + std::to_string(columns_.size()) +
              " columns");
  rows_.push_back(std::move(row));
}

std::size_t ResultTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i] == name) return i;
  fail(ErrorKind::InvalidInput, "no column named '" + name + "'");
}

const Cell& ResultTable::at(std::size_t row, const std::string& column) const {
  require(row < rows_.size(), ErrorKind::InvalidInput, "row index out of range");
  return rows_[row][column_index(column)];
}

double ResultTable::number(std::size_t row, const std::string& column) const {
  const Cell& c = at(row, column);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  fail(ErrorKind::InvalidInput, "column '" + column + "' holds text");
}

std::string ResultTable::text(std::size_t row, const std::string& column) const {
  const Cell& c = at(row, column);
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return format_cell(c);
}

void ResultTable::write(std::ostream& out) const {
  out << "# " << meta_.dump() << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << quote(columns_[i]);
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
    out << '\n';
  }
}

std::string ResultTable::to_csv() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

void ResultTable::write_file(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::InvalidInput, "cannot open '" + path + "' for writing");
  write(f);
  require(static_cast<bool>(f), ErrorKind::InvalidInput, "failed writing '" + path + "'");
}

}  // namespace tdsl
