// SPDX-License-Identifier: Apache-2.0
#include "tdsl/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "tdsl/error.hpp"

namespace tdsl {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  s = s.substr(b, e - b);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& field, const std::string& column, std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last)
    throw ParseError("non-numeric value '" + field + "' in column '" + column + "'", line);
  return v;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (table.header.empty()) {
      for (const auto& f : fields)
        if (f.empty()) throw ParseError("empty column name in header", lineno);
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw ParseError("expected " + std::to_string(table.header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) row[j] = parse_number(fields[j], table.header[j], lineno);
    rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw ParseError("missing header row", lineno == 0 ? 1 : lineno);
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::InvalidInput, "cannot open CSV file '" + path + "'");
  return read_csv(f);
}

CsvDataset split_target(const CsvTable& table, const std::string& target_col) {
  const auto cols = static_cast<Eigen::Index>(table.header.size());
  if (cols < 2) throw ParseError("need at least one feature column and a target column", 1);
  Eigen::Index target = cols - 1;
  if (!target_col.empty()) {
    target = -1;
    for (Eigen::Index j = 0; j < cols; ++j)
      if (table.header[static_cast<std::size_t>(j)] == target_col) target = j;
    if (target < 0) throw ParseError("target column '" + target_col + "' not found in header", 1);
  }
  CsvDataset out;
  out.target_name = table.header[static_cast<std::size_t>(target)];
  out.target = table.values.col(target);
  out.features.resize(table.values.rows(), cols - 1);
  for (Eigen::Index j = 0, k = 0; j < cols; ++j) {
    if (j == target) continue;
    out.features.col(k++) = table.values.col(j);
    out.feature_names.push_back(table.header[static_cast<std::size_t>(j)]);
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  require(static_cast<Eigen::Index>(header.size()) == values.cols(), ErrorKind::InvalidInput,
          "header width does not match the value matrix");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", values(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace tdsl
