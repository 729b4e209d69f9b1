// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <string>
#include <variant>
#include <vector>

namespace tdsl {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Rectangular table of named columns with a JSON metadata header.
///
/// Serialized as CSV: one "# {json}" line, a header row, then data rows.
/// Doubles are written with 17 significant digits so a round trip through
/// text is lossless; lines end in LF.
class ResultTable {
 public:
  explicit ResultTable(std::vector<std::string> columns);

  void add_row(std::vector<Cell> row);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  std::size_t column_index(const std::string& name) const;

  const Cell& at(std::size_t row, const std::string& column) const;
  /// Numeric cell as double (integers are widened).
  double number(std::size_t row, const std::string& column) const;
  std::string text(std::size_t row, const std::string& column) const;

  nlohmann::json& meta() noexcept { return meta_; }
  const nlohmann::json& meta() const noexcept { return meta_; }

  void write(std::ostream& out) const;
  std::string to_csv() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  nlohmann::json meta_ = nlohmann::json::object();
};

std::string format_cell(const Cell& cell);

}  // namespace tdsl
