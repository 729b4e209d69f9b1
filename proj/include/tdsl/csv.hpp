// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace tdsl {

/// All-numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;  // rows x header.size()
};

/// Reads a header line and numeric rows. Blank lines are skipped, CRLF is
/// accepted. Ragged rows and non-numeric cells raise ParseError with the
/// 1-based line number.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

struct CsvDataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd target;
  std::vector<std::string> feature_names;
  std::string target_name;
};

/// Splits a table into features and the named target column; an empty
/// name selects the last column.
CsvDataset split_target(const CsvTable& table, const std::string& target_col);

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& values);

}  // namespace tdsl
