#pragma once

// Tabular count data: CSV ingestion, logarithmic binning and seeded
// stratified splits.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace causalreg::data {

struct DatasetTable {
  std::vector<std::string> names;  // feature columns, label excluded
  Eigen::MatrixXi X;               // n x m
  std::vector<int> y;              // n, values 0/1
  std::string source;
  bool binned = false;
  int bins = 0;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  Eigen::MatrixXd features() const { return X.cast<double>(); }
  std::vector<int> column(Eigen::Index j) const;
};

/// Header row required. Every feature cell must be an integer; the label
/// column must hold 0/1. Line numbers in ParseError are 1-based with the
/// header on line 1. CRLF and LF endings are accepted.
DatasetTable ingest_csv(const std::string& path, const std::string& label_col);
DatasetTable parse_csv(std::istream& in, const std::string& label_col,
                       const std::string& source = "<stream>");

/// min(floor(log2(c + 1)), bins - 1).
int log_bin(std::int64_t count, int bins = 16);
void log_bin_counts(DatasetTable& table, int bins = 16);

struct Split {
  std::vector<int> train;
  std::vector<int> valid;
  std::vector<int> test;
};

/// Stratified by label: each class is shuffled and cut by the given
/// fractions (test gets the remainder). Indices are returned sorted.
Split stratified_split(const std::vector<int>& y, double frac_train, double frac_valid,
                       std::uint64_t seed);

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<int>& rows);
std::vector<int> take(const std::vector<int>& v, const std::vector<int>& rows);

void write_csv(const std::string& path, const DatasetTable& table, const std::string& label_col);

}  // namespace causalreg::data
