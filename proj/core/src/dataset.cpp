#include "causalreg/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "causalreg/errors.hpp"
#include "causalreg/random.hpp"

namespace causalreg::data {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return out;
}

bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

}  // namespace

std::vector<int> DatasetTable::column(Eigen::Index j) const {
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = X(i, j);
  return out;
}

DatasetTable parse_csv(std::istream& in, const std::string& label_col, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + source, 1, "");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  const auto label_it = std::find(header.begin(), header.end(), label_col);
  if (label_it == header.end())
    throw ParseError("label column '" + label_col + "' not found in " + source, 1, label_col);
  const auto label_pos = static_cast<std::size_t>(label_it - header.begin());

  DatasetTable t;
  t.source = source;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != label_pos) t.names.push_back(header[j]);

  std::vector<std::vector<int>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(header.size()),
                       lineno, "");
    std::vector<int> row;
    row.reserve(header.size() - 1);
    for (std::size_t j = 0; j < fields.size(); ++j) {
      long long v = 0;
      if (!parse_int(fields[j], v) || v < INT32_MIN || v > INT32_MAX)
        throw ParseError("non-integer cell '" + fields[j] + "' at row " + std::to_string(lineno) +
                             ", column \"" + header[j] + "\"",
                         lineno, header[j]);
      if (j == label_pos) {
        if (v != 0 && v != 1)
          throw ParseError("label must be 0 or 1 at row " + std::to_string(lineno), lineno,
                           header[j]);
        t.y.push_back(static_cast<int>(v));
      } else {
        row.push_back(static_cast<int>(v));
      }
    }
    rows.push_back(std::move(row));
  }
  t.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

DatasetTable ingest_csv(const std::string& path, const std::string& label_col) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path, 0, "");
  return parse_csv(in, label_col, path);
}

int log_bin(std::int64_t count, int bins) {
  if (count < 0) throw DomainError("log_bin: negative count");
  if (bins < 1) throw DomainError("log_bin: bins must be >= 1");
  // floor(log2(c + 1)) is the index of the highest set bit of c + 1.
  const int b = static_cast<int>(std::bit_width(static_cast<std::uint64_t>(count) + 1)) - 1;
  return std::min(b, bins - 1);
}

void log_bin_counts(DatasetTable& table, int bins) {
  for (Eigen::Index i = 0; i < table.X.rows(); ++i)
    for (Eigen::Index j = 0; j < table.X.cols(); ++j) table.X(i, j) = log_bin(table.X(i, j), bins);
  table.binned = true;
  table.bins = bins;
}

Split stratified_split(const std::vector<int>& y, double frac_train, double frac_valid,
                       std::uint64_t seed) {
  if (frac_train <= 0 || frac_valid < 0 || frac_train + frac_valid > 1)
    throw ConfigError("stratified_split: invalid fractions");
  Rng rng = stream_rng(seed, 0x5117);
  Split s;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == cls) idx.push_back(static_cast<int>(i));
    shuffle_in_place(idx, rng);
    const auto n = static_cast<double>(idx.size());
    const auto n_train = static_cast<std::size_t>(std::lround(frac_train * n));
    const auto n_valid =
        std::min(idx.size() - n_train, static_cast<std::size_t>(std::lround(frac_valid * n)));
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
    s.valid.insert(s.valid.end(), idx.begin() + static_cast<long>(n_train),
                   idx.begin() + static_cast<long>(n_train + n_valid));
    s.test.insert(s.test.end(), idx.begin() + static_cast<long>(n_train + n_valid), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.valid.begin(), s.valid.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

std::vector<int> take(const std::vector<int>& v, const std::vector<int>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(v.at(static_cast<std::size_t>(r)));
  return out;
}

void write_csv(const std::string& path, const DatasetTable& table, const std::string& label_col) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  for (const auto& nm : table.names) out << nm << ',';
  out << label_col << '\n';
  for (Eigen::Index i = 0; i < table.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.X.cols(); ++j) out << table.X(i, j) << ',';
    out << table.y[static_cast<std::size_t>(i)] << '\n';
  }
}

}  // namespace causalreg::data
