#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "causalreg/dataset.hpp"
#include "causalreg/errors.hpp"

using namespace causalreg;

TEST(IngestCsv, RoundTrip) {
  std::istringstream in("a,b,label\n3,0,1\n7,2,0\n");
  const auto t = data::parse_csv(in, "label");
  ASSERT_EQ(t.rows(), 2);
  ASSERT_EQ(t.cols(), 2);
  EXPECT_EQ(t.names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.X(0, 0), 3);
  EXPECT_EQ(t.X(1, 1), 2);
  EXPECT_EQ(t.y, (std::vector<int>{1, 0}));

  const auto path = (std::filesystem::temp_directory_path() / "causalreg_roundtrip.csv").string();
  data::write_csv(path, t, "label");
  const auto back = data::ingest_csv(path, "label");
  EXPECT_EQ(back.X, t.X);
  EXPECT_EQ(back.y, t.y);
  EXPECT_EQ(back.names, t.names);
  std::filesystem::remove(path);
}

TEST(IngestCsv, CrlfMatchesLf) {
  std::istringstream lf("x,label\n1,0\n2,1\n");
  std::istringstream crlf("x,label\r\n1,0\r\n2,1\r\n");
  const auto a = data::parse_csv(lf, "label");
  const auto b = data::parse_csv(crlf, "label");
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.names, b.names);
}

TEST(IngestCsv, NonIntegerCellNamesRowAndColumn) {
  std::istringstream in("age,dx_401,label\n1,2,0\n3,x7,1\n");
  try {
    data::parse_csv(in, "label");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), "dx_401");
  }
}

TEST(IngestCsv, MissingLabelAndBadLabel) {
  std::istringstream a("x,y\n1,0\n");
  EXPECT_THROW(data::parse_csv(a, "label"), ParseError);
  std::istringstream b("x,label\n1,2\n");
  EXPECT_THROW(data::parse_csv(b, "label"), ParseError);
}

TEST(LogBin, Examples) {
  EXPECT_EQ(data::log_bin(0), 0);
  EXPECT_EQ(data::log_bin(7), 3);
  EXPECT_EQ(data::log_bin(1000000), 15);
  EXPECT_THROW(data::log_bin(-1), DomainError);
}

TEST(LogBin, MonotoneAndSurjective) {
  std::set<int> seen;
  int prev = 0;
  for (std::int64_t c = 0; c <= (1 << 16); ++c) {
    const int b = data::log_bin(c);
    ASSERT_GE(b, prev);
    prev = b;
    seen.insert(b);
  }
  EXPECT_EQ(seen.size(), 16u);
}

TEST(StratifiedSplit, FractionsAndDeterminism) {
  std::vector<int> y(1000);
  for (int i = 0; i < 1000; ++i) y[i] = i % 4 == 0;
  const auto s = data::stratified_split(y, 0.75, 0.10, 11);
  EXPECT_EQ(s.train.size() + s.valid.size() + s.test.size(), 1000u);
  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.valid.begin(), s.valid.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 1000u);
  int pos_train = 0;
  for (int i : s.train) pos_train += y[i];
  EXPECT_NEAR(static_cast<double>(pos_train) / s.train.size(), 0.25, 0.01);
  EXPECT_NEAR(static_cast<double>(s.train.size()), 750.0, 2.0);
  const auto again = data::stratified_split(y, 0.75, 0.10, 11);
  EXPECT_EQ(s.train, again.train);
  EXPECT_NE(s.train, data::stratified_split(y, 0.75, 0.10, 12).train);
}
