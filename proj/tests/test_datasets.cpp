#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "exspn/dataset.hpp"
#include "exspn/error.hpp"
#include "fixtures.hpp"

using namespace exspn;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Sample covariance of columns a, b over rows [lo, hi).
double cov(const DatasetTable& t, std::size_t lo, std::size_t hi, std::size_t a, std::size_t b) {
  double ma = 0, mb = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    ma += t.at(i, a);
    mb += t.at(i, b);
  }
  const double n = static_cast<double>(hi - lo);
  ma /= n;
  mb /= n;
  double s = 0;
  for (std::size_t i = lo; i < hi; ++i) s += (t.at(i, a) - ma) * (t.at(i, b) - mb);
  return s / (n - 1);
}

}  // namespace

TEST_CASE("synthetic: shape, determinism, and the first component's mean") {
  const auto t = generate_synthetic(5);
  CHECK(t.rows() == 30000);
  CHECK(t.cols() == 4);
  CHECK(t.schema()[0].name == "V0");
  CHECK(t.schema()[3].name == "V3");
  CHECK(t.values() == generate_synthetic(5).values());
  CHECK_FALSE(t.values() == generate_synthetic(6).values());
  for (std::size_t j = 0; j < 4; ++j) {
    double m = 0;
    for (std::size_t i = 0; i < kSyntheticRowsPerComponent; ++i) m += t.at(i, j);
    CHECK(std::fabs(m / kSyntheticRowsPerComponent - 2.0) <= 0.01);
  }
}

TEST_CASE("synthetic: component covariances match the 0.01-scaled matrices") {
  const auto t = generate_synthetic(11);
  const double expected[3][4][4] = {
      {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}},
      {{1, 0, 0, 0}, {0, 1, 1, 1}, {0, 1, 1, 1}, {0, 1, 1, 1}},
      {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 1}, {0, 0, 1, 1}},
  };
  const double means[3][4] = {{2, 2, 2, 2}, {-8, 4, 4, 4}, {8, 8, 8, 8}};
  for (std::size_t c = 0; c < 3; ++c) {
    const std::size_t lo = c * kSyntheticRowsPerComponent, hi = lo + kSyntheticRowsPerComponent;
    for (std::size_t a = 0; a < 4; ++a) {
      double m = 0;
      for (std::size_t i = lo; i < hi; ++i) m += t.at(i, a);
      CHECK(std::fabs(m / kSyntheticRowsPerComponent - means[c][a]) <= 0.01);
      for (std::size_t b = 0; b < 4; ++b) CHECK(std::fabs(cov(t, lo, hi, a, b) - 0.01 * expected[c][a][b]) <= 0.005);
    }
  }
  // Correlations of the second component.
  const std::size_t lo = kSyntheticRowsPerComponent, hi = 2 * lo;
  const double c12 = cov(t, lo, hi, 1, 2) / std::sqrt(cov(t, lo, hi, 1, 1) * cov(t, lo, hi, 2, 2));
  const double c01 = cov(t, lo, hi, 0, 1) / std::sqrt(cov(t, lo, hi, 0, 0) * cov(t, lo, hi, 1, 1));
  CHECK(c12 >= 0.95);
  CHECK(std::fabs(c01) <= 0.05);
  const auto labels = synthetic_labels();
  CHECK(labels.size() == 30000);
  CHECK(labels[lo] == 1);
}

TEST_CASE("load_csv: declared categories are coded in sidecar order") {
  const auto dir = fixture::temp_dir("csv");
  write(dir / "t.csv", "color,size\nred,1.5\nblue,-2\n");
  write(dir / "t.schema.json",
        R"({"columns":[{"name":"color","kind":"discrete","categories":["blue","red"]},{"name":"size","kind":"continuous"}]})");
  const auto t = load_csv((dir / "t.csv").string(), (dir / "t.schema.json").string());
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 2);
  CHECK(t.at(0, 0) == 1.0);
  CHECK(t.at(1, 0) == 0.0);
  CHECK(t.at(0, 1) == 1.5);
  CHECK(t.at(1, 1) == -2.0);
  fs::remove_all(dir);
}

TEST_CASE("load_csv: errors name the row and column") {
  const auto dir = fixture::temp_dir("csv");
  write(dir / "s.schema.json",
        R"({"columns":[{"name":"color","kind":"discrete","categories":["blue","red"]},{"name":"size","kind":"continuous"}]})");
  write(dir / "bad_num.csv", "color,size\nred,abc\n");
  try {
    load_csv((dir / "bad_num.csv").string(), (dir / "s.schema.json").string());
    FAIL("expected an ingestion error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 1") != std::string::npos);
    CHECK(msg.find("'size'") != std::string::npos);
    CHECK(msg.find("abc") != std::string::npos);
  }
  write(dir / "bad_cat.csv", "color,size\nred,1\ngreen,2\n");
  try {
    load_csv((dir / "bad_cat.csv").string(), (dir / "s.schema.json").string());
    FAIL("expected an ingestion error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("'color'") != std::string::npos);
    CHECK(msg.find("green") != std::string::npos);
  }
  write(dir / "no_col.csv", "colour,size\nred,1\n");
  CHECK_THROWS_WITH_AS(load_csv((dir / "no_col.csv").string(), (dir / "s.schema.json").string()),
                       doctest::Contains("missing column 'color'"), InputError);
  CHECK_THROWS_AS(load_csv((dir / "absent.csv").string(), (dir / "s.schema.json").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("load_csv: missing markers drop rows, inferred categories sort numerically") {
  const auto dir = fixture::temp_dir("csv");
  write(dir / "m.csv", "a b c\n10 x 1\n9 ? 2\n2 y 3\n10 y 4\n");
  CsvSchema s;
  s.columns = {Column{"a", ColumnKind::kDiscrete, 0, {}}, Column{"b", ColumnKind::kDiscrete, 0, {}},
               Column{"c", ColumnKind::kContinuous, 0, {}}};
  s.infer_categories = {true, true, false};
  s.delimiter = "whitespace";
  std::size_t dropped = 0;
  const auto t = load_csv((dir / "m.csv").string(), s, &dropped);
  CHECK(dropped == 1);
  CHECK(t.rows() == 3);
  CHECK(t.schema()[0].categories == std::vector<std::string>{"2", "10"});
  CHECK(t.at(0, 0) == 1.0);
  CHECK(t.at(1, 0) == 0.0);
  CHECK(t.row_ids() == std::vector<long>{2, 4, 5});
  fs::remove_all(dir);
}

TEST_CASE("save_csv round-trips a table losslessly") {
  const auto dir = fixture::temp_dir("csv");
  auto data = fixture::write_study_pass_data(2);
  save_csv(data, (dir / "w.csv").string(), (dir / "w.schema.json").string());
  const auto back = load_csv((dir / "w.csv").string(), (dir / "w.schema.json").string());
  CHECK(back.schema() == data.schema());
  CHECK(back.values() == data.values());

  const auto syn = generate_synthetic(1).select_rows(std::vector<std::size_t>{0, 12000, 29999});
  save_csv(syn, (dir / "s.csv").string(), (dir / "s.schema.json").string());
  CHECK(load_csv((dir / "s.csv").string(), (dir / "s.schema.json").string()).values() == syn.values());
  fs::remove_all(dir);
}

TEST_CASE("car sidecar: a full factorial file yields 1728 rows and 7 columns") {
  const auto dir = fixture::temp_dir("car");
  std::string text;
  const char* lv[] = {"vhigh", "high", "med", "low"};
  const char* doors[] = {"2", "3", "4", "5more"};
  const char* persons[] = {"2", "4", "more"};
  const char* boot[] = {"small", "med", "big"};
  const char* safety[] = {"low", "med", "high"};
  const char* cls[] = {"unacc", "acc", "good", "vgood"};
  int k = 0;
  for (auto b : lv)
    for (auto m : lv)
      for (auto d : doors)
        for (auto p : persons)
          for (auto l : boot)
            for (auto s : safety)
              text += std::string(b) + "," + m + "," + d + "," + p + "," + l + "," + s + "," + cls[k++ % 4] + "\n";
  write(dir / "car.data", text);
  const auto t = load_csv((dir / "car.data").string(), std::string(EXSPN_TEST_DATA_DIR) + "/uci/car.schema.json");
  CHECK(t.rows() == 1728);
  CHECK(t.cols() == 7);
  CHECK(t.target() == std::optional<std::string>("class"));
  std::size_t items = 0;
  for (const auto& c : t.schema().columns()) items += static_cast<std::size_t>(c.cardinality);
  CHECK(items == 4 + 4 + 4 + 3 + 3 + 3 + 4);
  fs::remove_all(dir);
}

TEST_CASE("bundled tables load with their targets") {
  for (const char* name : {"iris", "wine", "breast_cancer"}) {
    const std::string base = std::string(EXSPN_TEST_DATA_DIR) + "/" + name;
    const auto t = load_csv(base + ".csv", base + ".schema.json");
    CHECK(t.target().has_value());
    CHECK(t.rows() > 100);
  }
}

TEST_CASE("split: 100 rows at 0.75 give 75/25, disjoint and covering") {
  RowMatrix m(100, 1);
  for (int i = 0; i < 100; ++i) m(i, 0) = i;
  DatasetTable t(fixture::continuous_schema(1), m);
  const auto s = split_train_test(t, 0.75, std::nullopt, 3);
  CHECK(s.train.rows() == 75);
  CHECK(s.test.rows() == 25);
  std::set<std::size_t> all(s.train_rows.begin(), s.train_rows.end());
  for (auto r : s.test_rows) CHECK(all.insert(r).second);
  CHECK(all.size() == 100);
  const auto again = split_train_test(t, 0.75, std::nullopt, 3);
  CHECK(again.train_rows == s.train_rows);
  CHECK(split_train_test(t, 0.75, std::nullopt, 4).train_rows != s.train_rows);
}

TEST_CASE("split: stratification preserves a 90/10 balance within 2%") {
  RowMatrix m(1000, 2);
  for (int i = 0; i < 1000; ++i) m.row(i) << (i % 10 == 0 ? 1 : 0), i;
  DatasetTable t(VariableSchema({Column{"y", ColumnKind::kDiscrete, 2, {}}, Column{"x", ColumnKind::kContinuous, 0, {}}}),
                 m);
  const auto s = split_train_test(t, 0.75, std::string("y"), 9);
  auto frac = [](const DatasetTable& d) {
    double pos = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) pos += d.at(i, 0);
    return pos / static_cast<double>(d.rows());
  };
  CHECK(std::fabs(frac(s.train) - 0.1) <= 0.02);
  CHECK(std::fabs(frac(s.test) - 0.1) <= 0.02);
  CHECK(std::fabs(static_cast<double>(s.train.rows()) - 750.0) <= 1.0);
}

TEST_CASE("split: errors for tiny classes, continuous stratifiers and bad fractions") {
  RowMatrix m(10, 2);
  for (int i = 0; i < 10; ++i) m.row(i) << (i == 0 ? 1 : 0), i;
  DatasetTable t(VariableSchema({Column{"y", ColumnKind::kDiscrete, 2, {}}, Column{"x", ColumnKind::kContinuous, 0, {}}}),
                 m);
  CHECK_THROWS_AS(split_train_test(t, 0.75, std::string("y"), 0), InputError);
  CHECK_THROWS_AS(split_train_test(t, 0.75, std::string("x"), 0), InputError);
  CHECK_THROWS_AS(split_train_test(t, 1.0, std::nullopt, 0), InputError);
}

TEST_CASE("split: synthetic gives 22,500 / 7,500") {
  const auto s = split_train_test(generate_synthetic(0), 0.75, std::nullopt, 0);
  CHECK(s.train.rows() == 22500);
  CHECK(s.test.rows() == 7500);
}

TEST_CASE("fetch_uci: unknown names list the registry") {
  const auto dir = fixture::temp_dir("fetch");
  try {
    fetch_uci("no_such_set", dir.string());
    FAIL("expected an error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    for (const auto& d : uci_registry()) CHECK(msg.find(d.name) != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("fetch_uci: mirror download, cached second call, checksum guard") {
  const auto mirror = fixture::temp_dir("mirror");
  const auto cache = fixture::temp_dir("cache");
  fs::create_directories(mirror / "abalone");
  const std::string body = "M,0.455,0.365,0.095,0.514,0.2245,0.101,0.15,15\nF,0.53,0.42,0.135,0.677,0.2565,0.1415,0.21,9\n";
  write(mirror / "abalone" / "abalone.data", body);
  setenv("EXSPN_UCI_MIRROR", ("file://" + mirror.string()).c_str(), 1);

  const auto path = fetch_uci("abalone", cache.string());
  CHECK(read(path) == body);
  CHECK(fs::exists(cache / "abalone" / "meta"));
  CHECK(read(cache / "abalone" / "meta").find(sha256_file(path)) != std::string::npos);

  // Second call must not touch the mirror.
  fs::remove_all(mirror);
  CHECK(fetch_uci("abalone", cache.string()) == path);

  const auto t = load_csv(path, std::string(EXSPN_TEST_DATA_DIR) + "/uci/abalone.schema.json");
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 9);

  write(path, body + "I,0.1,0.1,0.1,0.1,0.1,0.1,0.1,1\n");
  CHECK_THROWS_AS(fetch_uci("abalone", cache.string()), ChecksumError);

  fs::remove_all(cache);
  CHECK_THROWS_AS(fetch_uci("abalone", cache.string()), NetworkError);
  unsetenv("EXSPN_UCI_MIRROR");
  fs::remove_all(cache);
}

TEST_CASE("sha256 of a known string") {
  const auto dir = fixture::temp_dir("sha");
  write(dir / "abc", "abc");
  CHECK(sha256_file((dir / "abc").string()) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove_all(dir);
}
