#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "exspn/dataset.hpp"
#include "exspn/error.hpp"

namespace exspn {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// RFC-4180 style fields: double quotes enclose delimiters, "" escapes a quote.
std::vector<std::string> split_line(const std::string& line, const std::string& delimiter) {
  std::vector<std::string> out;
  if (delimiter == "whitespace") {
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
  }
  const char delim = delimiter.empty() ? ',' : delimiter.front();
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

// Numeric labels sort by value, everything else lexicographically.
bool label_less(const std::string& a, const std::string& b) {
  double x = 0.0, y = 0.0;
  const bool na = parse_real(a, x), nb = parse_real(b, y);
  if (na && nb) return x < y || (x == y && a < b);
  if (na != nb) return na;
  return a < b;
}

std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos && trim(s) == s) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

CsvSchema load_csv_schema(const std::string& sidecar_path) {
  std::ifstream in(sidecar_path);
  if (!in) throw IoError("cannot open schema sidecar '" + sidecar_path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError("schema sidecar '" + sidecar_path + "': " + e.what());
  }
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("schema sidecar '" + sidecar_path + "': " + msg);
  };
  if (!doc.is_object() || !doc.contains("columns") || !doc["columns"].is_array())
    throw fail("expected an object with a 'columns' array");

  CsvSchema s;
  try {
    for (const auto& jc : doc["columns"]) {
      Column c;
      c.name = jc.at("name").get<std::string>();
      const auto kind = jc.at("kind").get<std::string>();
      bool infer = false;
      if (kind == "discrete") {
        c.kind = ColumnKind::kDiscrete;
        if (jc.contains("categories")) c.categories = jc["categories"].get<std::vector<std::string>>();
        infer = jc.value("infer_categories", c.categories.empty());
        c.cardinality = static_cast<int>(c.categories.size());
      } else if (kind == "continuous") {
        c.kind = ColumnKind::kContinuous;
      } else {
        throw fail("column '" + c.name + "' has unknown kind '" + kind + "'");
      }
      s.columns.push_back(std::move(c));
      s.infer_categories.push_back(infer);
    }
    if (doc.contains("target") && !doc["target"].is_null()) s.target = doc["target"].get<std::string>();
    s.header = doc.value("header", true);
    s.delimiter = doc.value("delimiter", std::string(","));
    if (doc.contains("missing")) s.missing = doc["missing"].get<std::vector<std::string>>();
    if (doc.contains("skip_columns")) s.skip_columns = doc["skip_columns"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  if (s.columns.empty()) throw fail("no columns declared");
  return s;
}

DatasetTable load_csv(const std::string& csv_path, const std::string& sidecar_path) {
  return load_csv(csv_path, load_csv_schema(sidecar_path));
}

DatasetTable load_csv(const std::string& csv_path, const CsvSchema& schema, std::size_t* dropped_rows) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open data file '" + csv_path + "'");
  const std::string where = "data file '" + csv_path + "'";

  // Positional layout: header names when present, else the sidecar's order.
  std::vector<std::string> layout;
  std::string line;
  std::size_t line_no = 0;
  if (schema.header) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw InputError(where + ": empty file");
    layout = split_line(line, schema.delimiter);
  } else {
    for (const auto& c : schema.columns) layout.push_back(c.name);
  }

  std::vector<int> pos;  // sidecar column -> field index
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < schema.columns.size(); ++j) {
    const auto& name = schema.columns[j].name;
    if (std::find(schema.skip_columns.begin(), schema.skip_columns.end(), name) != schema.skip_columns.end())
      continue;
    const auto it = std::find(layout.begin(), layout.end(), name);
    if (it == layout.end()) throw InputError(where + ": missing column '" + name + "'");
    pos.push_back(static_cast<int>(it - layout.begin()));
    kept.push_back(j);
  }

  std::vector<std::vector<std::string>> cells;
  std::vector<long> row_ids;
  std::size_t dropped = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_line(line, schema.delimiter);
    if (fields.size() != layout.size())
      throw InputError(where + ": row " + std::to_string(cells.size() + dropped + 1) + " has " +
                       std::to_string(fields.size()) + " fields, expected " + std::to_string(layout.size()));
    std::vector<std::string> row;
    bool missing = false;
    for (int p : pos) {
      const auto& f = fields[static_cast<std::size_t>(p)];
      if (std::find(schema.missing.begin(), schema.missing.end(), f) != schema.missing.end()) missing = true;
      row.push_back(f);
    }
    if (missing) {
      ++dropped;
      continue;
    }
    cells.push_back(std::move(row));
    row_ids.push_back(static_cast<long>(line_no));
  }
  if (dropped_rows) *dropped_rows = dropped;
  if (cells.empty()) throw InputError(where + ": no data rows");

  std::vector<Column> columns;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    Column c = schema.columns[kept[k]];
    const bool infer = kept[k] < schema.infer_categories.size() ? schema.infer_categories[kept[k]]
                                                                : c.categories.empty();
    if (c.discrete() && infer) {
      std::set<std::string> seen(c.categories.begin(), c.categories.end());
      for (const auto& row : cells) seen.insert(row[k]);
      c.categories.assign(seen.begin(), seen.end());
      std::sort(c.categories.begin(), c.categories.end(), label_less);
    }
    if (c.discrete()) c.cardinality = static_cast<int>(c.categories.size());
    columns.push_back(std::move(c));
  }
  VariableSchema vs;
  try {
    vs = VariableSchema(columns);
  } catch (const InputError& e) {
    throw InputError(where + ": " + e.what());
  }

  RowMatrix values(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::map<std::string, int>> codes(columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k)
    for (std::size_t c = 0; c < columns[k].categories.size(); ++c) codes[k][columns[k].categories[c]] = static_cast<int>(c);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const auto& cell = cells[i][k];
      const std::string at = where + ": row " + std::to_string(i + 1) + ", column '" + columns[k].name + "'";
      if (columns[k].discrete()) {
        const auto it = codes[k].find(cell);
        if (it == codes[k].end()) throw InputError(at + ": unknown category '" + cell + "'");
        values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = it->second;
      } else {
        double v;
        if (!parse_real(cell, v)) throw InputError(at + ": cannot parse '" + cell + "' as a number");
        values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
      }
    }
  }

  DatasetTable table(std::move(vs), std::move(values), std::move(row_ids));
  if (schema.target) {
    if (!table.schema().index_of(*schema.target))
      throw InputError(where + ": target column '" + *schema.target + "' is not loaded");
    table.set_target(schema.target);
  }
  return table;
}

void save_csv(const DatasetTable& table, const std::string& csv_path, const std::string& sidecar_path) {
  const auto& schema = table.schema();
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write data file '" + csv_path + "'");
  for (std::size_t j = 0; j < schema.size(); ++j) out << (j ? "," : "") << quote_field(schema[j].name);
  out << "\n";
  char buf[40];
  for (std::size_t i = 0; i < table.rows(); ++i) {
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (j) out << ",";
      if (schema[j].discrete()) {
        out << quote_field(schema.category_label(static_cast<int>(j), static_cast<int>(table.at(i, j))));
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", table.at(i, j));
        out << buf;
      }
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing data file '" + csv_path + "'");

  json doc;
  doc["columns"] = json::array();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    json c{{"name", schema[j].name}};
    if (schema[j].discrete()) {
      c["kind"] = "discrete";
      std::vector<std::string> labels;
      for (int code = 0; code < schema[j].cardinality; ++code)
        labels.push_back(schema.category_label(static_cast<int>(j), code));
      c["categories"] = labels;
      c["infer_categories"] = false;
    } else {
      c["kind"] = "continuous";
    }
    doc["columns"].push_back(std::move(c));
  }
  if (table.target()) doc["target"] = *table.target();
  std::ofstream side(sidecar_path);
  if (!side) throw IoError("cannot write schema sidecar '" + sidecar_path + "'");
  side << doc.dump(2) << "\n";
}

}  // namespace exspn
