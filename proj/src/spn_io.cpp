#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "exspn/error.hpp"
#include "exspn/spn.hpp"

namespace exspn {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "exspn-spn";

// 17 significant digits, enough for an exact double round trip.
std::string decimal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string quoted(const std::string& s) { return json(s).dump(); }

template <class Seq, class Fn>
std::string join_array(const Seq& seq, Fn&& fmt) {
  std::string out = "[";
  bool first = true;
  for (const auto& v : seq) {
    if (!first) out += ", ";
    first = false;
    out += fmt(v);
  }
  return out + "]";
}

std::string write_column(const Column& c) {
  std::ostringstream os;
  os << "{\"name\": " << quoted(c.name) << ", \"kind\": ";
  if (c.discrete()) {
    os << "\"discrete\", \"cardinality\": " << c.cardinality;
    if (!c.categories.empty()) os << ", \"categories\": " << join_array(c.categories, quoted);
  } else {
    os << "\"continuous\"";
  }
  os << "}";
  return os.str();
}

std::string write_distribution(const LeafDistribution& d) {
  if (const auto* c = std::get_if<Categorical>(&d))
    return "{\"type\": \"categorical\", \"probs\": " + join_array(c->probs, decimal) + "}";
  if (const auto* g = std::get_if<Gaussian>(&d))
    return "{\"type\": \"gaussian\", \"mean\": " + decimal(g->mean) + ", \"stddev\": " + decimal(g->stddev) + "}";
  return "{\"type\": \"unit\"}";
}

std::string write_node(const SpnNode& n) {
  auto as_int = [](int v) { return std::to_string(v); };
  std::ostringstream os;
  os << "{\"id\": " << n.id << ", \"type\": ";
  switch (n.type) {
    case NodeType::kSum:
      os << "\"sum\", \"children\": " << join_array(n.children, as_int)
         << ", \"weights\": " << join_array(n.weights, decimal);
      break;
    case NodeType::kProduct:
      os << "\"product\", \"children\": " << join_array(n.children, as_int);
      break;
    case NodeType::kLeaf:
      os << "\"leaf\", \"variable\": " << n.variable << ", \"distribution\": " << write_distribution(n.distribution);
      break;
  }
  os << "}";
  return os.str();
}

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError("spn file: " + where + " is missing '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError("spn file: " + where + " field '" + key + "' has the wrong type");
  }
}

Column read_column(const json& j, std::size_t i) {
  const std::string where = "schema column " + std::to_string(i);
  Column c;
  c.name = field<std::string>(j, "name", where);
  const auto kind = field<std::string>(j, "kind", where);
  if (kind == "discrete") {
    c.kind = ColumnKind::kDiscrete;
    c.cardinality = field<int>(j, "cardinality", where);
    if (j.contains("categories")) c.categories = field<std::vector<std::string>>(j, "categories", where);
  } else if (kind == "continuous") {
    c.kind = ColumnKind::kContinuous;
  } else {
    throw ParseError("spn file: " + where + " has unknown kind '" + kind + "'");
  }
  return c;
}

LeafDistribution read_distribution(const json& j, const std::string& where) {
  const auto type = field<std::string>(j, "type", where);
  if (type == "categorical") return Categorical{field<std::vector<double>>(j, "probs", where)};
  if (type == "gaussian") return Gaussian{field<double>(j, "mean", where), field<double>(j, "stddev", where)};
  if (type == "unit") return UnitLeaf{};
  throw ParseError("spn file: " + where + " has unknown distribution '" + type + "'");
}

}  // namespace

std::string serialize(const SpnGraph& spn) {
  std::ostringstream os;
  os << "{\n  \"format\": \"" << kFormatTag << "\",\n  \"version\": " << kSpnFormatVersion << ",\n"
     << "  \"structure_only\": " << (spn.structure_only() ? "true" : "false") << ",\n  \"schema\": [\n";
  const auto& cols = spn.schema().columns();
  for (std::size_t i = 0; i < cols.size(); ++i)
    os << "    " << write_column(cols[i]) << (i + 1 < cols.size() ? ",\n" : "\n");
  os << "  ],\n  \"root\": " << spn.root() << ",\n  \"nodes\": [\n";
  const auto& nodes = spn.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i)
    os << "    " << write_node(nodes[i]) << (i + 1 < nodes.size() ? ",\n" : "\n");
  os << "  ]\n}\n";
  return os.str();
}

SpnGraph deserialize(std::string_view text, LoadMode mode) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("spn file: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("spn file: top level must be an object");
  if (doc.contains("format") && doc["format"] != kFormatTag) throw ParseError("spn file: unexpected format tag");
  const int version = field<int>(doc, "version", "document");
  if (version != kSpnFormatVersion)
    throw ParseError("spn file: version mismatch (file " + std::to_string(version) + ", supported " +
                     std::to_string(kSpnFormatVersion) + ")");
  const bool structure_only = doc.value("structure_only", false);

  const auto& jschema = doc.contains("schema") ? doc["schema"] : json();
  if (!jschema.is_array()) throw ParseError("spn file: 'schema' must be an array");
  std::vector<Column> cols;
  for (std::size_t i = 0; i < jschema.size(); ++i) cols.push_back(read_column(jschema[i], i));
  VariableSchema schema;
  try {
    schema = VariableSchema(std::move(cols));
  } catch (const InputError& e) {
    throw ValidationError(std::string("spn file: ") + e.what());
  }

  const int root = field<int>(doc, "root", "document");
  const auto& jnodes = doc.contains("nodes") ? doc["nodes"] : json();
  if (!jnodes.is_array() || jnodes.empty()) throw ParseError("spn file: 'nodes' must be a non-empty array");

  std::vector<SpnNode> nodes;
  nodes.reserve(jnodes.size());
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const auto& jn = jnodes[i];
    const std::string where = "node entry " + std::to_string(i);
    const int id = field<int>(jn, "id", where);
    const auto type = field<std::string>(jn, "type", where);
    if (type == "sum") {
      auto weights = field<std::vector<double>>(jn, "weights", where);
      double total = 0.0;
      for (double w : weights) total += w;
      if (std::abs(total - 1.0) > 1e-9) {
        if (mode == LoadMode::kStrict)
          throw ValidationError("spn file: weights of sum node " + std::to_string(id) + " sum to " +
                                std::to_string(total) + " (strict mode)");
        if (total > 0.0)
          for (double& w : weights) w /= total;
      }
      nodes.push_back(SpnNode::sum(id, field<std::vector<int>>(jn, "children", where), std::move(weights)));
    } else if (type == "product") {
      nodes.push_back(SpnNode::product(id, field<std::vector<int>>(jn, "children", where)));
    } else if (type == "leaf") {
      if (!jn.contains("distribution")) throw ParseError("spn file: " + where + " is missing 'distribution'");
      nodes.push_back(SpnNode::leaf(id, field<int>(jn, "variable", where), read_distribution(jn["distribution"], where)));
    } else {
      throw ParseError("spn file: " + where + " has unknown type '" + type + "'");
    }
  }

  SpnGraph spn(std::move(schema), std::move(nodes), root, structure_only);
  auto report = validate(spn);
  if (!report.ok()) throw ValidationError("spn file: invariant violation on load: " + report.describe());
  return spn;
}

SpnGraph load_spn(const std::string& path, LoadMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open SPN file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str(), mode);
}

void save_spn(const SpnGraph& spn, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write SPN file '" + path + "'");
  out << serialize(spn);
  if (!out) throw IoError("failed writing SPN file '" + path + "'");
}

}  // namespace exspn
