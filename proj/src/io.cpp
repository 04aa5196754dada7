#include "zsl/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace zsl::io {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || begin == end) throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void check_label(const std::string& label) {
  if (label.find_first_of(",\n\r") != std::string::npos) {
    throw std::invalid_argument("label contains a delimiter: " + label);
  }
}

}  // namespace

ClassCatalog read_catalog(const std::filesystem::path& path) {
  const auto lines = lines_of(read_text(path));
  const std::string file = path.string();
  if (lines.empty() || lines[0] != "index,label,novel") throw FormatError(file, 1, "expected header index,label,novel");
  std::vector<ClassInfo> classes;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto f = split_csv_line(lines[n]);
    if (f.size() != 3) throw FormatError(file, n + 1, "expected 3 fields");
    ClassInfo info;
    try {
      info.index = std::stoi(f[0]);
    } catch (const std::exception&) {
      throw FormatError(file, n + 1, "bad class index '" + f[0] + "'");
    }
    info.label = f[1];
    if (f[2] != "0" && f[2] != "1") throw FormatError(file, n + 1, "novel flag must be 0 or 1");
    info.novel = f[2] == "1";
    classes.push_back(std::move(info));
  }
  try {
    return ClassCatalog(std::move(classes));
  } catch (const std::invalid_argument& e) {
    throw FormatError(file, 0, e.what());
  }
}

void write_catalog(const ClassCatalog& catalog, const std::filesystem::path& path) {
  std::string out = "index,label,novel\n";
  for (const auto& c : catalog.classes()) {
    check_label(c.label);
    out += std::to_string(c.index) + "," + c.label + "," + (c.novel ? "1" : "0") + "\n";
  }
  write_text(path, out);
}

std::vector<FeatureRecord> read_features(const std::filesystem::path& path, const ClassCatalog& catalog) {
  const auto lines = lines_of(read_text(path));
  const std::string file = path.string();
  if (lines.empty()) throw FormatError(file, 1, "missing header");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 3 || header[0] != "item_id" || header[1] != "label") {
    throw FormatError(file, 1, "expected header item_id,label,f0..");
  }
  const std::size_t d = header.size() - 2;
  for (std::size_t k = 0; k < d; ++k) {
    if (header[k + 2] != "f" + std::to_string(k)) throw FormatError(file, 1, "feature columns must be f0..f" + std::to_string(d - 1));
  }
  std::vector<FeatureRecord> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto f = split_csv_line(lines[n]);
    if (f.size() != d + 2) {
      throw FormatError(file, n + 1, "row has " + std::to_string(f.size() - 2) + " features, expected " + std::to_string(d));
    }
    FeatureRecord rec;
    rec.item_id = f[0];
    if (rec.item_id.empty()) throw FormatError(file, n + 1, "empty item id");
    if (!f[1].empty()) {
      const auto cls = catalog.find(f[1]);
      if (!cls) throw FormatError(file, n + 1, "unknown class label '" + f[1] + "'");
      rec.class_id = *cls;
    }
    rec.features.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      double v;
      try {
        v = parse_double(f[k + 2]);
      } catch (const std::invalid_argument& e) {
        throw FormatError(file, n + 1, e.what());
      }
      if (!std::isfinite(v)) throw FormatError(file, n + 1, "non-finite feature value");
      rec.features[k] = v;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_features(std::span<const FeatureRecord> records, const ClassCatalog& catalog,
                    const std::filesystem::path& path) {
  const std::size_t d = feature_dimension(records);
  std::string out = "item_id,label";
  for (std::size_t k = 0; k < d; ++k) out += ",f" + std::to_string(k);
  out += '\n';
  for (const auto& r : records) {
    check_label(r.item_id);
    out += r.item_id;
    out += ',';
    if (r.class_id) out += catalog.at(*r.class_id).label;
    for (double v : r.features) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  write_text(path, out);
}

AttributeMatrix read_attribute_matrix(const std::filesystem::path& path) {
  const auto lines = lines_of(read_text(path));
  const std::string file = path.string();
  if (lines.empty()) throw FormatError(file, 1, "missing header");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "class") throw FormatError(file, 1, "expected header class,<attributes>");
  std::vector<std::string> names(header.begin() + 1, header.end());
  std::vector<std::string> classes;
  std::vector<double> values;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto f = split_csv_line(lines[n]);
    if (f.size() != header.size()) {
      throw FormatError(file, n + 1, "row has " + std::to_string(f.size()) + " fields, header has " +
                                         std::to_string(header.size()));
    }
    classes.push_back(f[0]);
    for (std::size_t k = 1; k < f.size(); ++k) {
      if (f[k] != "-1" && f[k] != "0" && f[k] != "1") {
        throw FormatError(file, n + 1, "non-ternary value '" + f[k] + "' at (" + std::to_string(classes.size() - 1) +
                                           ", " + std::to_string(k - 1) + ")");
      }
      values.push_back(std::stod(f[k]));
    }
  }
  return AttributeMatrix(std::move(classes), std::move(names), std::move(values));
}

void write_attribute_matrix(const AttributeMatrix& attributes, const std::filesystem::path& path) {
  std::string out = "class";
  for (const auto& n : attributes.attribute_names()) {
    check_label(n);
    out += "," + n;
  }
  out += '\n';
  for (std::size_t r = 0; r < attributes.rows(); ++r) {
    out += attributes.class_labels()[r];
    for (std::size_t c = 0; c < attributes.cols(); ++c) out += "," + std::to_string(attributes.value(r, c));
    out += '\n';
  }
  write_text(path, out);
}

std::string hierarchy_to_text(const Hierarchy& tree, const ClassCatalog& catalog) {
  std::function<ordered_json(int)> emit = [&](int id) {
    const auto& nd = tree.node(id);
    ordered_json j;
    j["label"] = nd.label;
    if (nd.is_leaf()) {
      j["class"] = catalog.at(nd.class_id).label;
    } else {
      ordered_json kids = ordered_json::array();
      for (int c : nd.children) kids.push_back(emit(c));
      j["children"] = std::move(kids);
    }
    return j;
  };
  return emit(tree.root()).dump(2) + "\n";
}

Hierarchy hierarchy_from_text(const std::string& text, const ClassCatalog& catalog) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("hierarchy parse error: ") + e.what());
  }
  std::vector<HierarchyNode> nodes;
  std::unordered_set<int> seen;
  std::function<int(const ordered_json&, int)> visit = [&](const ordered_json& j, int depth) -> int {
    if (depth > 100000) throw std::invalid_argument("hierarchy nesting too deep");
    if (!j.is_object() || !j.contains("label") || !j["label"].is_string()) {
      throw std::invalid_argument("hierarchy node must be an object with a string label");
    }
    for (const auto& [key, _] : j.items()) {
      if (key != "label" && key != "class" && key != "children") {
        throw std::invalid_argument("unexpected hierarchy key: " + key);
      }
    }
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[id].id = id;
    nodes[id].label = j["label"].get<std::string>();
    const bool has_class = j.contains("class");
    const bool has_children = j.contains("children");
    if (has_class == has_children) throw std::invalid_argument("hierarchy node needs exactly one of class / children");
    if (has_class) {
      const auto name = j["class"].get<std::string>();
      const auto cls = catalog.find(name);
      if (!cls) throw std::invalid_argument("unknown class in hierarchy: " + name);
      if (!seen.insert(*cls).second) throw std::invalid_argument("duplicate class in hierarchy: " + name);
      nodes[id].class_id = *cls;
    } else {
      const auto& kids = j["children"];
      if (!kids.is_array() || kids.empty()) throw std::invalid_argument("children must be a non-empty array");
      std::vector<int> child_ids;
      for (const auto& k : kids) child_ids.push_back(visit(k, depth + 1));
      nodes[id].children = std::move(child_ids);
    }
    return id;
  };
  const int root = visit(doc, 0);
  return Hierarchy::assemble(nodes, root);
}

void export_hierarchy(const Hierarchy& tree, const ClassCatalog& catalog, const std::filesystem::path& path) {
  write_text(path, hierarchy_to_text(tree, catalog));
}

Hierarchy import_hierarchy(const std::filesystem::path& path, const ClassCatalog& catalog) {
  return hierarchy_from_text(read_text(path), catalog);
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  const auto lines = lines_of(text);
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  };
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string line = trim(lines[n]);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config", n + 1, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("config", n + 1, "empty key");
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second) throw FormatError("config", n + 1, "duplicate key " + key);
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  try {
    return parse_key_values(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string(), e.line(), e.detail());
  }
}

std::string key_values_to_text(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

namespace {

ordered_json binary_to_json(const CalibratedBinary& b) {
  ordered_json j;
  j["weights"] = b.model.weights;
  j["bias"] = b.model.bias;
  j["slope"] = b.calibration.slope;
  j["offset"] = b.calibration.offset;
  return j;
}

CalibratedBinary binary_from_json(const ordered_json& j) {
  CalibratedBinary b;
  b.model.weights = j.at("weights").get<std::vector<double>>();
  b.model.bias = j.at("bias").get<double>();
  b.calibration.slope = j.at("slope").get<double>();
  b.calibration.offset = j.at("offset").get<double>();
  return b;
}

ordered_json errors_to_json(const AttributeErrorModel& m) {
  ordered_json arr = ordered_json::array();
  for (const auto& per_attr : m.rates) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : per_attr) rows.push_back(std::vector<double>(row.begin(), row.end()));
    arr.push_back(rows);
  }
  return arr;
}

AttributeErrorModel errors_from_json(const ordered_json& j) {
  AttributeErrorModel m;
  for (const auto& rows : j) {
    std::array<Triple, 3> per_attr{};
    for (int t = 0; t < 3; ++t) {
      const auto row = rows.at(t).get<std::vector<double>>();
      if (row.size() != 3) throw std::invalid_argument("error model rows need 3 entries");
      per_attr[t] = {row[0], row[1], row[2]};
    }
    m.rates.push_back(per_attr);
  }
  return m;
}

}  // namespace

std::string models_to_text(const ModelBundle& bundle) {
  ordered_json j;
  ordered_json conv;
  conv["dimension"] = bundle.conventional.dimension;
  conv["classes"] = bundle.conventional.classes;
  conv["members"] = ordered_json::array();
  for (const auto& m : bundle.conventional.members) conv["members"].push_back(binary_to_json(m));
  j["conventional"] = conv;

  ordered_json direct;
  direct["dimension"] = bundle.direct.dimension;
  direct["attributes"] = ordered_json::array();
  for (const auto& a : bundle.direct.attributes) {
    ordered_json ja;
    ja["constant"] = a.constant;
    ja["constant_value"] = a.constant_value;
    ordered_json members = ordered_json::array();
    for (int s = 0; s < 3; ++s) members.push_back(a.trained[s] ? binary_to_json(a.members[s]) : ordered_json());
    ja["members"] = members;
    direct["attributes"].push_back(ja);
  }
  direct["notes"] = bundle.direct.notes;
  j["direct"] = direct;
  j["direct_errors"] = errors_to_json(bundle.direct_errors);
  j["indirect_errors"] = errors_to_json(bundle.indirect_errors);
  j["indirect_threshold"] = bundle.indirect_threshold;
  return j.dump(1) + "\n";
}

ModelBundle models_from_text(const std::string& text) {
  const auto j = ordered_json::parse(text);
  ModelBundle b;
  const auto& conv = j.at("conventional");
  b.conventional.dimension = conv.at("dimension").get<std::size_t>();
  b.conventional.classes = conv.at("classes").get<std::vector<int>>();
  for (const auto& m : conv.at("members")) b.conventional.members.push_back(binary_from_json(m));
  if (b.conventional.members.size() != b.conventional.classes.size()) {
    throw std::invalid_argument("conventional model member count mismatch");
  }
  const auto& direct = j.at("direct");
  b.direct.dimension = direct.at("dimension").get<std::size_t>();
  for (const auto& ja : direct.at("attributes")) {
    TernaryAttributeClassifier a;
    a.constant = ja.at("constant").get<bool>();
    a.constant_value = ja.at("constant_value").get<int>();
    const auto& members = ja.at("members");
    for (int s = 0; s < 3; ++s) {
      if (!members.at(s).is_null()) {
        a.trained[s] = true;
        a.members[s] = binary_from_json(members.at(s));
      }
    }
    b.direct.attributes.push_back(a);
  }
  b.direct.notes = direct.at("notes").get<std::vector<std::string>>();
  b.direct_errors = errors_from_json(j.at("direct_errors"));
  b.indirect_errors = errors_from_json(j.at("indirect_errors"));
  b.indirect_threshold = j.at("indirect_threshold").get<double>();
  return b;
}

std::string curves_to_csv(std::span<const SweepCurve> curves) {
  std::string out = "method,posterior_source,param,subset,avg_accuracy,avg_reward_strict,avg_reward_nominal,n_items\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out += c.method + "," + c.posterior_source + "," + format_double(p.param) + "," + c.subset + "," +
             format_double(p.accuracy) + "," + format_double(p.reward_strict) + "," + format_double(p.reward_nominal) +
             "," + std::to_string(p.n_items) + "\n";
    }
  }
  return out;
}

std::vector<SweepCurve> curves_from_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() ||
      lines[0] != "method,posterior_source,param,subset,avg_accuracy,avg_reward_strict,avg_reward_nominal,n_items") {
    throw FormatError("curves", 1, "unexpected curve header");
  }
  std::vector<SweepCurve> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto f = split_csv_line(lines[n]);
    if (f.size() != 8) throw FormatError("curves", n + 1, "expected 8 fields");
    if (out.empty() || out.back().method != f[0] || out.back().posterior_source != f[1] || out.back().subset != f[3]) {
      out.push_back(SweepCurve{f[0], f[1], f[3], {}});
    }
    CurvePoint p;
    p.param = parse_double(f[2]);
    p.accuracy = parse_double(f[4]);
    p.reward_strict = parse_double(f[5]);
    p.reward_nominal = parse_double(f[6]);
    p.n_items = static_cast<std::size_t>(std::stoull(f[7]));
    if (!out.back().points.empty() && !(p.param > out.back().points.back().param)) {
      throw FormatError("curves", n + 1, "curve parameters must be strictly increasing");
    }
    out.back().points.push_back(p);
  }
  return out;
}

std::string records_to_csv(std::span<const EvalRecord> records, const ClassCatalog& catalog) {
  std::string out =
      "item_id,true_class,novel,method,posterior_source,param,predicted_node,prediction_size,leaf_baseline,reward,"
      "correct\n";
  for (const auto& r : records) {
    out += r.item_id + "," + catalog.at(r.true_class).label + "," + (r.novel ? "1" : "0") + "," + r.method + "," +
           r.posterior_source + "," + format_double(r.param) + "," + std::to_string(r.predicted_node) + "," +
           std::to_string(r.prediction_size) + "," + std::to_string(r.leaf_baseline) + "," + format_double(r.reward) +
           "," + (r.correct ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<EvalRecord> records_from_csv(const std::string& text, const ClassCatalog& catalog) {
  const auto lines = lines_of(text);
  if (lines.empty() || split_csv_line(lines[0]).size() != 11 || lines[0].rfind("item_id,true_class", 0) != 0) {
    throw FormatError("records", 1, "unexpected record header");
  }
  std::vector<EvalRecord> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto f = split_csv_line(lines[n]);
    if (f.size() != 11) throw FormatError("records", n + 1, "expected 11 fields");
    EvalRecord r;
    r.item_id = f[0];
    const auto cls = catalog.find(f[1]);
    if (!cls) throw FormatError("records", n + 1, "unknown class " + f[1]);
    r.true_class = *cls;
    r.novel = f[2] == "1";
    r.method = f[3];
    r.posterior_source = f[4];
    r.param = parse_double(f[5]);
    r.predicted_node = std::stoi(f[6]);
    r.prediction_size = std::stoi(f[7]);
    r.leaf_baseline = std::stoi(f[8]);
    r.reward = parse_double(f[9]);
    r.correct = f[10] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace zsl::io
