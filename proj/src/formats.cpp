// ARFF, CSV and MULAN XML readers and writers.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "mlbalance/dataset.hpp"
#include "mlbalance/error.hpp"

namespace mlbalance {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool iequals_prefix(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Splits text into lines, keeping 1-based line numbers and dropping '\r'.
std::vector<std::pair<std::size_t, std::string_view>> split_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t line_no = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line_no, line);
    if (end == text.size()) break;
    start = end + 1;
    ++line_no;
  }
  return lines;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    s = trim(s.substr(1, s.size() - 2));
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Reads an ARFF token that may be quoted; advances `s` past it.
std::string read_arff_name(std::string_view& s, std::size_t line) {
  s = trim(s);
  if (s.empty()) throw ParseError("expected attribute name", line);
  std::string name;
  if (s.front() == '\'' || s.front() == '"') {
    const char quote = s.front();
    std::size_t i = 1;
    bool closed = false;
    for (; i < s.size(); ++i) {
      if (s[i] == '\\' && i + 1 < s.size()) {
        name.push_back(s[++i]);
      } else if (s[i] == quote) {
        closed = true;
        ++i;
        break;
      } else {
        name.push_back(s[i]);
      }
    }
    if (!closed) throw ParseError("unterminated quoted name", line);
    s.remove_prefix(i);
  } else {
    std::size_t i = 0;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '{') ++i;
    name = std::string(s.substr(0, i));
    s.remove_prefix(i);
  }
  return name;
}

bool needs_quoting(std::string_view name) {
  if (name.empty()) return true;
  for (char c : name) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '\'' || c == '"' ||
        c == '{' || c == '}' || c == '%' || c == '\\') {
      return true;
    }
  }
  return false;
}

std::string quote_arff_name(std::string_view name) {
  if (!needs_quoting(name)) return std::string(name);
  std::string out = "'";
  for (char c : name) {
    if (c == '\'' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

struct ArffAttribute {
  std::string name;
  bool binary_nominal = false;
};

// Parses the type part of an @attribute line.
bool parse_attribute_type(std::string_view type, std::size_t line) {
  type = trim(type);
  if (!type.empty() && type.front() == '{') {
    if (type.back() != '}') throw ParseError("unterminated nominal value list", line);
    std::string_view body = type.substr(1, type.size() - 2);
    std::size_t start = 0;
    while (start <= body.size()) {
      std::size_t comma = body.find(',', start);
      if (comma == std::string_view::npos) comma = body.size();
      auto v = parse_number(body.substr(start, comma - start));
      if (!v || (*v != 0.0 && *v != 1.0)) {
        throw ParseError("only numeric and {0,1} nominal attributes are supported", line);
      }
      start = comma + 1;
    }
    return true;
  }
  const std::string t = lower(type);
  if (t == "numeric" || t == "real" || t == "integer") return false;
  throw ParseError("unsupported attribute type '" + std::string(type) + "'", line);
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

}  // namespace

MultiLabelDataset parse_arff(std::string_view text, const std::vector<std::string>& label_names) {
  std::vector<ArffAttribute> attributes;
  std::unordered_map<std::string, std::size_t> attribute_index;
  bool in_data = false;
  std::vector<std::vector<double>> rows;

  for (auto [line_no, raw] : split_lines(text)) {
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '%') continue;

    if (!in_data) {
      if (line.front() != '@') throw ParseError("expected a header declaration", line_no);
      if (iequals_prefix(line, "@relation")) continue;
      if (iequals_prefix(line, "@attribute")) {
        std::string_view rest = line.substr(10);
        if (rest.empty() || !std::isspace(static_cast<unsigned char>(rest.front()))) {
          throw ParseError("malformed @attribute declaration", line_no);
        }
        std::string name = read_arff_name(rest, line_no);
        if (trim(rest).empty()) throw ParseError("attribute '" + name + "' has no type", line_no);
        const bool binary = parse_attribute_type(rest, line_no);
        if (!attribute_index.emplace(name, attributes.size()).second) {
          throw SchemaError("duplicate attribute '" + name + "'");
        }
        attributes.push_back({std::move(name), binary});
        continue;
      }
      if (iequals_prefix(line, "@data")) {
        if (attributes.empty()) throw ParseError("@data before any @attribute", line_no);
        in_data = true;
        continue;
      }
      throw ParseError("unknown declaration '" + std::string(line) + "'", line_no);
    }

    std::vector<double> values(attributes.size(), 0.0);
    if (line.front() == '{') {
      if (line.back() != '}') throw ParseError("unterminated sparse row", line_no);
      std::string_view body = trim(line.substr(1, line.size() - 2));
      if (!body.empty()) {
        for (std::string_view entry : split_commas(body)) {
          entry = trim(entry);
          std::size_t space = entry.find_first_of(" \t");
          if (space == std::string_view::npos) {
            throw ParseError("sparse entry needs 'index value'", line_no);
          }
          auto idx = parse_number(entry.substr(0, space));
          std::string_view value_text = trim(entry.substr(space));
          if (!idx || *idx < 0 || *idx != std::floor(*idx) ||
              *idx >= static_cast<double>(attributes.size())) {
            throw ParseError("invalid sparse attribute index", line_no);
          }
          if (value_text == "?") throw ValidationError("line " + std::to_string(line_no) +
                                                       ": missing values are not supported");
          auto value = parse_number(value_text);
          if (!value) throw ParseError("non-numeric value '" + std::string(value_text) + "'",
                                       line_no);
          values[static_cast<std::size_t>(*idx)] = *value;
        }
      }
    } else {
      auto cells = split_commas(line);
      if (cells.size() != attributes.size()) {
        throw ParseError("expected " + std::to_string(attributes.size()) + " values, found " +
                             std::to_string(cells.size()),
                         line_no);
      }
      for (std::size_t c = 0; c < cells.size(); ++c) {
        std::string_view cell = trim(cells[c]);
        if (cell == "?") throw ValidationError("line " + std::to_string(line_no) +
                                               ": missing values are not supported");
        auto value = parse_number(cell);
        if (!value) {
          throw ParseError("non-numeric value '" + std::string(cell) + "' for attribute '" +
                               attributes[c].name + "'",
                           line_no);
        }
        values[c] = *value;
      }
    }
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (attributes[c].binary_nominal && values[c] != 0.0 && values[c] != 1.0) {
        throw ValidationError("line " + std::to_string(line_no) + ": value " +
                              format_double(values[c]) + " outside {0,1} for attribute '" +
                              attributes[c].name + "'");
      }
    }
    rows.push_back(std::move(values));
  }
  if (!in_data) throw ParseError("no @data section", 0);

  std::vector<std::size_t> label_columns;
  std::vector<bool> is_label(attributes.size(), false);
  for (const auto& name : label_names) {
    auto it = attribute_index.find(name);
    if (it == attribute_index.end()) throw SchemaError("unknown label attribute '" + name + "'");
    if (is_label[it->second]) throw SchemaError("label '" + name + "' listed twice");
    is_label[it->second] = true;
    label_columns.push_back(it->second);
  }
  std::vector<std::size_t> feature_columns;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < attributes.size(); ++c) {
    if (!is_label[c]) {
      feature_columns.push_back(c);
      feature_names.push_back(attributes[c].name);
    }
  }
  if (feature_columns.empty()) throw SchemaError("no feature attributes remain");
  if (label_columns.empty()) throw SchemaError("no label attributes given");
  if (rows.empty()) throw SchemaError("ARFF document has no data rows");

  const auto n = static_cast<Index>(rows.size());
  Matrix x(n, static_cast<Index>(feature_columns.size()));
  LabelMatrix y(n, static_cast<Index>(label_columns.size()));
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (std::size_t f = 0; f < feature_columns.size(); ++f) {
      x(i, static_cast<Index>(f)) = row[feature_columns[f]];
    }
    for (std::size_t l = 0; l < label_columns.size(); ++l) {
      const double v = row[label_columns[l]];
      if (v != 0.0 && v != 1.0) {
        throw ValidationError("row " + std::to_string(i + 1) + ": label '" + label_names[l] +
                              "' has value " + format_double(v) + " outside {0,1}");
      }
      y(i, static_cast<Index>(l)) = static_cast<int>(v);
    }
  }
  return MultiLabelDataset(std::move(x), std::move(y), std::move(feature_names), label_names);
}

namespace {

// Splits one CSV record honoring double quotes ("" escapes a quote).
std::vector<std::string> split_csv_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line_no);
  cells.push_back(std::move(cell));
  return cells;
}

std::string quote_csv(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

MultiLabelDataset parse_dense_csv(std::string_view text, Index label_count) {
  auto lines = split_lines(text);
  // Skip a UTF-8 byte order mark.
  if (!lines.empty() && lines.front().second.substr(0, 3) == "\xEF\xBB\xBF") {
    lines.front().second.remove_prefix(3);
  }
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<int>> label_rows;
  for (auto [line_no, line] : lines) {
    if (trim(line).empty()) continue;
    auto cells = split_csv_record(line, line_no);
    if (header.empty()) {
      header = std::move(cells);
      for (auto& h : header) h = std::string(trim(h));
      if (label_count < 1) throw SchemaError("label count must be at least 1");
      if (label_count >= static_cast<Index>(header.size())) {
        throw SchemaError("label count " + std::to_string(label_count) + " leaves no feature "
                          "columns out of " + std::to_string(header.size()));
      }
      continue;
    }
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    const std::size_t d = header.size() - static_cast<std::size_t>(label_count);
    std::vector<double> features(d);
    std::vector<int> labels(static_cast<std::size_t>(label_count));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto value = parse_number(cells[c]);
      if (!value) {
        throw ParseError("row " + std::to_string(rows.size() + 1) + ", column " +
                             std::to_string(c + 1) + " ('" + header[c] + "'): non-numeric cell '" +
                             cells[c] + "'",
                         line_no);
      }
      if (c < d) {
        features[c] = *value;
      } else {
        if (*value != 0.0 && *value != 1.0) {
          throw ValidationError("line " + std::to_string(line_no) + ": label column '" +
                                header[c] + "' has value " + cells[c] + " outside {0,1}");
        }
        labels[c - d] = static_cast<int>(*value);
      }
    }
    rows.push_back(std::move(features));
    label_rows.push_back(std::move(labels));
  }
  if (header.empty()) throw ParseError("missing CSV header row", 0);
  if (rows.empty()) throw SchemaError("CSV document has no data rows");

  const auto n = static_cast<Index>(rows.size());
  const auto d = static_cast<Index>(rows.front().size());
  Matrix x(n, d);
  LabelMatrix y(n, label_count);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (Index j = 0; j < label_count; ++j) {
      y(i, j) = label_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  std::vector<std::string> feature_names(header.begin(), header.begin() + d);
  std::vector<std::string> label_names(header.begin() + d, header.end());
  return MultiLabelDataset(std::move(x), std::move(y), std::move(feature_names),
                           std::move(label_names));
}

std::string write_dataset(const MultiLabelDataset& dataset, DatasetFormat format,
                          std::string_view relation) {
  const Matrix& x = dataset.features();
  const LabelMatrix& y = dataset.labels();
  std::string out;
  if (format == DatasetFormat::kArff) {
    out += "@relation " + quote_arff_name(relation) + "\n\n";
    for (const auto& name : dataset.feature_names()) {
      out += "@attribute " + quote_arff_name(name) + " numeric\n";
    }
    for (const auto& name : dataset.label_names()) {
      out += "@attribute " + quote_arff_name(name) + " {0,1}\n";
    }
    out += "\n@data\n";
  } else {
    bool first = true;
    for (const auto& name : dataset.feature_names()) {
      out += (first ? "" : ",") + quote_csv(name);
      first = false;
    }
    for (const auto& name : dataset.label_names()) out += "," + quote_csv(name);
    out += "\n";
  }
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(x(i, j));
    }
    for (Index j = 0; j < y.cols(); ++j) {
      out += ',';
      out += y(i, j) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string decode_entities(std::string_view s) {
  static const std::pair<std::string_view, char> kEntities[] = {
      {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    bool matched = false;
    if (s[i] == '&') {
      for (auto [entity, c] : kEntities) {
        if (s.substr(i, entity.size()) == entity) {
          out.push_back(c);
          i += entity.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out.push_back(s[i++]);
  }
  return out;
}

std::string encode_entities(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Local element name without namespace prefix.
std::string_view local_name(std::string_view qualified) {
  auto colon = qualified.find(':');
  return colon == std::string_view::npos ? qualified : qualified.substr(colon + 1);
}

std::optional<std::string> find_attribute(std::string_view tag_body, std::string_view attr) {
  std::size_t pos = 0;
  while (pos < tag_body.size()) {
    std::size_t eq = tag_body.find('=', pos);
    if (eq == std::string_view::npos) return std::nullopt;
    std::string_view key = trim(tag_body.substr(pos, eq - pos));
    auto space = key.find_last_of(" \t\r\n");
    if (space != std::string_view::npos) key = key.substr(space + 1);
    std::size_t q = eq + 1;
    while (q < tag_body.size() && std::isspace(static_cast<unsigned char>(tag_body[q]))) ++q;
    if (q >= tag_body.size() || (tag_body[q] != '"' && tag_body[q] != '\'')) {
      return std::nullopt;
    }
    const char quote = tag_body[q];
    std::size_t close = tag_body.find(quote, q + 1);
    if (close == std::string_view::npos) return std::nullopt;
    if (key == attr) return decode_entities(tag_body.substr(q + 1, close - q - 1));
    pos = close + 1;
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::string> parse_mulan_labels_xml(std::string_view text) {
  std::vector<std::string> names;
  int label_depth = 0;
  std::size_t pos = 0;
  while ((pos = text.find('<', pos)) != std::string_view::npos) {
    if (text.substr(pos, 4) == "<!--") {
      std::size_t end = text.find("-->", pos);
      if (end == std::string_view::npos) throw ParseError("unterminated XML comment", 0);
      pos = end + 3;
      continue;
    }
    std::size_t end = text.find('>', pos);
    if (end == std::string_view::npos) throw ParseError("unterminated XML tag", 0);
    std::string_view tag = text.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty() || tag.front() == '?' || tag.front() == '!') continue;
    const bool closing = tag.front() == '/';
    const bool self_closing = tag.back() == '/';
    if (closing) tag.remove_prefix(1);
    if (self_closing) tag.remove_suffix(1);
    std::size_t name_end = 0;
    while (name_end < tag.size() && !std::isspace(static_cast<unsigned char>(tag[name_end]))) {
      ++name_end;
    }
    if (local_name(tag.substr(0, name_end)) != "label") continue;
    if (closing) {
      --label_depth;
      continue;
    }
    if (label_depth == 0) {
      auto name = find_attribute(tag.substr(name_end), "name");
      if (!name) throw ParseError("label element without a name attribute", 0);
      names.push_back(std::move(*name));
    }
    if (!self_closing) ++label_depth;
  }
  if (names.empty()) throw SchemaError("labels file declares no label elements");
  return names;
}

std::string write_mulan_labels_xml(const std::vector<std::string>& label_names) {
  std::string out = "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n";
  out += "<labels xmlns=\"http://mulan.sourceforge.net/labels\">\n";
  for (const auto& name : label_names) {
    out += "  <label name=\"" + encode_entities(name) + "\"></label>\n";
  }
  out += "</labels>\n";
  return out;
}

}  // namespace mlbalance
