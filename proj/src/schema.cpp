#include "promptevo/schema.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "promptevo/codec.hpp"
#include "promptevo/errors.hpp"

namespace promptevo {

std::string_view to_string(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::single_discrete: return "single_discrete";
    case AttributeKind::multi_discrete: return "multi_discrete";
    case AttributeKind::continuous: return "continuous";
  }
  return "unknown";
}

std::optional<AttributeKind> parse_attribute_kind(std::string_view text) {
  if (text == "single_discrete") return AttributeKind::single_discrete;
  if (text == "multi_discrete") return AttributeKind::multi_discrete;
  if (text == "continuous") return AttributeKind::continuous;
  return std::nullopt;
}

std::optional<std::size_t> AttributeDef::value_index(std::string_view value) const {
  const auto it = std::find(values.begin(), values.end(), value);
  if (it == values.end()) return std::nullopt;
  return static_cast<std::size_t>(it - values.begin());
}

const AttributeDef* AttributeSchema::find(std::string_view name) const {
  for (const auto& attr : attributes)
    if (attr.name == name) return &attr;
  return nullptr;
}

std::string describe(const std::vector<Violation>& violations) {
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    const auto& v = violations[i];
    if (!v.attribute.empty()) out << "attribute '" << v.attribute << "': ";
    out << v.rule;
    if (!v.message.empty()) out << " (" << v.message << ")";
  }
  return out.str();
}

bool is_name_token(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

bool is_value_token(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || std::iscntrl(static_cast<unsigned char>(c)) ||
           c == ',' || c == '|' || c == '=' || c == ':' || c == '<' || c == '>';
  });
}

AttributeSchema kandinsky_default() {
  AttributeSchema s;
  s.version = "1.0";
  s.style_keyword = "kandinsky";

  AttributeDef hue;
  hue.name = "hue";
  hue.kind = AttributeKind::multi_discrete;
  hue.values = {"red", "yellow", "blue", "orange", "green", "violet"};
  hue.select_count = 3;

  AttributeDef line;
  line.name = "line";
  line.kind = AttributeKind::single_discrete;
  line.values = {"straight", "curve", "angular"};

  // Point has a single value, so it shares one gene with the plane forms.
  AttributeDef elements;
  elements.name = "elements";
  elements.kind = AttributeKind::multi_discrete;
  elements.values = {"point", "triangle", "square", "circle"};
  elements.select_count = 2;

  auto continuous = [](std::string name, std::string low, std::string high, std::string lora) {
    AttributeDef a;
    a.name = std::move(name);
    a.kind = AttributeKind::continuous;
    a.range = {-1.0, 1.0};
    a.pole_labels = {std::move(low), std::move(high)};
    a.lora_name = std::move(lora);
    return a;
  };
  AttributeDef parallel = continuous("parallel", "inner", "external", "kandinsky_parallel");
  parallel.dual_adapter = true;

  s.attributes = {
      std::move(hue),
      std::move(line),
      std::move(elements),
      continuous("brightness", "dark", "light", "kandinsky_brightness"),
      continuous("structure", "acentric", "centric", "kandinsky_structure"),
      std::move(parallel),
  };
  return s;
}

namespace {

void check_values(const AttributeDef& a, std::vector<Violation>& out) {
  std::set<std::string_view> seen;
  for (const auto& v : a.values) {
    if (!is_value_token(v)) {
      out.push_back({a.name, "value_invalid", "value '" + v + "' is not a valid token"});
    } else if (!seen.insert(v).second) {
      out.push_back({a.name, "duplicate_value", "value '" + v + "' listed twice"});
    }
  }
}

bool has_continuous_fields(const AttributeDef& a) {
  return a.range != Interval{} || a.pole_labels != PoleLabels{} || !a.lora_name.empty() ||
         a.dual_adapter;
}

}  // namespace

std::vector<Violation> validate_schema(const AttributeSchema& schema) {
  std::vector<Violation> out;
  if (schema.version.empty()) out.push_back({"", "version_missing", "schema version is empty"});
  if (!is_name_token(schema.style_keyword))
    out.push_back({"", "style_keyword_invalid", "style keyword must be a lowercase token"});
  if (schema.attributes.empty())
    out.push_back({"", "empty_schema", "schema must define at least one attribute"});

  std::set<std::string_view> names;
  for (const auto& a : schema.attributes) {
    if (a.name.empty()) {
      out.push_back({a.name, "name_empty", "attribute name is empty"});
    } else if (!is_name_token(a.name)) {
      out.push_back({a.name, "name_invalid", "attribute name must be a lowercase token"});
    } else if (!names.insert(a.name).second) {
      out.push_back({a.name, "duplicate_name", "attribute name used more than once"});
    }

    switch (a.kind) {
      case AttributeKind::single_discrete:
        if (a.values.size() < 2)
          out.push_back({a.name, "too_few_values", "single_discrete needs at least 2 values"});
        check_values(a, out);
        if (a.select_count != 0 || has_continuous_fields(a))
          out.push_back({a.name, "unexpected_field", "single_discrete carries only values"});
        break;
      case AttributeKind::multi_discrete:
        if (a.select_count == 0) {
          out.push_back({a.name, "select_count_nonpositive", "select_count must be positive"});
        } else if (a.values.size() <= a.select_count) {
          out.push_back({a.name, "select_count_too_large",
                         "select_count must be strictly less than the number of values"});
        }
        check_values(a, out);
        if (has_continuous_fields(a))
          out.push_back({a.name, "unexpected_field", "multi_discrete carries values and select_count only"});
        break;
      case AttributeKind::continuous:
        if (!a.values.empty() || a.select_count != 0)
          out.push_back({a.name, "unexpected_field", "continuous attributes carry no values list"});
        if (!std::isfinite(a.range.lo) || !std::isfinite(a.range.hi) || !(a.range.lo < a.range.hi))
          out.push_back({a.name, "range_degenerate", "range requires finite lo < hi"});
        if (!is_value_token(a.pole_labels.low) || !is_value_token(a.pole_labels.high))
          out.push_back({a.name, "missing_pole_labels", "both pole labels are required"});
        if (!is_value_token(a.lora_name))
          out.push_back({a.name, "missing_lora_name", "continuous attributes need an adapter name"});
        break;
    }
  }
  return out;
}

AttributeSchema load_schema(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string("schema document: ") + e.what());
  }
  AttributeSchema schema = schema_from_json(doc);
  if (auto violations = validate_schema(schema); !violations.empty())
    throw Error(ErrorCode::validation_error, "invalid schema: " + describe(violations));
  return schema;
}

AttributeSchema load_schema_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open schema file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_schema(buf.str());
}

std::string serialize_schema(const AttributeSchema& schema) {
  return schema_to_json(schema).dump(2) + "\n";
}

}  // namespace promptevo
