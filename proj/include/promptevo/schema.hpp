#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promptevo {

enum class AttributeKind { single_discrete, multi_discrete, continuous };

std::string_view to_string(AttributeKind kind);
std::optional<AttributeKind> parse_attribute_kind(std::string_view text);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  double width() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct PoleLabels {
  std::string low;
  std::string high;
  friend bool operator==(const PoleLabels&, const PoleLabels&) = default;
};

/// One attribute of the style grammar.
///
/// Discrete kinds carry `values` (and `select_count` for multi_discrete);
/// continuous attributes carry `range`, `pole_labels` and `lora_name`. A
/// continuous attribute with `dual_adapter` set is realized by two adapters,
/// `<lora_name>_<pole_labels.low>` and `<lora_name>_<pole_labels.high>`,
/// selected by the sign of the gene.
struct AttributeDef {
  std::string name;
  AttributeKind kind = AttributeKind::single_discrete;
  std::vector<std::string> values;
  std::size_t select_count = 0;
  Interval range;
  PoleLabels pole_labels;
  std::string lora_name;
  bool dual_adapter = false;

  bool is_discrete() const { return kind != AttributeKind::continuous; }
  std::optional<std::size_t> value_index(std::string_view value) const;
  friend bool operator==(const AttributeDef&, const AttributeDef&) = default;
};

struct AttributeSchema {
  std::string version;
  std::string style_keyword;
  std::vector<AttributeDef> attributes;

  const AttributeDef* find(std::string_view name) const;
  friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;
};

/// One broken invariant. `attribute` is empty for schema-level rules.
struct Violation {
  std::string attribute;
  std::string rule;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

std::string describe(const std::vector<Violation>& violations);

/// Built-in Kandinsky (Bauhaus period) grammar: hue, line, elements,
/// brightness, structure, parallel.
AttributeSchema kandinsky_default();

/// Every violation, ordered by attribute position (schema-level rules first).
std::vector<Violation> validate_schema(const AttributeSchema& schema);

/// Parses and validates a schema document. Throws Error(parse_error) for
/// malformed documents and Error(validation_error) naming the offending
/// attribute and rule otherwise.
AttributeSchema load_schema(std::string_view document);
AttributeSchema load_schema_file(const std::filesystem::path& path);

/// Canonical, byte-stable serialization (fixed key order, declared attribute
/// order, shortest round-trip reals, trailing newline).
std::string serialize_schema(const AttributeSchema& schema);

/// Lowercase token without whitespace: [a-z0-9_-]+.
bool is_name_token(std::string_view s);
/// Nonempty, no whitespace, none of the grammar separators `,|=:<>`.
bool is_value_token(std::string_view s);

}  // namespace promptevo
