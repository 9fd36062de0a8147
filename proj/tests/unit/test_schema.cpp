#include <doctest.h>

#include <algorithm>

#include "promptevo/codec.hpp"
#include "promptevo/errors.hpp"
#include "promptevo/schema.hpp"
#include "support.hpp"

using namespace promptevo;

namespace {

bool has_rule(const std::vector<Violation>& v, const std::string& attribute, const std::string& rule) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.attribute == attribute && x.rule == rule; });
}

std::string error_message(const std::function<void()>& f, ErrorCode expected) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.code() == expected);
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

}  // namespace

TEST_CASE("kandinsky default grammar") {
  const AttributeSchema s = kandinsky_default();
  CHECK(s.style_keyword == "kandinsky");
  REQUIRE(s.attributes.size() == 6);
  CHECK(validate_schema(s).empty());

  const AttributeDef* hue = s.find("hue");
  REQUIRE(hue);
  CHECK(hue->kind == AttributeKind::multi_discrete);
  CHECK(hue->select_count == 3);
  CHECK(hue->values == std::vector<std::string>{"red", "yellow", "blue", "orange", "green", "violet"});

  const AttributeDef* line = s.find("line");
  REQUIRE(line);
  CHECK(line->kind == AttributeKind::single_discrete);
  CHECK(line->values.size() == 3);

  const AttributeDef* elements = s.find("elements");
  REQUIRE(elements);
  CHECK(elements->values == std::vector<std::string>{"point", "triangle", "square", "circle"});
  CHECK(elements->select_count == 2);

  const std::vector<std::tuple<std::string, std::string, std::string, std::string>> continuous = {
      {"brightness", "dark", "light", "kandinsky_brightness"},
      {"structure", "acentric", "centric", "kandinsky_structure"},
      {"parallel", "inner", "external", "kandinsky_parallel"}};
  for (const auto& [name, low, high, lora] : continuous) {
    const AttributeDef* a = s.find(name);
    REQUIRE(a);
    CHECK(a->kind == AttributeKind::continuous);
    CHECK(a->range == Interval{-1.0, 1.0});
    CHECK(a->pole_labels == PoleLabels{low, high});
    CHECK(a->lora_name == lora);
  }
  CHECK(s.find("parallel")->dual_adapter);
  CHECK_FALSE(s.find("brightness")->dual_adapter);
}

TEST_CASE("shipped schema file is the canonical serialization of the default") {
  CHECK(testing::read_text(testing::source_path("data/schemas/kandinsky.json")) == serialize_schema(kandinsky_default()));
}

TEST_CASE("load_schema round trip") {
  const AttributeSchema s = kandinsky_default();
  const std::string text = serialize_schema(s);
  const AttributeSchema loaded = load_schema(text);
  CHECK(loaded == s);
  CHECK(serialize_schema(loaded) == text);
}

TEST_CASE("load_schema rejects duplicate names citing the attribute") {
  Json j = schema_to_json(kandinsky_default());
  j["attributes"].push_back(j["attributes"][0]);
  const std::string msg = error_message([&] { load_schema(j.dump()); }, ErrorCode::validation_error);
  CHECK(msg.find("hue") != std::string::npos);
  CHECK(msg.find("duplicate_name") != std::string::npos);
}

TEST_CASE("load_schema rejects select_count equal to the domain size") {
  Json j = schema_to_json(kandinsky_default());
  j["attributes"][0]["select_count"] = 6;
  const std::string msg = error_message([&] { load_schema(j.dump()); }, ErrorCode::validation_error);
  CHECK(msg.find("hue") != std::string::npos);
  CHECK(msg.find("select_count_too_large") != std::string::npos);
}

TEST_CASE("load_schema parse errors") {
  error_message([] { load_schema("{not json"); }, ErrorCode::parse_error);
  error_message([] { load_schema("[]"); }, ErrorCode::parse_error);
  Json j = schema_to_json(kandinsky_default());
  j["colour"] = 1;
  error_message([&] { load_schema(j.dump()); }, ErrorCode::parse_error);
  Json k = schema_to_json(kandinsky_default());
  k["attributes"][0]["kind"] = "fuzzy";
  error_message([&] { load_schema(k.dump()); }, ErrorCode::parse_error);
}

TEST_CASE("validate_schema rules") {
  SUBCASE("degenerate range") {
    AttributeSchema s = kandinsky_default();
    s.attributes[3].range = {0.5, 0.5};
    const auto v = validate_schema(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].attribute == "brightness");
    CHECK(v[0].rule == "range_degenerate");
  }
  SUBCASE("single discrete with one value") {
    AttributeSchema s = kandinsky_default();
    s.attributes[1].values = {"straight"};
    const auto v = validate_schema(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].attribute == "line");
    CHECK(v[0].rule == "too_few_values");
  }
  SUBCASE("schema level rules come first") {
    AttributeSchema s = kandinsky_default();
    s.attributes[5].lora_name.clear();
    s.style_keyword = "Bad Keyword";
    const auto v = validate_schema(s);
    REQUIRE(v.size() == 2);
    CHECK(v[0].attribute.empty());
    CHECK(v[1].attribute == "parallel");
  }
  SUBCASE("empty schema") {
    AttributeSchema s = kandinsky_default();
    s.attributes.clear();
    CHECK(has_rule(validate_schema(s), "", "empty_schema"));
  }
  SUBCASE("names and values") {
    AttributeSchema s = kandinsky_default();
    s.attributes[0].values[1] = "red";
    s.attributes[1].name = "Line";
    s.attributes[2].select_count = 0;
    const auto v = validate_schema(s);
    CHECK(has_rule(v, "hue", "duplicate_value"));
    CHECK(has_rule(v, "Line", "name_invalid"));
    CHECK(has_rule(v, "elements", "select_count_nonpositive"));
  }
  SUBCASE("kind specific fields") {
    AttributeSchema s = kandinsky_default();
    s.attributes[4].values = {"x", "y"};
    s.attributes[4].pole_labels = {};
    CHECK(has_rule(validate_schema(s), "structure", "unexpected_field"));
    CHECK(has_rule(validate_schema(s), "structure", "missing_pole_labels"));
  }
}

TEST_CASE("random schemas validate, round-trip and serialize stably") {
  Rng rng(2024);
  for (int i = 0; i < 300; ++i) {
    const AttributeSchema s = testing::random_schema(rng);
    REQUIRE(validate_schema(s).empty());
    const std::string text = serialize_schema(s);
    const AttributeSchema loaded = load_schema(text);
    CHECK(loaded == s);
    CHECK(serialize_schema(loaded) == text);
  }
}

TEST_CASE("token predicates") {
  CHECK(is_name_token("kandinsky_parallel"));
  CHECK(is_name_token("a-1"));
  CHECK_FALSE(is_name_token(""));
  CHECK_FALSE(is_name_token("Hue"));
  CHECK_FALSE(is_name_token("two words"));
  CHECK(is_value_token("Red"));
  CHECK_FALSE(is_value_token("a,b"));
  CHECK_FALSE(is_value_token("a|b"));
  CHECK_FALSE(is_value_token("a:b"));
  CHECK_FALSE(is_value_token(""));
}
