#include "promptevo/codec.hpp"

#include <initializer_list>
#include <set>

#include "promptevo/errors.hpp"

namespace promptevo {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::parse_error, what); }

void require_object(const Json& j, std::string_view what) {
  if (!j.is_object()) fail(std::string(what) + ": expected an object");
}

void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> known, std::string_view what) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) fail(std::string(what) + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_as(const Json& j, std::string_view key, std::string_view what) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) fail(std::string(what) + ": missing key '" + std::string(key) + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(std::string(what) + ": key '" + std::string(key) + "' has the wrong type");
  }
}

template <typename T>
void get_if_present(const Json& j, std::string_view key, T& out, std::string_view what) {
  if (j.contains(std::string(key))) out = get_as<T>(j, key, what);
}

double get_real(const Json& j, std::string_view key, std::string_view what) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) fail(std::string(what) + ": missing key '" + std::string(key) + "'");
  if (!it->is_number()) fail(std::string(what) + ": key '" + std::string(key) + "' must be a number");
  return it->get<double>();
}

std::size_t get_count(const Json& j, std::string_view key, std::string_view what) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) fail(std::string(what) + ": missing key '" + std::string(key) + "'");
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
    fail(std::string(what) + ": key '" + std::string(key) + "' must be a non-negative integer");
  return it->get<std::size_t>();
}

}  // namespace

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(std::string(what) + ": " + e.what());
  }
}

Json schema_to_json(const AttributeSchema& schema) {
  Json attrs = Json::array();
  for (const auto& a : schema.attributes) {
    Json j;
    j["name"] = a.name;
    j["kind"] = std::string(to_string(a.kind));
    if (a.is_discrete()) {
      j["values"] = a.values;
      if (a.kind == AttributeKind::multi_discrete) j["select_count"] = a.select_count;
    } else {
      j["range"] = Json::array({a.range.lo, a.range.hi});
      j["pole_labels"] = Json::array({a.pole_labels.low, a.pole_labels.high});
      j["lora_name"] = a.lora_name;
      if (a.dual_adapter) j["dual_adapter"] = true;
    }
    attrs.push_back(std::move(j));
  }
  Json out;
  out["version"] = schema.version;
  out["style_keyword"] = schema.style_keyword;
  out["attributes"] = std::move(attrs);
  return out;
}

AttributeSchema schema_from_json(const Json& j) {
  constexpr std::string_view what = "schema";
  require_object(j, what);
  reject_unknown_keys(j, {"version", "style_keyword", "attributes"}, what);
  AttributeSchema s;
  s.version = get_as<std::string>(j, "version", what);
  s.style_keyword = get_as<std::string>(j, "style_keyword", what);
  const auto it = j.find("attributes");
  if (it == j.end() || !it->is_array()) fail("schema: 'attributes' must be an array");
  for (const auto& aj : *it) {
    require_object(aj, "schema attribute");
    reject_unknown_keys(aj, {"name", "kind", "values", "select_count", "range", "pole_labels", "lora_name",
                             "dual_adapter"},
                        "schema attribute");
    AttributeDef a;
    a.name = get_as<std::string>(aj, "name", "schema attribute");
    const std::string where = "schema attribute '" + a.name + "'";
    const auto kind = parse_attribute_kind(get_as<std::string>(aj, "kind", where));
    if (!kind) fail(where + ": unknown kind");
    a.kind = *kind;

    auto unexpected = [&](std::string_view key) {
      if (aj.contains(std::string(key)))
        throw Error(ErrorCode::validation_error, "invalid schema: attribute '" + a.name +
                                                     "': unexpected_field ('" + std::string(key) +
                                                     "' not allowed for " + std::string(to_string(a.kind)) + ")");
    };
    if (a.is_discrete()) {
      for (auto key : {"range", "pole_labels", "lora_name", "dual_adapter"}) unexpected(key);
      a.values = get_as<std::vector<std::string>>(aj, "values", where);
      if (a.kind == AttributeKind::multi_discrete) {
        a.select_count = get_count(aj, "select_count", where);
      } else {
        unexpected("select_count");
      }
    } else {
      unexpected("values");
      unexpected("select_count");
      const auto range = get_as<std::vector<double>>(aj, "range", where);
      if (range.size() != 2) fail(where + ": 'range' must be [lo, hi]");
      a.range = {range[0], range[1]};
      const auto poles = get_as<std::vector<std::string>>(aj, "pole_labels", where);
      if (poles.size() != 2) fail(where + ": 'pole_labels' must be [low, high]");
      a.pole_labels = {poles[0], poles[1]};
      a.lora_name = get_as<std::string>(aj, "lora_name", where);
      get_if_present(aj, "dual_adapter", a.dual_adapter, where);
    }
    s.attributes.push_back(std::move(a));
  }
  return s;
}

Json config_to_json(const GAConfig& c) {
  Json j;
  j["population_size"] = c.population_size;
  j["crossover_gene_probability"] = c.crossover_gene_probability;
  j["mutation_rate"] = c.mutation_rate;
  j["seed_range_upper"] = c.seed_range_upper;
  j["elitism_count"] = c.elitism_count;
  j["variance_floor"] = c.variance_floor;
  j["prior_pseudo_count"] = c.prior_pseudo_count;
  j["prior_mean"] = c.prior_mean;
  j["prior_variance"] = c.prior_variance;
  return j;
}

GAConfig config_from_json(const Json& j) {
  constexpr std::string_view what = "config";
  require_object(j, what);
  reject_unknown_keys(j,
                      {"population_size", "crossover_gene_probability", "mutation_rate", "seed_range_upper",
                       "elitism_count", "variance_floor", "prior_pseudo_count", "prior_mean", "prior_variance"},
                      what);
  GAConfig c;
  if (j.contains("population_size")) c.population_size = get_count(j, "population_size", what);
  if (j.contains("crossover_gene_probability"))
    c.crossover_gene_probability = get_real(j, "crossover_gene_probability", what);
  if (j.contains("mutation_rate")) c.mutation_rate = get_real(j, "mutation_rate", what);
  if (j.contains("seed_range_upper")) c.seed_range_upper = static_cast<std::int64_t>(get_count(j, "seed_range_upper", what));
  if (j.contains("elitism_count")) c.elitism_count = get_count(j, "elitism_count", what);
  if (j.contains("variance_floor")) c.variance_floor = get_real(j, "variance_floor", what);
  if (j.contains("prior_pseudo_count")) c.prior_pseudo_count = get_real(j, "prior_pseudo_count", what);
  if (j.contains("prior_mean")) c.prior_mean = get_real(j, "prior_mean", what);
  if (j.contains("prior_variance")) c.prior_variance = get_real(j, "prior_variance", what);
  return c;
}

Json params_to_json(const GenerationParams& p) {
  Json j;
  j["steps"] = p.steps;
  j["guidance_scale"] = p.guidance_scale;
  j["width"] = p.width;
  j["height"] = p.height;
  j["negative_prompt"] = p.negative_prompt;
  return j;
}

GenerationParams params_from_json(const Json& j) {
  constexpr std::string_view what = "params";
  require_object(j, what);
  reject_unknown_keys(j, {"steps", "guidance_scale", "width", "height", "negative_prompt"}, what);
  GenerationParams p;
  get_if_present(j, "steps", p.steps, what);
  if (j.contains("guidance_scale")) p.guidance_scale = get_real(j, "guidance_scale", what);
  get_if_present(j, "width", p.width, what);
  get_if_present(j, "height", p.height, what);
  get_if_present(j, "negative_prompt", p.negative_prompt, what);
  return p;
}

Json model_to_json(const PreferenceModel& m) {
  Json weights = Json::object();
  for (const auto& [attr, table] : m.weights) {
    Json t = Json::object();
    for (const auto& [value, w] : table) t[value] = w;
    weights[attr] = std::move(t);
  }
  Json continuous = Json::object();
  for (const auto& [attr, s] : m.continuous) {
    Json c;
    c["sum_v"] = s.sum_v;
    c["sum_vx"] = s.sum_vx;
    c["sum_vxx"] = s.sum_vxx;
    c["mean"] = s.mean();
    c["variance"] = s.variance(m.variance_floor);
    continuous[attr] = std::move(c);
  }
  Json j;
  j["variance_floor"] = m.variance_floor;
  j["weights"] = std::move(weights);
  j["continuous"] = std::move(continuous);
  return j;
}

PreferenceModel model_from_json(const Json& j) {
  constexpr std::string_view what = "preference model";
  require_object(j, what);
  reject_unknown_keys(j, {"variance_floor", "weights", "continuous"}, what);
  PreferenceModel m;
  m.variance_floor = get_real(j, "variance_floor", what);
  if (!j.contains("weights")) fail("preference model: missing key 'weights'");
  const auto& weights = j.at("weights");
  require_object(weights, "preference model weights");
  for (const auto& [attr, table] : weights.items()) {
    require_object(table, "weight table");
    for (const auto& [value, w] : table.items()) {
      if (!w.is_number()) fail("weight table '" + attr + "': weights must be numbers");
      m.weights[attr][value] = w.get<double>();
    }
  }
  if (!j.contains("continuous")) fail("preference model: missing key 'continuous'");
  const auto& continuous = j.at("continuous");
  require_object(continuous, "preference model continuous");
  for (const auto& [attr, c] : continuous.items()) {
    require_object(c, "continuous statistics");
    reject_unknown_keys(c, {"sum_v", "sum_vx", "sum_vxx", "mean", "variance"}, "continuous statistics");
    m.continuous[attr] = {get_real(c, "sum_v", attr), get_real(c, "sum_vx", attr), get_real(c, "sum_vxx", attr)};
  }
  return m;
}

Json prompt_to_json(const PromptString& p) {
  Json j;
  j["text"] = p.text;
  j["negative_text"] = p.negative_text;
  return j;
}

PromptString prompt_from_json(const Json& j) {
  require_object(j, "prompt");
  reject_unknown_keys(j, {"text", "negative_text"}, "prompt");
  PromptString p;
  p.text = get_as<std::string>(j, "text", "prompt");
  get_if_present(j, "negative_text", p.negative_text, "prompt");
  return p;
}

Json tally_to_json(const VoteTally& tally) { return Json(tally.votes); }

VoteTally tally_from_json(const Json& j) {
  if (!j.is_array()) fail("votes: expected an array");
  VoteTally t;
  for (const auto& v : j) {
    if (!v.is_number_integer()) fail("votes: entries must be integers");
    t.votes.push_back(v.get<std::int64_t>());
  }
  return t;
}

}  // namespace promptevo
