#pragma once

#include <json.hpp>

#include "promptevo/config.hpp"
#include "promptevo/engine.hpp"
#include "promptevo/generation_types.hpp"
#include "promptevo/preference_model.hpp"
#include "promptevo/prompt.hpp"
#include "promptevo/schema.hpp"

namespace promptevo {

/// Insertion-ordered JSON: every document this library writes has a fixed key
/// order, which keeps serialized output byte-stable.
using Json = nlohmann::ordered_json;

/// Parses text into Json, mapping syntax errors to Error(parse_error).
Json parse_json(std::string_view text, std::string_view what);

// Decoders are strict: unknown keys and wrong types raise Error(parse_error);
// partial objects are allowed where noted and fall back to defaults.

Json schema_to_json(const AttributeSchema& schema);
/// Structural decode only; validate_schema runs separately. Continuous-only
/// keys on discrete attributes (and vice versa) raise Error(validation_error).
AttributeSchema schema_from_json(const Json& j);

Json config_to_json(const GAConfig& config);
/// Partial objects allowed.
GAConfig config_from_json(const Json& j);

Json params_to_json(const GenerationParams& params);
/// Partial objects allowed.
GenerationParams params_from_json(const Json& j);

Json model_to_json(const PreferenceModel& model);
PreferenceModel model_from_json(const Json& j);

Json prompt_to_json(const PromptString& prompt);
PromptString prompt_from_json(const Json& j);

Json tally_to_json(const VoteTally& tally);
VoteTally tally_from_json(const Json& j);

}  // namespace promptevo
