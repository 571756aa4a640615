#pragma once

// Internal JSON helpers shared by model persistence and the command-line layer.

#include "custemb/classify.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace custemb::detail {

using Json = nlohmann::ordered_json;

Json hyperparameters_to_json(const ModelSpec& spec);

/// Applies overrides from `params` onto the defaults of `kind`. Unknown keys throw
/// ConfigError naming `key_prefix.<key>`; accepted-but-ignored keys append to `warnings`.
ModelSpec model_spec_from_json(ModelKind kind, const Json& params, const std::string& key_prefix,
                               std::vector<std::string>* warnings);

}  // namespace custemb::detail

#include "custemb/embed.hpp"
#include "custemb/eval.hpp"
#include "custemb/simaug.hpp"
#include "custemb/synthetic.hpp"

namespace custemb::detail {

Json to_json(const TrainConfig& c);
Json to_json(const AugmentConfig& c);
Json to_json(const SplitConfig& c);
Json to_json(const SyntheticConfig& c);
Json models_to_json(std::span<const ModelSpec> models);

// Each reader starts from `base`, applies the keys present in `j` and rejects unknown
// keys with a ConfigError naming `prefix.<key>`.
TrainConfig train_config_from_json(const Json& j, const std::string& prefix, TrainConfig base = {});
AugmentConfig augment_config_from_json(const Json& j, const std::string& prefix, AugmentConfig base = {});
SplitConfig split_config_from_json(const Json& j, const std::string& prefix, SplitConfig base = {});
SyntheticConfig synthetic_config_from_json(const Json& j, const std::string& prefix, SyntheticConfig base = {});
/// Accepts "RF" or {"kind": "RF", "params": {...}} entries.
std::vector<ModelSpec> models_from_json(const Json& j, const std::string& prefix, std::vector<std::string>* warnings);

}  // namespace custemb::detail
