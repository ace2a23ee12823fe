#ifndef PVAR_CONFIG_HPP_
#define PVAR_CONFIG_HPP_

#include <string>

#include "pvar/mc.hpp"

namespace pvar {

// JSON (de)serialization of the experiment configuration.  Parsing is
// strict: unknown keys anywhere are config_errors, so a typo never silently
// falls back to a default.  Keys that are absent keep their defaults, and
// serialize(parse(x)) == serialize(parse(serialize(parse(x)))) -- the JSON
// form round-trips exactly.
ExperimentConfig config_from_json_string(const std::string& text);
std::string config_to_json_string(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

}  // namespace pvar

#endif  // PVAR_CONFIG_HPP_
