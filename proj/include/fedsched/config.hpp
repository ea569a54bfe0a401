#pragma once

#include <string>

#include "fedsched/fedsim.hpp"

namespace fedsched {

// key = value lines; '#' starts a comment; blank lines ignored. Unknown keys
// and unparsable values raise std::invalid_argument naming the key and line.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

// Canonical form: every key, fixed order, doubles at full precision, so
// parse(write(cfg)) == cfg.
std::string write_config(const ExperimentConfig& cfg);

}  // namespace fedsched
