#pragma once

#include <iosfwd>
#include <string>

#include "nomamec/sysmodel.hpp"

namespace nomamec {

// Flat `key = value` text format, UTF-8, `#` comments. Every SystemConfig
// field has a key of the same name. Unknown keys and malformed values throw
// ConfigError.
SystemConfig parse_config(std::istream& in);

// parse_config over a file, then NOMAMEC_* environment overrides, then
// validate().
SystemConfig load_config(const std::string& path);

// Applies NOMAMEC_<UPPERCASED KEY> environment variables, e.g.
// NOMAMEC_N_USERS=4 overrides n_users.
void apply_env_overrides(SystemConfig& cfg);

// Single key assignment, shared by the file parser and the env override path.
void set_config_key(SystemConfig& cfg, const std::string& key,
                    const std::string& value);

void write_config(std::ostream& out, const SystemConfig& cfg);

}  // namespace nomamec
