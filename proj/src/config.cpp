#include "nomamec/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace nomamec {
namespace {

struct Field {
  const char* key;
  std::function<void(SystemConfig&, const std::string&)> set;
  std::function<std::string(const SystemConfig&)> get;
};

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw ConfigError("config: trailing junk in " + key + ": '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw ConfigError("config: trailing junk in " + key + ": '" + v + "'");
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const std::vector<Field>& fields() {
#define INT_FIELD(name)                                                    \
  Field{#name,                                                             \
        [](SystemConfig& c, const std::string& v) {                        \
          c.name = static_cast<int>(parse_int(#name, v));                  \
        },                                                                 \
        [](const SystemConfig& c) { return std::to_string(c.name); }}
#define DBL_FIELD(name)                                                    \
  Field{#name,                                                             \
        [](SystemConfig& c, const std::string& v) {                        \
          c.name = parse_double(#name, v);                                 \
        },                                                                 \
        [](const SystemConfig& c) { return fmt(c.name); }}
  static const std::vector<Field> kFields = {
      INT_FIELD(n_users),
      INT_FIELD(n_tasks),
      DBL_FIELD(bandwidth_hz),
      DBL_FIELD(noise_power_w),
      DBL_FIELD(c_mec_hz),
      INT_FIELD(c_cache_slots),
      DBL_FIELD(local_cpu_hz),
      DBL_FIELD(p_local_w),
      DBL_FIELD(p_mec_w),
      DBL_FIELD(user_tx_power_w),
      DBL_FIELD(latency_limit_s),
      INT_FIELD(n_freq_slices),
      DBL_FIELD(area_side_m),
      DBL_FIELD(pathloss_exponent),
      INT_FIELD(horizon_slots),
      Field{"rng_seed",
            [](SystemConfig& c, const std::string& v) {
              c.rng_seed = static_cast<std::uint64_t>(parse_int("rng_seed", v));
            },
            [](const SystemConfig& c) { return std::to_string(c.rng_seed); }},
      DBL_FIELD(task_input_kb_min),
      DBL_FIELD(task_input_kb_max),
      DBL_FIELD(task_cycles_per_bit_min),
      DBL_FIELD(task_cycles_per_bit_max),
      DBL_FIELD(task_result_ratio),
      DBL_FIELD(c_cache_bytes),
  };
#undef INT_FIELD
#undef DBL_FIELD
  return kFields;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

void set_config_key(SystemConfig& cfg, const std::string& key,
                    const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

SystemConfig parse_config(std::istream& in) {
  SystemConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    set_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void apply_env_overrides(SystemConfig& cfg) {
  for (const auto& f : fields()) {
    std::string var = "NOMAMEC_";
    for (const char* p = f.key; *p; ++p)
      var += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
    if (const char* v = std::getenv(var.c_str())) f.set(cfg, v);
  }
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  SystemConfig cfg = parse_config(in);
  apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

void write_config(std::ostream& out, const SystemConfig& cfg) {
  for (const auto& f : fields()) out << f.key << " = " << f.get(cfg) << "\n";
}

}  // namespace nomamec
