#ifndef SMOLUX_SRC_JSON_DETAIL_HPP_
#define SMOLUX_SRC_JSON_DETAIL_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "smolux/dynamics.hpp"
#include "smolux/errors.hpp"
#include "smolux/mass_measure.hpp"

namespace smolux::detail {

using nlohmann::json;

inline json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(what + ": malformed JSON");
  return j;
}

// Unknown keys are configuration errors: silent typos in scientific configs
// are costly, so every object is checked against its allowed key set.
inline void require_keys(const json& obj, const std::string& what,
                         const std::vector<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(what + ": expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const auto& k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(what + ": unknown key \"" + it.key() + "\"");
  }
}

inline double get_number(const json& obj, const std::string& key,
                         const std::string& what) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw ConfigError(what + ": missing numeric \"" + key + "\"");
  return obj[key].get<double>();
}

inline double get_number_or(const json& obj, const std::string& key,
                            double fallback) {
  if (!obj.contains(key)) return fallback;
  return obj[key].get<double>();
}

inline int get_int(const json& obj, const std::string& key,
                   const std::string& what) {
  if (!obj.contains(key) || !obj[key].is_number_integer())
    throw ConfigError(what + ": missing integer \"" + key + "\"");
  return obj[key].get<int>();
}

BaseMeasure base_measure_from_json(const json& obj);
json base_measure_to_json(const BaseMeasure& base);
DynamicsModel dynamics_from_json(const json& obj);
json dynamics_to_json(const DynamicsModel& model);

}  // namespace smolux::detail

#endif  // SMOLUX_SRC_JSON_DETAIL_HPP_
