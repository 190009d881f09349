// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <set>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mmimo/topology.hpp"

namespace mmimo {

using Json = nlohmann::json;

/// Throws if `obj` is not an object or carries a key outside `allowed`.
inline void requireKnownKeys(const Json& obj, const std::set<std::string>& allowed, const std::string& what) {
  if (!obj.is_object()) throw std::invalid_argument(what + ": expected a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw std::invalid_argument(what + ": unknown key '" + key + "'");
}

template <class T>
void readField(const Json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string(key) + ": " + e.what());
  }
}

inline NetworkConfig networkConfigFromJson(const Json& j) {
  requireKnownKeys(j,
                   {"cellRadius", "exclusionRadius", "shadowStdDb", "pathLossExponent", "cellCount",
                    "usersPerCell", "bsAntennas", "seed", "outerRing"},
                   "NetworkConfig");
  NetworkConfig cfg;
  readField(j, "cellRadius", cfg.cellRadius);
  readField(j, "exclusionRadius", cfg.exclusionRadius);
  readField(j, "shadowStdDb", cfg.shadowStdDb);
  readField(j, "pathLossExponent", cfg.pathLossExponent);
  readField(j, "cellCount", cfg.cellCount);
  readField(j, "usersPerCell", cfg.usersPerCell);
  readField(j, "bsAntennas", cfg.bsAntennas);
  readField(j, "seed", cfg.seed);
  readField(j, "outerRing", cfg.outerRing);
  validate(cfg);
  return cfg;
}

inline Json toJson(const NetworkConfig& cfg) {
  return Json{{"cellRadius", cfg.cellRadius},
              {"exclusionRadius", cfg.exclusionRadius},
              {"shadowStdDb", cfg.shadowStdDb},
              {"pathLossExponent", cfg.pathLossExponent},
              {"cellCount", cfg.cellCount},
              {"usersPerCell", cfg.usersPerCell},
              {"bsAntennas", cfg.bsAntennas},
              {"seed", cfg.seed},
              {"outerRing", cfg.outerRing}};
}

}  // namespace mmimo
