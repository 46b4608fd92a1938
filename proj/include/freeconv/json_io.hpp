#pragma once

#include "freeconv/measure.hpp"

#include <json.hpp>

#include <string>

namespace freeconv {

/// Measure from its JSON description:
///   {"type":"atoms","points":[{"x":0.0,"w":0.5},...]}
///   {"type":"semicircle","w2":1.0}
///   {"type":"arcsine","a":1.0}
///   {"type":"grid","xs":[...],"ps":[...]}
Measure measure_from_json(const nlohmann::json& j);

nlohmann::json measure_to_json(const Measure& m);

/// Parse a measure file; parse errors carry the path and byte position.
Measure load_measure(const std::string& path);

void save_measure(const Measure& m, const std::string& path);

} // namespace freeconv
