#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "biflow/triangular_map.hpp"

namespace biflow {

/// JSON document for any of the map types; doubles round-trip exactly.
nlohmann::json map_to_json(const TriangularMap& map);
/// Throws BadModel on malformed documents.
std::shared_ptr<TriangularMap> map_from_json(const nlohmann::json& doc);

void save_map(const std::string& path, const TriangularMap& map);
std::shared_ptr<TriangularMap> load_map(const std::string& path);

std::string to_string(Orientation o);
Orientation orientation_from_string(const std::string& s);

}  // namespace biflow
