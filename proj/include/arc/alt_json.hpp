#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "arc/alt.hpp"

namespace arc {

inline constexpr int kAltVersion = 1;

/// Canonical JSON document for a program (schema: schema/alt.schema.json).
nlohmann::json to_json(const Program& p);
nlohmann::json to_json(const CollectionExpr& c);
nlohmann::json to_json(const Formula& f);
nlohmann::json to_json(const Term& t);
nlohmann::json to_json(const Value& v);
nlohmann::json to_json(const JoinTree& j);

/// Pretty-printed, key-sorted, deterministic.
std::string serialize_alt(const Program& p);

/// Throws SchemaError(path, reason) on malformed input or unknown fields.
Program deserialize_alt(std::string_view text);
Program program_from_json(const nlohmann::json& doc);
Value value_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace arc
