#pragma once

#include <filesystem>

#include "json.hpp"

namespace ordproto {

// Pretty-printed (2-space) JSON with a trailing newline. Doubles are written
// in shortest round-trip form, so reading back is value-exact.
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

// Throws IoError if unreadable, ParseError if malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ordproto
