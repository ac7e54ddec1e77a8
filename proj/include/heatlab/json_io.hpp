#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

namespace heatlab {

/// Insertion-ordered JSON keeps every serialized document byte-stable.
using Json = nlohmann::ordered_json;

Json read_json_file(const std::filesystem::path& path);

/// Pretty-printed, newline-terminated; parent directories are created.
void write_json_file(const std::filesystem::path& path, const Json& doc);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);

/// Hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

} // namespace heatlab
