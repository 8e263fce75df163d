#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace mammoeval {

std::optional<std::string> read_file(const std::filesystem::path& path);

// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

// ISO-8601 UTC, second resolution ("2021-06-14T12:00:00Z").
std::string utc_timestamp_now();

std::string format_fixed(double value, int digits);

// Replaces anything outside [A-Za-z0-9._-] with '-'; used for filenames.
std::string sanitize_token(std::string_view raw);

} // namespace mammoeval
