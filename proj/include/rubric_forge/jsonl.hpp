/// @file jsonl.hpp
/// @brief JSONL and file I/O helpers. All primary outputs go through
/// atomic_write (write-temp-then-rename) so failures never leave partial files.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace rubric_forge {

/// Reads a whole file; throws std::runtime_error if unreadable.
std::string read_file(const std::filesystem::path& path);

/// Parses a JSONL file, one object per non-blank line. Errors carry the
/// offending line number.
std::vector<nlohmann::ordered_json> read_jsonl(const std::filesystem::path& path);

/// Writes content to a temp file in the target directory, then renames.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Serializes each row compactly, one per line, and writes atomically.
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::ordered_json>& rows);

/// Lines already serialized by the caller (used where byte identity matters).
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace rubric_forge
