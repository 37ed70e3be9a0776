#pragma once

#include "mcms/bytes.hpp"

#include <filesystem>
#include <optional>

namespace mcms::fs {

/// Whole-file read; nullopt when the file cannot be opened.
std::optional<Bytes> read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, flushes, then renames over `path`.
/// Throws std::filesystem::filesystem_error; on failure `path` is untouched.
void write_file_atomic(const std::filesystem::path& path, ByteView data);

} // namespace mcms::fs
