#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace riskprof {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// (relative path, digest) for every regular file under root, sorted by path.
std::vector<std::pair<std::string, std::string>> digest_tree(const std::filesystem::path& root);

/// Digest over a list of files: SHA-256 of "relpath digest\n" lines in the
/// given order, with paths relative to base.
std::string combined_digest(const std::filesystem::path& base,
                            const std::vector<std::filesystem::path>& files);

}  // namespace riskprof
