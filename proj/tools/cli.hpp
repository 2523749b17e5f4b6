#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smbr::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one `smbr` invocation. `args` excludes the program name.
/// Returns 0 on success, 1 on data errors and 2 on configuration errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace smbr::cli
