#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace emif::cli {

/// Exit statuses: 0 success, 1 validation/runtime failure, 2 usage error.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat "key = value" document; '#' starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

}  // namespace emif::cli
