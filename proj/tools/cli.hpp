#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vamct::cli {

/// Runs one `vamct` invocation. Returns the process exit status; failures
/// print a single "stage: message" line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& bytes);

}  // namespace vamct::cli
