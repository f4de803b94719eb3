#pragma once

#include <string>
#include <vector>

namespace cfxcert {

// Full command-line front end; args excludes the program name.
// Exit codes: 0 success, 1 verification failures, 2 configuration or
// input errors, 3 solver/resource/divergence errors.
int cli_run(const std::vector<std::string>& args);

} // namespace cfxcert
