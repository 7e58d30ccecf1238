#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hyperplateau::cli {

// Exit codes: 0 ran (converged or not), 1 I/O or system failure, 2 bad config.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;

// args excludes the program name. Errors go to `err` as one JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hyperplateau::cli
