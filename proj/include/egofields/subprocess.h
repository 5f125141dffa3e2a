#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>

namespace egofields {

struct CommandResult {
  int exit_code = 0;
  std::string stdout_text;
  std::string stderr_text;
  std::chrono::milliseconds elapsed{0};
};

// Runs `command` through /bin/sh -c in its own process group. stdout and
// stderr go to `log_prefix`.stdout / .stderr (created alongside). On timeout
// the whole group is killed and ExternalToolError is thrown; a nonzero exit
// also throws ExternalToolError carrying the captured stderr.
CommandResult run_command(const std::string& command, std::chrono::seconds timeout,
                          const std::filesystem::path& log_prefix);

// Replaces every `{key}` in `templ` with the shell-quoted value. Unknown
// placeholders throw InvalidArgument.
std::string expand_command(const std::string& templ,
                           const std::map<std::string, std::string>& values);

std::string shell_quote(const std::string& s);

}  // namespace egofields
