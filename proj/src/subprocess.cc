#include "egofields/subprocess.h"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "egofields/error.h"
#include "egofields/io_util.h"

namespace egofields {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

std::string expand_command(const std::string& templ,
                           const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < templ.size()) {
    if (templ[i] == '{') {
      const auto close = templ.find('}', i);
      if (close == std::string::npos) throw InvalidArgument("unterminated '{' in command template");
      const std::string key = templ.substr(i + 1, close - i - 1);
      auto it = values.find(key);
      if (it == values.end()) {
        throw InvalidArgument("unknown placeholder {" + key + "} in command template");
      }
      out += shell_quote(it->second);
      i = close + 1;
    } else {
      out += templ[i++];
    }
  }
  return out;
}

CommandResult run_command(const std::string& command, std::chrono::seconds timeout,
                          const std::filesystem::path& log_prefix) {
  if (log_prefix.has_parent_path()) std::filesystem::create_directories(log_prefix.parent_path());
  const std::string out_path = log_prefix.string() + ".stdout";
  const std::string err_path = log_prefix.string() + ".stderr";
  const auto start = std::chrono::steady_clock::now();

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    const int out_fd = ::open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int err_fd = ::open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (out_fd < 0 || err_fd < 0) ::_exit(127);
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(err_fd, STDERR_FILENO);
    ::close(out_fd);
    ::close(err_fd);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);

  int status = 0;
  bool timed_out = false;
  auto delay = std::chrono::milliseconds(1);
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) throw Error(std::string("waitpid failed: ") + std::strerror(errno));
    if (std::chrono::steady_clock::now() - start > timeout) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, std::chrono::milliseconds(50));
  }

  CommandResult result;
  result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  try {
    result.stdout_text = read_text_file(out_path);
    result.stderr_text = read_text_file(err_path);
  } catch (const Error&) {
  }
  if (timed_out) {
    throw ExternalToolError("command timed out after " + std::to_string(timeout.count()) +
                                "s: " + command,
                            -1, result.stderr_text);
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  if (result.exit_code != 0) {
    throw ExternalToolError("command exited with status " + std::to_string(result.exit_code) +
                                ": " + command + "\n" + result.stderr_text,
                            result.exit_code, result.stderr_text);
  }
  return result;
}

}  // namespace egofields
