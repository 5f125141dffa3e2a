#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace egofields::cli {

using ojson = nlohmann::ordered_json;

std::string sha256_file(const std::filesystem::path& path);
// Files hash directly; directories hash the sorted (relative path, file hash)
// list of every regular file below them.
std::string sha256_path(const std::filesystem::path& path);

// One record per output directory, rewritten by every run that writes there.
class RunManifest {
 public:
  static constexpr const char* kFileName = "manifest.json";

  RunManifest(std::string subcommand, std::vector<std::string> argv, ojson config);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  // True when `dir` holds a completed manifest with the same subcommand,
  // config and input hashes, and every recorded output still exists.
  bool up_to_date(const std::filesystem::path& dir) const;

  void write(const std::filesystem::path& dir);

 private:
  std::string subcommand_;
  std::vector<std::string> argv_;
  ojson config_;
  ojson inputs_ = ojson::array();
  std::vector<std::filesystem::path> outputs_;
  std::string started_;
};

std::string utc_now();
ojson tool_versions();

}  // namespace egofields::cli
