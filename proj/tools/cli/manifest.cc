#include "cli/manifest.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>

#include <Eigen/Core>
#include <fmt/format.h>
#include <openssl/evp.h>
#include <opencv2/core/version.hpp>

#include "egofields/error.h"
#include "egofields/io_util.h"

namespace egofields::cli {
namespace fs = std::filesystem;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: digest initialisation failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  void update(const std::string& s) { update(s.data(), s.size()); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_path(const fs::path& path) {
  if (!fs::is_directory(path)) return sha256_file(path);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), path));
  }
  std::sort(files.begin(), files.end());
  Sha256 h;
  for (const auto& f : files) h.update(f.generic_string() + "\n" + sha256_file(path / f) + "\n");
  return h.hex();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ojson tool_versions() {
  ojson v;
  v["egofields"] = "0.1.0";
  v["opencv"] = CV_VERSION;
  v["eigen"] = fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  v["fmt"] = FMT_VERSION;
  v["compiler"] = __VERSION__;
  return v;
}

RunManifest::RunManifest(std::string subcommand, std::vector<std::string> argv, ojson config)
    : subcommand_(std::move(subcommand)),
      argv_(std::move(argv)),
      config_(std::move(config)),
      started_(utc_now()) {}

void RunManifest::add_input(const fs::path& path) {
  if (path.empty() || !fs::exists(path)) return;
  inputs_.push_back({{"path", fs::absolute(path).lexically_normal().string()},
                     {"sha256", sha256_path(path)}});
}

void RunManifest::add_output(const fs::path& path) { outputs_.push_back(path); }

bool RunManifest::up_to_date(const fs::path& dir) const {
  const fs::path file = dir / kFileName;
  if (!fs::exists(file)) return false;
  ojson old;
  try {
    old = ojson::parse(read_text_file(file));
  } catch (const std::exception&) {
    return false;
  }
  if (!old.value("complete", false) || old.value("subcommand", "") != subcommand_) return false;
  if (old["config"] != config_ || old["inputs"] != inputs_) return false;
  for (const auto& o : old["outputs"]) {
    if (!fs::exists(o.get<std::string>())) return false;
  }
  return true;
}

void RunManifest::write(const fs::path& dir) {
  ojson doc;
  doc["subcommand"] = subcommand_;
  doc["command"] = argv_;
  doc["config"] = config_;
  doc["inputs"] = inputs_;
  ojson outs = ojson::array();
  for (const auto& o : outputs_) outs.push_back(fs::absolute(o).lexically_normal().string());
  doc["outputs"] = outs;
  doc["started"] = started_;
  doc["finished"] = utc_now();
  doc["tool_versions"] = tool_versions();
  doc["complete"] = true;
  fs::create_directories(dir);
  atomic_write(dir / kFileName, doc.dump(2) + "\n");
}

}  // namespace egofields::cli
