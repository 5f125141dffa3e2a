#include "egofields/frame_source.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "egofields/error.h"

namespace egofields {
namespace {

bool is_raster(const std::filesystem::path& p) {
  static constexpr std::array kExt = {".png", ".jpg", ".jpeg", ".bmp", ".tif",
                                      ".tiff", ".pgm", ".ppm"};
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return std::find(kExt.begin(), kExt.end(), ext) != kExt.end();
}

cv::Mat read_gray(const std::filesystem::path& path, std::size_t index) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (img.empty()) throw FrameReadError(index, "cannot decode " + path.string());
  return img;
}

}  // namespace

cv::Size FrameSource::frame_size() const {
  if (size() == 0) throw InvalidArgument("empty frame source");
  return load(0).size();
}

DirectoryFrameSource::DirectoryFrameSource(const std::filesystem::path& dir, double fps)
    : fps_(fps) {
  if (!std::filesystem::is_directory(dir)) {
    throw InvalidArgument("not a directory: " + dir.string());
  }
  if (!(fps > 0.0)) throw InvalidArgument("fps must be positive");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_raster(entry.path())) paths_.push_back(entry.path());
  }
  std::sort(paths_.begin(), paths_.end());
}

FrameInfo DirectoryFrameSource::info(std::size_t index) const {
  return {paths_.at(index).filename().string(), static_cast<double>(index) / fps_};
}

cv::Mat DirectoryFrameSource::load(std::size_t index) const {
  return read_gray(paths_.at(index), index);
}

ManifestFrameSource::ManifestFrameSource(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open frame manifest " + manifest.string());
  const auto base = manifest.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    line.erase(0, first);
    const auto split = line.find_last_of(" \t");
    if (split == std::string::npos) {
      throw ParseError(manifest.string(), line_no, "expected '<path> <timestamp>'");
    }
    std::string path_part = line.substr(0, split);
    while (!path_part.empty() && std::isspace(static_cast<unsigned char>(path_part.back()))) {
      path_part.pop_back();
    }
    double ts = 0.0;
    try {
      std::size_t used = 0;
      ts = std::stod(line.substr(split + 1), &used);
    } catch (const std::exception&) {
      throw ParseError(manifest.string(), line_no, "invalid timestamp");
    }
    if (ts < 0.0) throw ParseError(manifest.string(), line_no, "negative timestamp");
    std::filesystem::path p(path_part);
    if (p.is_relative()) p = base / p;
    paths_.push_back(p);
    timestamps_.push_back(ts);
  }
}

FrameInfo ManifestFrameSource::info(std::size_t index) const {
  return {paths_.at(index).filename().string(), timestamps_.at(index)};
}

cv::Mat ManifestFrameSource::load(std::size_t index) const {
  return read_gray(paths_.at(index), index);
}

MemoryFrameSource::MemoryFrameSource(std::vector<cv::Mat> frames, double fps) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    add(std::move(frames[i]),
        {fmt::format("frame_{:010d}.png", i + 1), static_cast<double>(i) / fps});
  }
}

void MemoryFrameSource::add(cv::Mat frame, FrameInfo info) {
  frames_.push_back(std::move(frame));
  infos_.push_back(std::move(info));
}

cv::Mat MemoryFrameSource::load(std::size_t index) const {
  const cv::Mat& f = frames_.at(index);
  if (f.empty()) throw FrameReadError(index, "empty frame");
  if (f.channels() == 1) return f;
  cv::Mat gray;
  cv::cvtColor(f, gray, cv::COLOR_BGR2GRAY);
  return gray;
}

std::unique_ptr<FrameSource> open_frame_source(const std::filesystem::path& path, double fps) {
  if (std::filesystem::is_directory(path)) {
    return std::make_unique<DirectoryFrameSource>(path, fps);
  }
  return std::make_unique<ManifestFrameSource>(path);
}

std::optional<std::filesystem::path> frame_path(const FrameSource& source, std::size_t index) {
  if (const auto* d = dynamic_cast<const DirectoryFrameSource*>(&source)) return d->path(index);
  if (const auto* m = dynamic_cast<const ManifestFrameSource*>(&source)) return m->path(index);
  return std::nullopt;
}

}  // namespace egofields
