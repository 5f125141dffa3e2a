#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace egofields {

struct FrameInfo {
  std::string name;
  double timestamp = 0.0;  // seconds
};

// Ordered, random-access video frames. load() returns 8-bit grayscale and
// throws FrameReadError on unreadable input.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual FrameInfo info(std::size_t index) const = 0;
  virtual cv::Mat load(std::size_t index) const = 0;
  // Size of frame 0.
  virtual cv::Size frame_size() const;
};

// Raster images in a directory (png, jpg, jpeg, bmp, tif, tiff, pgm, ppm),
// ordered by file name; zero-padded indices keep that order temporal.
// Timestamps are index / fps.
class DirectoryFrameSource : public FrameSource {
 public:
  explicit DirectoryFrameSource(const std::filesystem::path& dir, double fps = 50.0);
  std::size_t size() const override { return paths_.size(); }
  FrameInfo info(std::size_t index) const override;
  cv::Mat load(std::size_t index) const override;
  const std::filesystem::path& path(std::size_t index) const { return paths_.at(index); }

 private:
  std::vector<std::filesystem::path> paths_;
  double fps_;
};

// Text manifest, one frame per line: `<path> <timestamp_seconds>`. Relative
// paths resolve against the manifest's directory; '#' starts a comment.
class ManifestFrameSource : public FrameSource {
 public:
  explicit ManifestFrameSource(const std::filesystem::path& manifest);
  std::size_t size() const override { return paths_.size(); }
  FrameInfo info(std::size_t index) const override;
  cv::Mat load(std::size_t index) const override;
  const std::filesystem::path& path(std::size_t index) const { return paths_.at(index); }

 private:
  std::vector<std::filesystem::path> paths_;
  std::vector<double> timestamps_;
};

class MemoryFrameSource : public FrameSource {
 public:
  MemoryFrameSource() = default;
  // Timestamps default to index / fps.
  explicit MemoryFrameSource(std::vector<cv::Mat> frames, double fps = 50.0);
  void add(cv::Mat frame, FrameInfo info);
  std::size_t size() const override { return frames_.size(); }
  FrameInfo info(std::size_t index) const override { return infos_.at(index); }
  cv::Mat load(std::size_t index) const override;

 private:
  std::vector<cv::Mat> frames_;
  std::vector<FrameInfo> infos_;
};

// Directory when `path` is a directory, otherwise a manifest file.
std::unique_ptr<FrameSource> open_frame_source(const std::filesystem::path& path,
                                               double fps = 50.0);

// Path on disk of a frame, when the source is file-backed.
std::optional<std::filesystem::path> frame_path(const FrameSource& source, std::size_t index);

}  // namespace egofields
