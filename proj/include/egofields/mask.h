#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <opencv2/core.hpp>

namespace egofields {

// Row-major binary raster; bits[y * width + x] is 0 or 1.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;
  int object_id = 0;

  BinaryMask() = default;
  BinaryMask(int w, int h, int id = 0);

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v = true) {
    bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool same_size(const BinaryMask& o) const { return width == o.width && height == o.height; }

  // Equality of geometry and bits; object ids are labels and not compared.
  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.width == b.width && a.height == b.height && a.bits == b.bits;
  }
};

// Nonzero pixels are foreground.
BinaryMask mask_from_mat(const cv::Mat& image, int object_id = 0);
cv::Mat mask_to_mat(const BinaryMask& mask);  // CV_8U, 0 / 255

// Single-channel raster IO. Reading throws Error for unreadable files.
BinaryMask read_mask(const std::filesystem::path& path, int object_id = 0);
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

// Grayscale copy of `image` with the mask's foreground tinted, for inspection.
cv::Mat mask_overlay(const cv::Mat& image, const BinaryMask& mask);

}  // namespace egofields
