#include "egofields/mask.h"

#include <algorithm>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "egofields/error.h"

namespace egofields {

BinaryMask::BinaryMask(int w, int h, int id) : width(w), height(h), object_id(id) {
  if (w < 0 || h < 0) throw InvalidArgument("mask dimensions must be non-negative");
  bits.assign(static_cast<std::size_t>(w) * h, 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

BinaryMask mask_from_mat(const cv::Mat& image, int object_id) {
  cv::Mat gray = image;
  if (image.channels() != 1) {
    cv::cvtColor(image, gray, cv::COLOR_BGR2GRAY);
  }
  BinaryMask m(gray.cols, gray.rows, object_id);
  cv::Mat nonzero = gray != 0;  // CV_8U 0/255
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = nonzero.ptr<std::uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) m.set(x, y, row[x] != 0);
  }
  return m;
}

cv::Mat mask_to_mat(const BinaryMask& mask) {
  cv::Mat out(mask.height, mask.width, CV_8U);
  for (int y = 0; y < mask.height; ++y) {
    auto* row = out.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width; ++x) row[x] = mask.at(x, y) ? 255 : 0;
  }
  return out;
}

BinaryMask read_mask(const std::filesystem::path& path, int object_id) {
  const cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw Error("cannot read mask '" + path.string() + "'");
  return mask_from_mat(img, object_id);
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), mask_to_mat(mask))) {
    throw Error("cannot write mask '" + path.string() + "'");
  }
}

cv::Mat mask_overlay(const cv::Mat& image, const BinaryMask& mask) {
  cv::Mat bgr;
  if (image.channels() == 1) {
    cv::cvtColor(image, bgr, cv::COLOR_GRAY2BGR);
  } else {
    bgr = image.clone();
  }
  if (bgr.cols != mask.width || bgr.rows != mask.height) {
    throw InvalidArgument("overlay image and mask sizes differ");
  }
  for (int y = 0; y < mask.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      row[x][2] = static_cast<std::uint8_t>(std::min(255, row[x][2] / 2 + 128));
      row[x][0] /= 2;
      row[x][1] /= 2;
    }
  }
  return bgr;
}

}  // namespace egofields
