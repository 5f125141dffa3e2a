#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace egofields {

// Pinhole-family camera models with COLMAP parameter layouts:
//   SIMPLE_PINHOLE  f, cx, cy
//   PINHOLE         fx, fy, cx, cy
//   SIMPLE_RADIAL   f, cx, cy, k
//   OPENCV          fx, fy, cx, cy, k1, k2, p1, p2
enum class CameraModel { kSimplePinhole, kPinhole, kSimpleRadial, kOpenCV };

std::string_view camera_model_name(CameraModel model);
// Throws UnsupportedCameraModel for any other COLMAP model name.
CameraModel parse_camera_model(std::string_view name);
std::size_t camera_model_num_params(CameraModel model);

class CameraIntrinsics {
 public:
  // Validates width/height > 0, positive focal lengths and the parameter count.
  CameraIntrinsics(CameraModel model, int width, int height, std::vector<double> params);

  static CameraIntrinsics simple_pinhole(int width, int height, double f, double cx, double cy);
  static CameraIntrinsics pinhole(int width, int height, double fx, double fy, double cx,
                                  double cy);
  static CameraIntrinsics simple_radial(int width, int height, double f, double cx, double cy,
                                        double k);

  CameraModel model() const { return model_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const double> params() const { return params_; }

  double fx() const;
  double fy() const;
  double cx() const;
  double cy() const;
  bool has_distortion() const;

  // Normalized image plane <-> distorted normalized coordinates.
  Eigen::Vector2d distort(const Eigen::Vector2d& undistorted) const;
  // Fixed-point inversion of distort(): at most 50 iterations, stops once the
  // update is below 1e-10 px. Throws UndistortionError otherwise.
  Eigen::Vector2d undistort(const Eigen::Vector2d& distorted) const;

  Eigen::Vector2d pixel_from_normalized(const Eigen::Vector2d& normalized) const;
  Eigen::Vector2d normalized_from_pixel(const Eigen::Vector2d& pixel) const;

  // Pixel-center convention: the image spans [0,width) x [0,height).
  bool in_frame(const Eigen::Vector2d& pixel) const;

  // Copy with a different image size and principal point shifted by offset.
  CameraIntrinsics cropped(int width, int height, const Eigen::Vector2d& offset) const;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;

 private:
  CameraModel model_;
  int width_;
  int height_;
  std::vector<double> params_;
};

}  // namespace egofields
