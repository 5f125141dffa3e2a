#include "egofields/camera.h"

#include <array>
#include <cmath>
#include <string>

#include "egofields/error.h"

namespace egofields {
namespace {

constexpr int kMaxUndistortIterations = 50;
constexpr double kUndistortTolerancePx = 1e-10;

}  // namespace

std::string_view camera_model_name(CameraModel model) {
  switch (model) {
    case CameraModel::kSimplePinhole:
      return "SIMPLE_PINHOLE";
    case CameraModel::kPinhole:
      return "PINHOLE";
    case CameraModel::kSimpleRadial:
      return "SIMPLE_RADIAL";
    case CameraModel::kOpenCV:
      return "OPENCV";
  }
  return "UNKNOWN";
}

CameraModel parse_camera_model(std::string_view name) {
  static constexpr std::array kModels = {CameraModel::kSimplePinhole, CameraModel::kPinhole,
                                         CameraModel::kSimpleRadial, CameraModel::kOpenCV};
  for (CameraModel m : kModels) {
    if (camera_model_name(m) == name) return m;
  }
  throw UnsupportedCameraModel("unsupported camera model '" + std::string(name) +
                               "' (expected SIMPLE_PINHOLE, PINHOLE, SIMPLE_RADIAL or OPENCV)");
}

std::size_t camera_model_num_params(CameraModel model) {
  switch (model) {
    case CameraModel::kSimplePinhole:
      return 3;
    case CameraModel::kPinhole:
      return 4;
    case CameraModel::kSimpleRadial:
      return 4;
    case CameraModel::kOpenCV:
      return 8;
  }
  return 0;
}

CameraIntrinsics::CameraIntrinsics(CameraModel model, int width, int height,
                                   std::vector<double> params)
    : model_(model), width_(width), height_(height), params_(std::move(params)) {
  if (width_ <= 0 || height_ <= 0) {
    throw InvalidArgument("camera size must be positive, got " + std::to_string(width_) + "x" +
                          std::to_string(height_));
  }
  if (params_.size() != camera_model_num_params(model_)) {
    throw InvalidArgument(std::string(camera_model_name(model_)) + " expects " +
                          std::to_string(camera_model_num_params(model_)) + " params, got " +
                          std::to_string(params_.size()));
  }
  for (double p : params_) {
    if (!std::isfinite(p)) throw InvalidArgument("camera params must be finite");
  }
  if (!(fx() > 0.0) || !(fy() > 0.0)) throw InvalidArgument("focal length must be positive");
}

CameraIntrinsics CameraIntrinsics::simple_pinhole(int width, int height, double f, double cx,
                                                  double cy) {
  return CameraIntrinsics(CameraModel::kSimplePinhole, width, height, {f, cx, cy});
}

CameraIntrinsics CameraIntrinsics::pinhole(int width, int height, double fx, double fy,
                                           double cx, double cy) {
  return CameraIntrinsics(CameraModel::kPinhole, width, height, {fx, fy, cx, cy});
}

CameraIntrinsics CameraIntrinsics::simple_radial(int width, int height, double f, double cx,
                                                 double cy, double k) {
  return CameraIntrinsics(CameraModel::kSimpleRadial, width, height, {f, cx, cy, k});
}

double CameraIntrinsics::fx() const { return params_[0]; }

double CameraIntrinsics::fy() const {
  switch (model_) {
    case CameraModel::kPinhole:
    case CameraModel::kOpenCV:
      return params_[1];
    default:
      return params_[0];
  }
}

double CameraIntrinsics::cx() const {
  switch (model_) {
    case CameraModel::kPinhole:
    case CameraModel::kOpenCV:
      return params_[2];
    default:
      return params_[1];
  }
}

double CameraIntrinsics::cy() const {
  switch (model_) {
    case CameraModel::kPinhole:
    case CameraModel::kOpenCV:
      return params_[3];
    default:
      return params_[2];
  }
}

bool CameraIntrinsics::has_distortion() const {
  switch (model_) {
    case CameraModel::kSimpleRadial:
      return params_[3] != 0.0;
    case CameraModel::kOpenCV:
      return params_[4] != 0.0 || params_[5] != 0.0 || params_[6] != 0.0 || params_[7] != 0.0;
    default:
      return false;
  }
}

Eigen::Vector2d CameraIntrinsics::distort(const Eigen::Vector2d& u) const {
  switch (model_) {
    case CameraModel::kSimpleRadial: {
      const double k = params_[3];
      const double r2 = u.squaredNorm();
      return u * (1.0 + k * r2);
    }
    case CameraModel::kOpenCV: {
      const double k1 = params_[4], k2 = params_[5], p1 = params_[6], p2 = params_[7];
      const double x = u.x(), y = u.y();
      const double r2 = x * x + y * y;
      const double radial = 1.0 + k1 * r2 + k2 * r2 * r2;
      return {x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
              y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
    }
    default:
      return u;
  }
}

Eigen::Vector2d CameraIntrinsics::undistort(const Eigen::Vector2d& d) const {
  if (!has_distortion()) return d;
  // Tolerance is stated in pixels; convert to the normalized plane.
  const double tol = kUndistortTolerancePx / std::max(fx(), fy());
  Eigen::Vector2d u = d;
  for (int it = 0; it < kMaxUndistortIterations; ++it) {
    const Eigen::Vector2d next = u + (d - distort(u));
    if (!next.allFinite()) break;
    const double step = (next - u).norm();
    u = next;
    if (step < tol) return u;
  }
  throw UndistortionError("undistortion did not converge within " +
                          std::to_string(kMaxUndistortIterations) +
                          " iterations; distortion coefficients look malformed");
}

Eigen::Vector2d CameraIntrinsics::pixel_from_normalized(const Eigen::Vector2d& n) const {
  const Eigen::Vector2d d = distort(n);
  return {fx() * d.x() + cx(), fy() * d.y() + cy()};
}

Eigen::Vector2d CameraIntrinsics::normalized_from_pixel(const Eigen::Vector2d& p) const {
  return undistort({(p.x() - cx()) / fx(), (p.y() - cy()) / fy()});
}

bool CameraIntrinsics::in_frame(const Eigen::Vector2d& p) const {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < width_ && p.y() < height_;
}

CameraIntrinsics CameraIntrinsics::cropped(int width, int height,
                                           const Eigen::Vector2d& offset) const {
  std::vector<double> params = params_;
  const bool separate_focal =
      model_ == CameraModel::kPinhole || model_ == CameraModel::kOpenCV;
  const std::size_t cx_index = separate_focal ? 2 : 1;
  params[cx_index] -= offset.x();
  params[cx_index + 1] -= offset.y();
  return CameraIntrinsics(model_, width, height, std::move(params));
}

}  // namespace egofields
