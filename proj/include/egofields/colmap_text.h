#pragma once

#include <filesystem>
#include <string>

#include "egofields/reconstruction.h"

namespace egofields {

// COLMAP text model: cameras.txt, images.txt, points3D.txt.
//
//   cameras.txt   CAMERA_ID MODEL WIDTH HEIGHT PARAMS...
//   images.txt    IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME
//                 X Y POINT3D_ID ...        (POINT3D_ID -1: untriangulated)
//   points3D.txt  POINT3D_ID X Y Z R G B ERROR (IMAGE_ID POINT2D_IDX)...
//
// Poses are world-to-camera. Lines starting with '#' and blank lines are
// skipped (except the observation line following each image line, which may
// be empty). total_frame_count is set to the number of images read.
//
// Throws UnsupportedCameraModel, or ParseError carrying the file and line for
// malformed lines and dangling image/point references.
Reconstruction read_colmap_text(const std::filesystem::path& dir);

// Byte-stable writer: cameras, images and points sorted by id, real numbers
// printed with 12 significant digits. Each file is written atomically.
void write_colmap_text(const Reconstruction& recon, const std::filesystem::path& dir);

std::string format_cameras_text(const Reconstruction& recon);
std::string format_images_text(const Reconstruction& recon);
std::string format_points_text(const Reconstruction& recon);

}  // namespace egofields
