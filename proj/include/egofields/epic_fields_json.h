#pragma once

#include <filesystem>
#include <string>

#include "egofields/reconstruction.h"

namespace egofields {

// Light-weight per-video JSON model:
//
//   {
//     "camera": {"model": "PINHOLE", "width": 456, "height": 256,
//                "params": [fx, fy, cx, cy]},
//     "images": {"<frame name>": [qw, qx, qy, qz, tx, ty, tz], ...},
//     "points": [[x, y, z], ...]
//   }
//
// One shared camera per video; poses are world-to-camera. Tracks, colours and
// per-point errors are not stored. Frames are assigned image ids 1..N in name
// order and camera id 1 on read.
Reconstruction read_epic_fields_json(const std::filesystem::path& path);
Reconstruction parse_epic_fields_json(const std::string& text);

// Frames are written sorted by name. Throws InvalidArgument when the
// reconstruction has more than one camera.
void write_epic_fields_json(const Reconstruction& recon, const std::filesystem::path& path);
std::string format_epic_fields_json(const Reconstruction& recon);

}  // namespace egofields
