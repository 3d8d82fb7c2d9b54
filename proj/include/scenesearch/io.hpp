#pragma once

#include <iosfwd>
#include <string>

#include "scenesearch/geometry.hpp"

namespace scenesearch {

// ASCII point-cloud files (PCD dialect restricted to FIELDS x y z, DATA
// ascii). A leading "# frame world|camera" comment records the frame; files
// without it read back as camera-frame. Parse failures throw
// std::runtime_error naming the offending line.
PointCloud read_pcd(std::istream& in);
PointCloud load_pcd(const std::string& path);
void write_pcd(std::ostream& out, const PointCloud& cloud);
void save_pcd(const std::string& path, const PointCloud& cloud);

// Wavefront OBJ subset: "v x y z" vertices and triangular "f" faces whose
// vertex references may carry /vt and /vn parts (ignored). Negative indices
// count back from the vertices seen so far. Non-triangular faces and
// out-of-range references throw std::runtime_error.
TriMesh read_obj(std::istream& in);
TriMesh load_obj(const std::string& path);
void write_obj(std::ostream& out, const TriMesh& mesh);
void save_obj(const std::string& path, const TriMesh& mesh);

// Camera parameters as JSON: fx, fy, cx, cy, width, height, world_to_camera
// {rotation: 9 row-major values, translation: 3 values}. Validates on load.
CameraModel load_camera_json(const std::string& path);
void save_camera_json(const std::string& path, const CameraModel& camera);
CameraModel camera_from_json_text(const std::string& text);
std::string camera_to_json_text(const CameraModel& camera);

}  // namespace scenesearch
