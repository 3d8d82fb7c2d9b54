#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "scenesearch/geometry.hpp"

namespace scenesearch {

// Row-major depth map in meters; empty pixels hold kNoReturn (+infinity).
struct DepthImage {
    static constexpr float kNoReturn = std::numeric_limits<float>::infinity();

    int width = 0;
    int height = 0;
    CameraModel camera;
    std::vector<float> depth;

    DepthImage() = default;
    explicit DepthImage(const CameraModel& cam)
        : width(cam.width), height(cam.height), camera(cam),
          depth(static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height),
                kNoReturn) {}

    float at(int x, int y) const {
        return depth[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)];
    }
    float& at(int x, int y) {
        return depth[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)];
    }
    bool has_return(int x, int y) const { return std::isfinite(at(x, y)); }
    std::size_t return_count() const;
};

// Geometry closer than this camera-frame depth is clipped away.
inline constexpr double kZNear = 1e-4;
// Depth slack distinguishing z-fighting from true occlusion.
inline constexpr double kEpsRenderDefault = 1e-4;

using PosedMesh = std::pair<const TriMesh*, RigidPose2D>;

// Z-buffer rasterization of the posed meshes: each pixel keeps the smallest
// camera-frame depth along its center ray, kNoReturn where nothing projects.
// Triangles are double-sided and clipped against the near plane. The result
// is identical for any permutation of the model list.
DepthImage render_depth(const std::vector<PosedMesh>& models, const CameraModel& camera);
DepthImage render_depth(const TriMesh& mesh, const RigidPose2D& pose,
                        const CameraModel& camera);

// Rasterize one posed mesh into an existing buffer (pixel-wise min).
void render_into(DepthImage& img, const TriMesh& mesh, const RigidPose2D& pose);

// Back-projects every pixel return through the pinhole model into the world
// frame; output order is row-major pixel order.
PointCloud depth_to_cloud(const DepthImage& img);

// True iff adding whatever `child` renders destroyed part of `parent`: some
// pixel where parent has a return either went empty in child or got closer by
// more than eps_render. False certifies every parent return persists.
bool occludes(const DepthImage& parent, const DepthImage& child,
              double eps_render = kEpsRenderDefault);

// Debug dump: 16-bit binary PGM, big-endian, depth in millimeters rounded to
// nearest (clamped to 65535); empty pixels write 0.
void write_depth_pgm(const std::string& path, const DepthImage& img);

}  // namespace scenesearch
