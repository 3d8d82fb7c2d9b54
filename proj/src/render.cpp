#include "scenesearch/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace scenesearch {

std::size_t DepthImage::return_count() const {
    std::size_t n = 0;
    for (float d : depth) {
        if (std::isfinite(d)) {
            ++n;
        }
    }
    return n;
}

namespace {

struct Vec3 {
    double x, y, z;
};

// Clip a camera-space triangle against z >= kZNear. Writes up to 4 vertices.
int clip_near(const Vec3 in[3], Vec3 out[4]) {
    int n = 0;
    for (int i = 0; i < 3; ++i) {
        const Vec3& a = in[i];
        const Vec3& b = in[(i + 1) % 3];
        const bool a_in = a.z >= kZNear;
        const bool b_in = b.z >= kZNear;
        if (a_in) {
            out[n++] = a;
        }
        if (a_in != b_in) {
            const double t = (kZNear - a.z) / (b.z - a.z);
            out[n++] = {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), kZNear};
        }
    }
    return n;
}

// Screen-space rasterization of one camera-space triangle (already in front
// of the near plane). Interpolates 1/z affinely across the pixel grid, which
// reproduces the exact plane/ray intersection depth for planar triangles.
void raster_camera_triangle(DepthImage& img, const Vec3& a, const Vec3& b, const Vec3& c) {
    const CameraModel& cam = img.camera;
    const double u0 = cam.fx * a.x / a.z + cam.cx;
    const double v0 = cam.fy * a.y / a.z + cam.cy;
    const double u1 = cam.fx * b.x / b.z + cam.cx;
    const double v1 = cam.fy * b.y / b.z + cam.cy;
    const double u2 = cam.fx * c.x / c.z + cam.cx;
    const double v2 = cam.fy * c.y / c.z + cam.cy;
    const double w0 = 1.0 / a.z;
    const double w1 = 1.0 / b.z;
    const double w2 = 1.0 / c.z;

    const double area2 = (u1 - u0) * (v2 - v0) - (v1 - v0) * (u2 - u0);
    if (area2 == 0.0) {
        return;  // edge-on: zero screen coverage
    }

    // Smallest pixel-center range covering the projected bounds.
    const double min_u = std::min({u0, u1, u2});
    const double max_u = std::max({u0, u1, u2});
    const double min_v = std::min({v0, v1, v2});
    const double max_v = std::max({v0, v1, v2});
    const int x0 = std::max(0, static_cast<int>(std::ceil(min_u - 0.5)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::floor(max_u - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(min_v - 0.5)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::floor(max_v - 0.5)));

    const double sign = area2 > 0.0 ? 1.0 : -1.0;
    for (int y = y0; y <= y1; ++y) {
        const double py = y + 0.5;
        for (int x = x0; x <= x1; ++x) {
            const double px = x + 0.5;
            const double e0 = ((u2 - u1) * (py - v1) - (v2 - v1) * (px - u1)) * sign;
            const double e1 = ((u0 - u2) * (py - v2) - (v0 - v2) * (px - u2)) * sign;
            const double e2 = ((u1 - u0) * (py - v0) - (v1 - v0) * (px - u0)) * sign;
            if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) {
                continue;
            }
            const double inv_area = 1.0 / (area2 * sign);
            const double inv_z = (e0 * w0 + e1 * w1 + e2 * w2) * inv_area;
            if (!(inv_z > 0.0)) {
                continue;
            }
            const float z = static_cast<float>(1.0 / inv_z);
            float& cell = img.at(x, y);
            if (z < cell) {
                cell = z;
            }
        }
    }
}

}  // namespace

void render_into(DepthImage& img, const TriMesh& mesh, const RigidPose2D& pose) {
    const Transform3 model_to_camera =
        img.camera.world_to_camera.compose(Transform3::from_pose2d(pose));
    for (const auto& tri : mesh.triangles) {
        Vec3 cam_tri[3];
        for (int k = 0; k < 3; ++k) {
            const Point3 p = model_to_camera.apply(mesh.vertices[static_cast<std::size_t>(tri[k])]);
            cam_tri[k] = {p.x, p.y, p.z};
        }
        Vec3 clipped[4];
        const int n = clip_near(cam_tri, clipped);
        for (int k = 2; k < n; ++k) {
            raster_camera_triangle(img, clipped[0], clipped[k - 1], clipped[k]);
        }
    }
}

DepthImage render_depth(const std::vector<PosedMesh>& models, const CameraModel& camera) {
    camera.validate();
    DepthImage img(camera);
    for (const auto& [mesh, pose] : models) {
        mesh->validate();
        render_into(img, *mesh, pose);
    }
    return img;
}

DepthImage render_depth(const TriMesh& mesh, const RigidPose2D& pose,
                        const CameraModel& camera) {
    return render_depth({{&mesh, pose}}, camera);
}

PointCloud depth_to_cloud(const DepthImage& img) {
    PointCloud cloud;
    cloud.frame = Frame::world;
    cloud.points.reserve(img.return_count());
    const Transform3 cam_to_world = img.camera.camera_to_world();
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const float d = img.at(x, y);
            if (!std::isfinite(d)) {
                continue;
            }
            const double z = d;
            const Point3 cam_point{(x + 0.5 - img.camera.cx) / img.camera.fx * z,
                                   (y + 0.5 - img.camera.cy) / img.camera.fy * z, z};
            cloud.points.push_back(cam_to_world.apply(cam_point));
        }
    }
    return cloud;
}

bool occludes(const DepthImage& parent, const DepthImage& child, double eps_render) {
    if (parent.width != child.width || parent.height != child.height) {
        throw std::invalid_argument("occludes: depth image dimensions differ");
    }
    for (std::size_t i = 0; i < parent.depth.size(); ++i) {
        const float p = parent.depth[i];
        if (!std::isfinite(p)) {
            continue;
        }
        const float c = child.depth[i];
        if (!std::isfinite(c) || static_cast<double>(c) < static_cast<double>(p) - eps_render) {
            return true;
        }
    }
    return false;
}

void write_depth_pgm(const std::string& path, const DepthImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "P5\n" << img.width << " " << img.height << "\n65535\n";
    for (float d : img.depth) {
        std::uint16_t mm = 0;
        if (std::isfinite(d)) {
            const double v = std::llround(static_cast<double>(d) * 1000.0);
            mm = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
        }
        const char bytes[2] = {static_cast<char>(mm >> 8), static_cast<char>(mm & 0xff)};
        out.write(bytes, 2);
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace scenesearch
