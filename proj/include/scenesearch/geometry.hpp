#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace scenesearch {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Point3() = default;
    Point3(double px, double py, double pz) : x(px), y(py), z(pz) {}

    Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
    Point3 cross(const Point3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double squared_norm() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(squared_norm()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

enum class Frame { camera, world };

struct PointCloud {
    std::vector<Point3> points;
    Frame frame = Frame::camera;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

// Maps angle to the canonical [0, 2*pi) range.
double normalize_angle(double theta);

// min_k |a - b + 2*pi*k|, always in [0, pi].
double shortest_angular_difference(double a, double b);

// Planar rigid pose in a gravity-aligned frame: translation (x, y) plus yaw.
// Yaw is kept normalized to [0, 2*pi).
struct RigidPose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    RigidPose2D() = default;
    RigidPose2D(double px, double py, double yaw) : x(px), y(py), theta(normalize_angle(yaw)) {}
};

// General rigid transform, rotation followed by translation.
struct Transform3 {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Point3 apply(const Point3& p) const {
        Eigen::Vector3d v = rotation * Eigen::Vector3d(p.x, p.y, p.z) + translation;
        return {v.x(), v.y(), v.z()};
    }
    Transform3 compose(const Transform3& inner) const {
        return {rotation * inner.rotation, rotation * inner.translation + translation};
    }
    Transform3 inverse() const {
        Eigen::Matrix3d rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }

    static Transform3 identity() { return {}; }
    static Transform3 from_pose2d(const RigidPose2D& pose);
};

// Pinhole camera with a world-to-camera extrinsic. Camera frame follows the
// usual sensor convention: x right, y down, z forward (viewing direction).
struct CameraModel {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    Transform3 world_to_camera;

    Transform3 camera_to_world() const { return world_to_camera.inverse(); }
    // Throws std::invalid_argument when intrinsics are out of range or the
    // rotation is not orthonormal with determinant +1 (1e-9 tolerance).
    void validate() const;
};

// World-to-camera extrinsic for a camera at `eye` looking at `target`, with
// the image "up" chosen against the given world up direction.
Transform3 look_at(const Point3& eye, const Point3& target,
                   const Point3& world_up = {0.0, 0.0, 1.0});

struct TriMesh {
    std::vector<Point3> vertices;
    std::vector<std::array<int, 3>> triangles;

    bool empty() const { return triangles.empty(); }
    // Throws std::invalid_argument on out-of-range indices or triangles with
    // area <= 1e-12 m^2. The canonical frame puts the base plane at z = 0.
    void validate() const;
};

// Conservative cylindrical stand-in for an object's occupied volume, axis
// vertical in the model frame.
struct VolumeApprox {
    double center_x = 0.0;  // axis offset in the model frame
    double center_y = 0.0;
    double radius = 0.0;
    double z_min = 0.0;
    double z_max = 0.0;
};

// Cylinder inscribed in the mesh bounding box: footprint-centered, radius half
// the smaller horizontal extent, full z range. Conservative for convex solids
// of revolution, a heuristic for anything else. Throws on degenerate meshes.
VolumeApprox inscribed_cylinder(const TriMesh& mesh);

// Inclusive containment test against the cylinder posed by a planar pose.
bool point_in_volume(const Point3& p, const VolumeApprox& vol, const RigidPose2D& pose);

PointCloud transform_cloud(const PointCloud& cloud, const Transform3& transform);
PointCloud transform_cloud(const PointCloud& cloud, const RigidPose2D& pose);

// Exact nearest-neighbor index over a fixed point cloud (median-split k-d
// tree). Read-only after construction and safe to share across threads.
class SpatialIndex {
public:
    SpatialIndex() = default;
    explicit SpatialIndex(const PointCloud& cloud);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    // True iff some indexed point lies within `radius` of `p` (inclusive).
    // Empty index yields false.
    bool has_neighbor_within(const Point3& p, double radius) const;

    struct Neighbor {
        int index = -1;
        double distance = 0.0;
    };
    // Closest indexed point within `radius`, or index -1 when none exists.
    Neighbor nearest_within(const Point3& p, double radius) const;

    const Point3& point(int index) const { return points_[static_cast<std::size_t>(index)]; }

private:
    struct Node {
        int point = -1;
        int axis = 0;
        int left = -1;
        int right = -1;
    };

    int build(int begin, int end);
    void search(int node, const Point3& p, double radius, bool any_hit,
                Neighbor& best, bool& found) const;

    std::vector<Point3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

// Membership side of the explanation test: true iff the indexed cloud holds a
// point within `delta` of `p`. Distance exactly delta counts as a hit.
bool nearest_within(const SpatialIndex& index, const Point3& p, double delta);

}  // namespace scenesearch
