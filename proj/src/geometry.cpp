#include "scenesearch/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <Eigen/LU>

namespace scenesearch {

double normalize_angle(double theta) {
    if (!std::isfinite(theta)) {
        throw std::invalid_argument("normalize_angle: angle must be finite");
    }
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) {
        t += kTwoPi;
    }
    if (t >= kTwoPi) {
        t = 0.0;  // fmod round-off can land exactly on 2*pi
    }
    return t;
}

double shortest_angular_difference(double a, double b) {
    double d = std::fabs(normalize_angle(a) - normalize_angle(b));
    return std::min(d, kTwoPi - d);
}

Transform3 Transform3::from_pose2d(const RigidPose2D& pose) {
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    Transform3 t;
    t.rotation << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    t.translation = Eigen::Vector3d(pose.x, pose.y, 0.0);
    return t;
}

void CameraModel::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
        throw std::invalid_argument("camera: focal lengths must be positive and finite");
    }
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("camera: image dimensions must be positive");
    }
    if (!std::isfinite(cx) || !std::isfinite(cy) || cx < 0.0 || cx >= width || cy < 0.0 ||
        cy >= height) {
        throw std::invalid_argument("camera: principal point must lie inside the image");
    }
    const Eigen::Matrix3d& r = world_to_camera.rotation;
    constexpr double tol = 1e-9;
    if (!r.allFinite() || !world_to_camera.translation.allFinite()) {
        throw std::invalid_argument("camera: extrinsic must be finite");
    }
    if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("camera: rotation must be orthonormal");
    }
    if (std::fabs(r.determinant() - 1.0) > tol) {
        throw std::invalid_argument("camera: rotation must be proper (det +1)");
    }
}

Transform3 look_at(const Point3& eye, const Point3& target, const Point3& world_up) {
    Point3 forward = target - eye;
    if (forward.norm() < 1e-12) {
        throw std::invalid_argument("look_at: eye and target coincide");
    }
    forward = forward * (1.0 / forward.norm());
    Point3 right = forward.cross(world_up);
    if (right.norm() < 1e-12) {
        throw std::invalid_argument("look_at: view direction parallel to up");
    }
    right = right * (1.0 / right.norm());
    Point3 down = forward.cross(right);  // image y grows downward

    Transform3 t;
    t.rotation << right.x, right.y, right.z,
                  down.x, down.y, down.z,
                  forward.x, forward.y, forward.z;
    t.translation = -(t.rotation * Eigen::Vector3d(eye.x, eye.y, eye.z));
    return t;
}

void TriMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (const Point3& v : vertices) {
        if (!v.finite()) {
            throw std::invalid_argument("mesh: vertices must be finite");
        }
    }
    for (const auto& tri : triangles) {
        for (int idx : tri) {
            if (idx < 0 || idx >= n) {
                throw std::invalid_argument("mesh: triangle index out of range");
            }
        }
        const Point3& a = vertices[static_cast<std::size_t>(tri[0])];
        const Point3& b = vertices[static_cast<std::size_t>(tri[1])];
        const Point3& c = vertices[static_cast<std::size_t>(tri[2])];
        const double area = 0.5 * (b - a).cross(c - a).norm();
        if (!(area > 1e-12)) {
            throw std::invalid_argument("mesh: degenerate triangle (area <= 1e-12)");
        }
    }
}

VolumeApprox inscribed_cylinder(const TriMesh& mesh) {
    if (mesh.vertices.empty() || mesh.triangles.empty()) {
        throw std::invalid_argument("inscribed_cylinder: mesh has no geometry");
    }
    mesh.validate();

    double min_x = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double min_y = min_x, max_y = max_x, min_z = min_x, max_z = max_x;
    for (const Point3& v : mesh.vertices) {
        min_x = std::min(min_x, v.x);
        max_x = std::max(max_x, v.x);
        min_y = std::min(min_y, v.y);
        max_y = std::max(max_y, v.y);
        min_z = std::min(min_z, v.z);
        max_z = std::max(max_z, v.z);
    }

    VolumeApprox vol;
    vol.center_x = 0.5 * (min_x + max_x);
    vol.center_y = 0.5 * (min_y + max_y);
    vol.radius = 0.5 * std::min(max_x - min_x, max_y - min_y);
    vol.z_min = min_z;
    vol.z_max = max_z;
    if (!(vol.radius > 1e-9) || !(max_z - min_z > 1e-9)) {
        throw std::invalid_argument("inscribed_cylinder: mesh extent degenerate");
    }
    return vol;
}

bool point_in_volume(const Point3& p, const VolumeApprox& vol, const RigidPose2D& pose) {
    if (p.z < vol.z_min || p.z > vol.z_max) {
        return false;
    }
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    const double ax = pose.x + c * vol.center_x - s * vol.center_y;
    const double ay = pose.y + s * vol.center_x + c * vol.center_y;
    const double dx = p.x - ax;
    const double dy = p.y - ay;
    return dx * dx + dy * dy <= vol.radius * vol.radius;
}

PointCloud transform_cloud(const PointCloud& cloud, const Transform3& transform) {
    PointCloud out;
    out.frame = cloud.frame;
    out.points.reserve(cloud.points.size());
    for (const Point3& p : cloud.points) {
        out.points.push_back(transform.apply(p));
    }
    return out;
}

PointCloud transform_cloud(const PointCloud& cloud, const RigidPose2D& pose) {
    return transform_cloud(cloud, Transform3::from_pose2d(pose));
}

}  // namespace scenesearch
