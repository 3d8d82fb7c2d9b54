#include "scenesearch/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace scenesearch {

namespace {

[[noreturn]] void fail(const std::string& what, const std::string& line) {
    throw std::runtime_error(what + ": \"" + line + "\"");
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    return out;
}

}  // namespace

PointCloud read_pcd(std::istream& in) {
    PointCloud cloud;
    cloud.frame = Frame::camera;
    std::string line;
    long points = -1;
    long width = -1;
    bool fields_ok = false;
    bool data_seen = false;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string tag, value;
            if (ls >> tag >> value && tag == "frame") {
                if (value == "world") {
                    cloud.frame = Frame::world;
                } else if (value == "camera") {
                    cloud.frame = Frame::camera;
                } else {
                    fail("unknown frame tag", line);
                }
            }
            continue;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "VERSION") {
            continue;
        } else if (key == "FIELDS") {
            std::string a, b, c, extra;
            ls >> a >> b >> c;
            if (a != "x" || b != "y" || c != "z" || (ls >> extra)) {
                fail("unsupported FIELDS (need exactly x y z)", line);
            }
            fields_ok = true;
        } else if (key == "SIZE" || key == "TYPE" || key == "COUNT" || key == "VIEWPOINT") {
            continue;
        } else if (key == "WIDTH") {
            if (!(ls >> width)) {
                fail("bad WIDTH", line);
            }
        } else if (key == "HEIGHT") {
            continue;
        } else if (key == "POINTS") {
            if (!(ls >> points)) {
                fail("bad POINTS", line);
            }
        } else if (key == "DATA") {
            std::string kind;
            if (!(ls >> kind) || kind != "ascii") {
                fail("unsupported DATA (ascii only)", line);
            }
            data_seen = true;
            break;
        } else {
            fail("unrecognized header line", line);
        }
    }
    if (!data_seen) {
        throw std::runtime_error("point cloud file has no DATA section");
    }
    if (!fields_ok) {
        throw std::runtime_error("point cloud file has no FIELDS x y z header");
    }
    if (points < 0) {
        points = width;
    }
    if (points < 0) {
        throw std::runtime_error("point cloud file states no point count");
    }

    cloud.points.reserve(static_cast<std::size_t>(points));
    while (static_cast<long>(cloud.points.size()) < points && std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        Point3 p;
        if (!(ls >> p.x >> p.y >> p.z)) {
            fail("bad point record", line);
        }
        if (!p.finite()) {
            fail("non-finite point", line);
        }
        cloud.points.push_back(p);
    }
    if (static_cast<long>(cloud.points.size()) != points) {
        throw std::runtime_error("point cloud file truncated: expected " +
                                 std::to_string(points) + " points, got " +
                                 std::to_string(cloud.points.size()));
    }
    return cloud;
}

void write_pcd(std::ostream& out, const PointCloud& cloud) {
    const std::size_t n = cloud.points.size();
    out << "# frame " << (cloud.frame == Frame::world ? "world" : "camera") << "\n";
    out << "VERSION .7\n";
    out << "FIELDS x y z\n";
    out << "SIZE 8 8 8\n";
    out << "TYPE F F F\n";
    out << "COUNT 1 1 1\n";
    out << "WIDTH " << n << "\n";
    out << "HEIGHT 1\n";
    out << "VIEWPOINT 0 0 0 1 0 0 0\n";
    out << "POINTS " << n << "\n";
    out << "DATA ascii\n";
    out << std::setprecision(17);
    for (const Point3& p : cloud.points) {
        out << p.x << " " << p.y << " " << p.z << "\n";
    }
}

PointCloud load_pcd(const std::string& path) {
    std::ifstream in = open_input(path);
    return read_pcd(in);
}

void save_pcd(const std::string& path, const PointCloud& cloud) {
    std::ofstream out = open_output(path);
    write_pcd(out, cloud);
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

namespace {

int resolve_obj_index(const std::string& token, std::size_t vertex_count,
                      const std::string& line) {
    // Token forms: v, v/vt, v//vn, v/vt/vn — only the vertex part matters.
    const std::size_t slash = token.find('/');
    const std::string head = slash == std::string::npos ? token : token.substr(0, slash);
    long idx = 0;
    try {
        std::size_t used = 0;
        idx = std::stol(head, &used);
        if (used != head.size()) {
            fail("bad face index", line);
        }
    } catch (const std::logic_error&) {
        fail("bad face index", line);
    }
    if (idx < 0) {
        idx = static_cast<long>(vertex_count) + idx;  // relative to vertices so far
    } else {
        idx -= 1;  // 1-based
    }
    if (idx < 0 || idx >= static_cast<long>(vertex_count)) {
        fail("face index out of range", line);
    }
    return static_cast<int>(idx);
}

}  // namespace

TriMesh read_obj(std::istream& in) {
    TriMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key[0] == '#') {
            continue;
        }
        if (key == "v") {
            Point3 p;
            if (!(ls >> p.x >> p.y >> p.z)) {
                fail("bad vertex line", line);
            }
            mesh.vertices.push_back(p);
        } else if (key == "f") {
            std::vector<int> corners;
            std::string token;
            while (ls >> token) {
                corners.push_back(resolve_obj_index(token, mesh.vertices.size(), line));
            }
            if (corners.size() != 3) {
                fail("face is not a triangle", line);
            }
            mesh.triangles.push_back({corners[0], corners[1], corners[2]});
        }
        // Anything else (vn, vt, o, g, s, usemtl, mtllib, ...) is ignored.
    }
    mesh.validate();
    return mesh;
}

void write_obj(std::ostream& out, const TriMesh& mesh) {
    out << std::setprecision(17);
    for (const Point3& v : mesh.vertices) {
        out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    }
    for (const auto& t : mesh.triangles) {
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    }
}

TriMesh load_obj(const std::string& path) {
    std::ifstream in = open_input(path);
    try {
        return read_obj(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void save_obj(const std::string& path, const TriMesh& mesh) {
    std::ofstream out = open_output(path);
    write_obj(out, mesh);
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

CameraModel camera_from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    CameraModel cam;
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    const auto& w2c = j.at("world_to_camera");
    const auto rot = w2c.at("rotation").get<std::vector<double>>();
    const auto trans = w2c.at("translation").get<std::vector<double>>();
    if (rot.size() != 9 || trans.size() != 3) {
        throw std::runtime_error("camera json: rotation needs 9 values, translation 3");
    }
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            cam.world_to_camera.rotation(r, c) = rot[static_cast<std::size_t>(3 * r + c)];
        }
        cam.world_to_camera.translation(r) = trans[static_cast<std::size_t>(r)];
    }
    cam.validate();
    return cam;
}

std::string camera_to_json_text(const CameraModel& camera) {
    nlohmann::json j;
    j["fx"] = camera.fx;
    j["fy"] = camera.fy;
    j["cx"] = camera.cx;
    j["cy"] = camera.cy;
    j["width"] = camera.width;
    j["height"] = camera.height;
    std::vector<double> rot(9);
    std::vector<double> trans(3);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            rot[static_cast<std::size_t>(3 * r + c)] = camera.world_to_camera.rotation(r, c);
        }
        trans[static_cast<std::size_t>(r)] = camera.world_to_camera.translation(r);
    }
    j["world_to_camera"] = {{"rotation", rot}, {"translation", trans}};
    return j.dump(2);
}

CameraModel load_camera_json(const std::string& path) {
    std::ifstream in = open_input(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return camera_from_json_text(buf.str());
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void save_camera_json(const std::string& path, const CameraModel& camera) {
    std::ofstream out = open_output(path);
    out << camera_to_json_text(camera) << "\n";
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace scenesearch
