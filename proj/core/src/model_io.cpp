// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#include "sir/model_io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace sir {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

double parse_double(std::string_view tok, const std::string& file, int line) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(file, line, "expected a number, got '" + std::string(tok) + "'");
    return value;
}

long parse_int(std::string_view tok, const std::string& file, int line) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(file, line, "expected an integer, got '" + std::string(tok) + "'");
    return value;
}

bool is_comment_or_blank(std::string_view line) {
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        return c == '#';
    }
    return true;
}

std::ifstream open_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile(path.string());
    return in;
}

std::ofstream create_file(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) throw IoError("cannot create " + path.string());
    return out;
}

void read_cameras_txt(const std::filesystem::path& path, SceneModel& model) {
    std::ifstream in = open_text(path);
    const std::string file = path.string();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_comment_or_blank(line)) continue;
        const auto tok = split_ws(line);
        if (tok.size() < 4) throw ParseError(file, lineno, "camera line too short");
        const int id = static_cast<int>(parse_int(tok[0], file, lineno));
        const std::string kind(tok[1]);
        Camera cam;
        cam.width = static_cast<int>(parse_int(tok[2], file, lineno));
        cam.height = static_cast<int>(parse_int(tok[3], file, lineno));
        if (kind == "PINHOLE") {
            if (tok.size() != 8) throw ParseError(file, lineno, "PINHOLE expects 4 parameters");
            cam.intrinsics.fx = parse_double(tok[4], file, lineno);
            cam.intrinsics.fy = parse_double(tok[5], file, lineno);
            cam.intrinsics.cx = parse_double(tok[6], file, lineno);
            cam.intrinsics.cy = parse_double(tok[7], file, lineno);
        } else if (kind == "RADIAL") {
            if (tok.size() != 9) throw ParseError(file, lineno, "RADIAL expects 5 parameters");
            cam.intrinsics.fx = cam.intrinsics.fy = parse_double(tok[4], file, lineno);
            cam.intrinsics.cx = parse_double(tok[5], file, lineno);
            cam.intrinsics.cy = parse_double(tok[6], file, lineno);
            cam.intrinsics.k1 = parse_double(tok[7], file, lineno);
            cam.intrinsics.k2 = parse_double(tok[8], file, lineno);
        } else {
            throw UnsupportedCameraKind(kind);
        }
        validate_camera(cam);
        model.cameras.emplace(id, std::move(cam));
    }
}

void read_images_txt(const std::filesystem::path& path, SceneModel& model) {
    std::ifstream in = open_text(path);
    const std::string file = path.string();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_comment_or_blank(line)) continue;
        const auto tok = split_ws(line);
        if (tok.size() < 10) throw ParseError(file, lineno, "image line expects 10 fields");
        const int id = static_cast<int>(parse_int(tok[0], file, lineno));
        const double qw = parse_double(tok[1], file, lineno);
        const double qx = parse_double(tok[2], file, lineno);
        const double qy = parse_double(tok[3], file, lineno);
        const double qz = parse_double(tok[4], file, lineno);
        Eigen::Vector3d t(parse_double(tok[5], file, lineno), parse_double(tok[6], file, lineno),
                          parse_double(tok[7], file, lineno));
        View view;
        view.camera_id = static_cast<int>(parse_int(tok[8], file, lineno));
        view.name = std::string(tok[9]);
        try {
            view.pose = Extrinsics::from_quaternion(qw, qx, qy, qz, t);
        } catch (const InvalidArgument& e) {
            throw ParseError(file, lineno, e.what());
        }
        if (!model.cameras.count(view.camera_id))
            throw ParseError(file, lineno,
                             "view references unknown camera " + std::to_string(view.camera_id));
        model.views.emplace(id, std::move(view));
        // Observation line; may be empty or missing at end of file.
        if (std::getline(in, line)) ++lineno;
    }
}

void read_points_txt(const std::filesystem::path& path, SceneModel& model) {
    std::ifstream in(path);
    if (!in) return;  // optional file
    const std::string file = path.string();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_comment_or_blank(line)) continue;
        const auto tok = split_ws(line);
        if (tok.size() < 8 || (tok.size() - 8) % 2 != 0)
            throw ParseError(file, lineno, "point line expects 8 fields plus track pairs");
        SparsePoint pt;
        pt.position = Eigen::Vector3d(parse_double(tok[1], file, lineno),
                                      parse_double(tok[2], file, lineno),
                                      parse_double(tok[3], file, lineno));
        for (int c = 0; c < 3; ++c) {
            const long v = parse_int(tok[4 + c], file, lineno);
            if (v < 0 || v > 255) throw ParseError(file, lineno, "color out of range");
            pt.color[c] = static_cast<std::uint8_t>(v);
        }
        for (std::size_t k = 8; k + 1 < tok.size(); k += 2) {
            const int view_id = static_cast<int>(parse_int(tok[k], file, lineno));
            if (!model.views.count(view_id))
                throw ParseError(file, lineno,
                                 "track references unknown view " + std::to_string(view_id));
            pt.view_ids.push_back(view_id);
        }
        model.points.push_back(std::move(pt));
    }
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

Camera SceneModel::view_camera(int view_id) const {
    const auto vit = views.find(view_id);
    if (vit == views.end())
        throw InvalidArgument("unknown view id " + std::to_string(view_id));
    const auto cit = cameras.find(vit->second.camera_id);
    if (cit == cameras.end())
        throw InvalidArgument("view " + std::to_string(view_id) + " references unknown camera");
    Camera cam = cit->second;
    cam.extrinsics = vit->second.pose;
    return cam;
}

SceneModel read_sparse_model(const std::filesystem::path& directory) {
    SceneModel model;
    read_cameras_txt(directory / "cameras.txt", model);
    read_images_txt(directory / "images.txt", model);
    read_points_txt(directory / "points3D.txt", model);
    return model;
}

void write_sparse_model(const SceneModel& model, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    {
        std::ofstream out = create_file(directory / "cameras.txt", std::ios::out);
        out << "# Camera list: CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]\n";
        for (const auto& [id, cam] : model.cameras) {
            const bool distorted = cam.intrinsics.k1 != 0.0 || cam.intrinsics.k2 != 0.0;
            out << id << ' ';
            if (distorted) {
                if (cam.intrinsics.fx != cam.intrinsics.fy)
                    throw UnsupportedCameraKind("distorted camera with fx != fy");
                out << "RADIAL " << cam.width << ' ' << cam.height << ' '
                    << format_double(cam.intrinsics.fx) << ' ' << format_double(cam.intrinsics.cx)
                    << ' ' << format_double(cam.intrinsics.cy) << ' '
                    << format_double(cam.intrinsics.k1) << ' ' << format_double(cam.intrinsics.k2)
                    << '\n';
            } else {
                out << "PINHOLE " << cam.width << ' ' << cam.height << ' '
                    << format_double(cam.intrinsics.fx) << ' ' << format_double(cam.intrinsics.fy)
                    << ' ' << format_double(cam.intrinsics.cx) << ' '
                    << format_double(cam.intrinsics.cy) << '\n';
            }
        }
        if (!out) throw IoError("write failed: cameras.txt");
    }
    {
        std::ofstream out = create_file(directory / "images.txt", std::ios::out);
        out << "# Image list: IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME\n";
        out << "#             POINTS2D[] (empty)\n";
        for (const auto& [id, view] : model.views) {
            Eigen::Quaterniond q(view.pose.rotation);
            q.normalize();
            // Canonical sign so that serialization is unique.
            if (q.w() < 0 || (q.w() == 0 && (q.x() < 0 || (q.x() == 0 && (q.y() < 0 ||
                (q.y() == 0 && q.z() < 0))))))
                q.coeffs() = -q.coeffs();
            const Eigen::Vector3d& t = view.pose.translation;
            out << id << ' ' << format_double(q.w()) << ' ' << format_double(q.x()) << ' '
                << format_double(q.y()) << ' ' << format_double(q.z()) << ' '
                << format_double(t.x()) << ' ' << format_double(t.y()) << ' '
                << format_double(t.z()) << ' ' << view.camera_id << ' ' << view.name << "\n\n";
        }
        if (!out) throw IoError("write failed: images.txt");
    }
    {
        std::ofstream out = create_file(directory / "points3D.txt", std::ios::out);
        out << "# Point list: POINT3D_ID X Y Z R G B ERROR TRACK[] as (IMAGE_ID POINT2D_IDX)\n";
        long id = 1;
        for (const auto& pt : model.points) {
            out << id++ << ' ' << format_double(pt.position.x()) << ' '
                << format_double(pt.position.y()) << ' ' << format_double(pt.position.z()) << ' '
                << int(pt.color[0]) << ' ' << int(pt.color[1]) << ' ' << int(pt.color[2]) << " 0";
            for (int v : pt.view_ids) out << ' ' << v << " 0";
            out << '\n';
        }
        if (!out) throw IoError("write failed: points3D.txt");
    }
}

DepthMap DepthMap::make(int width, int height) {
    if (width < 1 || height < 1) throw InvalidArgument("depth map dimensions must be positive");
    DepthMap d;
    d.width = width;
    d.height = height;
    d.depth.assign(static_cast<std::size_t>(width) * height, 0.0f);
    return d;
}

std::size_t DepthMap::valid_count() const {
    std::size_t n = 0;
    for (float d : depth) n += d > 0.0f;
    return n;
}

namespace {

// Portable pixmap header: ASCII tokens separated by whitespace, # comments
// running to end of line, then a single whitespace byte before the raster.
int pnm_token(std::istream& in, const std::string& file) {
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (!std::isspace(c)) break;
    }
    if (c == EOF) throw ParseError(file, 0, "truncated pixmap header");
    long value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw ParseError(file, 0, "malformed pixmap header");
    if (c != EOF && !std::isspace(c)) throw ParseError(file, 0, "malformed pixmap header");
    return static_cast<int>(value);
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& file) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError(file, 0, "truncated file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

ImageU8 read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path.string());
    const std::string file = path.string();
    char magic[2];
    if (!in.read(magic, 2)) throw ParseError(file, 0, "truncated file");
    int channels = 0;
    if (magic[0] == 'P' && magic[1] == '5')
        channels = 1;
    else if (magic[0] == 'P' && magic[1] == '6')
        channels = 3;
    else
        throw UnsupportedFormat("not a P5/P6 pixmap: " + file);
    const int width = pnm_token(in, file);
    const int height = pnm_token(in, file);
    const int maxval = pnm_token(in, file);
    if (maxval != 255) throw UnsupportedFormat("pixmap maxval must be 255: " + file);
    if (width < 1 || height < 1) throw ParseError(file, 0, "bad pixmap dimensions");
    ImageU8 img = ImageU8::make(width, height, channels);
    if (!in.read(reinterpret_cast<char*>(img.data.data()),
                 static_cast<std::streamsize>(img.data.size())))
        throw ParseError(file, 0, "truncated pixel data");
    return img;
}

void write_image(const ImageU8& image, const std::filesystem::path& path) {
    if (image.channels != 1 && image.channels != 3)
        throw UnsupportedFormat("pixmaps support 1 or 3 channels");
    std::ofstream out = create_file(path, std::ios::binary);
    out << (image.channels == 1 ? "P5" : "P6") << '\n'
        << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data.data()),
              static_cast<std::streamsize>(image.data.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

DepthMap read_depth_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path.string());
    const std::string file = path.string();
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "SIRD", 4) != 0)
        throw ParseError(file, 0, "not a SIRD depth file");
    const std::uint32_t w = read_u32(in, file);
    const std::uint32_t h = read_u32(in, file);
    if (w < 1 || h < 1 || w > (1u << 24) || h > (1u << 24))
        throw ParseError(file, 0, "bad depth map dimensions");
    DepthMap d = DepthMap::make(static_cast<int>(w), static_cast<int>(h));
    if (!in.read(reinterpret_cast<char*>(d.depth.data()),
                 static_cast<std::streamsize>(d.depth.size() * sizeof(float))))
        throw ParseError(file, 0, "truncated depth data");
    return d;
}

void write_depth_map(const DepthMap& depth, const std::filesystem::path& path) {
    std::ofstream out = create_file(path, std::ios::binary);
    out.write("SIRD", 4);
    write_u32(out, static_cast<std::uint32_t>(depth.width));
    write_u32(out, static_cast<std::uint32_t>(depth.height));
    out.write(reinterpret_cast<const char*>(depth.depth.data()),
              static_cast<std::streamsize>(depth.depth.size() * sizeof(float)));
    if (!out) throw IoError("write failed: " + path.string());
}

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out = create_file(path, std::ios::out);
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
        << "\nproperty double x\nproperty double y\nproperty double z\n"
           "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    for (const auto& p : cloud.points) {
        out << format_double(p.position.x()) << ' ' << format_double(p.position.y()) << ' '
            << format_double(p.position.z()) << ' ' << int(p.color[0]) << ' ' << int(p.color[1])
            << ' ' << int(p.color[2]) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile(path.string());
    const std::string file = path.string();
    std::string line;
    std::size_t vertex_count = 0;
    bool header_done = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tok = split_ws(line);
        if (lineno == 1 && (tok.size() != 1 || tok[0] != "ply"))
            throw UnsupportedFormat("not a PLY file: " + file);
        if (!tok.empty() && tok[0] == "element") {
            if (tok.size() != 3 || tok[1] != "vertex")
                throw UnsupportedFormat("unsupported PLY element in " + file);
            vertex_count = static_cast<std::size_t>(parse_int(tok[2], file, lineno));
        }
        if (!tok.empty() && tok[0] == "end_header") {
            header_done = true;
            break;
        }
    }
    if (!header_done) throw ParseError(file, lineno, "missing end_header");
    PointCloud cloud;
    cloud.points.reserve(vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i) {
        if (!std::getline(in, line)) throw ParseError(file, ++lineno, "truncated vertex data");
        ++lineno;
        const auto tok = split_ws(line);
        if (tok.size() != 6) throw ParseError(file, lineno, "vertex line expects 6 fields");
        PointCloud::Point p;
        p.position = Eigen::Vector3d(parse_double(tok[0], file, lineno),
                                     parse_double(tok[1], file, lineno),
                                     parse_double(tok[2], file, lineno));
        for (int c = 0; c < 3; ++c)
            p.color[c] = static_cast<std::uint8_t>(parse_int(tok[3 + c], file, lineno));
        cloud.points.push_back(p);
    }
    return cloud;
}

}  // namespace sir
