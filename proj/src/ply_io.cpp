#include "splat/ply_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace splat {

namespace {

constexpr int kRestPerChannel = kShCoeffCount - 1;  // 15

std::vector<std::string> gaussian_property_names() {
    std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz",
                                      "f_dc_0", "f_dc_1", "f_dc_2"};
    for (int j = 0; j < kRestPerChannel * 3; ++j) names.push_back("f_rest_" + std::to_string(j));
    names.push_back("opacity");
    for (int j = 0; j < 3; ++j) names.push_back("scale_" + std::to_string(j));
    for (int j = 0; j < 4; ++j) names.push_back("rot_" + std::to_string(j));
    return names;
}

[[noreturn]] void parse_fail(const std::string& path, std::streamoff offset,
                             const std::string& what) {
    std::ostringstream msg;
    msg << path << ": PLY parse error at byte " << offset << ": " << what;
    throw std::runtime_error(msg.str());
}

struct PlyHeader {
    long vertex_count = -1;
    std::vector<std::pair<std::string, std::string>> properties;  // (type, name)
    std::streamoff data_offset = 0;
};

PlyHeader parse_header(std::istream& in, const std::string& path) {
    PlyHeader h;
    std::string line;
    std::streamoff line_start = 0;
    bool saw_format = false;
    if (!std::getline(in, line) || line != "ply") parse_fail(path, 0, "missing 'ply' magic");
    while (true) {
        line_start = in.tellg();
        if (!std::getline(in, line))
            parse_fail(path, line_start, "header ended without 'end_header'");
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment") continue;
        if (word == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (fmt != "binary_little_endian" || ver != "1.0")
                parse_fail(path, line_start, "unsupported format '" + line + "'");
            saw_format = true;
        } else if (word == "element") {
            std::string name;
            long count = -1;
            ls >> name >> count;
            if (name != "vertex" || count < 0)
                parse_fail(path, line_start, "expected 'element vertex <count>', got '" + line + "'");
            if (h.vertex_count >= 0) parse_fail(path, line_start, "multiple vertex elements");
            h.vertex_count = count;
        } else if (word == "property") {
            std::string type, name;
            ls >> type >> name;
            if (type.empty() || name.empty())
                parse_fail(path, line_start, "malformed property line '" + line + "'");
            h.properties.emplace_back(type, name);
        } else if (word == "end_header") {
            break;
        } else {
            parse_fail(path, line_start, "unexpected header line '" + line + "'");
        }
    }
    if (!saw_format) parse_fail(path, line_start, "missing format line");
    if (h.vertex_count < 0) parse_fail(path, line_start, "missing vertex element");
    h.data_offset = in.tellg();
    return h;
}

}  // namespace

void write_ply(const std::string& path, const GaussianSet& set) {
    set.check_consistent();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    const auto names = gaussian_property_names();
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << set.size() << "\n";
    for (const auto& n : names) out << "property float " << n << "\n";
    out << "end_header\n";
    std::vector<float> row(names.size());
    for (int i = 0; i < set.size(); ++i) {
        float* r = row.data();
        for (int k = 0; k < 3; ++k) *r++ = set.centers[i][k];
        for (int k = 0; k < 3; ++k) *r++ = 0.f;  // normals, unused
        const float* sh = set.sh_at(i);
        for (int c = 0; c < 3; ++c) *r++ = sh[c];  // DC
        for (int c = 0; c < 3; ++c)
            for (int k = 1; k < kShCoeffCount; ++k) *r++ = sh[k * 3 + c];
        *r++ = set.opacity_logits[i];
        for (int k = 0; k < 3; ++k) *r++ = set.log_scales[i][k];
        for (int k = 0; k < 4; ++k) *r++ = set.rotations[i][k];
        out.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

GaussianSet read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    const PlyHeader h = parse_header(in, path);
    const auto names = gaussian_property_names();
    if (h.properties.size() != names.size()) {
        std::ostringstream msg;
        msg << "expected " << names.size() << " vertex properties, found " << h.properties.size();
        parse_fail(path, h.data_offset, msg.str());
    }
    for (size_t j = 0; j < names.size(); ++j) {
        if (h.properties[j].first != "float" || h.properties[j].second != names[j])
            parse_fail(path, h.data_offset,
                       "property " + std::to_string(j) + " is '" + h.properties[j].first + " " +
                           h.properties[j].second + "', expected 'float " + names[j] + "'");
    }
    GaussianSet set;
    set.resize(static_cast<int>(h.vertex_count));
    std::vector<float> row(names.size());
    for (int i = 0; i < set.size(); ++i) {
        const std::streamoff at = in.tellg();
        in.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
        if (!in) parse_fail(path, at, "truncated vertex data");
        const float* r = row.data();
        for (int k = 0; k < 3; ++k) set.centers[i][k] = *r++;
        r += 3;  // normals
        float* sh = set.sh_at(i);
        for (int c = 0; c < 3; ++c) sh[c] = *r++;
        for (int c = 0; c < 3; ++c)
            for (int k = 1; k < kShCoeffCount; ++k) sh[k * 3 + c] = *r++;
        set.opacity_logits[i] = *r++;
        for (int k = 0; k < 3; ++k) set.log_scales[i][k] = *r++;
        for (int k = 0; k < 4; ++k) set.rotations[i][k] = *r++;
    }
    return set;
}

void write_points_ply(const std::string& path, const std::vector<Vec3f>& points,
                      const std::vector<Vec3f>& colors) {
    if (points.size() != colors.size())
        throw std::invalid_argument("write_points_ply: point/color count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << points.size() << "\n";
    for (const char* n : {"x", "y", "z"}) out << "property float " << n << "\n";
    for (const char* n : {"red", "green", "blue"}) out << "property uchar " << n << "\n";
    out << "end_header\n";
    for (size_t i = 0; i < points.size(); ++i) {
        out.write(reinterpret_cast<const char*>(points[i].data()), 3 * sizeof(float));
        uint8_t rgb[3];
        for (int c = 0; c < 3; ++c) {
            const float v = std::round(colors[i][c] * 255.f);
            rgb[c] = static_cast<uint8_t>(std::min(255.f, std::max(0.f, v)));
        }
        out.write(reinterpret_cast<const char*>(rgb), 3);
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

PointCloud read_points_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    const PlyHeader h = parse_header(in, path);
    const bool bare = h.properties.size() == 3;
    const bool colored = h.properties.size() == 6;
    if (!bare && !colored)
        parse_fail(path, h.data_offset, "expected x,y,z or x,y,z,red,green,blue layout");
    const char* xyz[] = {"x", "y", "z"};
    for (int j = 0; j < 3; ++j)
        if (h.properties[j].first != "float" || h.properties[j].second != xyz[j])
            parse_fail(path, h.data_offset, "expected float x,y,z positions");
    if (colored) {
        const char* rgb[] = {"red", "green", "blue"};
        for (int j = 0; j < 3; ++j)
            if (h.properties[3 + j].first != "uchar" || h.properties[3 + j].second != rgb[j])
                parse_fail(path, h.data_offset, "expected uchar red,green,blue colors");
    }
    PointCloud pc;
    pc.points.resize(h.vertex_count);
    pc.colors.resize(h.vertex_count, Vec3f::Constant(0.5f));
    for (long i = 0; i < h.vertex_count; ++i) {
        const std::streamoff at = in.tellg();
        in.read(reinterpret_cast<char*>(pc.points[i].data()), 3 * sizeof(float));
        if (colored) {
            uint8_t rgb[3];
            in.read(reinterpret_cast<char*>(rgb), 3);
            for (int c = 0; c < 3; ++c) pc.colors[i][c] = rgb[c] / 255.f;
        }
        if (!in) parse_fail(path, at, "truncated vertex data");
    }
    return pc;
}

}  // namespace splat
