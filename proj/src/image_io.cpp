#include "splat/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace splat {

namespace {

uint8_t to_byte(float v) {
    const float s = std::round(v * 255.f);
    return static_cast<uint8_t>(std::min(255.f, std::max(0.f, s)));
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

std::string lower_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    return ext;
}

}  // namespace

Imagef read_image(const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == "pfm") return read_pfm(path);
    if (ext == "ppm") return read_ppm(path);
    if (ext == "png") return read_png(path);
    fail(path, "unsupported image extension (use .pfm, .ppm or .png)");
}

void write_image(const std::string& path, const Imagef& img) {
    const std::string ext = lower_ext(path);
    if (ext == "pfm") return write_pfm(path, img);
    if (ext == "ppm") return write_ppm(path, img);
    if (ext == "png") return write_png(path, img);
    fail(path, "unsupported image extension (use .pfm, .ppm or .png)");
}

Imagef read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || w < 1 || h < 1) fail(path, "not a binary P6 PPM");
    if (maxval != 255) fail(path, "only maxval 255 supported");
    in.get();  // single whitespace after maxval
    std::vector<uint8_t> raw(static_cast<size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), raw.size());
    if (!in) fail(path, "truncated pixel data");
    Imagef img(w, h, 3);
    for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.f;
    return img;
}

void write_ppm(const std::string& path, const Imagef& img) {
    if (img.channels != 3) fail(path, "PPM writer needs 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> raw(img.size());
    for (size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(img.data[i]);
    out.write(reinterpret_cast<const char*>(raw.data()), raw.size());
    if (!out) fail(path, "write failed");
}

// PFM: "PF\n<w> <h>\n<scale>\n" + rows bottom-to-top, 3 floats per pixel.
// Negative scale = little-endian, which is all we emit or accept.
Imagef read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    std::string magic;
    int w = 0, h = 0;
    float scale = 0;
    in >> magic >> w >> h >> scale;
    if (magic != "PF" || w < 1 || h < 1) fail(path, "not a color PFM");
    if (scale >= 0) fail(path, "big-endian PFM not supported");
    in.get();
    Imagef img(w, h, 3);
    std::vector<float> row(static_cast<size_t>(w) * 3);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
        if (!in) fail(path, "truncated pixel data");
        std::memcpy(&img.at(y, 0, 0), row.data(), row.size() * sizeof(float));
    }
    return img;
}

void write_pfm(const std::string& path, const Imagef& img) {
    if (img.channels != 3) fail(path, "PFM writer needs 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
    for (int y = img.height - 1; y >= 0; --y)
        out.write(reinterpret_cast<const char*>(&img.at(y, 0, 0)),
                  static_cast<std::streamsize>(img.width) * 3 * sizeof(float));
    if (!out) fail(path, "write failed");
}

Imagef read_png(const std::string& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"),
                                                       &std::fclose);
    if (!fp) fail(path, "cannot open");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "libpng read error");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    if (png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "PNG did not decode to RGB");
    }
    std::vector<uint8_t> raw(static_cast<size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    Imagef img(w, h, 3);
    for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.f;
    return img;
}

void write_png(const std::string& path, const Imagef& img) {
    if (img.channels != 3) fail(path, "PNG writer needs 3 channels");
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "wb"),
                                                       &std::fclose);
    if (!fp) fail(path, "cannot open for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "libpng write error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<uint8_t> raw(img.size());
    for (size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(img.data[i]);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = raw.data() + static_cast<size_t>(y) * img.width * 3;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace splat
