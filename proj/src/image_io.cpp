#include "resurf/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <sstream>

#include "resurf/binary_io.hpp"

namespace resurf {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

void write_png_bytes(const std::filesystem::path& path, int width, int height, const std::vector<uint8_t>& rgb) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng failed writing " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y)
        png_write_row(png, rgb.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width) * 3);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

uint8_t quantize(double v) { return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

void write_png_rgb(const std::filesystem::path& path, int width, int height, std::span<const float> rgb) {
    std::vector<uint8_t> bytes(rgb.size());
    for (std::size_t i = 0; i < rgb.size(); ++i) bytes[i] = quantize(rgb[i]);
    write_png_bytes(path, width, height, bytes);
}

void write_png_normals(const std::filesystem::path& path, int width, int height, std::span<const float> normals) {
    std::vector<uint8_t> bytes(normals.size());
    for (std::size_t i = 0; i < normals.size(); ++i) bytes[i] = quantize(0.5 * (normals[i] + 1.0));
    write_png_bytes(path, width, height, bytes);
}

PngImage read_png_rgb(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) throw FormatError("cannot read PNG " + path.string());
    image.format = PNG_FORMAT_RGB;
    PngImage out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.rgb.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
        png_image_free(&image);
        throw FormatError("cannot decode PNG " + path.string());
    }
    return out;
}

std::string format_camera(const Camera& cam) {
    char buf[256];
    std::string s;
    std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g %.17g\n", cam.width, cam.height, cam.focal, cam.cx, cam.cy);
    s += buf;
    for (int r = 0; r < 3; ++r) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", cam.rotation(r, 0), cam.rotation(r, 1),
                      cam.rotation(r, 2), cam.translation[r]);
        s += buf;
    }
    return s;
}

Camera parse_camera(const std::string& text) {
    std::istringstream in(text);
    Camera cam;
    in >> cam.width >> cam.height >> cam.focal >> cam.cx >> cam.cy;
    for (int r = 0; r < 3; ++r) in >> cam.rotation(r, 0) >> cam.rotation(r, 1) >> cam.rotation(r, 2) >> cam.translation[r];
    if (!in) throw FormatError("malformed camera text");
    cam.validate();
    return cam;
}

void write_camera(const std::filesystem::path& path, const Camera& cam) { write_text(path, format_camera(cam)); }

Camera read_camera(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse_camera(std::string(bytes.begin(), bytes.end()));
}

}  // namespace resurf
