#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "resurf/scene.hpp"

namespace resurf {

/// 8-bit RGB PNG from float values in [0, 1] (clamped, rounded).
void write_png_rgb(const std::filesystem::path& path, int width, int height, std::span<const float> rgb);
/// Normal map encoded as (n + 1) / 2.
void write_png_normals(const std::filesystem::path& path, int width, int height, std::span<const float> normals);

struct PngImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb;
};
PngImage read_png_rgb(const std::filesystem::path& path);

/// Plain-text camera: size and intrinsics line, then the 3x4 world-to-camera matrix row by row.
std::string format_camera(const Camera& cam);
Camera parse_camera(const std::string& text);
void write_camera(const std::filesystem::path& path, const Camera& cam);
Camera read_camera(const std::filesystem::path& path);

}  // namespace resurf
