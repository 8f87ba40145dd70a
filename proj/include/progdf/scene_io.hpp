#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <span>
#include <string_view>
#include <vector>

#include "progdf/types.hpp"

namespace progdf {

inline constexpr int kSceneFormatVersion = 1;

// Text scene document:
//   {"version": 1, "background": [r,g,b],
//    "gaussians": [{"pos": [...], "scale": [...], "rot": [w,x,y,z],
//                   "opacity": o, "color": [...]}, ...]}
std::string encode_scene(const Scene& scene);
Scene decode_scene(std::string_view text);

// Binary sidecar: "PGDF", u32 version, u32 count, then 14 little-endian
// float32 per Gaussian (pos, scale, rot, opacity, color). The background is
// not stored and decodes as black.
std::vector<std::uint8_t> encode_scene_binary(const Scene& scene);
Scene decode_scene_binary(std::span<const std::uint8_t> bytes);

// {"version": 1, "count": N, "indices": [...]}
std::string encode_region(const RegionMask& mask);
RegionMask decode_region(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

Scene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const Scene& scene);
RegionMask load_region(const std::filesystem::path& path);
void save_region(const std::filesystem::path& path, const RegionMask& mask);

}  // namespace progdf
