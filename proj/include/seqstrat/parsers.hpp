#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "seqstrat/types.hpp"

namespace seqstrat {

// KITTI odometry poses: 12 whitespace-separated decimals per non-empty line,
// the row-major upper 3x4 of a rigid transform. Returns the translation
// column (elements 4, 8, 12); the rotation is validated but discarded.
std::vector<Vec3> parse_pose_file(std::istream& in);
std::vector<Vec3> parse_pose_text(const std::string& text);

// Per-point labels: little-endian u32 per point, semantic id in the low 16
// bits, instance id in the high 16 bits (discarded).
std::vector<LabelId> parse_label_file(std::span<const std::uint8_t> bytes);

struct PointRecord {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float intensity = 0.0f; // clamped to [0,1]
};

struct PointFile {
  std::vector<PointRecord> points;
  std::size_t clamped_count = 0; // intensities clipped into [0,1] on read
};

// Point clouds: little-endian float32 quadruples (x, y, z, intensity).
// `intensity_scale` is applied before clamping (e.g. 1/255 for 8-bit data).
PointFile parse_point_file(std::span<const std::uint8_t> bytes,
                           double intensity_scale = 1.0);

std::vector<std::uint8_t> read_binary_file(const std::string& path);

} // namespace seqstrat
