#include "seqstrat/parsers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>

#include "seqstrat/error.hpp"

namespace seqstrat {

std::vector<Vec3> parse_pose_file(std::istream& in) {
  std::vector<Vec3> translations;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    std::istringstream fields(line);
    double values[12];
    for (int i = 0; i < 12; ++i) {
      if (!(fields >> values[i]))
        fail("pose file line ", line_no, ": expected 12 fields, failed at field ", i + 1);
      if (!std::isfinite(values[i]))
        fail("pose file line ", line_no, ": field ", i + 1, " is not finite");
    }
    std::string rest;
    if (fields >> rest)
      fail("pose file line ", line_no, ": trailing data after 12 fields");

    // Row-major 3x4: translation is the last column (elements 4, 8, 12).
    translations.push_back({values[3], values[7], values[11]});
  }
  return translations;
}

std::vector<Vec3> parse_pose_text(const std::string& text) {
  std::istringstream in(text);
  return parse_pose_file(in);
}

std::vector<LabelId> parse_label_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 4 != 0)
    fail("label file truncated: ", bytes.size(), " bytes is not a multiple of 4");
  std::vector<LabelId> labels;
  labels.reserve(bytes.size() / 4);
  for (std::size_t off = 0; off < bytes.size(); off += 4) {
    const std::uint32_t word = static_cast<std::uint32_t>(bytes[off]) |
                               static_cast<std::uint32_t>(bytes[off + 1]) << 8 |
                               static_cast<std::uint32_t>(bytes[off + 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[off + 3]) << 24;
    labels.push_back(word & 0xffffu); // instance id in the high half is dropped
  }
  return labels;
}

PointFile parse_point_file(std::span<const std::uint8_t> bytes, double intensity_scale) {
  if (bytes.size() % 16 != 0)
    fail("point file truncated: ", bytes.size(), " bytes is not a multiple of 16");

  PointFile result;
  result.points.reserve(bytes.size() / 16);
  for (std::size_t off = 0; off < bytes.size(); off += 16) {
    float raw[4];
    std::memcpy(raw, bytes.data() + off, 16); // little-endian floats
    const std::size_t index = off / 16;
    for (int c = 0; c < 4; ++c)
      if (!std::isfinite(raw[c]))
        fail("point record ", index, ": non-finite ",
             c < 3 ? "coordinate" : "intensity");

    PointRecord record{raw[0], raw[1], raw[2], 0.0f};
    const double scaled = static_cast<double>(raw[3]) * intensity_scale;
    if (scaled < 0.0 || scaled > 1.0) ++result.clamped_count;
    record.intensity = static_cast<float>(std::clamp(scaled, 0.0, 1.0));
    result.points.push_back(record);
  }
  return result;
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

} // namespace seqstrat
