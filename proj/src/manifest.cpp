#include "seqstrat/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "seqstrat/error.hpp"
#include "seqstrat/parallel.hpp"

namespace fs = std::filesystem;

namespace seqstrat {

ScanMeta build_scan_meta(std::span<const PointRecord> points,
                         std::span<const LabelId> labels, const Vec3& pose,
                         std::string sequence_id, std::uint32_t frame_index,
                         std::uint32_t bins) {
  require(bins > 0, "histogram bin count must be positive");
  if (points.size() != labels.size())
    fail("scan (", sequence_id, ", ", frame_index, "): ", points.size(),
         " points but ", labels.size(), " labels");

  ScanMeta meta;
  meta.sequence_id = std::move(sequence_id);
  meta.frame_index = frame_index;
  meta.position = pose;
  meta.point_count = points.size();
  meta.intensity_histogram.assign(bins, 0);

  for (std::size_t i = 0; i < points.size(); ++i) {
    ++meta.label_counts[labels[i]];
    // Right-open bins over [0,1]; the last bin also takes intensity == 1.
    auto bin = static_cast<std::size_t>(points[i].intensity * bins);
    if (bin >= bins) bin = bins - 1;
    ++meta.intensity_histogram[bin];
  }
  return meta;
}

DatasetManifest apply_label_map(const DatasetManifest& manifest, const LabelMap& map) {
  map.validate();

  std::vector<LabelId> missing;
  for (const auto& [id, name] : manifest.label_dictionary)
    if (!map.entries.count(id)) missing.push_back(id);
  if (!missing.empty()) {
    std::ostringstream ids;
    for (std::size_t i = 0; i < missing.size(); ++i)
      ids << (i ? ", " : "") << missing[i];
    fail("label map is missing source ids: ", ids.str());
  }

  DatasetManifest mapped;
  mapped.intensity_bins = manifest.intensity_bins;
  mapped.label_dictionary = map.target_dictionary;
  mapped.scans.reserve(manifest.scans.size());
  for (const auto& scan : manifest.scans) {
    ScanMeta out = scan;
    out.label_counts.clear();
    for (const auto& [label, count] : scan.label_counts) {
      const auto it = map.entries.find(label);
      if (it == map.entries.end())
        fail("scan (", scan.sequence_id, ", ", scan.frame_index, ") uses label ", label,
             " which the label map does not cover");
      out.label_counts[it->second] += count;
    }
    mapped.scans.push_back(std::move(out));
  }
  return mapped;
}

LabelMap read_label_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open label map ", path);

  LabelMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;

    std::istringstream fields(line);
    std::string first;
    fields >> first;
    if (first == "name") {
      LabelId id = 0;
      std::string name;
      if (!(fields >> id) || !(fields >> std::ws) || !std::getline(fields, name) || name.empty())
        fail("label map ", path, " line ", line_no, ": expected 'name <id> <text>'");
      map.target_dictionary[id] = name;
    } else {
      LabelId source = 0, target = 0;
      std::istringstream pair(line);
      std::string rest;
      if (!(pair >> source >> target))
        fail("label map ", path, " line ", line_no, ": expected '<source_id> <target_id>'");
      if (pair >> rest)
        fail("label map ", path, " line ", line_no, ": trailing data");
      map.entries[source] = target;
    }
  }

  // Unnamed targets get placeholder names so the dictionary stays total.
  for (const auto& [source, target] : map.entries)
    if (!map.target_dictionary.count(target))
      map.target_dictionary[target] = "label_" + std::to_string(target);
  map.validate();
  return map;
}

namespace {

std::string frame_name(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

std::vector<ScanMeta> ingest_sequence(const fs::path& dir, const IngestOptions& options) {
  const std::string sequence_id = dir.filename().string();
  const fs::path pose_path = dir / "poses.txt";
  if (!fs::exists(pose_path)) fail("missing ", pose_path.string());

  std::ifstream pose_in(pose_path);
  if (!pose_in) fail("cannot open ", pose_path.string());
  std::vector<Vec3> poses;
  try {
    poses = parse_pose_file(pose_in);
  } catch (const error& e) {
    fail(pose_path.string(), ": ", e.what());
  }

  const fs::path cloud_dir = dir / "velodyne";
  if (!fs::is_directory(cloud_dir)) fail("missing directory ", cloud_dir.string());

  // Scans are the point-cloud files; each needs a label file and a pose line.
  std::vector<std::uint32_t> frames;
  for (const auto& entry : fs::directory_iterator(cloud_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".bin") continue;
    const std::string stem = entry.path().stem().string();
    if (stem.size() != 6 || stem.find_first_not_of("0123456789") != std::string::npos)
      fail("unexpected scan file name ", entry.path().string());
    frames.push_back(static_cast<std::uint32_t>(std::stoul(stem)));
  }
  std::sort(frames.begin(), frames.end());

  std::vector<ScanMeta> scans;
  scans.reserve(frames.size());
  for (const std::uint32_t frame : frames) {
    const std::string name = frame_name(frame);
    const fs::path cloud_path = cloud_dir / (name + ".bin");
    const fs::path label_path = dir / "labels" / (name + ".label");
    if (!fs::exists(label_path)) fail("missing ", label_path.string());
    if (frame >= poses.size())
      fail(pose_path.string(), ": no pose line for frame ", frame, " (", poses.size(),
           " lines)");

    PointFile cloud;
    std::vector<LabelId> labels;
    try {
      cloud = parse_point_file(read_binary_file(cloud_path.string()), options.intensity_scale);
      labels = parse_label_file(read_binary_file(label_path.string()));
    } catch (const error& e) {
      fail(sequence_id, "/", name, ": ", e.what());
    }
    scans.push_back(build_scan_meta(cloud.points, labels, poses[frame], sequence_id, frame,
                                    options.bins));
  }
  return scans;
}

} // namespace

DatasetManifest ingest_dataset(const std::string& root, const IngestOptions& options) {
  require(options.bins > 0, "histogram bin count must be positive");
  if (!fs::is_directory(root)) fail("dataset root ", root, " is not a directory");

  std::vector<fs::path> sequence_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) sequence_dirs.push_back(entry.path());
  std::sort(sequence_dirs.begin(), sequence_dirs.end());
  if (sequence_dirs.empty()) fail("dataset root ", root, " has no sequence directories");

  std::vector<std::vector<ScanMeta>> per_sequence(sequence_dirs.size());
  parallel_for(sequence_dirs.size(), options.jobs, [&](std::size_t i) {
    per_sequence[i] = ingest_sequence(sequence_dirs[i], options);
  });

  DatasetManifest manifest;
  manifest.intensity_bins = options.bins;
  for (auto& scans : per_sequence)
    for (auto& scan : scans) manifest.scans.push_back(std::move(scan));

  std::set<LabelId> observed;
  for (const auto& scan : manifest.scans)
    for (const auto& [label, count] : scan.label_counts) observed.insert(label);
  for (const LabelId label : observed)
    manifest.label_dictionary[label] = "label_" + std::to_string(label);

  if (options.label_map) manifest = apply_label_map(manifest, *options.label_map);
  manifest.validate();
  return manifest;
}

} // namespace seqstrat
