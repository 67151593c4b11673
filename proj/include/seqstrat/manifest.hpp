#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqstrat/parsers.hpp"
#include "seqstrat/types.hpp"

namespace seqstrat {

// Aggregates one scan's points and labels into counts and an intensity
// histogram with `bins` uniform bins over [0,1], right-open except the last.
ScanMeta build_scan_meta(std::span<const PointRecord> points,
                         std::span<const LabelId> labels, const Vec3& pose,
                         std::string sequence_id, std::uint32_t frame_index,
                         std::uint32_t bins);

// Remaps every scan's label counts; counts mapping to the same target are
// summed. Total over the source dictionary is required.
DatasetManifest apply_label_map(const DatasetManifest& manifest, const LabelMap& map);

// Two-column text: "<source_id> <target_id>" per mapping line, plus optional
// "name <target_id> <text>" lines for the target dictionary. '#' comments.
LabelMap read_label_map(const std::string& path);

struct IngestOptions {
  std::optional<LabelMap> label_map;
  double intensity_scale = 1.0;
  std::uint32_t bins = 256;
  unsigned jobs = 0; // 0 = all cores
};

// Walks <root>/<sequence>/{poses.txt, labels/NNNNNN.label, velodyne/NNNNNN.bin}
// and builds the manifest. Sequences are processed in parallel; scan order is
// (sequence, frame) regardless of the job count.
DatasetManifest ingest_dataset(const std::string& root, const IngestOptions& options = {});

} // namespace seqstrat
