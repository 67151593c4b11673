#include "seqstrat/segmentation.hpp"

#include <algorithm>
#include <cctype>

#include "seqstrat/error.hpp"

namespace seqstrat {

Granularity Granularity::parse(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "sequence") return sequence();
  try {
    std::size_t used = 0;
    const unsigned long value = std::stoul(lower, &used);
    if (used != lower.size() || value == 0) throw error("");
    return scans(static_cast<std::uint32_t>(value));
  } catch (...) {
    fail("granularity must be a positive integer or 'sequence', got '", text, "'");
  }
}

std::string Granularity::str() const {
  return by_sequence ? "sequence" : std::to_string(size);
}

namespace {

Segment make_segment(const DatasetManifest& manifest, std::size_t begin, std::size_t end) {
  Segment segment;
  const ScanMeta& first = manifest.scans[begin];
  segment.sequence_id = first.sequence_id;
  segment.first_frame = first.frame_index;
  segment.last_frame = manifest.scans[end - 1].frame_index;
  segment.intensity_histogram.assign(manifest.intensity_bins, 0);
  for (std::size_t i = begin; i < end; ++i) {
    const ScanMeta& scan = manifest.scans[i];
    segment.frames.push_back(scan.frame_index);
    segment.point_count += scan.point_count;
    for (const auto& [label, count] : scan.label_counts)
      segment.label_counts[label] += count;
    for (std::size_t b = 0; b < scan.intensity_histogram.size(); ++b)
      segment.intensity_histogram[b] += scan.intensity_histogram[b];
  }
  return segment;
}

void merge_into(Segment& base, const Segment& tail) {
  base.last_frame = tail.last_frame;
  base.frames.insert(base.frames.end(), tail.frames.begin(), tail.frames.end());
  base.point_count += tail.point_count;
  for (const auto& [label, count] : tail.label_counts) base.label_counts[label] += count;
  for (std::size_t b = 0; b < tail.intensity_histogram.size(); ++b)
    base.intensity_histogram[b] += tail.intensity_histogram[b];
}

} // namespace

std::vector<Segment> segment_manifest(const DatasetManifest& manifest,
                                      Granularity granularity, RemainderPolicy remainder) {
  require(!manifest.scans.empty(), "cannot segment an empty manifest");
  require(granularity.by_sequence || granularity.size > 0,
          "granularity must be positive");

  std::vector<Segment> segments;
  std::size_t seq_begin = 0;
  while (seq_begin < manifest.scans.size()) {
    std::size_t seq_end = seq_begin;
    while (seq_end < manifest.scans.size() &&
           manifest.scans[seq_end].sequence_id == manifest.scans[seq_begin].sequence_id)
      ++seq_end;

    if (granularity.by_sequence) {
      segments.push_back(make_segment(manifest, seq_begin, seq_end));
    } else {
      const std::size_t g = granularity.size;
      std::size_t first_of_sequence = segments.size();
      for (std::size_t begin = seq_begin; begin < seq_end; begin += g)
        segments.push_back(make_segment(manifest, begin, std::min(begin + g, seq_end)));
      if (remainder == RemainderPolicy::Merge && segments.size() > first_of_sequence + 1 &&
          segments.back().scan_count() < g) {
        Segment tail = std::move(segments.back());
        segments.pop_back();
        merge_into(segments.back(), tail);
      }
    }
    seq_begin = seq_end;
  }

  for (std::size_t i = 0; i < segments.size(); ++i)
    segments[i].segment_id = static_cast<std::uint32_t>(i);
  return segments;
}

} // namespace seqstrat
