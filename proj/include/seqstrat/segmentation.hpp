#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqstrat/types.hpp"

namespace seqstrat {

struct Granularity {
  bool by_sequence = false;
  std::uint32_t size = 0; // scans per segment when !by_sequence

  static Granularity sequence() { return {true, 0}; }
  static Granularity scans(std::uint32_t n) { return {false, n}; }
  // Accepts a positive integer or "sequence" (case-insensitive).
  static Granularity parse(const std::string& text);

  std::string str() const;

  friend bool operator==(const Granularity&, const Granularity&) = default;
};

enum class RemainderPolicy {
  Keep,  // trailing short segment stays on its own
  Merge, // trailing remainder merges into the previous segment
};

// Partitions each sequence left-to-right into runs of exactly `granularity`
// scans (plus one remainder), or one segment per sequence. Segment ids are
// assigned in (sequence, first-frame) order.
std::vector<Segment> segment_manifest(const DatasetManifest& manifest,
                                      Granularity granularity,
                                      RemainderPolicy remainder = RemainderPolicy::Keep);

} // namespace seqstrat
