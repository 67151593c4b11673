#pragma once

#include <map>
#include <string>
#include <vector>

#include "seqstrat/types.hpp"

namespace testutil {

using seqstrat::Count;
using seqstrat::LabelId;
using seqstrat::Segment;

// One-scan segment with the given label counts; histogram defaults to all
// mass in bin 0 of 4 bins so intensity metrics stay well-defined.
inline Segment seg(std::uint32_t id, std::map<LabelId, Count> counts,
                   std::string sequence = "00",
                   std::vector<Count> hist = {}) {
  Segment segment;
  segment.segment_id = id;
  segment.sequence_id = std::move(sequence);
  segment.first_frame = id;
  segment.last_frame = id;
  segment.frames = {id};
  segment.label_counts = std::move(counts);
  for (const auto& [label, count] : segment.label_counts)
    segment.point_count += count;
  if (hist.empty())
    segment.intensity_histogram = {segment.point_count, 0, 0, 0};
  else
    segment.intensity_histogram = std::move(hist);
  return segment;
}

inline seqstrat::SubsetSpec spec(std::vector<double> ratios,
                                 std::vector<std::string> names = {}) {
  seqstrat::SubsetSpec s;
  s.ratios = std::move(ratios);
  s.names = std::move(names);
  return s;
}

} // namespace testutil
