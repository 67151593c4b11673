#include "seqstrat/types.hpp"

#include <cmath>
#include <numeric>

#include "seqstrat/error.hpp"

namespace seqstrat {

void DatasetManifest::validate() const {
  const ScanMeta* prev = nullptr;
  for (const auto& scan : scans) {
    if (prev) {
      if (prev->sequence_id > scan.sequence_id ||
          (prev->sequence_id == scan.sequence_id && prev->frame_index >= scan.frame_index))
        fail("manifest scans out of order or duplicated at (", scan.sequence_id, ", ",
             scan.frame_index, ")");
    }
    prev = &scan;

    Count label_total = 0;
    for (const auto& [label, count] : scan.label_counts) {
      label_total += count;
      if (!label_dictionary.count(label))
        fail("scan (", scan.sequence_id, ", ", scan.frame_index, ") uses label ", label,
             " missing from the label dictionary");
    }
    if (label_total != scan.point_count)
      fail("scan (", scan.sequence_id, ", ", scan.frame_index, ") label counts sum to ",
           label_total, " but point_count is ", scan.point_count);

    if (scan.intensity_histogram.size() != intensity_bins)
      fail("scan (", scan.sequence_id, ", ", scan.frame_index, ") histogram has ",
           scan.intensity_histogram.size(), " bins, expected ", intensity_bins);
    const Count hist_total = std::accumulate(scan.intensity_histogram.begin(),
                                             scan.intensity_histogram.end(), Count{0});
    if (hist_total != scan.point_count)
      fail("scan (", scan.sequence_id, ", ", scan.frame_index, ") histogram sums to ",
           hist_total, " but point_count is ", scan.point_count);

    if (!std::isfinite(scan.position.x) || !std::isfinite(scan.position.y) ||
        !std::isfinite(scan.position.z))
      fail("scan (", scan.sequence_id, ", ", scan.frame_index, ") has a non-finite position");
  }
}

LabelMap LabelMap::identity(const std::map<LabelId, std::string>& dictionary) {
  LabelMap map;
  map.target_dictionary = dictionary;
  for (const auto& [id, name] : dictionary) map.entries[id] = id;
  return map;
}

LabelMap LabelMap::then(const LabelMap& second) const {
  LabelMap composed;
  composed.target_dictionary = second.target_dictionary;
  for (const auto& [source, mid] : entries) {
    const auto it = second.entries.find(mid);
    if (it == second.entries.end())
      fail("label map composition: intermediate label ", mid, " has no mapping");
    composed.entries[source] = it->second;
  }
  return composed;
}

void LabelMap::validate() const {
  for (const auto& [source, target] : entries)
    if (!target_dictionary.count(target))
      fail("label map target ", target, " (from source ", source,
           ") missing from the target dictionary");
}

void SubsetSpec::validate_ratios() const {
  require(!ratios.empty(), "subset spec has no ratios");
  double total = 0.0;
  for (double r : ratios) {
    require(r >= 0.0 && std::isfinite(r), "subset ratios must be finite and nonnegative");
    total += r;
  }
  require(std::abs(total - 1.0) <= 1e-9, "subset ratios sum to ", total, ", expected 1");
  if (!names.empty())
    require(names.size() == ratios.size(), "subset names count (", names.size(),
            ") does not match ratios count (", ratios.size(), ")");
}

void SubsetSpec::validate() const {
  validate_ratios();
  require(ratios.size() >= 2, "at least 2 subsets required, got ", ratios.size());
}

void LearningCurve::validate() const {
  require(!points.empty(), "learning curve is empty");
  for (std::size_t i = 1; i < points.size(); ++i)
    require(points[i - 1].first < points[i].first,
            "learning curve labeled_count must be strictly increasing");
}

std::string to_string(StratifyMode mode) {
  return mode == StratifyMode::MSSS ? "msss" : "msegsss";
}

std::string to_string(TieBreak rule) {
  return rule == TieBreak::UniformDistance ? "uniform" : "sequence";
}

std::string to_string(MassMode mode) {
  return mode == MassMode::Containment ? "containment" : "points";
}

TieBreak tie_break_from_string(const std::string& name) {
  if (name == "uniform") return TieBreak::UniformDistance;
  if (name == "sequence") return TieBreak::LeastPresentSequence;
  fail("unknown tie-break rule '", name, "' (expected uniform or sequence)");
}

MassMode mass_mode_from_string(const std::string& name) {
  if (name == "containment") return MassMode::Containment;
  if (name == "points") return MassMode::PointMass;
  fail("unknown mass mode '", name, "' (expected containment or points)");
}

} // namespace seqstrat
