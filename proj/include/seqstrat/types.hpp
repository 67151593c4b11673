#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace seqstrat {

using LabelId = std::uint32_t;
using Count = std::uint64_t;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double distance(const Vec3& a, const Vec3& b, bool ground_plane = false) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = ground_plane ? 0.0 : a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Per-scan metadata: identity, ego-pose translation, per-label point counts
// and the intensity histogram over normalized [0,1] values.
struct ScanMeta {
  std::string sequence_id;
  std::uint32_t frame_index = 0;
  Vec3 position;
  std::map<LabelId, Count> label_counts;
  std::vector<Count> intensity_histogram;
  Count point_count = 0;

  friend bool operator==(const ScanMeta&, const ScanMeta&) = default;
};

struct DatasetManifest {
  std::vector<ScanMeta> scans; // ordered by (sequence_id, frame_index)
  std::map<LabelId, std::string> label_dictionary;
  std::uint32_t intensity_bins = 256;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;

  // Throws on invariant violations: duplicate (seq, frame), non-increasing
  // frames, labels missing from the dictionary, count/histogram mismatches.
  void validate() const;
};

struct LabelMap {
  std::map<LabelId, LabelId> entries;            // source id -> target id
  std::map<LabelId, std::string> target_dictionary;

  static LabelMap identity(const std::map<LabelId, std::string>& dictionary);

  // this, then second: source -> second(this(source)).
  LabelMap then(const LabelMap& second) const;

  void validate() const;
};

// Contiguous run of scans within one sequence; the unit stratification assigns.
struct Segment {
  std::uint32_t segment_id = 0;
  std::string sequence_id;
  std::uint32_t first_frame = 0;
  std::uint32_t last_frame = 0;
  std::vector<std::uint32_t> frames; // member scan frame indices, ascending
  std::map<LabelId, Count> label_counts;
  std::vector<Count> intensity_histogram;
  Count point_count = 0;

  std::size_t scan_count() const { return frames.size(); }

  std::set<LabelId> label_presence() const {
    std::set<LabelId> present;
    for (const auto& [label, count] : label_counts)
      if (count > 0) present.insert(label);
    return present;
  }

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct SubsetSpec {
  std::vector<double> ratios;      // nonnegative, sum to 1 within 1e-9
  std::vector<std::string> names;  // optional; same length as ratios when set

  std::size_t subset_count() const { return ratios.size(); }

  // Enforces the full contract (k >= 2). Single-subset specs are accepted by
  // the stratifier itself but rejected at the CLI boundary.
  void validate() const;
  void validate_ratios() const;
};

enum class StratifyMode { MSSS, MSegSSS };
enum class TieBreak { UniformDistance, LeastPresentSequence };
enum class MassMode { Containment, PointMass };
enum class IdsMode { PairwiseMean, VsDataset };

std::string to_string(StratifyMode mode);
std::string to_string(TieBreak rule);
std::string to_string(MassMode mode);
TieBreak tie_break_from_string(const std::string& name);
MassMode mass_mode_from_string(const std::string& name);

struct SplitAssignment {
  std::vector<std::vector<std::uint32_t>> subsets; // segment ids per subset, assignment order
  SubsetSpec spec;
  std::string granularity; // "sequence" or decimal scan count
  std::uint64_t seed = 0;
  std::string method;      // random | msss | msegsss
  std::string tie_break;   // uniform | sequence | "" (random method)
  std::string rng;         // PRNG algorithm name, for provenance

  friend bool operator==(const SplitAssignment& a, const SplitAssignment& b) {
    return a.subsets == b.subsets && a.spec.ratios == b.spec.ratios &&
           a.spec.names == b.spec.names && a.granularity == b.granularity &&
           a.seed == b.seed && a.method == b.method && a.tie_break == b.tie_break &&
           a.rng == b.rng;
  }
};

struct SplitReport {
  double ld = 0.0;
  double ifwld = 0.0;
  double ed = 0.0;
  double kl = 0.0;
  double ids = 0.0;
  std::vector<double> obtained_ratios; // scan-count share per subset
  std::string method;
  std::uint64_t seed = 0;
  std::string granularity;
};

// External mIoU-vs-labels curve; input to labeling-efficiency computation.
struct LearningCurve {
  std::vector<std::pair<std::uint64_t, double>> points; // (labeled_count, miou)

  void validate() const;
};

} // namespace seqstrat
