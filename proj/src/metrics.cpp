#include "seqstrat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "seqstrat/error.hpp"

namespace seqstrat {

namespace {

constexpr double kOddsEpsilon = 1e-9; // guards the |S_j| == |S_j^i| degenerate case

double odds(double have, double total) { return have / (total - have + kOddsEpsilon); }

using SegmentLookup = std::unordered_map<std::uint32_t, const Segment*>;

SegmentLookup build_lookup(const std::vector<Segment>& segments) {
  SegmentLookup lookup;
  lookup.reserve(segments.size());
  for (const Segment& segment : segments) {
    if (!lookup.emplace(segment.segment_id, &segment).second)
      fail("duplicate segment id ", segment.segment_id, " in segment table");
  }
  return lookup;
}

const Segment& resolve(const SegmentLookup& lookup, std::uint32_t id) {
  const auto it = lookup.find(id);
  if (it == lookup.end())
    fail("split references segment ", id, " which is not in the segment table");
  return *it->second;
}

double mass_of(const Segment& segment, LabelId label, MassMode mode) {
  const auto it = segment.label_counts.find(label);
  const Count count = it == segment.label_counts.end() ? 0 : it->second;
  if (mode == MassMode::Containment) return count > 0 ? 1.0 : 0.0;
  return static_cast<double>(count);
}

double size_of(const Segment& segment, MassMode mode) {
  return mode == MassMode::Containment ? 1.0 : static_cast<double>(segment.point_count);
}

struct MassProfile {
  std::map<LabelId, double> dataset_label;            // D^i
  std::vector<std::map<LabelId, double>> subset_label; // S_j^i
  double dataset_size = 0.0;                          // |D|
  std::vector<double> subset_size;                    // |S_j|
};

MassProfile build_profile(const SplitAssignment& assignment,
                          const std::vector<Segment>& segments, MassMode mode) {
  const SegmentLookup lookup = build_lookup(segments);
  MassProfile profile;
  profile.subset_label.resize(assignment.subsets.size());
  profile.subset_size.resize(assignment.subsets.size(), 0.0);
  for (std::size_t j = 0; j < assignment.subsets.size(); ++j) {
    if (assignment.subsets[j].empty()) fail("subset ", j, " is empty");
    for (const std::uint32_t id : assignment.subsets[j]) {
      const Segment& segment = resolve(lookup, id);
      profile.subset_size[j] += size_of(segment, mode);
      profile.dataset_size += size_of(segment, mode);
      for (const auto& [label, count] : segment.label_counts) {
        if (count == 0) continue;
        const double mass = mass_of(segment, label, mode);
        profile.subset_label[j][label] += mass;
        profile.dataset_label[label] += mass;
      }
    }
  }
  return profile;
}

// Mean over subsets of |odds(S_j^i) - odds(D^i)| for one label.
double label_odds_deviation(const MassProfile& profile, LabelId label) {
  const double k = static_cast<double>(profile.subset_size.size());
  const double dataset_odds = odds(profile.dataset_label.at(label), profile.dataset_size);
  double total = 0.0;
  for (std::size_t j = 0; j < profile.subset_size.size(); ++j) {
    const auto it = profile.subset_label[j].find(label);
    const double have = it == profile.subset_label[j].end() ? 0.0 : it->second;
    total += std::abs(odds(have, profile.subset_size[j]) - dataset_odds);
  }
  return total / k;
}

} // namespace

double label_distribution(const SplitAssignment& assignment,
                          const std::vector<Segment>& segments, MassMode mode) {
  const MassProfile profile = build_profile(assignment, segments, mode);
  require(!profile.dataset_label.empty(), "label distribution undefined: no labels present");
  double total = 0.0;
  for (const auto& [label, mass] : profile.dataset_label)
    total += label_odds_deviation(profile, label);
  return total / static_cast<double>(profile.dataset_label.size());
}

double ifw_label_distribution(const SplitAssignment& assignment,
                              const std::vector<Segment>& segments, MassMode mode) {
  const MassProfile profile = build_profile(assignment, segments, mode);
  require(!profile.dataset_label.empty(), "label distribution undefined: no labels present");
  double total = 0.0;
  for (const auto& [label, mass] : profile.dataset_label) {
    if (mass <= 0.0) fail("label ", label, " has zero mass; IFWLD is undefined");
    total += profile.dataset_size / mass * label_odds_deviation(profile, label);
  }
  return total;
}

double examples_distribution(const SplitAssignment& assignment, const SubsetSpec& spec) {
  spec.validate_ratios();
  require(assignment.subsets.size() == spec.subset_count(),
          "assignment has ", assignment.subsets.size(), " subsets but spec has ",
          spec.subset_count());
  std::size_t total_segments = 0;
  for (const auto& subset : assignment.subsets) total_segments += subset.size();

  double deviation = 0.0;
  for (std::size_t j = 0; j < spec.subset_count(); ++j) {
    const double desired = static_cast<double>(total_segments) * spec.ratios[j];
    deviation += std::abs(static_cast<double>(assignment.subsets[j].size()) - desired);
  }
  return deviation / static_cast<double>(spec.subset_count());
}

double kl_divergence(const SplitAssignment& assignment,
                     const std::vector<Segment>& segments, double smoothing_points) {
  require(smoothing_points >= 0.0, "smoothing must be nonnegative");
  const MassProfile profile = build_profile(assignment, segments, MassMode::PointMass);
  require(!profile.dataset_label.empty(), "KL divergence undefined: no labels present");

  const auto& labels = profile.dataset_label;
  const double class_count = static_cast<double>(labels.size());
  const double q_total = profile.dataset_size + smoothing_points * class_count;

  double total = 0.0;
  for (std::size_t j = 0; j < profile.subset_label.size(); ++j) {
    const double p_total = profile.subset_size[j] + smoothing_points * class_count;
    double divergence = 0.0;
    for (const auto& [label, dataset_mass] : labels) {
      const auto it = profile.subset_label[j].find(label);
      const double subset_mass = it == profile.subset_label[j].end() ? 0.0 : it->second;
      const double p = (subset_mass + smoothing_points) / p_total;
      const double q = (dataset_mass + smoothing_points) / q_total;
      if (p == 0.0) continue; // 0 * log(0/q) = 0; q > 0 since the dataset carries the label
      divergence += p * std::log(p / q);
    }
    total += divergence;
  }
  return total / static_cast<double>(profile.subset_label.size());
}

double kl_from_histograms(std::span<const double> p_counts,
                          std::span<const double> q_counts, double smoothing_points) {
  require(p_counts.size() == q_counts.size(), "histogram size mismatch: ", p_counts.size(),
          " vs ", q_counts.size());
  require(!p_counts.empty(), "histograms are empty");
  require(smoothing_points >= 0.0, "smoothing must be nonnegative");
  double p_total = 0.0, q_total = 0.0;
  for (const double v : p_counts) p_total += v;
  for (const double v : q_counts) q_total += v;
  p_total += smoothing_points * static_cast<double>(p_counts.size());
  q_total += smoothing_points * static_cast<double>(q_counts.size());
  require(p_total > 0.0 && q_total > 0.0, "histogram has zero total mass");

  double divergence = 0.0;
  for (std::size_t c = 0; c < p_counts.size(); ++c) {
    const double p = (p_counts[c] + smoothing_points) / p_total;
    const double q = (q_counts[c] + smoothing_points) / q_total;
    if (p == 0.0) continue; // 0 * log(0/q) = 0
    require(q > 0.0, "KL undefined: class ", c, " has q == 0 while p > 0");
    divergence += p * std::log(p / q);
  }
  return divergence;
}

namespace {

double wasserstein_impl(std::span<const double> hist_p, std::span<const double> hist_q,
                        double bin_width) {
  require(hist_p.size() == hist_q.size(), "histogram size mismatch: ", hist_p.size(),
          " vs ", hist_q.size());
  require(!hist_p.empty(), "histograms are empty");
  require(bin_width > 0.0, "bin width must be positive");

  double total_p = 0.0, total_q = 0.0;
  for (const double v : hist_p) total_p += v;
  for (const double v : hist_q) total_q += v;
  require(total_p > 0.0 && total_q > 0.0, "histogram has zero total mass");

  double cdf_p = 0.0, cdf_q = 0.0, distance = 0.0;
  for (std::size_t b = 0; b < hist_p.size(); ++b) {
    cdf_p += hist_p[b] / total_p;
    cdf_q += hist_q[b] / total_q;
    distance += std::abs(cdf_p - cdf_q) * bin_width;
  }
  return distance;
}

} // namespace

double wasserstein_1d(std::span<const double> hist_p, std::span<const double> hist_q,
                      double bin_width) {
  return wasserstein_impl(hist_p, hist_q, bin_width);
}

double wasserstein_1d(std::span<const Count> hist_p, std::span<const Count> hist_q,
                      double bin_width) {
  std::vector<double> p(hist_p.begin(), hist_p.end());
  std::vector<double> q(hist_q.begin(), hist_q.end());
  return wasserstein_impl(p, q, bin_width);
}

double intensity_drift_score(const SplitAssignment& assignment,
                             const std::vector<Segment>& segments, IdsMode mode) {
  const SegmentLookup lookup = build_lookup(segments);
  require(!segments.empty(), "no segments");
  const std::size_t bins = segments.front().intensity_histogram.size();
  require(bins > 0, "segments carry no intensity histogram");
  const double bin_width = 1.0 / static_cast<double>(bins);

  std::vector<std::vector<double>> subset_hist(assignment.subsets.size(),
                                               std::vector<double>(bins, 0.0));
  std::vector<double> dataset_hist(bins, 0.0);
  for (std::size_t j = 0; j < assignment.subsets.size(); ++j) {
    if (assignment.subsets[j].empty()) fail("subset ", j, " is empty");
    for (const std::uint32_t id : assignment.subsets[j]) {
      const Segment& segment = resolve(lookup, id);
      require(segment.intensity_histogram.size() == bins, "segment ", id,
              " histogram has ", segment.intensity_histogram.size(), " bins, expected ",
              bins);
      for (std::size_t b = 0; b < bins; ++b) {
        subset_hist[j][b] += static_cast<double>(segment.intensity_histogram[b]);
        dataset_hist[b] += static_cast<double>(segment.intensity_histogram[b]);
      }
    }
  }

  double total = 0.0;
  std::size_t pairs = 0;
  if (mode == IdsMode::PairwiseMean) {
    for (std::size_t a = 0; a < subset_hist.size(); ++a)
      for (std::size_t b = a + 1; b < subset_hist.size(); ++b) {
        total += wasserstein_1d(std::span<const double>(subset_hist[a]),
                                std::span<const double>(subset_hist[b]), bin_width);
        ++pairs;
      }
    require(pairs > 0, "intensity drift needs at least 2 subsets");
  } else {
    for (const auto& hist : subset_hist) {
      total += wasserstein_1d(std::span<const double>(hist),
                              std::span<const double>(dataset_hist), bin_width);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

namespace {

double labels_to_reach(const LearningCurve& curve, double target, const char* which) {
  curve.validate();
  const auto& points = curve.points;
  if (points.front().second >= target) return static_cast<double>(points.front().first);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double y0 = points[i - 1].second;
    const double y1 = points[i].second;
    if (y0 < target && y1 >= target) {
      const double x0 = static_cast<double>(points[i - 1].first);
      const double x1 = static_cast<double>(points[i].first);
      return x0 + (target - y0) * (x1 - x0) / (y1 - y0);
    }
  }
  fail("the ", which, " curve never reaches mIoU ", target);
}

} // namespace

double labeling_efficiency(const LearningCurve& baseline, const LearningCurve& other,
                           double target_miou) {
  const double n_baseline = labels_to_reach(baseline, target_miou, "baseline");
  const double n_other = labels_to_reach(other, target_miou, "other");
  require(n_other > 0.0, "other curve reaches the target with zero labels");
  return n_baseline / n_other;
}

SplitReport evaluate_split(const SplitAssignment& assignment,
                           const std::vector<Segment>& segments,
                           const EvaluateOptions& options) {
  SplitReport report;
  report.ld = label_distribution(assignment, segments, options.mass_mode);
  report.ifwld = ifw_label_distribution(assignment, segments, options.mass_mode);
  report.ed = examples_distribution(assignment, assignment.spec);
  report.kl = kl_divergence(assignment, segments, options.kl_smoothing_points);
  report.ids = intensity_drift_score(assignment, segments, options.ids_mode);

  const SegmentLookup lookup = build_lookup(segments);
  std::size_t total_scans = 0;
  std::vector<std::size_t> subset_scans(assignment.subsets.size(), 0);
  for (std::size_t j = 0; j < assignment.subsets.size(); ++j)
    for (const std::uint32_t id : assignment.subsets[j]) {
      subset_scans[j] += resolve(lookup, id).scan_count();
      total_scans += resolve(lookup, id).scan_count();
    }
  require(total_scans > 0, "split covers zero scans");
  for (const std::size_t scans : subset_scans)
    report.obtained_ratios.push_back(static_cast<double>(scans) /
                                     static_cast<double>(total_scans));

  report.method = assignment.method;
  report.seed = assignment.seed;
  report.granularity = assignment.granularity;
  return report;
}

} // namespace seqstrat
