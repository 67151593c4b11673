#pragma once

#include <span>
#include <vector>

#include "seqstrat/types.hpp"

namespace seqstrat {

// Mean absolute odds-ratio deviation between each subset's label distribution
// and the dataset's, averaged over labels. Containment counts segments that
// contain a label; PointMass counts its points. The odds denominator carries
// an epsilon guard for the saturated case.
double label_distribution(const SplitAssignment& assignment,
                          const std::vector<Segment>& segments,
                          MassMode mode = MassMode::Containment);

// Same inner term, unaveraged over labels and weighted by |D| / D_i so rare
// labels dominate. D_i is measured in the same mode as the inner term.
double ifw_label_distribution(const SplitAssignment& assignment,
                              const std::vector<Segment>& segments,
                              MassMode mode = MassMode::Containment);

// Mean absolute deviation of subset segment counts from |D| * r_j.
double examples_distribution(const SplitAssignment& assignment, const SubsetSpec& spec);

// Mean over subsets of KL(subset point-mass label histogram || dataset's),
// natural log, with `smoothing_points` added per class before normalization.
double kl_divergence(const SplitAssignment& assignment,
                     const std::vector<Segment>& segments,
                     double smoothing_points = 1.0);

// KL(P||Q) in nats for two count histograms over the same classes, after
// `smoothing_points` is added per class and both are normalized.
double kl_from_histograms(std::span<const double> p_counts,
                          std::span<const double> q_counts,
                          double smoothing_points = 1.0);

// 1-D Wasserstein distance between two histograms sharing bin edges:
// sum over bins of |CDF_p - CDF_q| * bin_width after normalization.
double wasserstein_1d(std::span<const double> hist_p, std::span<const double> hist_q,
                      double bin_width);
double wasserstein_1d(std::span<const Count> hist_p, std::span<const Count> hist_q,
                      double bin_width);

// Intensity drift: mean W1 between subset intensity histograms, either over
// all unordered subset pairs or each subset against the whole dataset.
double intensity_drift_score(const SplitAssignment& assignment,
                             const std::vector<Segment>& segments,
                             IdsMode mode = IdsMode::PairwiseMean);

// Labels the baseline needs over labels the other method needs to reach
// `target_miou` (piecewise-linear interpolation); > 1 means the other method
// reaches the target with fewer labels.
double labeling_efficiency(const LearningCurve& baseline, const LearningCurve& other,
                           double target_miou);

struct EvaluateOptions {
  MassMode mass_mode = MassMode::Containment;
  IdsMode ids_mode = IdsMode::PairwiseMean;
  double kl_smoothing_points = 1.0;
};

// Computes the full report (LD, IFWLD, ED, KL, IDS, obtained scan-count
// ratios) for one split.
SplitReport evaluate_split(const SplitAssignment& assignment,
                           const std::vector<Segment>& segments,
                           const EvaluateOptions& options = {});

} // namespace seqstrat
