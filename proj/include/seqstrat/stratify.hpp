#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seqstrat/types.hpp"

namespace seqstrat {

// Seeded shuffle, then cuts at cumulative floor(|D| * sum(r)) boundaries.
SplitAssignment random_split(const std::vector<Segment>& segments,
                             const SubsetSpec& spec, std::uint64_t seed);

// Filled when a caller wants to audit the counter dynamics of a run.
struct StratDiagnostics {
  std::vector<double> initial_subset_desired; // c_j at start
  std::vector<double> final_subset_desired;   // c_j at end
  std::map<LabelId, std::vector<double>> initial_label_desired; // c^i_j
  std::map<LabelId, std::vector<double>> final_label_desired;
  std::map<LabelId, double> initial_label_mass; // |D^i| in mode units
};

// Iterative stratification: repeatedly takes the label with the least
// remaining mass (MSSS: count of remaining segments containing it; MSegSSS:
// remaining points of it) and assigns each remaining segment carrying that
// label to the subset with the largest desired amount for the label, then the
// largest desired size, then a seeded random choice. Label ties go through
// `tie_break`; all residual ties resolve to the smallest id.
SplitAssignment iterative_stratification(const std::vector<Segment>& segments,
                                         const SubsetSpec& spec, std::uint64_t seed,
                                         StratifyMode mode,
                                         TieBreak tie_break = TieBreak::UniformDistance,
                                         StratDiagnostics* diagnostics = nullptr);

// Resolves a tie among candidate labels of equal remaining mass.
//   UniformDistance: label whose normalized per-segment mass vector over the
//     remaining segments is L1-furthest from uniform.
//   LeastPresentSequence: label carried by the sequence with the fewest
//     segments already assigned (`assigned_per_sequence`).
// Residual ties return the smallest label id.
LabelId tie_break_labels(const std::vector<LabelId>& candidates,
                         const std::vector<const Segment*>& remaining,
                         TieBreak rule, StratifyMode mode,
                         const std::map<std::string, std::size_t>& assigned_per_sequence);

SplitAssignment stratify_with_method(const std::vector<Segment>& segments,
                                     const SubsetSpec& spec, std::uint64_t seed,
                                     const std::string& method, TieBreak tie_break);

} // namespace seqstrat
