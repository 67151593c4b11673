#include "seqstrat/stratify.hpp"

#include <algorithm>
#include <limits>

#include "seqstrat/error.hpp"
#include "seqstrat/rng.hpp"

namespace seqstrat {

namespace {

// Mass a segment contributes to a label in the configured mode.
double segment_mass(const Segment& segment, LabelId label, StratifyMode mode) {
  const auto it = segment.label_counts.find(label);
  const Count count = it == segment.label_counts.end() ? 0 : it->second;
  if (mode == StratifyMode::MSSS) return count > 0 ? 1.0 : 0.0;
  return static_cast<double>(count);
}

} // namespace

SplitAssignment random_split(const std::vector<Segment>& segments,
                             const SubsetSpec& spec, std::uint64_t seed) {
  spec.validate_ratios();
  const std::size_t k = spec.subset_count();
  require(segments.size() >= k, "cannot split ", segments.size(), " segments into ", k,
          " subsets");

  std::vector<std::uint32_t> ids;
  ids.reserve(segments.size());
  for (const Segment& segment : segments) ids.push_back(segment.segment_id);
  std::sort(ids.begin(), ids.end());

  Rng rng(seed);
  rng.shuffle(ids);

  SplitAssignment assignment;
  assignment.spec = spec;
  assignment.seed = seed;
  assignment.method = "random";
  assignment.rng = Rng::kAlgorithm;
  assignment.subsets.resize(k);

  // Cut points at floor(|D| * cumulative ratio); the last cut is forced to |D|
  // so ratio rounding never drops a segment. The epsilon absorbs accumulation
  // error when the cumulative ratio is an exact decimal (0.7 + 0.1).
  const double n = static_cast<double>(ids.size());
  double cumulative = 0.0;
  std::size_t begin = 0;
  for (std::size_t j = 0; j < k; ++j) {
    cumulative += spec.ratios[j];
    std::size_t end = j + 1 == k
                          ? ids.size()
                          : static_cast<std::size_t>(std::floor(n * cumulative + 1e-9));
    end = std::min(end, ids.size());
    for (std::size_t i = begin; i < end; ++i) assignment.subsets[j].push_back(ids[i]);
    begin = std::max(begin, end);
  }
  return assignment;
}

LabelId tie_break_labels(const std::vector<LabelId>& candidates,
                         const std::vector<const Segment*>& remaining,
                         TieBreak rule, StratifyMode mode,
                         const std::map<std::string, std::size_t>& assigned_per_sequence) {
  require(!candidates.empty(), "tie_break_labels called with no candidates");
  std::vector<LabelId> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() == 1) return sorted.front();

  if (rule == TieBreak::UniformDistance) {
    // Furthest (L1) from uniform of the label's normalized per-segment masses.
    const double n = static_cast<double>(remaining.size());
    require(n > 0, "tie_break_labels: no remaining segments");
    LabelId best = sorted.front();
    double best_distance = -1.0;
    for (const LabelId label : sorted) {
      double total = 0.0;
      for (const Segment* segment : remaining) total += segment_mass(*segment, label, mode);
      require(total > 0.0, "tie_break_labels: candidate label ", label,
              " has no remaining mass");
      double distance = 0.0;
      for (const Segment* segment : remaining)
        distance += std::abs(segment_mass(*segment, label, mode) / total - 1.0 / n);
      if (distance > best_distance) {
        best_distance = distance;
        best = label;
      }
    }
    return best;
  }

  // LeastPresentSequence: label carried by the sequence with the fewest
  // segments already assigned.
  LabelId best = sorted.front();
  std::size_t best_score = std::numeric_limits<std::size_t>::max();
  for (const LabelId label : sorted) {
    std::size_t score = std::numeric_limits<std::size_t>::max();
    for (const Segment* segment : remaining) {
      if (segment_mass(*segment, label, mode) <= 0.0) continue;
      const auto it = assigned_per_sequence.find(segment->sequence_id);
      const std::size_t assigned = it == assigned_per_sequence.end() ? 0 : it->second;
      score = std::min(score, assigned);
    }
    if (score < best_score) {
      best_score = score;
      best = label;
    }
  }
  return best;
}

SplitAssignment iterative_stratification(const std::vector<Segment>& segments,
                                         const SubsetSpec& spec, std::uint64_t seed,
                                         StratifyMode mode, TieBreak tie_break,
                                         StratDiagnostics* diagnostics) {
  spec.validate_ratios();
  require(!segments.empty(), "cannot stratify zero segments");
  const std::size_t k = spec.subset_count();
  const std::size_t n = segments.size();

  for (const Segment& segment : segments) {
    if (mode == StratifyMode::MSSS)
      require(!segment.label_presence().empty(), "segment ", segment.segment_id,
              " has no labels; MSSS requires nonempty label presence");
    else
      require(segment.point_count > 0, "segment ", segment.segment_id,
              " has no points; MSegSSS requires nonzero point counts");
  }

  // Work on pointers sorted by segment id so seeds only influence the explicit
  // random choices.
  std::vector<const Segment*> ordered(n);
  for (std::size_t i = 0; i < n; ++i) ordered[i] = &segments[i];
  std::sort(ordered.begin(), ordered.end(),
            [](const Segment* a, const Segment* b) { return a->segment_id < b->segment_id; });

  std::map<LabelId, std::vector<std::size_t>> label_members; // label -> ordered indexes
  std::map<LabelId, double> remaining_mass;                  // |D^i| in mode units
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [label, count] : ordered[i]->label_counts) {
      if (count == 0) continue;
      label_members[label].push_back(i);
      remaining_mass[label] += segment_mass(*ordered[i], label, mode);
    }

  // Desired sizes: c_j in segments, c^i_j in the mode's mass units.
  std::vector<double> subset_desired(k);
  for (std::size_t j = 0; j < k; ++j)
    subset_desired[j] = static_cast<double>(n) * spec.ratios[j];
  std::map<LabelId, std::vector<double>> label_desired;
  for (const auto& [label, mass] : remaining_mass) {
    auto& desired = label_desired[label];
    desired.resize(k);
    for (std::size_t j = 0; j < k; ++j) desired[j] = mass * spec.ratios[j];
  }

  if (diagnostics) {
    diagnostics->initial_subset_desired = subset_desired;
    diagnostics->initial_label_desired = label_desired;
    diagnostics->initial_label_mass = remaining_mass;
  }

  SplitAssignment assignment;
  assignment.spec = spec;
  assignment.seed = seed;
  assignment.method = to_string(mode);
  assignment.tie_break = to_string(tie_break);
  assignment.rng = Rng::kAlgorithm;
  assignment.subsets.resize(k);

  Rng rng(seed);
  std::vector<bool> assigned(n, false);
  std::map<std::string, std::size_t> assigned_per_sequence;
  std::size_t remaining_count = n;
  std::vector<std::size_t> argmax; // scratch

  while (remaining_count > 0) {
    // Take the label with the least remaining mass among labels that still
    // have any.
    double min_mass = std::numeric_limits<double>::infinity();
    for (const auto& [label, mass] : remaining_mass)
      if (mass > 0.0 && mass < min_mass) min_mass = mass;
    require(std::isfinite(min_mass),
            "stratification stalled: segments remain but no label has mass");

    std::vector<LabelId> candidates;
    for (const auto& [label, mass] : remaining_mass)
      if (mass == min_mass) candidates.push_back(label);

    LabelId chosen = candidates.front();
    if (candidates.size() > 1) {
      std::vector<const Segment*> remaining_segments;
      remaining_segments.reserve(remaining_count);
      for (std::size_t i = 0; i < n; ++i)
        if (!assigned[i]) remaining_segments.push_back(ordered[i]);
      chosen = tie_break_labels(candidates, remaining_segments, tie_break, mode,
                                assigned_per_sequence);
    }

    // Stratify every remaining segment carrying the chosen label. Heaviest
    // first so large segments land while the desired counters can absorb
    // them; small ones then fill the remainder. With binary masses (MSSS)
    // this is plain ascending-id order.
    std::vector<std::size_t> members = label_members.at(chosen);
    std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return segment_mass(*ordered[a], chosen, mode) >
             segment_mass(*ordered[b], chosen, mode);
    });
    const auto& desired_for_label = label_desired.at(chosen);
    for (const std::size_t i : members) {
      if (assigned[i]) continue;
      const Segment& segment = *ordered[i];

      argmax.clear();
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        if (desired_for_label[j] > best) {
          best = desired_for_label[j];
          argmax.assign(1, j);
        } else if (desired_for_label[j] == best) {
          argmax.push_back(j);
        }
      }
      if (argmax.size() > 1) {
        // Prefer the subset with the largest overall desired size.
        double best_subset = -std::numeric_limits<double>::infinity();
        std::vector<std::size_t> narrowed;
        for (const std::size_t j : argmax) {
          if (subset_desired[j] > best_subset) {
            best_subset = subset_desired[j];
            narrowed.assign(1, j);
          } else if (subset_desired[j] == best_subset) {
            narrowed.push_back(j);
          }
        }
        argmax = std::move(narrowed);
      }
      const std::size_t target =
          argmax.size() == 1 ? argmax.front()
                             : argmax[static_cast<std::size_t>(rng.below(argmax.size()))];

      assignment.subsets[target].push_back(segment.segment_id);
      assigned[i] = true;
      --remaining_count;
      ++assigned_per_sequence[segment.sequence_id];

      for (const auto& [label, count] : segment.label_counts) {
        if (count == 0) continue;
        const double mass = segment_mass(segment, label, mode);
        remaining_mass[label] -= mass;
        label_desired[label][target] -= mass;
      }
      subset_desired[target] -= 1.0;
    }
  }

  if (diagnostics) {
    diagnostics->final_subset_desired = subset_desired;
    diagnostics->final_label_desired = label_desired;
  }
  return assignment;
}

SplitAssignment stratify_with_method(const std::vector<Segment>& segments,
                                     const SubsetSpec& spec, std::uint64_t seed,
                                     const std::string& method, TieBreak tie_break) {
  if (method == "random") return random_split(segments, spec, seed);
  if (method == "msss")
    return iterative_stratification(segments, spec, seed, StratifyMode::MSSS, tie_break);
  if (method == "msegsss")
    return iterative_stratification(segments, spec, seed, StratifyMode::MSegSSS, tie_break);
  fail("unknown split method '", method, "' (expected random, msss or msegsss)");
}

} // namespace seqstrat
