#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "seqstrat/error.hpp"
#include "seqstrat/metrics.hpp"
#include "seqstrat/rng.hpp"

using namespace seqstrat;
using testutil::seg;

namespace {

SplitAssignment assign(std::vector<std::vector<std::uint32_t>> subsets,
                       std::vector<double> ratios = {}) {
  SplitAssignment assignment;
  assignment.subsets = std::move(subsets);
  if (ratios.empty()) ratios.assign(assignment.subsets.size(),
                                    1.0 / assignment.subsets.size());
  assignment.spec.ratios = std::move(ratios);
  return assignment;
}

// The six-segment hand instance: s1{A}..s3{A}, s4{B}, s5{B}, s6{A,B} with
// S1 = {s1, s4, s6}, S2 = {s2, s3, s5}.
struct HandInstance {
  std::vector<Segment> segments;
  SplitAssignment assignment;
};

HandInstance hand_instance() {
  HandInstance inst;
  inst.segments = {seg(1, {{'A', 1}}), seg(2, {{'A', 1}}), seg(3, {{'A', 1}}),
                   seg(4, {{'B', 1}}), seg(5, {{'B', 1}}),
                   seg(6, {{'A', 1}, {'B', 1}})};
  inst.assignment = assign({{1, 4, 6}, {2, 3, 5}});
  return inst;
}

struct RandomInstance {
  std::vector<Segment> segments;
  SplitAssignment assignment;
};

// True when some subset is saturated by a label (S_j^i == |S_j| in either mass
// mode). The odds ratio is undefined there; only the epsilon guard keeps
// it finite, at a magnitude where no absolute tolerance is meaningful.
bool has_saturated_subset(const RandomInstance& inst) {
  for (const auto& subset : inst.assignment.subsets) {
    std::map<LabelId, Count> containment, points;
    Count size = 0, point_size = 0;
    for (const std::uint32_t id : subset) {
      const Segment& segment = inst.segments[id];
      ++size;
      point_size += segment.point_count;
      for (const auto& [label, count] : segment.label_counts) {
        containment[label] += 1;
        points[label] += count;
      }
    }
    for (const auto& [label, c] : containment)
      if (c == size || points[label] == point_size) return true;
  }
  return false;
}

RandomInstance random_instance(Rng& rng, std::size_t max_segments = 20,
                               std::size_t max_labels = 8) {
  for (;;) {
    RandomInstance inst;
    const std::size_t n = 4 + rng.below(max_segments - 3);
    const std::size_t labels = 2 + rng.below(max_labels - 1);
    const std::size_t k = 2 + rng.below(2);
    inst.assignment.subsets.resize(k);
    inst.assignment.spec.ratios.assign(k, 1.0 / static_cast<double>(k));
    for (std::uint32_t s = 0; s < n; ++s) {
      std::map<LabelId, Count> counts;
      while (counts.empty())
        for (std::size_t l = 0; l < labels; ++l)
          if (rng.below(2)) counts[static_cast<LabelId>(l)] = 1 + rng.below(40);
      std::vector<Count> hist(8, 0);
      Count total = 0;
      for (const auto& [label, count] : counts) total += count;
      for (Count p = 0; p < total; ++p) ++hist[rng.below(8)];
      inst.segments.push_back(seg(s, counts, rng.below(2) ? "00" : "01", hist));
      inst.assignment.subsets[s % k].push_back(s); // round-robin keeps subsets nonempty
    }
    if (!has_saturated_subset(inst)) return inst;
  }
}

testutil::OddsInstance to_oracle(const RandomInstance& inst, MassMode mode,
                                 std::size_t labels) {
  testutil::OddsInstance oracle;
  oracle.subsets = static_cast<int>(inst.assignment.subsets.size());
  oracle.subset_of.assign(inst.segments.size(), 0);
  for (std::size_t j = 0; j < inst.assignment.subsets.size(); ++j)
    for (const std::uint32_t id : inst.assignment.subsets[j])
      oracle.subset_of[id] = static_cast<int>(j);
  for (const Segment& segment : inst.segments) {
    std::vector<long double> mass(labels, 0.0L);
    long double size = mode == MassMode::Containment
                           ? 1.0L
                           : static_cast<long double>(segment.point_count);
    for (const auto& [label, count] : segment.label_counts)
      mass[label] = mode == MassMode::Containment ? (count > 0 ? 1.0L : 0.0L)
                                                  : static_cast<long double>(count);
    oracle.label_mass.push_back(std::move(mass));
    oracle.size.push_back(size);
  }
  return oracle;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("LD on the six-segment hand instance is 0.375") {
  const auto inst = hand_instance();
  CHECK(label_distribution(inst.assignment, inst.segments, MassMode::Containment) ==
        doctest::Approx(0.375).epsilon(1e-9));
}

TEST_CASE("IFWLD on the six-segment hand instance is 1.5") {
  const auto inst = hand_instance();
  CHECK(ifw_label_distribution(inst.assignment, inst.segments, MassMode::Containment) ==
        doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("perfectly stratified splits score zero LD and IFWLD") {
  const std::vector<Segment> segments = {seg(0, {{'A', 1}}), seg(1, {{'B', 1}}),
                                         seg(2, {{'A', 1}}), seg(3, {{'B', 1}})};
  const auto assignment = assign({{0, 1}, {2, 3}});
  // zero up to the odds-denominator epsilon
  CHECK(label_distribution(assignment, segments) <= 5e-9);
  CHECK(ifw_label_distribution(assignment, segments) <= 5e-9);

  // ...and an imbalanced reassignment scores strictly positive.
  const auto skewed = assign({{0, 2}, {1, 3}});
  CHECK(label_distribution(skewed, segments) > 0.1);
  CHECK(ifw_label_distribution(skewed, segments) > 0.1);
}

TEST_CASE("rare-label perturbations outweigh common-label ones in IFWLD") {
  // Two 8-segment instances with the same containment deviation pattern, once
  // on the rare label, once on the common one.
  std::vector<Segment> segments;
  for (std::uint32_t i = 0; i < 6; ++i) segments.push_back(seg(i, {{'C', 1}}));
  segments.push_back(seg(6, {{'R', 1}}));
  segments.push_back(seg(7, {{'R', 1}}));

  const auto rare_skew = assign({{0, 1, 2, 6, 7}, {3, 4, 5}});   // both rares in S1
  const auto rare_even = assign({{0, 1, 2, 6}, {3, 4, 5, 7}});   // rares balanced
  CHECK(ifw_label_distribution(rare_skew, segments) >
        ifw_label_distribution(rare_even, segments));
}

TEST_CASE("LD agrees with the independent direct-formula evaluator") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(rng);
    for (const auto mode : {MassMode::Containment, MassMode::PointMass}) {
      const auto oracle = to_oracle(inst, mode, 8);
      const double expected =
          static_cast<double>(testutil::oracle_label_distribution(oracle));
      const double actual = label_distribution(inst.assignment, inst.segments, mode);
      CHECK(std::abs(actual - expected) <= 1e-9);
      const double expected_ifw =
          static_cast<double>(testutil::oracle_ifw_label_distribution(oracle));
      const double actual_ifw =
          ifw_label_distribution(inst.assignment, inst.segments, mode);
      CHECK(std::abs(actual_ifw - expected_ifw) <= 1e-9 * (1.0 + expected_ifw));
    }
  }
}

TEST_CASE("the odds epsilon guard keeps saturated subsets finite") {
  // Label 1 fills subset 0 completely: the odds ratio is undefined and the guard takes
  // over, so only relative agreement with the oracle is meaningful.
  const std::vector<Segment> segments = {seg(0, {{1, 4}}), seg(1, {{1, 4}}),
                                         seg(2, {{1, 2}, {2, 2}}), seg(3, {{2, 4}})};
  const auto assignment = assign({{0, 1}, {2, 3}});
  const double value = label_distribution(assignment, segments, MassMode::Containment);
  CHECK(std::isfinite(value));
  CHECK(value > 1e8); // epsilon denominator dominates

  testutil::OddsInstance oracle;
  oracle.subsets = 2;
  oracle.subset_of = {0, 0, 1, 1};
  oracle.label_mass = {{1, 0}, {1, 0}, {1, 1}, {0, 1}};
  oracle.size = {1, 1, 1, 1};
  const double expected = static_cast<double>(testutil::oracle_label_distribution(oracle));
  CHECK(value == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("ED examples") {
  std::vector<double> even = {0.5, 0.5};
  CHECK(examples_distribution(assign({{0, 1, 2}, {3, 4, 5}}, even), testutil::spec(even)) ==
        doctest::Approx(0.0));
  CHECK(examples_distribution(assign({{0, 1, 2, 3}, {4, 5}}, even), testutil::spec(even)) ==
        doctest::Approx(1.0));
  std::vector<double> three = {0.7, 0.1, 0.2};
  CHECK(examples_distribution(
            assign({{0, 1, 2, 3, 4, 5, 6}, {7}, {8, 9}}, three), testutil::spec(three)) ==
        doctest::Approx(0.0));
}

TEST_CASE("ED depends on the ratio-to-subset pairing") {
  const auto assignment = assign({{0, 1, 2, 3}, {4}}, {0.8, 0.2});
  CHECK(examples_distribution(assignment, testutil::spec({0.8, 0.2})) ==
        doctest::Approx(0.0));
  CHECK(examples_distribution(assignment, testutil::spec({0.2, 0.8})) ==
        doctest::Approx(3.0));
}

TEST_CASE("KL closed form for p=(.5,.5) against q=(.75,.25)") {
  const std::vector<double> p = {50, 50};
  const std::vector<double> q = {150, 50};
  const double expected = 0.5 * std::log(2.0 / 3.0) + 0.5 * std::log(2.0);
  CHECK(kl_from_histograms(p, q, 0.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(kl_from_histograms(p, p, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("KL of a subset that mirrors the dataset is zero") {
  const std::vector<Segment> segments = {seg(0, {{1, 30}, {2, 10}}),
                                         seg(1, {{1, 30}, {2, 10}})};
  CHECK(kl_divergence(assign({{0}, {1}}), segments, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("KL is nonnegative on randomized instances") {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = random_instance(rng);
    CHECK(kl_divergence(inst.assignment, inst.segments) >= -1e-15);
    CHECK(kl_divergence(inst.assignment, inst.segments, 0.5) >= -1e-15);
  }
}

TEST_CASE("W1 basics") {
  const std::vector<double> a = {1, 0, 0, 0};
  CHECK(wasserstein_1d(std::span<const double>(a), std::span<const double>(a), 0.25) ==
        doctest::Approx(0.0));

  // Unit mass translated by k bins moves mass k * width.
  for (std::size_t k_shift : {1u, 2u, 3u}) {
    std::vector<double> p(4, 0.0), q(4, 0.0);
    p[0] = 1.0;
    q[k_shift] = 1.0;
    CHECK(wasserstein_1d(std::span<const double>(p), std::span<const double>(q), 0.5) ==
          doctest::Approx(0.5 * k_shift).epsilon(1e-12));
  }

  const std::vector<double> u01 = {1, 1, 0};
  const std::vector<double> u12 = {0, 1, 1};
  CHECK(wasserstein_1d(std::span<const double>(u01), std::span<const double>(u12), 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("W1 errors") {
  const std::vector<double> a = {1, 2};
  const std::vector<double> b = {1, 2, 3};
  const std::vector<double> zero = {0, 0};
  CHECK_THROWS_AS(wasserstein_1d(std::span<const double>(a), std::span<const double>(b), 1.0),
                  error);
  CHECK_THROWS_AS(
      wasserstein_1d(std::span<const double>(a), std::span<const double>(zero), 1.0), error);
}

TEST_CASE("W1 is a metric on random triples") {
  Rng rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(8), q(8), r(8);
    for (std::size_t b = 0; b < 8; ++b) {
      p[b] = rng.below(20);
      q[b] = rng.below(20);
      r[b] = rng.below(20);
    }
    p[0] += 1; q[0] += 1; r[0] += 1; // keep totals positive
    const auto sp = std::span<const double>(p);
    const auto sq = std::span<const double>(q);
    const auto sr = std::span<const double>(r);
    const double pq = wasserstein_1d(sp, sq, 0.125);
    const double qp = wasserstein_1d(sq, sp, 0.125);
    const double pr = wasserstein_1d(sp, sr, 0.125);
    const double rq = wasserstein_1d(sr, sq, 0.125);
    CHECK(pq == doctest::Approx(qp).epsilon(1e-12));
    CHECK(wasserstein_1d(sp, sp, 0.125) == doctest::Approx(0.0));
    CHECK(pq <= pr + rq + 1e-12);
  }
}

TEST_CASE("IDS is zero for identical subset distributions and equals W1 at k=2") {
  const std::vector<Count> shape_a = {8, 4, 0, 0};
  const std::vector<Count> shape_b = {0, 0, 4, 8};
  const std::vector<Segment> segments = {
      seg(0, {{1, 12}}, "00", std::vector<Count>(shape_a)),
      seg(1, {{1, 12}}, "00", std::vector<Count>(shape_a)),
      seg(2, {{1, 12}}, "00", std::vector<Count>(shape_b))};

  CHECK(intensity_drift_score(assign({{0}, {1}}), segments) == doctest::Approx(0.0));

  const auto mixed = assign({{0}, {2}});
  std::vector<double> a(shape_a.begin(), shape_a.end());
  std::vector<double> b(shape_b.begin(), shape_b.end());
  const double expected =
      wasserstein_1d(std::span<const double>(a), std::span<const double>(b), 0.25);
  CHECK(intensity_drift_score(mixed, segments) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected > 0.0);

  // Against-dataset mode is also zero when every subset matches the union.
  CHECK(intensity_drift_score(assign({{0}, {1}}), segments, IdsMode::VsDataset) ==
        doctest::Approx(0.0));
}

TEST_CASE("labeling efficiency") {
  LearningCurve baseline{{{1000, 0.2}, {10000, 0.5}, {20000, 0.6}}};
  LearningCurve other{{{1000, 0.2}, {8000, 0.5}, {20000, 0.65}}};
  CHECK(labeling_efficiency(baseline, baseline, 0.5) == doctest::Approx(1.0));
  CHECK(labeling_efficiency(baseline, other, 0.5) == doctest::Approx(1.25));

  LearningCurve low{{{1000, 0.1}, {2000, 0.2}}};
  CHECK_THROWS_WITH_AS(labeling_efficiency(baseline, low, 0.5),
                       doctest::Contains("other"), error);
  CHECK_THROWS_WITH_AS(labeling_efficiency(low, baseline, 0.5),
                       doctest::Contains("baseline"), error);
}

TEST_CASE("labeling efficiency interpolates piecewise-linearly") {
  LearningCurve baseline{{{0, 0.0}, {100, 0.4}}};
  LearningCurve other{{{0, 0.0}, {100, 0.8}}};
  // baseline reaches 0.2 at 50 labels, other at 25.
  CHECK(labeling_efficiency(baseline, other, 0.2) == doctest::Approx(2.0));
}

TEST_CASE("metrics are invariant to subset relabeling (ED with paired ratios)") {
  Rng rng(53);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_instance(rng);
    auto permuted = inst.assignment;
    std::reverse(permuted.subsets.begin(), permuted.subsets.end());
    std::reverse(permuted.spec.ratios.begin(), permuted.spec.ratios.end());

    for (const auto mode : {MassMode::Containment, MassMode::PointMass}) {
      CHECK(label_distribution(inst.assignment, inst.segments, mode) ==
            doctest::Approx(label_distribution(permuted, inst.segments, mode))
                .epsilon(1e-12));
      CHECK(ifw_label_distribution(inst.assignment, inst.segments, mode) ==
            doctest::Approx(ifw_label_distribution(permuted, inst.segments, mode))
                .epsilon(1e-12));
    }
    CHECK(kl_divergence(inst.assignment, inst.segments) ==
          doctest::Approx(kl_divergence(permuted, inst.segments)).epsilon(1e-12));
    CHECK(intensity_drift_score(inst.assignment, inst.segments) ==
          doctest::Approx(intensity_drift_score(permuted, inst.segments)).epsilon(1e-12));
    CHECK(examples_distribution(inst.assignment, inst.assignment.spec) ==
          doctest::Approx(examples_distribution(permuted, permuted.spec)).epsilon(1e-12));
  }
}

TEST_CASE("scaling all masses by an integer leaves point metrics unchanged") {
  Rng rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_instance(rng);
    const Count factor = 2 + rng.below(9);
    auto scaled = inst;
    for (auto& segment : scaled.segments) {
      for (auto& [label, count] : segment.label_counts) count *= factor;
      for (auto& bin : segment.intensity_histogram) bin *= factor;
      segment.point_count *= factor;
    }
    CHECK(label_distribution(scaled.assignment, scaled.segments, MassMode::PointMass) ==
          doctest::Approx(
              label_distribution(inst.assignment, inst.segments, MassMode::PointMass))
              .epsilon(1e-9));
    CHECK(kl_divergence(scaled.assignment, scaled.segments, 0.0) ==
          doctest::Approx(kl_divergence(inst.assignment, inst.segments, 0.0))
              .epsilon(1e-12));
    CHECK(intensity_drift_score(scaled.assignment, scaled.segments) ==
          doctest::Approx(intensity_drift_score(inst.assignment, inst.segments))
              .epsilon(1e-12));
  }
}

TEST_CASE("error paths: empty subsets, unknown ids, no labels") {
  const std::vector<Segment> segments = {seg(0, {{1, 1}}), seg(1, {{1, 1}})};
  CHECK_THROWS_WITH_AS(label_distribution(assign({{0, 1}, {}}), segments),
                       doctest::Contains("empty"), error);
  CHECK_THROWS_WITH_AS(label_distribution(assign({{0}, {7}}), segments),
                       doctest::Contains("segment 7"), error);

  const std::vector<Segment> unlabeled = {seg(0, {}), seg(1, {})};
  CHECK_THROWS_AS(label_distribution(assign({{0}, {1}}), unlabeled), error);
}

TEST_CASE("evaluate_split assembles the full report") {
  const auto inst = hand_instance();
  auto assignment = inst.assignment;
  assignment.spec.ratios = {0.5, 0.5};
  assignment.method = "msss";
  assignment.seed = 7;
  assignment.granularity = "1";
  const auto report = evaluate_split(assignment, inst.segments);
  CHECK(report.ld == doctest::Approx(0.375).epsilon(1e-9));
  CHECK(report.ifwld == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(report.ed == doctest::Approx(0.0));
  CHECK(report.method == "msss");
  CHECK(report.seed == 7);
  CHECK(report.granularity == "1");
  double ratio_total = 0.0;
  for (const double r : report.obtained_ratios) ratio_total += r;
  CHECK(ratio_total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.obtained_ratios[0] == doctest::Approx(0.5));
}

} // TEST_SUITE
