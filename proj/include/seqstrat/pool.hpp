#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seqstrat/metrics.hpp"
#include "seqstrat/types.hpp"

namespace seqstrat {

struct PoolConfig {
  std::vector<std::string> methods; // subset of {random, msss, msegsss}
  std::uint32_t seeds_per_method = 1;
  std::uint64_t seed_base = 0;
  SubsetSpec spec;
  std::string granularity; // provenance only; segments arrive pre-built
  std::map<std::string, double> weights; // metric name -> weight
  TieBreak tie_break = TieBreak::UniformDistance;
  EvaluateOptions evaluate;

  static std::map<std::string, double> default_weights(); // ld/ifwld/ids/ed = 1

  void validate() const;
};

struct RankedEntry {
  SplitAssignment assignment;
  SplitReport report;
  double objective = 0.0;
};

struct RankedPool {
  std::vector<RankedEntry> entries; // ascending objective
  PoolConfig config;
  bool degenerate = false; // all generated splits identical
};

// Generates seeds_per_method splits per method (seeds base..base+N-1), scores
// each, min-max normalizes every weighted metric over the pool (a constant
// metric normalizes to 0), and ranks by the weighted sum with (method, seed)
// as the final tie-break. Deterministic for any job count.
RankedPool generate_pool(const std::vector<Segment>& segments, const PoolConfig& config,
                         unsigned jobs = 0);

// Ranking step alone, for pre-scored entries.
void rank_pool_entries(std::vector<RankedEntry>& entries,
                       const std::map<std::string, double>& weights);

const SplitAssignment& select_best(const RankedPool& pool);

// Per-method arithmetic means of the raw (unnormalized) metrics.
std::map<std::string, std::map<std::string, double>>
mean_metric_summary(const RankedPool& pool);

} // namespace seqstrat
