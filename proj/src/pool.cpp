#include "seqstrat/pool.hpp"

#include <algorithm>
#include <cmath>

#include "seqstrat/error.hpp"
#include "seqstrat/parallel.hpp"
#include "seqstrat/stratify.hpp"

namespace seqstrat {

namespace {

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = {"ld", "ifwld", "ids", "ed", "kl"};
  return names;
}

double metric_value(const SplitReport& report, const std::string& name) {
  if (name == "ld") return report.ld;
  if (name == "ifwld") return report.ifwld;
  if (name == "ids") return report.ids;
  if (name == "ed") return report.ed;
  if (name == "kl") return report.kl;
  fail("unknown metric '", name, "'");
}

} // namespace

std::map<std::string, double> PoolConfig::default_weights() {
  return {{"ld", 1.0}, {"ifwld", 1.0}, {"ids", 1.0}, {"ed", 1.0}};
}

void PoolConfig::validate() const {
  require(!methods.empty(), "pool config needs at least one method");
  for (const auto& method : methods)
    require(method == "random" || method == "msss" || method == "msegsss",
            "unknown split method '", method, "'");
  require(seeds_per_method >= 1, "pool needs at least one seed per method");
  spec.validate();
  require(!weights.empty(), "pool config needs metric weights");
  double total_weight = 0.0;
  for (const auto& [name, weight] : weights) {
    metric_value(SplitReport{}, name); // validates the name
    require(weight >= 0.0, "metric weight for ", name, " must be nonnegative");
    total_weight += weight;
  }
  require(total_weight > 0.0, "metric weights must not all be zero");
}

// Min-max normalizes weighted metrics over the pool, computes objectives and
// sorts ascending with (method, seed) as the final tie-break.
void rank_pool_entries(std::vector<RankedEntry>& entries,
                       const std::map<std::string, double>& weights) {
  for (auto& entry : entries) entry.objective = 0.0;
  for (const auto& [name, weight] : weights) {
    if (weight == 0.0) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& entry : entries) {
      const double v = metric_value(entry.report, name);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double range = hi - lo;
    if (range <= 0.0) continue; // constant metric normalizes to 0 for all
    for (auto& entry : entries)
      entry.objective += weight * (metric_value(entry.report, name) - lo) / range;
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const RankedEntry& a, const RankedEntry& b) {
                     if (a.objective != b.objective) return a.objective < b.objective;
                     if (a.assignment.method != b.assignment.method)
                       return a.assignment.method < b.assignment.method;
                     return a.assignment.seed < b.assignment.seed;
                   });
}

RankedPool generate_pool(const std::vector<Segment>& segments, const PoolConfig& config,
                         unsigned jobs) {
  config.validate();
  require(!segments.empty(), "cannot rank splits over zero segments");

  const std::size_t n_tasks =
      config.methods.size() * static_cast<std::size_t>(config.seeds_per_method);
  std::vector<RankedEntry> entries(n_tasks);

  parallel_for(n_tasks, jobs, [&](std::size_t t) {
    const std::string& method = config.methods[t / config.seeds_per_method];
    const std::uint64_t seed = config.seed_base + t % config.seeds_per_method;
    RankedEntry& entry = entries[t];
    entry.assignment = stratify_with_method(segments, config.spec, seed, method,
                                            config.tie_break);
    entry.assignment.granularity = config.granularity;
    entry.report = evaluate_split(entry.assignment, segments, config.evaluate);
  });

  RankedPool pool;
  pool.config = config;
  pool.degenerate = std::all_of(entries.begin(), entries.end(), [&](const RankedEntry& e) {
    return e.assignment.subsets == entries.front().assignment.subsets;
  });

  rank_pool_entries(entries, config.weights);
  pool.entries = std::move(entries);
  return pool;
}

const SplitAssignment& select_best(const RankedPool& pool) {
  require(!pool.entries.empty(), "cannot select from an empty pool");
  return pool.entries.front().assignment;
}

std::map<std::string, std::map<std::string, double>>
mean_metric_summary(const RankedPool& pool) {
  require(!pool.entries.empty(), "cannot summarize an empty pool");
  std::map<std::string, std::map<std::string, double>> sums;
  std::map<std::string, std::size_t> counts;
  for (const auto& entry : pool.entries) {
    auto& row = sums[entry.assignment.method];
    for (const auto& name : known_metrics())
      row[name] += metric_value(entry.report, name);
    ++counts[entry.assignment.method];
  }
  for (auto& [method, row] : sums)
    for (auto& [name, total] : row) total /= static_cast<double>(counts[method]);
  return sums;
}

} // namespace seqstrat
