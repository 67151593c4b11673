#include "seqstrat/coreset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seqstrat/error.hpp"
#include "seqstrat/rng.hpp"

namespace seqstrat {

std::string to_string(PickRule rule) {
  switch (rule) {
    case PickRule::MaxMinS: return "max_min_s";
    case PickRule::MaxMinL: return "max_min_l";
    case PickRule::Random: return "random";
  }
  return "random";
}

QueryStrategy query_strategy_from_string(const std::string& name) {
  if (name == "random") return QueryStrategy::Random;
  if (name == "distance") return QueryStrategy::Distance;
  if (name == "score") return QueryStrategy::Score;
  fail("unknown query strategy '", name, "' (expected random, distance or score)");
}

// --- PoseIndex ---------------------------------------------------------------

PoseIndex::PoseIndex(std::vector<std::uint32_t> ids, std::vector<Vec3> positions,
                     bool use_grid, bool ground_plane)
    : use_grid_(use_grid), ground_plane_(ground_plane) {
  require(ids.size() == positions.size(), "PoseIndex: ", ids.size(), " ids but ",
          positions.size(), " positions");

  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  ids_.reserve(ids.size());
  positions_.reserve(ids.size());
  for (const std::size_t i : order) {
    if (!ids_.empty() && ids_.back() == ids[i]) fail("PoseIndex: duplicate id ", ids[i]);
    ids_.push_back(ids[i]);
    positions_.push_back(positions[i]);
  }

  if (!use_grid_ || ids_.empty()) return;

  Vec3 lo = positions_.front(), hi = positions_.front();
  for (const Vec3& p : positions_) {
    lo.x = std::min(lo.x, p.x); hi.x = std::max(hi.x, p.x);
    lo.y = std::min(lo.y, p.y); hi.y = std::max(hi.y, p.y);
    lo.z = std::min(lo.z, p.z); hi.z = std::max(hi.z, p.z);
  }
  const double extent = std::max({hi.x - lo.x, hi.y - lo.y, ground_plane_ ? 0.0 : hi.z - lo.z});
  const double per_axis = std::cbrt(static_cast<double>(positions_.size()));
  cell_size_ = extent > 0.0 ? std::max(extent / std::max(per_axis, 1.0), 1e-12) : 1.0;

  for (std::size_t i = 0; i < positions_.size(); ++i)
    grid_[cell_of(positions_[i])].push_back(static_cast<std::uint32_t>(i));
}

PoseIndex::GridKey PoseIndex::cell_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.y / cell_size_)),
          ground_plane_ ? 0 : static_cast<std::int64_t>(std::floor(p.z / cell_size_))};
}

double PoseIndex::dist(const Vec3& a, const Vec3& b) const {
  return distance(a, b, ground_plane_);
}

bool PoseIndex::any_within(const Vec3& q, double radius) const {
  if (ids_.empty() || radius < 0.0) return false;
  if (!use_grid_) {
    for (const Vec3& p : positions_)
      if (dist(q, p) <= radius) return true;
    return false;
  }

  const GridKey lo = cell_of({q.x - radius, q.y - radius, q.z - radius});
  const GridKey hi = cell_of({q.x + radius, q.y + radius, q.z + radius});
  const auto cube = static_cast<double>(hi.x - lo.x + 1) *
                    static_cast<double>(hi.y - lo.y + 1) *
                    static_cast<double>(hi.z - lo.z + 1);
  if (cube > static_cast<double>(grid_.size()) * 2.0 + 16.0) {
    // Radius spans most of the grid; scanning occupied cells is cheaper.
    for (const auto& [key, members] : grid_)
      for (const std::uint32_t i : members)
        if (dist(q, positions_[i]) <= radius) return true;
    return false;
  }
  for (std::int64_t x = lo.x; x <= hi.x; ++x)
    for (std::int64_t y = lo.y; y <= hi.y; ++y)
      for (std::int64_t z = lo.z; z <= hi.z; ++z) {
        const auto it = grid_.find(GridKey{x, y, z});
        if (it == grid_.end()) continue;
        for (const std::uint32_t i : it->second)
          if (dist(q, positions_[i]) <= radius) return true;
      }
  return false;
}

std::vector<std::uint32_t> PoseIndex::radius_query(const Vec3& q, double radius) const {
  std::vector<std::uint32_t> result;
  if (ids_.empty() || radius < 0.0) return result;
  if (!use_grid_) {
    for (std::size_t i = 0; i < positions_.size(); ++i)
      if (dist(q, positions_[i]) <= radius) result.push_back(ids_[i]);
    return result; // ids_ already ascending
  }

  const GridKey lo = cell_of({q.x - radius, q.y - radius, q.z - radius});
  const GridKey hi = cell_of({q.x + radius, q.y + radius, q.z + radius});
  const auto cube = static_cast<double>(hi.x - lo.x + 1) *
                    static_cast<double>(hi.y - lo.y + 1) *
                    static_cast<double>(hi.z - lo.z + 1);
  if (cube > static_cast<double>(grid_.size()) * 2.0 + 16.0) {
    for (const auto& [key, members] : grid_)
      for (const std::uint32_t i : members)
        if (dist(q, positions_[i]) <= radius) result.push_back(ids_[i]);
  } else {
    for (std::int64_t x = lo.x; x <= hi.x; ++x)
      for (std::int64_t y = lo.y; y <= hi.y; ++y)
        for (std::int64_t z = lo.z; z <= hi.z; ++z) {
          const auto it = grid_.find(GridKey{x, y, z});
          if (it == grid_.end()) continue;
          for (const std::uint32_t i : it->second)
            if (dist(q, positions_[i]) <= radius) result.push_back(ids_[i]);
        }
  }
  std::sort(result.begin(), result.end());
  return result;
}

std::pair<std::uint32_t, double> PoseIndex::nearest(const Vec3& q) const {
  require(!ids_.empty(), "nearest query on an empty PoseIndex");

  auto linear = [&](std::uint32_t& best_id, double& best_dist) {
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      const double d = dist(q, positions_[i]);
      if (d < best_dist) {
        best_dist = d;
        best_id = ids_[i];
      }
    }
  };

  std::uint32_t best_id = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  if (!use_grid_) {
    linear(best_id, best_dist);
    return {best_id, best_dist};
  }

  // Expand the search radius until a hit appears; every pose outside the
  // examined cube is further than the radius, so the hit is global.
  double radius = cell_size_;
  for (;;) {
    const GridKey lo = cell_of({q.x - radius, q.y - radius, q.z - radius});
    const GridKey hi = cell_of({q.x + radius, q.y + radius, q.z + radius});
    const auto cube = static_cast<double>(hi.x - lo.x + 1) *
                      static_cast<double>(hi.y - lo.y + 1) *
                      static_cast<double>(hi.z - lo.z + 1);
    if (cube > static_cast<double>(grid_.size()) * 2.0 + 16.0) {
      linear(best_id, best_dist);
      return {best_id, best_dist};
    }
    bool found = false;
    for (std::int64_t x = lo.x; x <= hi.x; ++x)
      for (std::int64_t y = lo.y; y <= hi.y; ++y)
        for (std::int64_t z = lo.z; z <= hi.z; ++z) {
          const auto it = grid_.find(GridKey{x, y, z});
          if (it == grid_.end()) continue;
          for (const std::uint32_t i : it->second) {
            const double d = dist(q, positions_[i]);
            if (d <= radius && d < best_dist) {
              best_dist = d;
              best_id = ids_[i];
              found = true;
            } else if (d <= radius && d == best_dist && found && ids_[i] < best_id) {
              best_id = ids_[i];
            }
          }
        }
    if (found) return {best_id, best_dist};
    radius *= 2.0;
  }
}

// --- threshold subsets --------------------------------------------------------

std::vector<std::uint32_t> threshold_subset(const std::vector<Vec3>& positions,
                                            std::span<const std::uint32_t> unlabeled,
                                            std::span<const std::uint32_t> labeled,
                                            double d, const CoresetParams& params) {
  require(d >= 0.0, "threshold distance must be nonnegative");
  std::vector<std::uint32_t> result(unlabeled.begin(), unlabeled.end());
  std::sort(result.begin(), result.end());
  if (labeled.empty()) return result; // vacuous quantifier

  std::vector<Vec3> labeled_pos;
  std::vector<std::uint32_t> labeled_ids(labeled.begin(), labeled.end());
  labeled_pos.reserve(labeled_ids.size());
  for (const std::uint32_t id : labeled_ids) {
    require(id < positions.size(), "scan id ", id, " out of range");
    labeled_pos.push_back(positions[id]);
  }
  const PoseIndex index(std::move(labeled_ids), std::move(labeled_pos), params.use_grid,
                        params.ground_plane);

  std::vector<std::uint32_t> admitted;
  for (const std::uint32_t id : result) {
    require(id < positions.size(), "scan id ", id, " out of range");
    if (!index.any_within(positions[id], d)) admitted.push_back(id);
  }
  return admitted;
}

// --- ego-pose distance sampling -------------------------------------------------

namespace {

constexpr double kMinThreshold = 1e-12; // below this, coincident poses stall reduce()

double max_cross_distance(const std::vector<Vec3>& positions,
                          std::span<const std::uint32_t> a,
                          std::span<const std::uint32_t> b, bool ground_plane) {
  // Exact when affordable, else a bounding-box upper bound; d only gates
  // admission and shrinks, so an upper bound is safe.
  const double pair_count = static_cast<double>(a.size()) * static_cast<double>(b.size());
  if (pair_count <= 4e8) {
    double best = 0.0;
    for (const std::uint32_t i : a)
      for (const std::uint32_t j : b)
        best = std::max(best, distance(positions[i], positions[j], ground_plane));
    return best;
  }
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};
  auto absorb = [&](std::span<const std::uint32_t> ids) {
    for (const std::uint32_t i : ids) {
      const Vec3& p = positions[i];
      lo.x = std::min(lo.x, p.x); hi.x = std::max(hi.x, p.x);
      lo.y = std::min(lo.y, p.y); hi.y = std::max(hi.y, p.y);
      lo.z = std::min(lo.z, p.z); hi.z = std::max(hi.z, p.z);
    }
  };
  absorb(a);
  absorb(b);
  return distance(lo, hi, ground_plane);
}

struct EgoSampler {
  EgoSampler(const std::vector<Vec3>& positions_in, const CoresetParams& params_in)
      : positions(positions_in), params(params_in) {}

  const std::vector<Vec3>& positions;
  const CoresetParams& params;
  std::vector<std::uint32_t> unlabeled; // ascending
  std::vector<std::uint32_t> labeled;   // ascending
  std::vector<double> dist_to_labeled;  // per unlabeled index
  std::vector<double> dist_to_selected; // per unlabeled index
  std::vector<bool> picked;             // per unlabeled index

  double reduce(double d) const { return params.halving ? d * 0.5 : d * params.alpha; }

  double dist(const Vec3& a, const Vec3& b) const {
    return distance(a, b, params.ground_plane);
  }

  void init(std::span<const std::uint32_t> labeled_in,
            std::span<const std::uint32_t> unlabeled_in) {
    unlabeled.assign(unlabeled_in.begin(), unlabeled_in.end());
    labeled.assign(labeled_in.begin(), labeled_in.end());
    std::sort(unlabeled.begin(), unlabeled.end());
    std::sort(labeled.begin(), labeled.end());
    require(std::adjacent_find(unlabeled.begin(), unlabeled.end()) == unlabeled.end(),
            "duplicate scan id in the unlabeled pool");
    for (const std::uint32_t id : unlabeled) {
      require(id < positions.size(), "scan id ", id, " out of range");
      require(!std::binary_search(labeled.begin(), labeled.end(), id),
              "scan id ", id, " is in both the labeled and unlabeled pools");
    }
    for (const std::uint32_t id : labeled)
      require(id < positions.size(), "scan id ", id, " out of range");

    picked.assign(unlabeled.size(), false);
    dist_to_selected.assign(unlabeled.size(), std::numeric_limits<double>::infinity());
    dist_to_labeled.assign(unlabeled.size(), std::numeric_limits<double>::infinity());
    if (!labeled.empty()) {
      std::vector<Vec3> labeled_pos;
      labeled_pos.reserve(labeled.size());
      for (const std::uint32_t id : labeled) labeled_pos.push_back(positions[id]);
      const PoseIndex index(labeled, std::move(labeled_pos), params.use_grid,
                            params.ground_plane);
      for (std::size_t i = 0; i < unlabeled.size(); ++i)
        dist_to_labeled[i] = index.min_distance(positions[unlabeled[i]]);
    }
  }

  double initial_threshold() const {
    if (labeled.empty()) return max_cross_distance(positions, unlabeled, unlabeled,
                                                   params.ground_plane);
    return max_cross_distance(positions, labeled, unlabeled, params.ground_plane);
  }

  std::vector<std::size_t> admitted(double d) const {
    std::vector<std::size_t> result;
    for (std::size_t i = 0; i < unlabeled.size(); ++i)
      if (!picked[i] && dist_to_labeled[i] > d && dist_to_selected[i] > d)
        result.push_back(i);
    return result;
  }

  CoresetPlan run(std::uint64_t budget, Rng& rng, double* carried_threshold) {
    require(budget <= unlabeled.size(), "budget ", budget, " exceeds unlabeled pool of ",
            unlabeled.size());

    double d = carried_threshold && *carried_threshold >= 0.0 ? *carried_threshold
                                                              : initial_threshold();
    std::vector<std::size_t> admissible = admitted(d);

    CoresetPlan plan;
    plan.rng = Rng::kAlgorithm;
    bool selection_nonempty = false;
    for (std::uint64_t n = 0; n < budget; ++n) {
      while (admissible.empty()) {
        if (d < kMinThreshold) {
          // Only exactly coincident poses remain; admit them all.
          for (std::size_t i = 0; i < unlabeled.size(); ++i)
            if (!picked[i]) admissible.push_back(i);
          break;
        }
        d = reduce(d);
        admissible = admitted(d);
      }

      std::size_t pick = admissible.front();
      PickRule rule = PickRule::Random;
      if (selection_nonempty) {
        rule = PickRule::MaxMinS;
        double best = -1.0;
        for (const std::size_t i : admissible)
          if (dist_to_selected[i] > best) {
            best = dist_to_selected[i];
            pick = i;
          }
      } else if (!labeled.empty()) {
        rule = PickRule::MaxMinL;
        double best = -1.0;
        for (const std::size_t i : admissible)
          if (dist_to_labeled[i] > best) {
            best = dist_to_labeled[i];
            pick = i;
          }
      } else {
        pick = admissible[static_cast<std::size_t>(rng.below(admissible.size()))];
      }

      plan.picks.push_back({unlabeled[pick], d, rule});
      picked[pick] = true;
      selection_nonempty = true;
      admissible.erase(std::find(admissible.begin(), admissible.end(), pick));

      const Vec3& pos = positions[unlabeled[pick]];
      for (std::size_t i = 0; i < unlabeled.size(); ++i)
        if (!picked[i])
          dist_to_selected[i] = std::min(dist_to_selected[i], dist(positions[unlabeled[i]], pos));
    }

    if (carried_threshold) *carried_threshold = d;
    return plan;
  }
};

void validate_params(const CoresetParams& params) {
  if (!params.halving)
    require(params.alpha > 0.0 && params.alpha < 1.0,
            "alpha must be in (0,1) for the radius schedule to terminate, got ",
            params.alpha);
}

} // namespace

CoresetPlan ego_pose_sample(const std::vector<Vec3>& positions,
                            std::span<const std::uint32_t> labeled,
                            std::span<const std::uint32_t> unlabeled,
                            std::uint64_t budget, std::uint64_t seed,
                            const CoresetParams& params) {
  validate_params(params);
  EgoSampler sampler(positions, params);
  sampler.init(labeled, unlabeled);
  Rng rng(seed);
  CoresetPlan plan = sampler.run(budget, rng, nullptr);
  plan.seed = seed;
  plan.alpha = params.halving ? 0.5 : params.alpha;
  return plan;
}

std::vector<std::uint32_t> subsample_unlabeled(const std::vector<Vec3>& positions,
                                               std::span<const std::uint32_t> unlabeled,
                                               std::span<const std::uint32_t> labeled,
                                               std::size_t size, SubsampleStrategy strategy,
                                               std::uint64_t seed,
                                               const CoresetParams& params) {
  require(size <= unlabeled.size(), "subsample size ", size, " exceeds pool of ",
          unlabeled.size());
  std::vector<std::uint32_t> result;
  if (strategy == SubsampleStrategy::RSS) {
    std::vector<std::uint32_t> ids(unlabeled.begin(), unlabeled.end());
    std::sort(ids.begin(), ids.end());
    Rng rng(seed);
    rng.shuffle(ids);
    result.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(size));
  } else {
    const CoresetPlan plan =
        ego_pose_sample(positions, labeled, unlabeled, size, seed, params);
    for (const CoresetPick& pick : plan.picks) result.push_back(pick.scan_id);
  }
  std::sort(result.begin(), result.end());
  return result;
}

std::vector<std::vector<std::uint32_t>> al_plan(
    const std::vector<Vec3>& positions, std::vector<std::uint32_t> labeled,
    std::vector<std::uint32_t> unlabeled, const AlPlanConfig& config,
    const std::map<std::uint32_t, double>* external_scores) {
  validate_params(config.params);
  require(config.steps >= 1, "al_plan needs at least one step");
  require(config.budget_per_step >= 1, "al_plan budget must be positive");
  if (config.subsample)
    require(config.subsample_size >= config.budget_per_step,
            "subsample size ", config.subsample_size, " is below the step budget ",
            config.budget_per_step);
  if (config.strategy == QueryStrategy::Score)
    require(external_scores != nullptr, "score strategy needs external scores");

  std::sort(labeled.begin(), labeled.end());
  std::sort(unlabeled.begin(), unlabeled.end());

  // Admission radii persist across steps within one invocation.
  double subsample_threshold = -1.0;
  double strategy_threshold = -1.0;
  Rng subsample_rng(Rng::derive(config.seed, 1));
  Rng strategy_rng(Rng::derive(config.seed, 2));

  std::vector<std::vector<std::uint32_t>> steps;
  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<std::uint32_t> pool = unlabeled;
    if (config.subsample) {
      require(config.subsample_size <= unlabeled.size(),
              "step ", step, ": subsample size ", config.subsample_size,
              " exceeds unlabeled pool of ", unlabeled.size());
      if (*config.subsample == SubsampleStrategy::RSS) {
        Rng rng(Rng::derive(subsample_rng.next(), 3));
        std::vector<std::uint32_t> ids = unlabeled;
        rng.shuffle(ids);
        pool.assign(ids.begin(),
                    ids.begin() + static_cast<std::ptrdiff_t>(config.subsample_size));
        std::sort(pool.begin(), pool.end());
      } else {
        EgoSampler sampler(positions, config.params);
        sampler.init(labeled, unlabeled);
        const CoresetPlan plan =
            sampler.run(config.subsample_size, subsample_rng, &subsample_threshold);
        pool.clear();
        for (const CoresetPick& pick : plan.picks) pool.push_back(pick.scan_id);
        std::sort(pool.begin(), pool.end());
      }
    }
    require(config.budget_per_step <= pool.size(), "step ", step, ": budget ",
            config.budget_per_step, " exceeds candidate pool of ", pool.size());

    std::vector<std::uint32_t> queries;
    switch (config.strategy) {
      case QueryStrategy::Random: {
        std::vector<std::uint32_t> ids = pool;
        strategy_rng.shuffle(ids);
        queries.assign(ids.begin(),
                       ids.begin() + static_cast<std::ptrdiff_t>(config.budget_per_step));
        break;
      }
      case QueryStrategy::Score: {
        std::vector<std::uint32_t> missing;
        for (const std::uint32_t id : pool)
          if (!external_scores->count(id)) missing.push_back(id);
        if (!missing.empty()) {
          std::ostringstream ids;
          for (std::size_t i = 0; i < missing.size(); ++i)
            ids << (i ? ", " : "") << missing[i];
          fail("step ", step, ": no score for scan ids: ", ids.str());
        }
        std::vector<std::uint32_t> ranked = pool;
        std::stable_sort(ranked.begin(), ranked.end(),
                         [&](std::uint32_t a, std::uint32_t b) {
                           const double sa = external_scores->at(a);
                           const double sb = external_scores->at(b);
                           if (sa != sb) return sa > sb;
                           return a < b;
                         });
        queries.assign(ranked.begin(),
                       ranked.begin() + static_cast<std::ptrdiff_t>(config.budget_per_step));
        break;
      }
      case QueryStrategy::Distance: {
        EgoSampler sampler(positions, config.params);
        sampler.init(labeled, pool);
        const CoresetPlan plan =
            sampler.run(config.budget_per_step, strategy_rng, &strategy_threshold);
        for (const CoresetPick& pick : plan.picks) queries.push_back(pick.scan_id);
        break;
      }
    }

    std::sort(queries.begin(), queries.end());
    steps.push_back(queries);

    // Move picks U -> L.
    std::vector<std::uint32_t> next_unlabeled;
    next_unlabeled.reserve(unlabeled.size() - queries.size());
    std::set_difference(unlabeled.begin(), unlabeled.end(), queries.begin(), queries.end(),
                        std::back_inserter(next_unlabeled));
    unlabeled = std::move(next_unlabeled);
    std::vector<std::uint32_t> next_labeled;
    std::merge(labeled.begin(), labeled.end(), queries.begin(), queries.end(),
               std::back_inserter(next_labeled));
    labeled = std::move(next_labeled);
  }
  return steps;
}

} // namespace seqstrat
