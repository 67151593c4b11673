#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqstrat/types.hpp"

namespace seqstrat {

// Spatial accelerator for ego-pose queries. Every query is defined to return
// exactly what a linear scan would; the uniform grid only speeds it up.
class PoseIndex {
public:
  PoseIndex(std::vector<std::uint32_t> ids, std::vector<Vec3> positions,
            bool use_grid = true, bool ground_plane = false);

  bool empty() const { return ids_.empty(); }
  std::size_t size() const { return ids_.size(); }

  // Any indexed pose within distance <= radius of q?
  bool any_within(const Vec3& q, double radius) const;

  // Ids of poses within distance <= radius, ascending.
  std::vector<std::uint32_t> radius_query(const Vec3& q, double radius) const;

  // Closest indexed pose; distance ties resolve to the smallest id.
  // Index must be nonempty.
  std::pair<std::uint32_t, double> nearest(const Vec3& q) const;

  double min_distance(const Vec3& q) const { return nearest(q).second; }

private:
  struct GridKey {
    std::int64_t x, y, z;
    friend bool operator<(const GridKey& a, const GridKey& b) {
      if (a.x != b.x) return a.x < b.x;
      if (a.y != b.y) return a.y < b.y;
      return a.z < b.z;
    }
  };

  GridKey cell_of(const Vec3& p) const;
  double dist(const Vec3& a, const Vec3& b) const;

  std::vector<std::uint32_t> ids_;
  std::vector<Vec3> positions_; // parallel to ids_, sorted by id
  bool use_grid_ = true;
  bool ground_plane_ = false;
  double cell_size_ = 1.0;
  std::map<GridKey, std::vector<std::uint32_t>> grid_; // cell -> indexes into ids_
};

enum class PickRule { MaxMinS, MaxMinL, Random };

std::string to_string(PickRule rule);

struct CoresetPick {
  std::uint32_t scan_id = 0;
  double threshold = 0.0; // admission radius active at this pick
  PickRule rule = PickRule::Random;
};

struct CoresetPlan {
  std::vector<CoresetPick> picks;
  std::uint64_t seed = 0;
  double alpha = 0.9;
  std::string rng;
};

struct CoresetParams {
  double alpha = 0.9;   // reduce(d) = alpha * d
  bool halving = false; // reduce(d) = d / 2 instead
  bool ground_plane = false;
  bool use_grid = true;
};

// { x in U : dist(x, y) > d for all y in L }. Empty L admits all of U.
std::vector<std::uint32_t> threshold_subset(const std::vector<Vec3>& positions,
                                            std::span<const std::uint32_t> unlabeled,
                                            std::span<const std::uint32_t> labeled,
                                            double d, const CoresetParams& params = {});

// Ego-pose distance sampling: shrink the admission radius until candidates
// appear, then take the candidate furthest from the selection so far (or from
// the labeled pool before the first pick; seeded random when both are empty).
CoresetPlan ego_pose_sample(const std::vector<Vec3>& positions,
                            std::span<const std::uint32_t> labeled,
                            std::span<const std::uint32_t> unlabeled,
                            std::uint64_t budget, std::uint64_t seed,
                            const CoresetParams& params = {});

enum class SubsampleStrategy { RSS, DSS };

// RSS: seeded uniform sample without replacement. DSS: ego_pose_sample picks.
// Returns ascending scan ids.
std::vector<std::uint32_t> subsample_unlabeled(const std::vector<Vec3>& positions,
                                               std::span<const std::uint32_t> unlabeled,
                                               std::span<const std::uint32_t> labeled,
                                               std::size_t size, SubsampleStrategy strategy,
                                               std::uint64_t seed,
                                               const CoresetParams& params = {});

enum class QueryStrategy { Random, Distance, Score };

QueryStrategy query_strategy_from_string(const std::string& name);

struct AlPlanConfig {
  std::size_t steps = 1;
  std::size_t budget_per_step = 1;
  QueryStrategy strategy = QueryStrategy::Random;
  std::optional<SubsampleStrategy> subsample;
  std::size_t subsample_size = 0;
  std::uint64_t seed = 0;
  CoresetParams params;
};

// Plans `steps` query rounds: optional RSS/DSS sub-sampling of the unlabeled
// pool, then the strategy picks budget_per_step scans which move U -> L.
// Admission radii persist across steps within one invocation.
std::vector<std::vector<std::uint32_t>> al_plan(
    const std::vector<Vec3>& positions, std::vector<std::uint32_t> labeled,
    std::vector<std::uint32_t> unlabeled, const AlPlanConfig& config,
    const std::map<std::uint32_t, double>* external_scores = nullptr);

} // namespace seqstrat
