#pragma once

#include <cmath>
#include <vector>

// Independent direct-formula evaluators used to cross-check the production
// metrics. They work on explicit per-segment mass tables in long double and
// share no code with the library.
namespace testutil {

struct OddsInstance {
  std::vector<std::vector<long double>> label_mass; // [segment][label]
  std::vector<long double> size;                    // [segment] contribution to |S_j|
  std::vector<int> subset_of;                       // [segment] -> subset index
  int subsets = 0;
};

namespace detail {

struct OddsTotals {
  std::vector<long double> dataset_label;
  std::vector<std::vector<long double>> subset_label; // [subset][label]
  long double dataset_size = 0.0L;
  std::vector<long double> subset_size;
};

inline OddsTotals totals_of(const OddsInstance& inst) {
  const std::size_t labels = inst.label_mass.empty() ? 0 : inst.label_mass[0].size();
  OddsTotals t;
  t.dataset_label.assign(labels, 0.0L);
  t.subset_label.assign(inst.subsets, std::vector<long double>(labels, 0.0L));
  t.subset_size.assign(inst.subsets, 0.0L);
  for (std::size_t s = 0; s < inst.label_mass.size(); ++s) {
    const int j = inst.subset_of[s];
    t.dataset_size += inst.size[s];
    t.subset_size[j] += inst.size[s];
    for (std::size_t i = 0; i < labels; ++i) {
      t.dataset_label[i] += inst.label_mass[s][i];
      t.subset_label[j][i] += inst.label_mass[s][i];
    }
  }
  return t;
}

inline long double odds(long double have, long double total) {
  return have / (total - have + 1e-9L);
}

inline long double deviation(const OddsTotals& t, std::size_t label) {
  long double sum = 0.0L;
  for (int j = 0; j < static_cast<int>(t.subset_size.size()); ++j)
    sum += std::fabs(odds(t.subset_label[j][label], t.subset_size[j]) -
                     odds(t.dataset_label[label], t.dataset_size));
  return sum / static_cast<long double>(t.subset_size.size());
}

} // namespace detail

inline long double oracle_label_distribution(const OddsInstance& inst) {
  const auto t = detail::totals_of(inst);
  long double sum = 0.0L;
  int considered = 0;
  for (std::size_t i = 0; i < t.dataset_label.size(); ++i) {
    if (t.dataset_label[i] <= 0.0L) continue;
    sum += detail::deviation(t, i);
    ++considered;
  }
  return sum / static_cast<long double>(considered);
}

inline long double oracle_ifw_label_distribution(const OddsInstance& inst) {
  const auto t = detail::totals_of(inst);
  long double sum = 0.0L;
  for (std::size_t i = 0; i < t.dataset_label.size(); ++i) {
    if (t.dataset_label[i] <= 0.0L) continue;
    sum += t.dataset_size / t.dataset_label[i] * detail::deviation(t, i);
  }
  return sum;
}

} // namespace testutil
