#include "attnseg/folds.h"

#include <algorithm>
#include <numeric>

#include "attnseg/error.h"
#include "attnseg/random.h"

namespace attnseg {

std::vector<std::string> FoldSplit::members(int f) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (fold[i] == f) out.push_back(ids[i]);
  }
  return out;
}

FoldRoles FoldSplit::roles(int iteration) const {
  if (iteration < 0 || iteration >= k) throw ConfigError("fold iteration out of range");
  const int val = (iteration + 1) % k;
  FoldRoles r;
  r.test = members(iteration);
  r.validation = members(val);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (fold[i] != iteration && fold[i] != val) r.train.push_back(ids[i]);
  }
  return r;
}

int FoldSplit::fold_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return fold[i];
  }
  throw ConfigError("patient '" + id + "' is not part of the fold split");
}

FoldSplit split_folds(const std::vector<CohortMember>& cohort, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("split_folds: k must be >= 1");
  if (static_cast<int>(cohort.size()) < k) {
    throw ConfigError("split_folds: cohort of " + std::to_string(cohort.size()) + " is smaller than k = " +
                      std::to_string(k));
  }
  std::vector<std::size_t> order(cohort.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, fnv1a("folds")));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cohort[a].tumor_volume_ml > cohort[b].tumor_volume_ml;
  });
  FoldSplit split;
  split.k = k;
  split.fold.assign(cohort.size(), 0);
  for (const auto& m : cohort) split.ids.push_back(m.id);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const int pos = static_cast<int>(r % static_cast<std::size_t>(k));
    const bool forward = (r / static_cast<std::size_t>(k)) % 2 == 0;
    split.fold[order[r]] = forward ? pos : k - 1 - pos;
  }
  return split;
}

}  // namespace attnseg
