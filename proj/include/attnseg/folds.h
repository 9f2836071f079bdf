#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace attnseg {

struct CohortMember {
  std::string id;
  double tumor_volume_ml = 0;
};

struct FoldRoles {
  std::vector<std::string> train, validation, test;
};

struct FoldSplit {
  int k = 5;
  // Parallel to the input cohort order.
  std::vector<std::string> ids;
  std::vector<int> fold;

  std::vector<std::string> members(int f) const;
  // Iteration i: test = fold i, validation = fold (i + 1) % k, train = the
  // rest. With k < 3 validation and test coincide or train is empty.
  FoldRoles roles(int iteration) const;
  int fold_of(const std::string& id) const;
};

// Sorted by descending volume (ties in seeded random order) and dealt in a
// serpentine: 0..k-1, k-1..0, ...
FoldSplit split_folds(const std::vector<CohortMember>& cohort, int k, std::uint64_t seed);

}  // namespace attnseg
