#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qrec::fpmax {

using Item = std::uint32_t;
/// Sorted ascending, no duplicates.
using Itemset = std::vector<Item>;

struct MaximalItemset {
  Itemset items;
  std::size_t support = 0;

  bool operator==(const MaximalItemset&) const = default;
};

/// Smallest absolute count satisfying a relative support over `transactions`.
std::size_t min_count(double min_support, std::size_t transactions);

/// Maximal frequent itemsets with support >= `min_count`, mined with an
/// FP-tree and FP-Max style subset pruning. Output is sorted by itemset.
/// Transactions may hold items in any order and may repeat items.
std::vector<MaximalItemset> mine(const std::vector<Itemset>& transactions, std::size_t min_count);

}  // namespace qrec::fpmax
