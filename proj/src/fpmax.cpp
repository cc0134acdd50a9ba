#include "qrec/fpmax.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace qrec::fpmax {

std::size_t min_count(double min_support, std::size_t transactions) {
  double raw = std::ceil(min_support * static_cast<double>(transactions) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::max(raw, 0.0)));
}

namespace {

constexpr int kNone = -1;

// Items inside a tree are identified by their rank in the global frequency
// order (0 = most frequent), so prefix paths are already sorted.
class FpTree {
 public:
  struct Node {
    std::uint32_t rank;
    std::size_t count;
    int parent;
    int next;  // next node carrying the same rank
    std::vector<int> children;
  };

  FpTree() { nodes_.push_back({0, 0, kNone, kNone, {}}); }

  void insert(const std::vector<std::uint32_t>& path, std::size_t count) {
    int cur = 0;
    for (std::uint32_t r : path) {
      int child = kNone;
      for (int c : nodes_[cur].children) {
        if (nodes_[c].rank == r) {
          child = c;
          break;
        }
      }
      if (child == kNone) {
        child = static_cast<int>(nodes_.size());
        auto& head = heads_[r];
        nodes_.push_back({r, 0, cur, head.first, {}});
        head.first = child;
        nodes_[cur].children.push_back(child);
      }
      nodes_[child].count += count;
      heads_[r].second += count;
      cur = child;
    }
  }

  bool empty() const { return nodes_.size() == 1; }

  bool single_path() const {
    for (const auto& n : nodes_) {
      if (n.children.size() > 1) return false;
    }
    return true;
  }

  // Ranks along the single path (root to leaf) and the leaf count.
  std::pair<std::vector<std::uint32_t>, std::size_t> path() const {
    std::vector<std::uint32_t> ranks;
    std::size_t count = 0;
    for (int cur = 0; !nodes_[cur].children.empty();) {
      cur = nodes_[cur].children.front();
      ranks.push_back(nodes_[cur].rank);
      count = nodes_[cur].count;
    }
    return {ranks, count};
  }

  // Header entries from least to most frequent (largest rank first).
  std::vector<std::pair<std::uint32_t, std::size_t>> header_bottom_up() const {
    std::vector<std::pair<std::uint32_t, std::size_t>> out;
    for (auto it = heads_.rbegin(); it != heads_.rend(); ++it) out.emplace_back(it->first, it->second.second);
    return out;
  }

  // Prefix paths (root side first) of every node carrying `rank`.
  std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> pattern_base(std::uint32_t rank) const {
    std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> base;
    for (int n = heads_.at(rank).first; n != kNone; n = nodes_[n].next) {
      std::vector<std::uint32_t> prefix;
      for (int p = nodes_[n].parent; p > 0; p = nodes_[p].parent) prefix.push_back(nodes_[p].rank);
      std::reverse(prefix.begin(), prefix.end());
      if (!prefix.empty()) base.emplace_back(std::move(prefix), nodes_[n].count);
    }
    return base;
  }

 private:
  std::vector<Node> nodes_;
  // rank -> (first node, total count); ordered so iteration follows rank.
  std::map<std::uint32_t, std::pair<int, std::size_t>> heads_;
};

class Miner {
 public:
  explicit Miner(std::size_t min_count) : min_count_(min_count) {}

  void run(const FpTree& tree, std::vector<std::uint32_t>& head, std::size_t head_support) {
    if (tree.single_path()) {
      auto [ranks, leaf_count] = tree.path();
      std::vector<std::uint32_t> candidate = head;
      candidate.insert(candidate.end(), ranks.begin(), ranks.end());
      if (!candidate.empty()) record(std::move(candidate), ranks.empty() ? head_support : leaf_count);
      return;
    }
    for (auto [rank, support] : tree.header_bottom_up()) {
      auto base = tree.pattern_base(rank);
      std::map<std::uint32_t, std::size_t> counts;
      for (const auto& [prefix, count] : base) {
        for (std::uint32_t r : prefix) counts[r] += count;
      }
      std::vector<std::uint32_t> tail;
      for (auto [r, c] : counts) {
        if (c >= min_count_) tail.push_back(r);
      }

      head.push_back(rank);
      std::vector<std::uint32_t> bound = head;
      bound.insert(bound.end(), tail.begin(), tail.end());
      if (!subsumed(bound)) {
        FpTree conditional;
        for (const auto& [prefix, count] : base) {
          std::vector<std::uint32_t> filtered;
          for (std::uint32_t r : prefix) {
            if (counts[r] >= min_count_) filtered.push_back(r);
          }
          if (!filtered.empty()) conditional.insert(filtered, count);
        }
        run(conditional, head, support);
      }
      head.pop_back();
    }
  }

  std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> take() { return std::move(found_); }

 private:
  static std::vector<std::uint32_t> sorted(std::vector<std::uint32_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  }

  bool subsumed(const std::vector<std::uint32_t>& set) const {
    auto s = sorted(set);
    return std::any_of(found_.begin(), found_.end(), [&](const auto& m) {
      return std::includes(m.first.begin(), m.first.end(), s.begin(), s.end());
    });
  }

  void record(std::vector<std::uint32_t> set, std::size_t support) {
    auto s = sorted(std::move(set));
    if (subsumed(s)) return;
    std::erase_if(found_, [&](const auto& m) {
      return std::includes(s.begin(), s.end(), m.first.begin(), m.first.end());
    });
    found_.emplace_back(std::move(s), support);
  }

  std::size_t min_count_;
  std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> found_;
};

}  // namespace

std::vector<MaximalItemset> mine(const std::vector<Itemset>& transactions, std::size_t min_count) {
  min_count = std::max<std::size_t>(min_count, 1);
  std::unordered_map<Item, std::size_t> frequency;
  std::vector<Itemset> deduped;
  deduped.reserve(transactions.size());
  for (const auto& t : transactions) {
    Itemset items = t;
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    for (Item i : items) ++frequency[i];
    deduped.push_back(std::move(items));
  }

  std::vector<std::pair<Item, std::size_t>> frequent;
  for (auto [item, count] : frequency) {
    if (count >= min_count) frequent.emplace_back(item, count);
  }
  std::sort(frequent.begin(), frequent.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::unordered_map<Item, std::uint32_t> rank_of;
  for (std::uint32_t r = 0; r < frequent.size(); ++r) rank_of[frequent[r].first] = r;

  FpTree tree;
  for (const auto& t : deduped) {
    std::vector<std::uint32_t> ranks;
    for (Item i : t) {
      if (auto it = rank_of.find(i); it != rank_of.end()) ranks.push_back(it->second);
    }
    std::sort(ranks.begin(), ranks.end());
    if (!ranks.empty()) tree.insert(ranks, 1);
  }

  Miner miner(min_count);
  std::vector<std::uint32_t> head;
  if (!tree.empty()) miner.run(tree, head, transactions.size());

  std::vector<MaximalItemset> out;
  for (auto& [ranks, support] : miner.take()) {
    Itemset items;
    for (std::uint32_t r : ranks) items.push_back(frequent[r].first);
    std::sort(items.begin(), items.end());
    out.push_back({std::move(items), support});
  }
  std::sort(out.begin(), out.end(),
            [](const MaximalItemset& a, const MaximalItemset& b) { return a.items < b.items; });
  return out;
}

}  // namespace qrec::fpmax
