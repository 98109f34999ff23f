#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sbm {

// Dense 2^n linear algebra caps the particle count.
inline constexpr int kMaxParticles = 12;

// A coloring assigns color 1 or 2 to each of the positions 1..n. Storage is
// the lexicographic index itself: bit (n-i) of `bits` is c_i - 1, so
// (1,...,1) -> 0 and (2,...,2) -> 2^n - 1.
class Coloring {
 public:
  Coloring(int n, uint32_t bits);
  static Coloring uniform(int n, int color);
  static Coloring parse(std::string_view s);  // e.g. "1221"

  int n() const { return n_; }
  int at(int i) const;            // color at position i, i in [1,n]
  uint32_t index() const { return bits_; }
  std::string str() const;

  friend bool operator==(const Coloring&, const Coloring&) = default;

 private:
  int n_;
  uint32_t bits_;
};

Coloring flip_at(const Coloring& c, int i);
int count_color(const Coloring& c, int color);

// Sub-coloring picked out by `block` (1-based positions, strictly increasing).
Coloring restrict_to(const Coloring& c, std::span<const int> block);

uint32_t lex_index(const Coloring& c);

// A partition of {1..n} into disjoint blocks. Blocks are stored sorted by
// smallest element with elements ascending, which makes str() canonical.
class SetPartition {
 public:
  SetPartition(int n, std::vector<std::vector<int>> blocks);
  static SetPartition singletons(int n);
  static SetPartition one_block(int n);
  static SetPartition parse(std::string_view s);  // e.g. "{1,3}{2}"

  int n() const { return n_; }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  const std::vector<int>& block(int k) const { return blocks_[k]; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  int block_of(int i) const;  // block index containing position i
  int largest_block() const;
  std::string str() const;

  friend bool operator==(const SetPartition&, const SetPartition&) = default;

 private:
  int n_;
  std::vector<std::vector<int>> blocks_;
};

// Partition by equality of positions: i ~ j iff x[i] == x[j].
template <typename T>
SetPartition partition_from_positions(const std::vector<T>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<int>> blocks;
  std::vector<int> assigned(n, -1);
  for (int i = 0; i < n; ++i) {
    if (assigned[i] >= 0) continue;
    blocks.push_back({i + 1});
    assigned[i] = static_cast<int>(blocks.size()) - 1;
    for (int j = i + 1; j < n; ++j) {
      if (assigned[j] < 0 && x[j] == x[i]) {
        blocks.back().push_back(j + 1);
        assigned[j] = assigned[i];
      }
    }
  }
  return SetPartition(n, std::move(blocks));
}

// Coloring of {1..n} that gives every position of block k the color c[k].
Coloring lift(const SetPartition& pi, std::span<const int> block_colors);

// Nonnegative measure on the 2^n colorings, indexed lexicographically.
class ColorMeasure {
 public:
  explicit ColorMeasure(int n);
  static ColorMeasure delta(const Coloring& c);
  static ColorMeasure constant(int n, double value);
  static ColorMeasure from_values(int n, std::vector<double> values);

  int n() const { return n_; }
  std::size_t size() const { return values_.size(); }
  double operator[](uint32_t idx) const { return values_[idx]; }
  double& operator[](uint32_t idx) { return values_[idx]; }
  double at(const Coloring& c) const { return values_[c.index()]; }
  const std::vector<double>& values() const { return values_; }
  double max_norm() const;
  double total() const;

  friend bool operator==(const ColorMeasure&, const ColorMeasure&) = default;

 private:
  int n_;
  std::vector<double> values_;
};

}  // namespace sbm
