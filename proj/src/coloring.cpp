#include "sbm/coloring.hpp"

#include <numeric>
#include <stdexcept>

namespace sbm {

namespace {

void check_n(int n) {
  if (n < 1 || n > kMaxParticles) {
    throw std::invalid_argument("particle count must be in [1," +
                                std::to_string(kMaxParticles) + "], got " +
                                std::to_string(n));
  }
}

}  // namespace

Coloring::Coloring(int n, uint32_t bits) : n_(n), bits_(bits) {
  check_n(n);
  if (bits >> n) {
    throw std::invalid_argument("coloring index out of range for n=" +
                                std::to_string(n));
  }
}

Coloring Coloring::uniform(int n, int color) {
  check_n(n);
  if (color != 1 && color != 2) {
    throw std::invalid_argument("color must be 1 or 2");
  }
  return Coloring(n, color == 1 ? 0u : (1u << n) - 1u);
}

Coloring Coloring::parse(std::string_view s) {
  const int n = static_cast<int>(s.size());
  check_n(n);
  uint32_t bits = 0;
  for (int i = 0; i < n; ++i) {
    if (s[i] != '1' && s[i] != '2') {
      throw std::invalid_argument("coloring string must contain only 1 and 2");
    }
    bits = (bits << 1) | (s[i] == '2' ? 1u : 0u);
  }
  return Coloring(n, bits);
}

int Coloring::at(int i) const {
  if (i < 1 || i > n_) {
    throw std::invalid_argument("position out of range");
  }
  return 1 + ((bits_ >> (n_ - i)) & 1u);
}

std::string Coloring::str() const {
  std::string s(n_, '1');
  for (int i = 1; i <= n_; ++i) {
    if (at(i) == 2) s[i - 1] = '2';
  }
  return s;
}

Coloring flip_at(const Coloring& c, int i) {
  if (i < 1 || i > c.n()) {
    throw std::invalid_argument("flip position out of range");
  }
  return Coloring(c.n(), c.index() ^ (1u << (c.n() - i)));
}

int count_color(const Coloring& c, int color) {
  if (color != 1 && color != 2) {
    throw std::invalid_argument("color must be 1 or 2");
  }
  const int twos = std::popcount(c.index());
  return color == 2 ? twos : c.n() - twos;
}

Coloring restrict_to(const Coloring& c, std::span<const int> block) {
  if (block.empty()) {
    throw std::invalid_argument("cannot restrict to an empty block");
  }
  uint32_t bits = 0;
  int prev = 0;
  for (int i : block) {
    if (i <= prev || i > c.n()) {
      throw std::invalid_argument("block must be strictly increasing within [1,n]");
    }
    prev = i;
    bits = (bits << 1) | static_cast<uint32_t>(c.at(i) - 1);
  }
  return Coloring(static_cast<int>(block.size()), bits);
}

uint32_t lex_index(const Coloring& c) { return c.index(); }

SetPartition::SetPartition(int n, std::vector<std::vector<int>> blocks)
    : n_(n), blocks_(std::move(blocks)) {
  check_n(n);
  std::vector<bool> seen(n + 1, false);
  int total = 0;
  for (auto& b : blocks_) {
    if (b.empty()) throw std::invalid_argument("empty block");
    std::sort(b.begin(), b.end());
    for (int i : b) {
      if (i < 1 || i > n || seen[i]) {
        throw std::invalid_argument("blocks must partition {1.." +
                                    std::to_string(n) + "}");
      }
      seen[i] = true;
      ++total;
    }
  }
  if (total != n) {
    throw std::invalid_argument("blocks must cover {1.." + std::to_string(n) +
                                "}");
  }
  std::sort(blocks_.begin(), blocks_.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

SetPartition SetPartition::singletons(int n) {
  std::vector<std::vector<int>> blocks(n);
  for (int i = 0; i < n; ++i) blocks[i] = {i + 1};
  return SetPartition(n, std::move(blocks));
}

SetPartition SetPartition::one_block(int n) {
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 1);
  return SetPartition(n, {std::move(all)});
}

SetPartition SetPartition::parse(std::string_view s) {
  std::vector<std::vector<int>> blocks;
  std::size_t pos = 0;
  int n = 0;
  while (pos < s.size()) {
    if (s[pos] != '{') throw std::invalid_argument("expected '{' in partition");
    const auto close = s.find('}', pos);
    if (close == std::string_view::npos) {
      throw std::invalid_argument("unterminated block in partition");
    }
    std::vector<int> block;
    std::size_t p = pos + 1;
    while (p < close) {
      int v = 0;
      if (s[p] < '0' || s[p] > '9') {
        throw std::invalid_argument("expected position number in partition");
      }
      while (p < close && s[p] >= '0' && s[p] <= '9') {
        v = v * 10 + (s[p] - '0');
        ++p;
      }
      block.push_back(v);
      n = std::max(n, v);
      if (p < close) {
        if (s[p] != ',') throw std::invalid_argument("expected ',' in block");
        ++p;
      }
    }
    if (block.empty()) throw std::invalid_argument("empty block in partition");
    blocks.push_back(std::move(block));
    pos = close + 1;
  }
  if (blocks.empty()) throw std::invalid_argument("empty partition string");
  return SetPartition(n, std::move(blocks));
}

int SetPartition::block_of(int i) const {
  for (int k = 0; k < block_count(); ++k) {
    for (int v : blocks_[k]) {
      if (v == i) return k;
    }
  }
  throw std::invalid_argument("position out of range");
}

int SetPartition::largest_block() const {
  std::size_t m = 0;
  for (const auto& b : blocks_) m = std::max(m, b.size());
  return static_cast<int>(m);
}

std::string SetPartition::str() const {
  std::string s;
  for (const auto& b : blocks_) {
    s += '{';
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(b[i]);
    }
    s += '}';
  }
  return s;
}

Coloring lift(const SetPartition& pi, std::span<const int> block_colors) {
  if (static_cast<int>(block_colors.size()) != pi.block_count()) {
    throw std::invalid_argument("need one color per block");
  }
  uint32_t bits = 0;
  for (int k = 0; k < pi.block_count(); ++k) {
    const int c = block_colors[k];
    if (c != 1 && c != 2) throw std::invalid_argument("color must be 1 or 2");
    if (c == 2) {
      for (int i : pi.block(k)) bits |= 1u << (pi.n() - i);
    }
  }
  return Coloring(pi.n(), bits);
}

ColorMeasure::ColorMeasure(int n) : n_(n) {
  check_n(n);
  values_.assign(std::size_t{1} << n, 0.0);
}

ColorMeasure ColorMeasure::delta(const Coloring& c) {
  ColorMeasure m(c.n());
  m.values_[c.index()] = 1.0;
  return m;
}

ColorMeasure ColorMeasure::constant(int n, double value) {
  if (value < 0) throw std::invalid_argument("measure values must be >= 0");
  ColorMeasure m(n);
  std::fill(m.values_.begin(), m.values_.end(), value);
  return m;
}

ColorMeasure ColorMeasure::from_values(int n, std::vector<double> values) {
  ColorMeasure m(n);
  if (values.size() != m.values_.size()) {
    throw std::invalid_argument("expected 2^n values");
  }
  for (double v : values) {
    if (!(v >= 0)) throw std::invalid_argument("measure values must be >= 0");
  }
  m.values_ = std::move(values);
  return m;
}

double ColorMeasure::max_norm() const {
  double m = 0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ColorMeasure::total() const {
  double s = 0;
  for (double v : values_) s += v;
  return s;
}

}  // namespace sbm
