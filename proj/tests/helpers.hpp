#pragma once

#include <set>

#include "pufbench/bits.hpp"
#include "pufbench/dataset.hpp"
#include "pufbench/rng.hpp"

namespace testing {

using namespace pufbench;

inline BitMatrix random_bits(std::size_t rows, std::size_t cols, Rng& rng) {
  BitMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = static_cast<std::uint8_t>(rng() >> 63);
  }
  return m;
}

// rows pairwise distinct; needs 2^cols >= rows
inline BitMatrix distinct_bits(std::size_t rows, std::size_t cols, Rng& rng) {
  BitMatrix m(rows, cols);
  std::set<std::vector<std::uint8_t>> seen;
  std::size_t i = 0;
  while (i < rows) {
    std::vector<std::uint8_t> r(cols);
    for (auto& b : r) b = static_cast<std::uint8_t>(rng() >> 63);
    if (!seen.insert(r).second) continue;
    m.set_row(i++, BitVector(r));
  }
  return m;
}

inline CrpDataset make_dataset(BitMatrix x, BitMatrix y) {
  DatasetMetadata meta{0, 0, x.cols(), y.cols()};
  return CrpDataset(meta, std::move(x), std::move(y));
}

inline SplitDataset random_split(std::size_t n, std::size_t nc, std::size_t nr, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  auto x = random_bits(n, nc, rng);
  auto y = random_bits(n, nr, rng);
  return split(make_dataset(std::move(x), std::move(y)), seed);
}

}  // namespace testing
