#pragma once

// Seeded sampling helpers. std::uniform_int_distribution is
// implementation-defined, so bounded draws are done with rejection
// sampling on mt19937_64 directly; results are identical on every
// platform for a given seed.

#include <cstdint>
#include <random>
#include <vector>

namespace squadgen {

inline uint64_t uniform_below(std::mt19937_64& rng, uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

// First k elements of a seeded Fisher-Yates pass: a uniform sample
// without replacement, in draw order.
inline std::vector<size_t> sample_without_replacement(size_t population,
                                                      size_t k,
                                                      std::mt19937_64& rng) {
  std::vector<size_t> idx(population);
  for (size_t i = 0; i < population; ++i) idx[i] = i;
  for (size_t i = 0; i < k && i + 1 < population; ++i) {
    const size_t j =
        i + static_cast<size_t>(uniform_below(rng, population - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace squadgen
