// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "ksl/grid.hpp"

namespace ksl::test {

inline Field random_field(const Grid& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Field f(g);
  for (auto& x : f.values) x = d(rng);
  return f;
}

}  // namespace ksl::test
