#pragma once

// Deterministic sampling.  Every draw maps mt19937_64 output through fixed
// arithmetic, so a seed pins the whole stream independent of platform.

#include <cmath>
#include <cstdint>
#include <random>

#include "numerics.hpp"

namespace bethegeom {

struct Rng {
  std::mt19937_64 gen;

  explicit Rng(std::uint64_t seed) : gen(seed) {}

  double unit() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

  cplx phase() {
    double t = 2.0 * M_PI * unit();
    return cplx(std::cos(t), std::sin(t));
  }

  cplx annulus(double rlo, double rhi) { return range(rlo, rhi) * phase(); }
};

}  // namespace bethegeom
