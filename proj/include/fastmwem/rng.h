//
// Copyright 2026 The Fast-MWEM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FASTMWEM_RNG_H_
#define FASTMWEM_RNG_H_

#include <cstdint>
#include <random>

namespace fastmwem {

// All randomness flows through explicitly passed 64-bit Mersenne Twister
// streams. A stream must not be shared across threads.
using Rng = std::mt19937_64;

// Uniform double on the closed-open interval [0, 1) with 53 random bits.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double on the open interval (0, 1). Exact endpoints are redrawn.
inline double UniformOpen(Rng& rng) {
  double u = 0.0;
  do {
    u = UniformUnit(rng);
  } while (u == 0.0);
  return u;
}

// Uniform integer in [0, bound). `bound` must be positive.
inline uint64_t UniformIndex(Rng& rng, uint64_t bound) {
  return std::uniform_int_distribution<uint64_t>(0, bound - 1)(rng);
}

// Derives an independent-looking child seed; used to give each repetition
// or each algorithm in a paired run its own stream.
inline uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace fastmwem

#endif  // FASTMWEM_RNG_H_
