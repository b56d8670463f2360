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

#ifndef FASTMWEM_GENERATORS_H_
#define FASTMWEM_GENERATORS_H_

#include <cstddef>
#include <cstdint>

#include <vector>

#include "fastmwem/lpsolve.h"
#include "fastmwem/matrix.h"
#include "fastmwem/mwem.h"

namespace fastmwem {

struct QueryInstance {
  Histogram histogram;
  // m binary queries over the domain [0, U).
  Matrix queries;
};

// Synthetic linear-query workload over the domain [0, U). Records are n
// draws from Normal(U/3, U/15); each query marks floor(U/4) positions drawn
// from Normal(U/2, U/5), so colliding draws leave a smaller support. Draws
// are rounded half-to-even and clamped to the domain. Deterministic per
// seed. Throws std::invalid_argument for U < 2, n = 0 or m = 0.
QueryInstance GenQueryInstance(size_t domain, size_t n, size_t m,
                               uint64_t seed);

struct PlantedLp {
  LpInstance lp;
  // Feasible point on the simplex the instance was built around.
  std::vector<double> planted;
};

// Random feasibility LP: A has i.i.d. standard normal entries, x* is
// uniform on the simplex, b = A x* + |N(0, 0.1)| entrywise so x* is
// feasible. delta_inf = 0.1, rho = max |A_ij|, c = 1 and opt = 1.
// Throws std::invalid_argument for m = 0 or d = 0.
PlantedLp GenLpInstance(size_t m, size_t d, uint64_t seed);

}  // namespace fastmwem

#endif  // FASTMWEM_GENERATORS_H_
